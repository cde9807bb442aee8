"""Built-in scenarios used by the CLI demos and the acceptance suite."""
from __future__ import annotations

from .environment import Obstacle, Scenario, WorldBounds


def three_uav_five_task() -> Scenario:
    """Three UAVs, five tasks and five spherical obstacles in a 100 x 100 x 30 m box."""
    return Scenario(
        bounds=WorldBounds((0.0, 0.0, 0.0), (100.0, 100.0, 30.0)),
        uav_starts=((5.0, 10.0, 5.0), (5.0, 50.0, 5.0), (5.0, 90.0, 5.0)),
        tasks=(
            (45.0, 15.0, 10.0),
            (60.0, 85.0, 12.0),
            (88.0, 40.0, 15.0),
            (92.0, 88.0, 8.0),
            (70.0, 60.0, 10.0),
        ),
        obstacles=(
            Obstacle((28.0, 30.0, 10.0), 8.0),
            Obstacle((50.0, 50.0, 12.0), 10.0),
            Obstacle((72.0, 28.0, 10.0), 7.0),
            Obstacle((38.0, 75.0, 10.0), 8.0),
            Obstacle((82.0, 72.0, 12.0), 7.0),
        ),
        r_safe=1.0,
        cruise_speed=5.0,
        # makespan weighted like distance (w2 = cruise_speed) so the tasks are shared out
        allocation_weights=(1.0, 5.0, 1.0),
    )


def obstacle_field() -> Scenario:
    """Single-goal field used for robustness runs from several start points."""
    return Scenario(
        bounds=WorldBounds((0.0, 0.0, 0.0), (100.0, 100.0, 30.0)),
        uav_starts=((5.0, 50.0, 10.0),),
        tasks=((95.0, 50.0, 10.0),),
        obstacles=(
            Obstacle((30.0, 45.0, 10.0), 8.0),
            Obstacle((50.0, 60.0, 12.0), 9.0),
            Obstacle((70.0, 42.0, 10.0), 8.0),
            Obstacle((50.0, 25.0, 8.0), 7.0),
            Obstacle((30.0, 75.0, 10.0), 7.0),
        ),
        r_safe=1.0,
        cruise_speed=5.0,
    )


BUILTIN = {
    "three-uav-five-task": three_uav_five_task,
    "obstacle-field": obstacle_field,
}
