"""Exception hierarchy shared by the swarmplan modules."""


class SwarmPlanError(Exception):
    """Base class for every error raised by swarmplan."""


class ConfigurationError(SwarmPlanError, ValueError):
    """A parameter combination violates a documented precondition."""


class DomainError(SwarmPlanError, ValueError):
    """A curve parameter lies outside the evaluation domain."""


class ScenarioError(SwarmPlanError, ValueError):
    """Base for scenario document problems. ``field`` names the offending entry."""

    def __init__(self, message, field=None):
        self.field = field
        super().__init__(f"{field}: {message}" if field else message)


class ScenarioParseError(ScenarioError):
    pass


class ScenarioValidationError(ScenarioError):
    pass


class InvalidAssignmentError(SwarmPlanError, ValueError):
    pass


class OracleRefusedError(SwarmPlanError):
    """The exhaustive allocation oracle refuses instances above its size guard."""


class MissionError(SwarmPlanError):
    def __init__(self, message, uav=None, leg=None):
        self.uav = uav
        self.leg = leg
        where = []
        if uav is not None:
            where.append(f"uav {uav}")
        if leg is not None:
            where.append(f"leg {leg}")
        prefix = f"[{', '.join(where)}] " if where else ""
        super().__init__(prefix + message)
