import csv
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from swarmplan.benchfx import (
    FUNCTION_NAMES,
    RunRecord,
    evaluate_benchmark,
    get_function,
    run_comparison,
    summarize,
    write_records_csv,
    write_report_csv,
)
from swarmplan.errors import ConfigurationError


def _textbook(name, x):
    d = len(x)
    if name == "sphere":
        return sum(v * v for v in x)
    if name == "rosenbrock":
        return sum(100 * (x[i + 1] - x[i] ** 2) ** 2 + (1 - x[i]) ** 2 for i in range(d - 1))
    if name == "rastrigin":
        return 10 * d + sum(v * v - 10 * math.cos(2 * math.pi * v) for v in x)
    if name == "ackley":
        s1 = sum(v * v for v in x) / d
        s2 = sum(math.cos(2 * math.pi * v) for v in x) / d
        return -20 * math.exp(-0.2 * math.sqrt(s1)) - math.exp(s2) + 20 + math.e
    if name == "griewank":
        prod = 1.0
        for i, v in enumerate(x, start=1):
            prod *= math.cos(v / math.sqrt(i))
        return 1 + sum(v * v for v in x) / 4000 - prod
    if name == "schwefel":
        return 418.9828872724337 * d - sum(v * math.sin(math.sqrt(abs(v))) for v in x)
    raise KeyError(name)


def test_known_values():
    assert evaluate_benchmark(get_function("sphere", 10), np.zeros(10)) == 0.0
    assert evaluate_benchmark(get_function("rastrigin", 10), np.zeros(10)) == 0.0
    assert evaluate_benchmark(get_function("sphere", 10), np.ones(10)) == 10.0


@pytest.mark.parametrize("name", FUNCTION_NAMES)
@pytest.mark.parametrize("d", [2, 10, 30])
def test_optimum_at_minimizer(name, d):
    fn = get_function(name, d)
    assert abs(fn(fn.global_minimizer) - fn.global_minimum_value) < 1e-9
    assert np.all(fn.lower <= fn.global_minimizer) and np.all(fn.global_minimizer <= fn.upper)


@pytest.mark.parametrize("name", FUNCTION_NAMES)
@given(seed=st.integers(0, 2**31 - 1), d=st.integers(2, 12))
def test_matches_textbook_formula(name, seed, d):
    fn = get_function(name, d)
    x = np.random.default_rng(seed).uniform(fn.lower, fn.upper)
    assert fn(x) == pytest.approx(_textbook(name, x.tolist()), rel=1e-10, abs=1e-9)


@pytest.mark.parametrize("name", FUNCTION_NAMES)
def test_batched_rows_match_single_calls(name):
    fn = get_function(name, 5)
    X = np.random.default_rng(1).uniform(fn.lower, fn.upper, (8, 5))
    np.testing.assert_allclose(fn.fn(X), [fn(x) for x in X], rtol=1e-13)


def test_dimension_mismatch():
    with pytest.raises(ConfigurationError):
        evaluate_benchmark(get_function("sphere", 10), np.zeros(9))


def test_unknown_function():
    with pytest.raises(ConfigurationError):
        get_function("himmelblau")


def test_two_seed_single_optimizer_table():
    rows, records = run_comparison(["ackley"], ["pe_pso"], n_seeds=2, iterations=20, dimension=5)
    assert len(rows) == 1 and len(records) == 2
    r = rows[0]
    assert r.seed_count == 2
    assert all(math.isfinite(v) for v in (r.fitness_mean, r.fitness_std, r.time_mean_ms))


def test_single_seed_rejected():
    with pytest.raises(ConfigurationError):
        run_comparison(["sphere"], n_seeds=1, iterations=5)


def test_unknown_optimizer_rejected():
    with pytest.raises(ConfigurationError):
        run_comparison(["sphere"], ["gwo"], n_seeds=2, iterations=5)


def test_comparison_is_seed_deterministic(monkeypatch):
    monkeypatch.setenv("SWARMPLAN_THREADS", "1")
    _, a = run_comparison(["rastrigin", "sphere"], n_seeds=3, iterations=15, dimension=4)
    monkeypatch.setenv("SWARMPLAN_THREADS", "4")
    _, b = run_comparison(["rastrigin", "sphere"], n_seeds=3, iterations=15, dimension=4)
    assert [(r.function, r.optimizer, r.seed, r.best_fitness) for r in a] == [
        (r.function, r.optimizer, r.seed, r.best_fitness) for r in b
    ]


def test_report_recomputes_from_persisted_records(tmp_path):
    rows, records = run_comparison(["sphere", "griewank"], n_seeds=3, iterations=10, dimension=3)
    write_records_csv(records, tmp_path / "runs.csv")
    write_report_csv(rows, tmp_path / "report.csv")
    with open(tmp_path / "runs.csv") as fh:
        reread = [
            RunRecord(r["function"], r["optimizer"], int(r["seed"]), float(r["best_fitness"]),
                      float(r["wall_ms"]), float(r["iters_to_threshold"]))
            for r in csv.DictReader(fh)
        ]
    assert summarize(reread) == rows
    with open(tmp_path / "report.csv") as fh:
        report = list(csv.DictReader(fh))
    assert list(report[0])[:6] == ["function", "optimizer", "seed_count", "fitness_mean", "fitness_std", "time_mean_ms"]
    assert len(report) == 4
