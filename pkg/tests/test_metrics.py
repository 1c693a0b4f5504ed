import pytest

from bqstrack.compressors import Algorithm
from bqstrack.metrics import (
    REPORT_KEYS,
    compression_rate,
    operational_time_days,
    pruning_power,
    run_benchmark,
    run_one,
)
from bqstrack.synth import SynthParams, generate

from conftest import random_walk, straight_line


def test_compression_rate():
    assert compression_rate(2, 100) == 0.02
    assert compression_rate(100, 100) == 1.0


@pytest.mark.parametrize("args", [(1, 0), (5, 4), (-1, 4)])
def test_compression_rate_errors(args):
    with pytest.raises(ValueError):
        compression_rate(*args)


def test_pruning_power():
    assert pruning_power(0, 1000) == 1.0
    assert pruning_power(1000, 1000) == 0.0
    with pytest.raises(ValueError):
        pruning_power(0, 0)


@pytest.mark.parametrize(
    "rate, days",
    [(0.048, 62), (0.050, 60), (0.0665, 45), (0.0675, 44)],
)
def test_operational_time(rate, days):
    assert operational_time_days(51200, 12, 1440, rate) == days


@pytest.mark.parametrize("args", [(0, 12, 1440, 0.05), (51200, -1, 1440, 0.05), (51200, 12, 1440, 0)])
def test_operational_time_errors(args):
    with pytest.raises(ValueError):
        operational_time_days(*args)


@pytest.mark.parametrize("algo", ["bqs", "fbqs"])
def test_straight_line_rate(algo):
    row = run_one(straight_line(400), algo, 1.0, timing=False)
    assert row.rate == 2 / 400


def test_run_one_row():
    row = run_one(random_walk(2), "bqs", 4.0)
    d = row.as_dict()
    assert set(REPORT_KEYS) <= set(d)
    assert d["status"] == "ok"
    assert d["max_dev_m"] <= 4.0
    assert d["wall_ms"] >= 0
    assert d["pruning_power"] is not None and d["buffer"] == 32


def test_run_one_without_timing():
    row = run_one(random_walk(2), "dp", 4.0, timing=False)
    assert row.wall_ms is None and row.buffer is None and row.pruning_power is None


def test_single_config_single_row():
    assert len(run_benchmark(random_walk(0), [3.0], ["fbqs"], timing=False)) == 1


def test_buffer_sweep_only_multiplies_buffered():
    rows = run_benchmark(random_walk(0), [3.0], ["fbqs", "bqs"], buffer_sizes=[8, 32], timing=False)
    assert [(r.algorithm, r.buffer) for r in rows] == [("fbqs", None), ("bqs", 8), ("bqs", 32)]


def test_sweep_orderings():
    pts = generate(SynthParams(n_points=5000, seed=1))
    eps = [2.0, 5.0, 10.0, 20.0]
    rows = run_benchmark(pts, eps, list(Algorithm), timing=False)
    kept = {(r.algorithm, r.epsilon_m): r.n_kept for r in rows}
    assert all(r.status == "ok" and r.max_dev_m <= r.epsilon_m for r in rows)
    for e in eps:
        assert kept["bqs", e] <= kept["fbqs", e]
    for algo in Algorithm:
        series = [kept[algo.value, e] for e in eps]
        assert series == sorted(series, reverse=True)
