import pytest
from scipy import stats

from bqstrack.compressors import CompressorConfig, compress
from bqstrack.synth import SynthParams, generate, generate_with_events


def test_exact_count():
    for n in (2, 3, 1000, 4321):
        assert len(generate(SynthParams(n_points=n, seed=n))) == n


def test_points_within_bounds(default_stream):
    lim = SynthParams().bounds
    assert all(0.0 <= p.x <= lim and 0.0 <= p.y <= lim for p in default_stream)


def test_reflection_keeps_small_arena():
    pts = generate(SynthParams(n_points=5000, bounds=50.0, seed=3))
    assert all(0.0 <= p.x <= 50.0 and 0.0 <= p.y <= 50.0 for p in pts)


def test_timestamps_strictly_increase(default_stream):
    ts = [p.t for p in default_stream]
    assert all(b > a for a, b in zip(ts, ts[1:]))


def test_move_steps_follow_sample_interval():
    pts, events = generate_with_events(SynthParams(n_points=3000, seed=2, sample_interval=2.0))
    gaps = [b.t - a.t for a, b in zip(pts, pts[1:])]
    # waits add arbitrary time; within a move the spacing is the interval
    assert sum(g == pytest.approx(2.0) for g in gaps) >= len(gaps) - len(events)


def test_waits_emit_no_duplicate_positions():
    pts = generate(SynthParams(n_points=3000, seed=4))
    assert all((a.x, a.y) != (b.x, b.y) for a, b in zip(pts, pts[1:]))


def test_deterministic_per_seed():
    assert generate(SynthParams(n_points=500, seed=9)) == generate(SynthParams(n_points=500, seed=9))


def test_seeds_differ():
    a = generate(SynthParams(n_points=100, seed=1))
    b = generate(SynthParams(n_points=100, seed=2))
    assert a != b


def test_turn_angles_fit_von_mises():
    kappa = 2.0
    turns = []
    seed = 0
    while len(turns) < 10_000:
        _, events = generate_with_events(SynthParams(n_points=20_000, kappa=kappa, seed=seed))
        turns.extend(e.turn for e in events)
        seed += 1
    turns = turns[:10_000]
    result = stats.kstest(turns, stats.vonmises(kappa).cdf)
    assert result.pvalue > 0.01


def test_high_concentration_is_nearly_straight():
    params = SynthParams(n_points=2000, kappa=1e10, mean_wait_duration=0.0, bounds=1e6, seed=5)
    pts = generate(params)
    ct = compress(pts, CompressorConfig("fbqs", 5.0))
    assert len(ct.kept) <= 4


@pytest.mark.parametrize(
    "kwargs",
    [{"n_points": 1}, {"bounds": 0}, {"kappa": -1}, {"sample_interval": 0}, {"mean_wait_duration": -1}],
)
def test_invalid_params(kwargs):
    with pytest.raises(ValueError):
        SynthParams(**kwargs)
