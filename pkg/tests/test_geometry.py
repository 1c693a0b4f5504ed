import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from bqstrack.geometry import (
    BBox,
    LineThrough,
    PlanarSegment,
    TrackPoint,
    bbox_expand,
    bbox_intersects,
    point_to_line_distance,
    point_to_segment_distance,
    segment_to_trajectory_distance,
)

from conftest import oracle_line_distance, oracle_segment_distance

coord = st.floats(-1e4, 1e4, allow_nan=False)
pos = st.tuples(coord, coord)


def test_point_to_line_unit_offset():
    assert point_to_line_distance((1, 1), LineThrough((0, 0), (2, 0))) == 1.0


def test_point_to_line_collinear():
    assert point_to_line_distance((5, 0), LineThrough((0, 0), (2, 0))) == 0.0


def test_point_to_line_slanted():
    # 10/sqrt(101), evaluated at 30 digits with mpmath
    expected = 0.995037190209989135665273753739
    assert point_to_line_distance((10, 0), LineThrough((0, 0), (10, 1))) == pytest.approx(expected, rel=1e-14)
    assert oracle_line_distance((10, 0), (0, 0), (10, 1)) == pytest.approx(expected, rel=1e-14)


def test_point_to_line_degenerate():
    with pytest.raises(ValueError):
        point_to_line_distance((1, 1), LineThrough((3, 3), (3, 3)))


@pytest.mark.parametrize(
    "p, seg, expected",
    [
        ((1, 1), ((0, 0), (2, 0)), 1.0),
        ((3, 1), ((0, 0), (2, 0)), 1.41421356237309504880),
        ((0, 0), ((0, 0), (0, 0)), 0.0),
    ],
)
def test_point_to_segment(p, seg, expected):
    got = point_to_segment_distance(p, PlanarSegment(*seg))
    assert got == pytest.approx(expected, rel=1e-14, abs=0)
    assert oracle_segment_distance(p, *seg) == pytest.approx(expected, abs=1e-6)


def test_segment_to_trajectory_parallel():
    d, idx = segment_to_trajectory_distance(
        PlanarSegment((0, 1), (2, 1)), [TrackPoint(0, 0, 0), TrackPoint(1, 2, 0)]
    )
    assert (d, idx) == (1.0, 0)


def test_segment_to_trajectory_coincident():
    traj = [(0, 0), (3, 4), (6, 0)]
    d, idx = segment_to_trajectory_distance(PlanarSegment((3, 4), (6, 0)), traj)
    assert (d, idx) == (0.0, 1)


def _brute_segment_to_trajectory(seg, traj):
    best = (math.inf, -1)
    for i in range(len(traj) - 1):
        a, b = traj[i], traj[i + 1]
        d = max(
            oracle_segment_distance(seg[0], a, b, 4001),
            oracle_segment_distance(seg[1], a, b, 4001),
            oracle_segment_distance(a, *seg, samples=4001),
            oracle_segment_distance(b, *seg, samples=4001),
        )
        if d < best[0]:
            best = (d, i)
    return best


def test_segment_to_trajectory_against_brute_force():
    seg = ((5, 0), (6, 0))
    traj = [(0, 0), (1, 0), (1, 5)]
    d_oracle, idx_oracle = _brute_segment_to_trajectory(seg, traj)
    d, idx = segment_to_trajectory_distance(PlanarSegment(*seg), traj)
    assert idx == idx_oracle == 0
    assert d == pytest.approx(d_oracle, abs=1e-6)
    assert d == 5.0


def test_segment_to_trajectory_needs_two_points():
    with pytest.raises(ValueError):
        segment_to_trajectory_distance(PlanarSegment((0, 0), (1, 1)), [(0, 0)])


@pytest.mark.parametrize(
    "box, delta, expected",
    [
        ((0, 0, 1, 1), 0, (0, 0, 1, 1)),
        ((0, 0, 1, 1), 2, (-2, -2, 3, 3)),
        ((5, 5, 5, 5), 1, (4, 4, 6, 6)),
    ],
)
def test_bbox_expand(box, delta, expected):
    assert bbox_expand(BBox(*box), delta).as_tuple() == expected


def test_bbox_expand_rejects_negative():
    with pytest.raises(ValueError):
        bbox_expand(BBox(0, 0, 1, 1), -0.5)


def test_bbox_rejects_inverted():
    with pytest.raises(ValueError):
        BBox(1, 0, 0, 1)


@pytest.mark.parametrize(
    "a, b, expected",
    [
        ((0, 0, 1, 1), (1, 1, 2, 2), True),
        ((0, 0, 1, 1), (2, 2, 3, 3), False),
        ((0, 0, 4, 4), (1, 1, 2, 2), True),
    ],
)
def test_bbox_intersects(a, b, expected):
    assert bbox_intersects(BBox(*a), BBox(*b)) is expected
    assert bbox_intersects(BBox(*b), BBox(*a)) is expected


@given(pos, pos, pos)
def test_segment_distance_dominates_line_distance(p, s, e):
    if s == e:
        return
    line_d = point_to_line_distance(p, LineThrough(s, e))
    seg_d = point_to_segment_distance(p, PlanarSegment(s, e))
    assert seg_d >= line_d * (1 - 1e-12) - 1e-9


@given(pos, pos, pos, st.tuples(st.integers(-1000, 1000), st.integers(-1000, 1000)))
def test_line_distance_symmetry_and_translation(p, a, b, off):
    if math.hypot(a[0] - b[0], a[1] - b[1]) < 1e-3:
        return
    d = point_to_line_distance(p, LineThrough(a, b))
    assert point_to_line_distance(p, LineThrough(b, a)) == pytest.approx(d, rel=1e-9, abs=1e-7)
    shift = lambda q: (q[0] + off[0], q[1] + off[1])  # noqa: E731
    moved = point_to_line_distance(shift(p), LineThrough(shift(a), shift(b)))
    assert moved == pytest.approx(d, rel=1e-6, abs=1e-6)


@given(st.lists(pos, min_size=2, max_size=8), st.data())
def test_segment_to_trajectory_zero_on_own_segment(traj, data):
    i = data.draw(st.integers(0, len(traj) - 2))
    d, _ = segment_to_trajectory_distance(PlanarSegment(traj[i], traj[i + 1]), traj)
    assert d == 0.0


@given(
    st.tuples(coord, coord, coord, coord),
    st.floats(0, 1e3),
    st.floats(0, 1e3),
)
def test_bbox_expand_composes(raw, d1, d2):
    box = BBox(min(raw[0], raw[2]), min(raw[1], raw[3]), max(raw[0], raw[2]), max(raw[1], raw[3]))
    once = bbox_expand(box, d1 + d2).as_tuple()
    twice = bbox_expand(bbox_expand(box, d1), d2).as_tuple()
    assert once == pytest.approx(twice, rel=1e-12, abs=1e-9)
