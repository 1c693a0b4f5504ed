"""Planar geometry primitives shared by the compressors and the store.

All coordinates are local planar meters. Positions are plain ``(x, y)``
tuples; :class:`TrackPoint` carries a timestamp as well and exposes its
position through :attr:`TrackPoint.xy`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

Position = tuple[float, float]


class TrackPoint(NamedTuple):
    """A timestamped planar fix."""

    t: float
    x: float
    y: float

    @property
    def xy(self) -> Position:
        return (self.x, self.y)


class LineThrough(NamedTuple):
    """Infinite line through two distinct positions."""

    a: Position
    b: Position


class PlanarSegment(NamedTuple):
    """Closed segment from ``s`` to ``e``; may be zero-length."""

    s: Position
    e: Position


@dataclass(frozen=True, slots=True)
class BBox:
    """Axis-aligned bounding box in meters."""

    min_x: float
    min_y: float
    max_x: float
    max_y: float

    def __post_init__(self) -> None:
        if self.min_x > self.max_x or self.min_y > self.max_y:
            raise ValueError(f"inverted bounding box: {self}")

    @classmethod
    def of_points(cls, *pts: Position) -> "BBox":
        xs = [p[0] for p in pts]
        ys = [p[1] for p in pts]
        return cls(min(xs), min(ys), max(xs), max(ys))

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.min_x, self.min_y, self.max_x, self.max_y)


def point_to_line_distance(p: Position, line: LineThrough) -> float:
    """Perpendicular distance from ``p`` to the infinite line ``line``."""
    (ax, ay), (bx, by) = line
    dx = bx - ax
    dy = by - ay
    norm = math.hypot(dx, dy)
    if norm == 0.0:
        raise ValueError("line endpoints coincide")
    return abs(dx * (p[1] - ay) - dy * (p[0] - ax)) / norm


def point_to_segment_distance(p: Position, seg: PlanarSegment) -> float:
    """Minimum distance from ``p`` to any point of the closed segment."""
    (sx, sy), (ex, ey) = seg
    dx = ex - sx
    dy = ey - sy
    px = p[0] - sx
    py = p[1] - sy
    # Work with the unit direction so tiny segments do not underflow.
    length = math.hypot(dx, dy)
    if length == 0.0:
        return math.hypot(px, py)
    ux = dx / length
    uy = dy / length
    along = px * ux + py * uy
    if px == dx and py == dy:
        return 0.0
    if along <= 0.0:
        return math.hypot(px, py)
    if along >= length:
        return math.hypot(p[0] - ex, p[1] - ey)
    return abs(ux * py - uy * px)


def segment_pair_distance(a: PlanarSegment, b: PlanarSegment) -> float:
    """Symmetric endpoint distance between two segments.

    The larger of the distances from either segment's endpoints to the
    other segment.
    """
    return max(
        point_to_segment_distance(a.s, b),
        point_to_segment_distance(a.e, b),
        point_to_segment_distance(b.s, a),
        point_to_segment_distance(b.e, a),
    )


def segment_to_trajectory_distance(
    seg: PlanarSegment, traj: Sequence[TrackPoint] | Sequence[Position]
) -> tuple[float, int]:
    """Distance from ``seg`` to the nearest segment of a polyline.

    Returns ``(distance, index)`` where ``index`` selects the polyline
    segment ``traj[index] -> traj[index + 1]``. Ties go to the lowest index.
    """
    if len(traj) < 2:
        raise ValueError("trajectory needs at least 2 points")
    pts = [_pos(p) for p in traj]
    best = math.inf
    best_idx = -1
    for i in range(len(pts) - 1):
        d = segment_pair_distance(seg, PlanarSegment(pts[i], pts[i + 1]))
        if d < best:
            best = d
            best_idx = i
    return best, best_idx


def bbox_expand(b: BBox, delta: float) -> BBox:
    if delta < 0:
        raise ValueError(f"expansion must be non-negative, got {delta}")
    return BBox(b.min_x - delta, b.min_y - delta, b.max_x + delta, b.max_y + delta)


def bbox_intersects(a: BBox, b: BBox) -> bool:
    """True when the boxes share at least one point; touching counts."""
    return (
        a.min_x <= b.max_x
        and b.min_x <= a.max_x
        and a.min_y <= b.max_y
        and b.min_y <= a.max_y
    )


def _pos(p) -> Position:
    if isinstance(p, TrackPoint):
        return (p.x, p.y)
    return (p[0], p[1])
