"""Bounded quadrant system.

The space around a segment's start point is split into four quadrants.
Each quadrant keeps the tight bounding box of the points it has seen and
the two points with the smallest and largest polar angle. Those two
points define the bounding rays; together with the box they enclose every
point of the quadrant in a convex polygon (the box clipped to the wedge
between the rays). Deviation bounds for a candidate line through the
origin follow from the polygon's vertices without revisiting any point.

Quadrant membership uses closed/open conventions so every offset maps to
exactly one quadrant::

    1: dx >= 0, dy >= 0     2: dx < 0, dy >= 0
    3: dx <  0, dy <  0     4: dx >= 0, dy < 0
"""

from __future__ import annotations

import math
from typing import NamedTuple

from .geometry import BBox, Position, TrackPoint

# Bounds are widened by this fraction of the quadrant's coordinate scale so
# that floating-point rounding never lets a point escape them.
_SLACK = 1e-12
# Absolute floor for results that fall into the subnormal range, where
# relative error bounds no longer hold.
_TINY = 1e-300


class DeviationBounds(NamedTuple):
    lb: float
    ub: float


def quadrant_of(p: Position, origin: Position) -> int:
    dx = p[0] - origin[0]
    dy = p[1] - origin[1]
    if dy >= 0.0:
        return 1 if dx >= 0.0 else 2
    return 4 if dx >= 0.0 else 3


class QuadrantState:
    """Box and bounding rays for the points of one quadrant.

    Coordinates are relative to the owning state's origin. ``lo`` and ``hi``
    are the offsets of the points with the smallest and largest polar angle.
    A ``count`` of zero marks an unused quadrant; its other fields are then
    meaningless.
    """

    __slots__ = (
        "min_x", "min_y", "max_x", "max_y",
        "lo_x", "lo_y", "hi_x", "hi_y",
        "count",
    )

    def __init__(self) -> None:
        self.clear()

    def clear(self) -> None:
        self.min_x = self.min_y = self.max_x = self.max_y = 0.0
        self.lo_x = self.lo_y = self.hi_x = self.hi_y = 0.0
        self.count = 0

    def add(self, dx: float, dy: float) -> None:
        if self.count == 0:
            self.min_x = self.max_x = self.lo_x = self.hi_x = dx
            self.min_y = self.max_y = self.lo_y = self.hi_y = dy
            self.count = 1
            return
        if dx < self.min_x:
            self.min_x = dx
        elif dx > self.max_x:
            self.max_x = dx
        if dy < self.min_y:
            self.min_y = dy
        elif dy > self.max_y:
            self.max_y = dy
        # Angles within one quadrant span at most 90 degrees, so the sign of
        # the cross product orders them.
        if self.lo_x * dy - self.lo_y * dx < 0.0:
            self.lo_x, self.lo_y = dx, dy
        elif self.hi_x * dy - self.hi_y * dx > 0.0:
            self.hi_x, self.hi_y = dx, dy
        self.count += 1

    @property
    def box(self) -> BBox:
        return BBox(self.min_x, self.min_y, self.max_x, self.max_y)

    @property
    def theta_min(self) -> float:
        return math.atan2(self.lo_y, self.lo_x)

    @property
    def theta_max(self) -> float:
        return math.atan2(self.hi_y, self.hi_x)

    def corners(self) -> tuple[Position, Position, Position, Position]:
        """Box corners in counter-clockwise order from (min_x, min_y)."""
        return (
            (self.min_x, self.min_y),
            (self.max_x, self.min_y),
            (self.max_x, self.max_y),
            (self.min_x, self.max_y),
        )

    def ray_span(self, rx: float, ry: float) -> tuple[float, float]:
        """Parameter range ``[t_near, t_far]`` of the ray ``t*(rx, ry)`` inside the box.

        The ray's defining point lies in the box at ``t = 1``; the range is
        widened to contain it regardless of rounding.
        """
        t0 = 0.0
        t1 = math.inf
        if rx > 0.0:
            t0 = max(t0, self.min_x / rx)
            t1 = min(t1, self.max_x / rx)
        elif rx < 0.0:
            t0 = max(t0, self.max_x / rx)
            t1 = min(t1, self.min_x / rx)
        if ry > 0.0:
            t0 = max(t0, self.min_y / ry)
            t1 = min(t1, self.max_y / ry)
        elif ry < 0.0:
            t0 = max(t0, self.max_y / ry)
            t1 = min(t1, self.min_y / ry)
        return min(t0, 1.0), max(t1, 1.0)

    def hull_vertices(self) -> list[Position]:
        """Vertices of the polygon enclosing this quadrant's points.

        These are the four ray/box crossings (near and far for each bounding
        ray) followed by the box corners that fall inside the wedge. At most
        eight positions, relative to the origin.
        """
        out: list[Position] = []
        for rx, ry in ((self.lo_x, self.lo_y), (self.hi_x, self.hi_y)):
            t_near, t_far = self.ray_span(rx, ry)
            out.append((t_near * rx, t_near * ry))
            out.append((t_far * rx, t_far * ry))
        for cx, cy in self.corners():
            if self._in_wedge(cx, cy):
                out.append((cx, cy))
        return out

    def _in_wedge(self, cx: float, cy: float) -> bool:
        # Generous tolerance: keeping a corner that is marginally outside
        # only loosens the upper bound.
        tol = _SLACK * (abs(cx) + abs(cy)) * (
            abs(self.lo_x) + abs(self.lo_y) + abs(self.hi_x) + abs(self.hi_y)
        )
        return (
            self.lo_x * cy - self.lo_y * cx >= -tol
            and cx * self.hi_y - cy * self.hi_x >= -tol
        )

    def bounds(self, ex: float, ey: float, norm: float) -> tuple[float, float]:
        """Lower and upper bound on the max distance of this quadrant's points
        from the line through the origin with direction ``(ex, ey)``."""

        def sd(px: float, py: float) -> float:
            return (ex * py - ey * px) / norm

        # The two ray points are data points themselves.
        lb = max(abs(sd(self.lo_x, self.lo_y)), abs(sd(self.hi_x, self.hi_y)))

        corners = self.corners()
        signed = [sd(cx, cy) for cx, cy in corners]
        # A tight box has a data point on every edge; an edge that the line
        # does not cross keeps all its points at least as far as its nearer
        # endpoint.
        for i in range(4):
            a = signed[i]
            b = signed[(i + 1) % 4]
            if (a > 0.0 and b > 0.0) or (a < 0.0 and b < 0.0):
                edge_lb = min(abs(a), abs(b))
                if edge_lb > lb:
                    lb = edge_lb

        # Distance is convex, so its max over the clipped polygon sits at a
        # vertex. The plain box bound backs it up when a near-degenerate ray
        # makes a crossing overflow.
        box_ub = max(abs(v) for v in signed)
        dists = [abs(sd(vx, vy)) for vx, vy in self.hull_vertices()]
        ub = max(dists)
        if not (all(map(math.isfinite, dists)) and ub <= box_ub):
            ub = box_ub

        scale = max(
            abs(self.min_x), abs(self.max_x), abs(self.min_y), abs(self.max_y)
        )
        slack = _SLACK * (scale + ub) + _TINY * (1.0 + 1.0 / norm)
        return max(0.0, lb - slack), ub + slack

    def radius_bounds(self) -> tuple[float, float]:
        """Bounds on the max distance of this quadrant's points from the origin."""
        lb = max(math.hypot(self.lo_x, self.lo_y), math.hypot(self.hi_x, self.hi_y))
        box_ub = max(math.hypot(x, y) for x, y in self.corners())
        dists = [math.hypot(x, y) for x, y in self.hull_vertices()]
        ub = max(dists)
        if not (all(map(math.isfinite, dists)) and ub <= box_ub):
            ub = box_ub
        slack = _SLACK * ub + _TINY
        return max(0.0, lb - slack), ub + slack


class BqsState:
    """Quadrant structures centred at a segment start.

    State size is fixed: an origin, four :class:`QuadrantState` slots and a
    counter, however many points have been inserted.
    """

    __slots__ = ("ox", "oy", "quadrants", "total_count")

    def __init__(self, origin: Position) -> None:
        self.ox = float(origin[0])
        self.oy = float(origin[1])
        self.quadrants = (QuadrantState(), QuadrantState(), QuadrantState(), QuadrantState())
        self.total_count = 0

    @property
    def origin(self) -> Position:
        return (self.ox, self.oy)

    def quadrant(self, qid: int) -> QuadrantState | None:
        """The state for quadrant ``qid`` (1-4), or None if it holds no points."""
        q = self.quadrants[qid - 1]
        return q if q.count else None

    def insert(self, x: float, y: float) -> None:
        dx = x - self.ox
        dy = y - self.oy
        if dx == 0.0 and dy == 0.0:
            return
        if dy >= 0.0:
            q = self.quadrants[0] if dx >= 0.0 else self.quadrants[1]
        else:
            q = self.quadrants[3] if dx >= 0.0 else self.quadrants[2]
        q.add(dx, dy)
        self.total_count += 1

    def bounds(self, end: Position) -> DeviationBounds:
        """Bounds on the max deviation of inserted points from line(origin, end)."""
        ex = end[0] - self.ox
        ey = end[1] - self.oy
        norm = math.hypot(ex, ey)
        if norm == 0.0:
            raise ValueError("end point coincides with the origin")
        lb = ub = 0.0
        for q in self.quadrants:
            if q.count:
                q_lb, q_ub = q.bounds(ex, ey, norm)
                if q_lb > lb:
                    lb = q_lb
                if q_ub > ub:
                    ub = q_ub
        return DeviationBounds(lb, ub)

    def radius_bounds(self) -> DeviationBounds:
        """Bounds on the max distance of inserted points from the origin."""
        lb = ub = 0.0
        for q in self.quadrants:
            if q.count:
                q_lb, q_ub = q.radius_bounds()
                lb = max(lb, q_lb)
                ub = max(ub, q_ub)
        return DeviationBounds(lb, ub)

    def reset(self, origin: Position) -> None:
        self.ox = float(origin[0])
        self.oy = float(origin[1])
        for q in self.quadrants:
            q.clear()
        self.total_count = 0

    def hull_vertices(self) -> dict[int, list[Position]]:
        """Absolute hull vertices per populated quadrant."""
        out = {}
        for qid, q in enumerate(self.quadrants, start=1):
            if q.count:
                out[qid] = [(x + self.ox, y + self.oy) for x, y in q.hull_vertices()]
        return out


def bqs_insert(state: BqsState, p: Position | TrackPoint) -> BqsState:
    x, y = (p.x, p.y) if isinstance(p, TrackPoint) else p
    state.insert(x, y)
    return state


def bqs_bounds(state: BqsState, end: Position) -> DeviationBounds:
    return state.bounds(end)


def bqs_reset(state: BqsState, new_origin: Position) -> BqsState:
    state.reset(new_origin)
    return state
