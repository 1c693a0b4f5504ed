"""Error-bounded trajectory compressors.

Streaming compressors (:class:`FBQSCompressor`, :class:`BQSCompressor`) take
one point at a time and report when a segment closes. :func:`compress`
runs any of the six algorithms over a whole stream and returns a
:class:`CompressedTrajectory`; :func:`verify_error_bound` re-checks an output
against the raw input by brute force.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

from .bqs import BqsState, DeviationBounds
from .geometry import LineThrough, Position, TrackPoint, point_to_line_distance


class Algorithm(str, enum.Enum):
    BQS = "bqs"
    FBQS = "fbqs"
    BDP = "bdp"
    BGD = "bgd"
    DP = "dp"
    DR = "dr"


CONTINUE = "continue"
SPLIT = "split_at_previous"


@dataclass(frozen=True)
class CompressorConfig:
    algorithm: Algorithm
    epsilon_d: float
    buffer_size: int = 32

    def __post_init__(self) -> None:
        object.__setattr__(self, "algorithm", Algorithm(self.algorithm))
        if not self.epsilon_d > 0:
            raise ValueError(f"epsilon_d must be positive, got {self.epsilon_d}")
        if self.buffer_size < 2:
            raise ValueError(f"buffer_size must be >= 2, got {self.buffer_size}")


@dataclass
class CompressionStats:
    points_in: int = 0
    points_kept: int = 0
    full_computations: int = 0


@dataclass
class CompressedTrajectory:
    """Kept points and the deviation bound of each segment between them.

    ``d_tau[k]`` bounds the deviation of the raw points between ``kept[k]``
    and ``kept[k + 1]``. Dead-reckoning output also carries the velocity
    recorded at each kept point, which defines its prediction contract.
    """

    kept: list[TrackPoint]
    d_tau: list[float]
    algorithm: Algorithm
    epsilon_d: float
    stats: CompressionStats = field(default_factory=CompressionStats)
    velocities: list[Position] | None = None


class StepDecision(NamedTuple):
    action: str
    emitted: TrackPoint | None = None
    d_tau: float = 0.0


def deviation(p: Position, s: Position, e: Position) -> float:
    """Distance from ``p`` to line(s, e); distance to ``s`` when s == e."""
    if s[0] == e[0] and s[1] == e[1]:
        return math.hypot(p[0] - s[0], p[1] - s[1])
    return point_to_line_distance(p, LineThrough(s, e))


def max_deviation(points: Sequence[TrackPoint], s: Position, e: Position) -> float:
    """Max deviation of ``points`` from line(s, e)."""
    if not points:
        return 0.0
    if s[0] == e[0] and s[1] == e[1]:
        return max(math.hypot(p.x - s[0], p.y - s[1]) for p in points)
    line = LineThrough(s, e)
    return max(point_to_line_distance((p.x, p.y), line) for p in points)


class FBQSCompressor:
    """Constant-space compressor: splits whenever the bounds cannot certify.

    The state is one :class:`BqsState`, the segment start, the tentative end
    point and the bound certified for it. No buffer is kept.
    """

    __slots__ = ("epsilon", "bqs", "start", "prev", "seg_bound")

    def __init__(self, start: TrackPoint, epsilon: float) -> None:
        self.epsilon = epsilon
        self.bqs = BqsState((start.x, start.y))
        self.start = start
        self.prev: TrackPoint | None = None
        self.seg_bound = 0.0

    def _bounds(self, p: TrackPoint) -> DeviationBounds:
        if p.x == self.bqs.ox and p.y == self.bqs.oy:
            return self.bqs.radius_bounds()
        return self.bqs.bounds((p.x, p.y))

    def step(self, p: TrackPoint) -> StepDecision:
        prev = self.prev
        if prev is None:
            self.prev = p
            return StepDecision(CONTINUE)
        self.bqs.insert(prev.x, prev.y)
        ub = self._bounds(p).ub
        if ub <= self.epsilon:
            self.prev = p
            self.seg_bound = ub
            return StepDecision(CONTINUE)
        return self._split(p)

    def _split(self, p: TrackPoint) -> StepDecision:
        prev = self.prev
        closed = min(self.seg_bound, self.epsilon)
        self.bqs.reset((prev.x, prev.y))
        self.start = prev
        self.prev = p
        self.seg_bound = 0.0
        return StepDecision(SPLIT, prev, closed)

    def finish(self) -> StepDecision:
        """Close the open segment at the last point seen."""
        if self.prev is None:
            return StepDecision(CONTINUE)
        return StepDecision(SPLIT, self.prev, min(self.seg_bound, self.epsilon))


class BQSCompressor(FBQSCompressor):
    """BQS with a bounded point buffer for exact checks in the uncertain band.

    When the bounds straddle the tolerance the buffered points of the
    current segment are checked exactly. Once a segment outgrows the buffer
    that check is no longer possible and the compressor splits as
    :class:`FBQSCompressor` would.
    """

    __slots__ = ("buffer", "buffer_size", "overflowed", "full_computations")

    def __init__(self, start: TrackPoint, epsilon: float, buffer_size: int = 32) -> None:
        super().__init__(start, epsilon)
        self.buffer: list[TrackPoint] = []
        self.buffer_size = buffer_size
        self.overflowed = False
        self.full_computations = 0

    def step(self, p: TrackPoint) -> StepDecision:
        prev = self.prev
        if prev is None:
            self.prev = p
            return StepDecision(CONTINUE)
        self.bqs.insert(prev.x, prev.y)
        if len(self.buffer) < self.buffer_size:
            self.buffer.append(prev)
        else:
            self.overflowed = True
        lb, ub = self._bounds(p)
        if ub <= self.epsilon:
            self.prev = p
            self.seg_bound = ub
            return StepDecision(CONTINUE)
        if lb > self.epsilon or self.overflowed:
            return self._split(p)
        self.full_computations += 1
        exact = max_deviation(self.buffer, (self.bqs.ox, self.bqs.oy), (p.x, p.y))
        if exact <= self.epsilon:
            self.prev = p
            self.seg_bound = exact
            return StepDecision(CONTINUE)
        return self._split(p)

    def _split(self, p: TrackPoint) -> StepDecision:
        self.buffer.clear()
        self.overflowed = False
        return super()._split(p)


def fbqs_step(state: FBQSCompressor, p: TrackPoint, epsilon: float | None = None):
    """Functional form of :meth:`FBQSCompressor.step`; returns ``(decision, state)``."""
    if epsilon is not None:
        state.epsilon = epsilon
    return state.step(p), state


def bqs_step(state: BQSCompressor, p: TrackPoint, epsilon: float | None = None):
    """Functional form of :meth:`BQSCompressor.step`.

    Returns ``(decision, state, buffer)``.
    """
    if epsilon is not None:
        state.epsilon = epsilon
    decision = state.step(p)
    return decision, state, state.buffer


def _run_streaming(points: Sequence[TrackPoint], comp: FBQSCompressor):
    kept = [points[0]]
    d_tau: list[float] = []
    for p in points[1:]:
        decision = comp.step(p)
        if decision.emitted is not None:
            kept.append(decision.emitted)
            d_tau.append(decision.d_tau)
    last = comp.finish()
    kept.append(last.emitted)
    d_tau.append(last.d_tau)
    return kept, d_tau


def _dp_indices(points: Sequence[TrackPoint], lo: int, hi: int, eps: float) -> list[tuple[int, float]]:
    """Douglas-Peucker on ``points[lo..hi]``.

    Returns the kept indices after ``lo`` (ending with ``hi``), each paired
    with the exact deviation of the segment it closes.
    """
    out: list[tuple[int, float]] = []
    stack = [(lo, hi)]
    while stack:
        a, b = stack.pop()
        s = (points[a].x, points[a].y)
        e = (points[b].x, points[b].y)
        best = -1.0
        best_idx = -1
        for i in range(a + 1, b):
            d = deviation((points[i].x, points[i].y), s, e)
            if d > best:
                best = d
                best_idx = i
        if best > eps:
            # Right half first so the left half pops first: output stays ordered.
            stack.append((best_idx, b))
            stack.append((a, best_idx))
        else:
            out.append((b, max(best, 0.0)))
    return out


def _compress_dp(points, eps):
    kept = [points[0]]
    d_tau = []
    for idx, d in _dp_indices(points, 0, len(points) - 1, eps):
        kept.append(points[idx])
        d_tau.append(d)
    return kept, d_tau


def _compress_bdp(points, eps, m):
    """DP over consecutive windows of ``m`` points after the last kept anchor."""
    kept = [points[0]]
    d_tau = []
    anchor = 0
    n = len(points)
    while anchor < n - 1:
        end = min(anchor + m, n - 1)
        for idx, d in _dp_indices(points, anchor, end, eps):
            kept.append(points[idx])
            d_tau.append(d)
        anchor = end
    return kept, d_tau


def _compress_bgd(points, eps, m, stats):
    kept = [points[0]]
    d_tau = []
    anchor = points[0]
    buf: list[TrackPoint] = []
    seg_dev = 0.0
    for p in points[1:]:
        if len(buf) == m:
            kept.append(buf[-1])
            d_tau.append(seg_dev)
            anchor = buf[-1]
            buf = []
            seg_dev = 0.0
        buf.append(p)
        if len(buf) < 2:
            continue
        stats.full_computations += 1
        dev = max_deviation(buf[:-1], (anchor.x, anchor.y), (p.x, p.y))
        if dev > eps:
            kept.append(buf[-2])
            d_tau.append(seg_dev)
            anchor = buf[-2]
            buf = [p]
            seg_dev = 0.0
        else:
            seg_dev = dev
    kept.append(points[-1])
    d_tau.append(seg_dev)
    return kept, d_tau


def dr_predict(anchor: TrackPoint, velocity: Position, t: float) -> Position:
    dt = t - anchor.t
    return (anchor.x + velocity[0] * dt, anchor.y + velocity[1] * dt)


def _compress_dr(points, eps):
    """Dead reckoning by linear extrapolation from the last kept point.

    The velocity stored with a kept point is the finite difference to its
    predecessor (zero for the first point).
    """
    kept = [points[0]]
    velocities: list[Position] = [(0.0, 0.0)]
    d_tau = []
    seg_err = 0.0
    n = len(points)
    for i in range(1, n):
        p = points[i]
        px, py = dr_predict(kept[-1], velocities[-1], p.t)
        err = math.hypot(p.x - px, p.y - py)
        if err > eps or i == n - 1:
            q = points[i - 1]
            dt = p.t - q.t
            kept.append(p)
            velocities.append(((p.x - q.x) / dt, (p.y - q.y) / dt))
            d_tau.append(seg_err)
            seg_err = 0.0
        elif err > seg_err:
            seg_err = err
    return kept, d_tau, velocities


def validate_stream(points: Sequence[TrackPoint]) -> None:
    if len(points) < 2:
        raise ValueError(f"need at least 2 points, got {len(points)}")
    prev_t = -math.inf
    for i, p in enumerate(points):
        if not (math.isfinite(p.t) and math.isfinite(p.x) and math.isfinite(p.y)):
            raise ValueError(f"non-finite value in point {i}: {p}")
        if p.t <= prev_t:
            raise ValueError(f"timestamps not strictly increasing at point {i}")
        prev_t = p.t


def compress(points: Sequence[TrackPoint], cfg: CompressorConfig) -> CompressedTrajectory:
    points = [p if isinstance(p, TrackPoint) else TrackPoint(*p) for p in points]
    validate_stream(points)
    eps = cfg.epsilon_d
    stats = CompressionStats(points_in=len(points))
    velocities = None
    algo = cfg.algorithm
    if algo is Algorithm.FBQS:
        kept, d_tau = _run_streaming(points, FBQSCompressor(points[0], eps))
    elif algo is Algorithm.BQS:
        comp = BQSCompressor(points[0], eps, cfg.buffer_size)
        kept, d_tau = _run_streaming(points, comp)
        stats.full_computations = comp.full_computations
    elif algo is Algorithm.DP:
        kept, d_tau = _compress_dp(points, eps)
    elif algo is Algorithm.BDP:
        kept, d_tau = _compress_bdp(points, eps, cfg.buffer_size)
    elif algo is Algorithm.BGD:
        kept, d_tau = _compress_bgd(points, eps, cfg.buffer_size, stats)
    elif algo is Algorithm.DR:
        kept, d_tau, velocities = _compress_dr(points, eps)
    else:  # pragma: no cover - Algorithm is exhaustive
        raise ValueError(f"unknown algorithm {algo}")
    stats.points_kept = len(kept)
    return CompressedTrajectory(
        kept=kept,
        d_tau=d_tau,
        algorithm=algo,
        epsilon_d=eps,
        stats=stats,
        velocities=velocities,
    )


@dataclass
class VerifyReport:
    max_deviation: float
    violations: list[tuple[int, float]]

    @property
    def ok(self) -> bool:
        return not self.violations


def verify_error_bound(
    raw: Sequence[TrackPoint], ct: CompressedTrajectory, epsilon: float
) -> VerifyReport:
    """Brute-force check that every raw point is within ``epsilon`` of its output segment.

    A raw point belongs to the output segment whose kept endpoints bracket
    its timestamp. Line-simplification output is measured by distance to the
    segment's carrier line; dead-reckoning output by distance to the
    position predicted from the segment's start.
    """
    kept = ct.kept
    if len(kept) < 2:
        raise ValueError("compressed trajectory has fewer than 2 points")
    kept_idx = []
    j = 0
    for k in kept:
        while j < len(raw) and raw[j].t < k.t:
            j += 1
        if j == len(raw) or raw[j] != k:
            raise ValueError(f"kept point {k} is not a subsequence element of the input")
        kept_idx.append(j)
    if kept_idx[0] != 0 or kept_idx[-1] != len(raw) - 1:
        raise ValueError("compressed trajectory must keep the first and last input points")

    worst = 0.0
    violations: list[tuple[int, float]] = []
    for k in range(len(kept) - 1):
        a, b = kept_idx[k], kept_idx[k + 1]
        s, e = kept[k], kept[k + 1]
        for i in range(a + 1, b):
            p = raw[i]
            if ct.velocities is not None:
                px, py = dr_predict(s, ct.velocities[k], p.t)
                d = math.hypot(p.x - px, p.y - py)
            else:
                d = deviation((p.x, p.y), (s.x, s.y), (e.x, e.y))
            if d > worst:
                worst = d
            if d > epsilon:
                violations.append((i, d))
    return VerifyReport(worst, violations)
