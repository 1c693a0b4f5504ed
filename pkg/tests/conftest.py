import math
import random
from fractions import Fraction

import pytest

from bqstrack.geometry import TrackPoint
from bqstrack.synth import SynthParams, generate

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


# -- independent oracles -----------------------------------------------------
# These deliberately use different formulas from the package code.


def oracle_line_distance(p, a, b):
    """Distance via the foot of the perpendicular."""
    vx, vy = b[0] - a[0], b[1] - a[1]
    u = ((p[0] - a[0]) * vx + (p[1] - a[1]) * vy) / (vx * vx + vy * vy)
    fx, fy = a[0] + u * vx, a[1] + u * vy
    return math.hypot(p[0] - fx, p[1] - fy)


def exact_line_distance_sq(p, a, b):
    """Squared point-to-line distance in exact rational arithmetic."""
    px, py, ax, ay, bx, by = (Fraction(v) for v in (*p, *a, *b))
    cross = (bx - ax) * (py - ay) - (by - ay) * (px - ax)
    return cross * cross / ((bx - ax) ** 2 + (by - ay) ** 2)


def exact_sandwich(lb, ub, points, a, b):
    """True iff lb <= max distance <= ub, decided without rounding."""
    worst = max((exact_line_distance_sq(p, a, b) for p in points), default=Fraction(0))
    if Fraction(lb) ** 2 > worst:
        return False
    # an infinite upper bound is vacuous but true
    return ub == math.inf or worst <= Fraction(ub) ** 2


def oracle_segment_distance(p, s, e, samples=20001):
    """Minimum over a dense sampling of the segment (overestimates slightly)."""
    best = math.inf
    for k in range(samples):
        u = k / (samples - 1)
        x = s[0] + u * (e[0] - s[0])
        y = s[1] + u * (e[1] - s[1])
        best = min(best, math.hypot(p[0] - x, p[1] - y))
    return best


def straight_line(n, dx=1.0, dy=0.0):
    return [TrackPoint(float(i), i * dx, i * dy) for i in range(n)]


def random_walk(seed, n=300):
    """Small-scale jittery walk; rougher than the synthetic generator."""
    rng = random.Random(seed)
    x = y = 0.0
    heading = rng.uniform(-math.pi, math.pi)
    out = []
    for i in range(n):
        out.append(TrackPoint(float(i), x, y))
        heading += rng.gauss(0.0, 0.6)
        step = rng.uniform(0.0, 8.0)
        x += step * math.cos(heading)
        y += step * math.sin(heading)
    return out


@pytest.fixture(scope="session")
def default_stream():
    return generate(SynthParams())
