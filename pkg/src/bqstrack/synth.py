"""Event-based correlated random walk.

Waiting and moving events alternate. A move picks a new heading by adding
a von Mises turning angle to the previous heading, draws a speed and an
exponential duration, and emits a fix every ``sample_interval`` seconds.
A wait holds position for an exponential duration and emits nothing.
Paths are reflected specularly at the edges of the bounding square.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import TrackPoint


@dataclass(frozen=True)
class SynthParams:
    n_points: int = 30_000
    bounds: float = 10_000.0
    kappa: float = 2.0
    mean_move_duration: float = 30.0
    mean_wait_duration: float = 120.0
    # Log-normal speed in m/s: median exp(mu) ~ 9.7 m/s (35 km/h), capped at 14 m/s.
    speed_mu: float = math.log(9.7)
    speed_sigma: float = 0.25
    speed_cap: float = 14.0
    sample_interval: float = 1.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_points < 2:
            raise ValueError("n_points must be >= 2")
        for name in ("bounds", "kappa", "mean_move_duration", "sample_interval",
                     "speed_sigma", "speed_cap"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.mean_wait_duration < 0:
            raise ValueError("mean_wait_duration must be non-negative")


@dataclass(frozen=True)
class MoveEvent:
    turn: float
    heading: float
    speed: float
    steps: int


def _reflect(v: float, lim: float) -> tuple[float, bool]:
    flipped = False
    while v < 0.0 or v > lim:
        v = -v if v < 0.0 else 2.0 * lim - v
        flipped = not flipped
    return v, flipped


def generate_with_events(params: SynthParams) -> tuple[list[TrackPoint], list[MoveEvent]]:
    """Generate a track and the move events that produced it."""
    rng = np.random.default_rng(params.seed)
    lim = params.bounds
    x = y = lim / 2.0
    t = 0.0
    heading = rng.uniform(-math.pi, math.pi)
    dt = params.sample_interval
    out = [TrackPoint(t, x, y)]
    events: list[MoveEvent] = []
    while len(out) < params.n_points:
        if params.mean_wait_duration > 0:
            t += rng.exponential(params.mean_wait_duration)
        turn = float(rng.vonmises(0.0, params.kappa))
        heading = math.remainder(heading + turn, 2.0 * math.pi)
        speed = min(float(rng.lognormal(params.speed_mu, params.speed_sigma)), params.speed_cap)
        steps = max(1, round(rng.exponential(params.mean_move_duration) / dt))
        events.append(MoveEvent(turn, heading, speed, steps))
        step = speed * dt
        for _ in range(steps):
            x, fx = _reflect(x + step * math.cos(heading), lim)
            y, fy = _reflect(y + step * math.sin(heading), lim)
            if fx:
                heading = math.remainder(math.pi - heading, 2.0 * math.pi)
            if fy:
                heading = -heading
            t += dt
            out.append(TrackPoint(t, x, y))
            if len(out) == params.n_points:
                break
    return out, events


def generate(params: SynthParams) -> list[TrackPoint]:
    return generate_with_events(params)[0]
