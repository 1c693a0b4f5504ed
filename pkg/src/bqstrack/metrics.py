"""Compression metrics, the storage-budget model and the benchmark runner."""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass
from typing import Iterable, Sequence

from .compressors import Algorithm, CompressorConfig, compress, verify_error_bound
from .geometry import TrackPoint

BUFFERED = frozenset({Algorithm.BQS, Algorithm.BDP, Algorithm.BGD})

REPORT_KEYS = (
    "algorithm", "epsilon_m", "buffer", "n_in", "n_kept",
    "rate", "pruning_power", "max_dev_m", "wall_ms",
)


def compression_rate(n_kept: int, n_original: int) -> float:
    """Kept points over original points; lower is better."""
    if n_original < 1:
        raise ValueError("n_original must be >= 1")
    if not 0 <= n_kept <= n_original:
        raise ValueError(f"n_kept={n_kept} outside [0, {n_original}]")
    return n_kept / n_original


def pruning_power(n_computed: int, n_total: int) -> float:
    """Fraction of points decided without a full deviation computation."""
    if n_total < 1:
        raise ValueError("n_total must be >= 1")
    if not 0 <= n_computed <= n_total:
        raise ValueError(f"n_computed={n_computed} outside [0, {n_total}]")
    return 1.0 - n_computed / n_total


def operational_time_days(
    budget_bytes: float, bytes_per_sample: float, samples_per_day: float, rate: float
) -> int:
    """Whole days until compressed fixes fill the storage budget."""
    if min(budget_bytes, bytes_per_sample, samples_per_day, rate) <= 0:
        raise ValueError("all inputs must be positive")
    if rate > 1:
        raise ValueError(f"rate must be <= 1, got {rate}")
    return math.ceil(budget_bytes / (bytes_per_sample * samples_per_day * rate))


@dataclass
class BenchRow:
    algorithm: str
    epsilon_m: float
    buffer: int | None
    n_in: int
    n_kept: int
    rate: float
    pruning_power: float | None
    max_dev_m: float
    wall_ms: float | None
    status: str = "ok"

    def as_dict(self) -> dict:
        return asdict(self)


def run_one(
    points: Sequence[TrackPoint],
    algorithm: Algorithm | str,
    epsilon: float,
    buffer_size: int = 32,
    timing: bool = True,
) -> BenchRow:
    """Compress, verify against the raw stream, and summarise one configuration.

    With ``timing`` the compression runs twice and only the second run is
    timed. A configuration whose output breaks the bound is reported with
    ``status="failed"``.
    """
    cfg = CompressorConfig(Algorithm(algorithm), epsilon, buffer_size)
    return measure(points, cfg, timing)[1]


def measure(points: Sequence[TrackPoint], cfg: CompressorConfig, timing: bool = True):
    """Like :func:`run_one` but also returns the compressed trajectory."""
    algorithm, epsilon, buffer_size = cfg.algorithm, cfg.epsilon_d, cfg.buffer_size
    wall_ms = None
    if timing:
        compress(points, cfg)
        t0 = time.perf_counter()
        ct = compress(points, cfg)
        wall_ms = (time.perf_counter() - t0) * 1000.0
    else:
        ct = compress(points, cfg)
    report = verify_error_bound(points, ct, epsilon)
    n = len(points)
    return ct, BenchRow(
        algorithm=algorithm.value,
        epsilon_m=epsilon,
        buffer=buffer_size if algorithm in BUFFERED else None,
        n_in=n,
        n_kept=len(ct.kept),
        rate=compression_rate(len(ct.kept), n),
        pruning_power=(
            pruning_power(ct.stats.full_computations, n) if algorithm is Algorithm.BQS else None
        ),
        max_dev_m=report.max_deviation,
        wall_ms=wall_ms,
        status="ok" if report.ok else "failed",
    )


def run_benchmark(
    points: Sequence[TrackPoint],
    epsilons: Iterable[float],
    algorithms: Iterable[Algorithm | str],
    buffer_sizes: Iterable[int] = (32,),
    timing: bool = True,
) -> list[BenchRow]:
    """Sweep every (algorithm, epsilon, buffer) combination.

    Buffer-independent algorithms run once per epsilon.
    """
    algorithms = [Algorithm(a) for a in algorithms]
    buffer_sizes = list(buffer_sizes)
    rows = []
    for algo in algorithms:
        for eps in epsilons:
            for buf in buffer_sizes if algo in BUFFERED else buffer_sizes[:1]:
                rows.append(run_one(points, algo, eps, buf, timing))
    return rows
