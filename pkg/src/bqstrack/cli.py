"""Command-line interface.

Exit status: 0 success, 1 usage error, 2 data error, 3 internal invariant
failure (including an error-bound violation caught by the verifier).
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from typing import Sequence, TextIO

from . import metrics
from .compressors import Algorithm, CompressorConfig, compress, verify_error_bound
from .geometry import TrackPoint
from .store import (
    AgeingPolicy,
    InternalConsistencyError,
    TrajectoryStore,
    project,
    week_of,
)
from .synth import SynthParams, generate

log = logging.getLogger("bqstrack")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 0, 1, 2, 3


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        raise UsageError(f"{self.prog}: {message}")


def fmt(v: float) -> str:
    # repr round-trips doubles exactly.
    return repr(float(v))


def read_track(path: str, fmt_hint: str = "auto", origin=None):
    """Read a CSV track.

    Returns ``(points, geo_origin)``; ``geo_origin`` is the (lat, lon) used for
    projection, or None for planar input.
    """
    try:
        fh = sys.stdin if path == "-" else open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot open {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        header = [h.strip() for h in next(reader, [])]
        if header == ["t", "lat", "lon"]:
            kind = "geo"
        elif header[:3] == ["t", "x", "y"]:
            kind = "planar"
        else:
            raise DataError(f"{path}:1: expected header t,lat,lon or t,x,y, got {','.join(header)}")
        if fmt_hint != "auto" and fmt_hint != kind:
            raise DataError(f"{path}:1: header is {kind} but --format {fmt_hint} was given")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            try:
                t, a, b = (float(c) for c in row[:3])
            except ValueError:
                raise DataError(f"{path}:{lineno}: malformed row {row!r}") from None
            rows.append((t, a, b))
    if kind == "geo":
        if origin is None and rows:
            origin = (rows[0][1], rows[0][2])
        try:
            points = project(rows, origin)
        except ValueError as exc:
            raise DataError(f"{path}: {exc}") from exc
        return points, origin
    return [TrackPoint(*r) for r in rows], None


def _open_out(path: str | None) -> TextIO:
    if path is None or path == "-":
        return sys.stdout
    return open(path, "w", newline="", encoding="utf-8")


def write_track(path: str | None, rows: Sequence[Sequence[float]], header: Sequence[str]) -> None:
    fh = _open_out(path)
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([fmt(v) for v in r])
    finally:
        if fh is not sys.stdout:
            fh.close()


def write_json(path: str | None, obj) -> None:
    fh = _open_out(path)
    try:
        json.dump(obj, fh, indent=2)
        fh.write("\n")
    finally:
        if fh is not sys.stdout:
            fh.close()


def _csv_list(conv):
    def parse(text: str):
        try:
            return [conv(v) for v in text.split(",") if v.strip()]
        except ValueError as exc:
            raise argparse.ArgumentTypeError(str(exc)) from exc
    return parse


def _positive(conv):
    def parse(text: str):
        v = conv(text)
        if not v > 0:
            raise argparse.ArgumentTypeError(f"must be positive: {text}")
        return v
    return parse


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="bqstrack", description="Error-bounded trajectory compression toolkit.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    c = sub.add_parser("compress", help="compress a CSV track")
    c.add_argument("--algo", required=True, choices=[a.value for a in Algorithm])
    c.add_argument("--epsilon", required=True, type=_positive(float))
    c.add_argument("--buffer", type=int, default=32)
    c.add_argument("--input", required=True)
    c.add_argument("--output", required=True)
    c.add_argument("--metrics")
    c.add_argument("--format", choices=["auto", "geo", "planar"], default="auto")
    c.add_argument("--no-verify", action="store_true")
    c.add_argument("--no-timing", action="store_true", help="omit wall-clock time from metrics")

    s = sub.add_parser("store", help="compressed-trajectory store maintenance")
    ssub = s.add_subparsers(dest="store_command", required=True, parser_class=_Parser)
    si = ssub.add_parser("ingest", help="compress with FBQS and merge into the store")
    si.add_argument("--db", required=True)
    si.add_argument("--epsilon", required=True, type=_positive(float))
    si.add_argument("--epsilon-merge", required=True, type=_positive(float))
    si.add_argument("--input", required=True)
    si.add_argument("--week", type=int, help="creation week (default: from first timestamp)")
    si.add_argument("--epoch", type=float, default=0.0, help="unix time of week 0")
    si.add_argument("--cell-size", type=_positive(float), help="grid cell for a new store")
    sa = ssub.add_parser("age", help="evict and recompress aged trajectories")
    sa.add_argument("--db", required=True)
    sa.add_argument("--alpha", type=_positive(float), default=1.5)
    sa.add_argument("--max-weeks", type=_positive(float), default=10.0)
    sa.add_argument("--week", type=int, required=True)

    g = sub.add_parser("synth", help="generate a synthetic track")
    d = SynthParams()
    g.add_argument("--points", type=int, default=d.n_points)
    g.add_argument("--bounds", type=_positive(float), default=d.bounds)
    g.add_argument("--seed", type=int, default=d.seed)
    g.add_argument("--kappa", type=_positive(float), default=d.kappa)
    g.add_argument("--mean-move", type=_positive(float), default=d.mean_move_duration)
    g.add_argument("--mean-wait", type=float, default=d.mean_wait_duration)
    g.add_argument("--speed-mu", type=float, default=d.speed_mu)
    g.add_argument("--speed-sigma", type=_positive(float), default=d.speed_sigma)
    g.add_argument("--speed-cap", type=_positive(float), default=d.speed_cap)
    g.add_argument("--interval", type=_positive(float), default=d.sample_interval)
    g.add_argument("--output")

    e = sub.add_parser("estimate", help="days of operation for a storage budget")
    e.add_argument("--budget-bytes", type=_positive(float), default=51200)
    e.add_argument("--sample-bytes", type=_positive(float), default=12)
    e.add_argument("--samples-per-day", type=_positive(float), default=1440)
    e.add_argument("--rate", type=_positive(float), required=True)

    b = sub.add_parser("bench", help="benchmark compressors on a track")
    b.add_argument("--input", required=True)
    b.add_argument("--epsilons", required=True, type=_csv_list(float))
    b.add_argument("--algos", type=_csv_list(Algorithm), default=list(Algorithm))
    b.add_argument("--buffers", type=_csv_list(int), default=[32])
    b.add_argument("--output")
    b.add_argument("--no-timing", action="store_true")
    return p


def cmd_compress(args) -> int:
    points, _ = read_track(args.input, args.format)
    try:
        cfg = CompressorConfig(Algorithm(args.algo), args.epsilon, args.buffer)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    try:
        if args.metrics:
            ct, row = metrics.measure(points, cfg, timing=not args.no_timing)
        else:
            ct = compress(points, cfg)
    except ValueError as exc:
        raise DataError(f"{args.input}: {exc}") from exc
    if not args.no_verify:
        report = verify_error_bound(points, ct, args.epsilon)
        if not report.ok:
            i, d = report.violations[0]
            log.error("bound violated at input point %d: %.6g m > %.6g m", i, d, args.epsilon)
            return EXIT_INTERNAL
    rows = [(ct.kept[0].t, ct.kept[0].x, ct.kept[0].y, 0.0)]
    rows += [(p.t, p.x, p.y, d) for p, d in zip(ct.kept[1:], ct.d_tau)]
    write_track(args.output, rows, ["t", "x", "y", "d_tau"])
    if args.metrics:
        write_json(args.metrics, row.as_dict())
        if row.status != "ok":
            return EXIT_INTERNAL
    return EXIT_OK


def _load_store(path: str) -> TrajectoryStore:
    try:
        return TrajectoryStore.load(path)
    except InternalConsistencyError:
        raise
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise DataError(f"{path}: unreadable store: {exc}") from exc


def cmd_store_ingest(args) -> int:
    if args.epsilon_merge < args.epsilon:
        raise UsageError("--epsilon-merge must be >= --epsilon")
    store = _load_store(args.db) if os.path.exists(args.db) else None
    points, origin = read_track(args.input, origin=store.origin if store else None)
    if store is None:
        store = TrajectoryStore(cell_size=args.cell_size or 4.0 * args.epsilon_merge, origin=origin)
    elif (store.origin is None) != (origin is None):
        raise DataError(f"{args.input}: coordinate form does not match the store")
    try:
        ct = compress(points, CompressorConfig(Algorithm.FBQS, args.epsilon))
    except ValueError as exc:
        raise DataError(f"{args.input}: {exc}") from exc
    week = args.week if args.week is not None else week_of(points[0].t, args.epoch)
    tid, outcomes = store.add_trajectory(ct, week, args.epsilon_merge)
    store.check_consistency()
    store.save(args.db)
    merged = sum(o.merged_into is not None for o in outcomes)
    write_json(None, {
        "trajectory": tid,
        "created_week": week,
        "points_in": len(points),
        "points_kept": len(ct.kept),
        "segments": len(outcomes),
        "merged": merged,
    })
    return EXIT_OK


def cmd_store_age(args) -> int:
    if not os.path.exists(args.db):
        raise DataError(f"no store at {args.db}")
    store = _load_store(args.db)
    try:
        policy = AgeingPolicy(args.alpha, args.max_weeks)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    stats = store.age_pass(args.week, policy)
    store.check_consistency()
    store.save(args.db)
    write_json(None, vars(stats))
    return EXIT_OK


def cmd_synth(args) -> int:
    try:
        params = SynthParams(
            n_points=args.points,
            bounds=args.bounds,
            kappa=args.kappa,
            mean_move_duration=args.mean_move,
            mean_wait_duration=args.mean_wait,
            speed_mu=args.speed_mu,
            speed_sigma=args.speed_sigma,
            speed_cap=args.speed_cap,
            sample_interval=args.interval,
            seed=args.seed,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    write_track(args.output, generate(params), ["t", "x", "y"])
    return EXIT_OK


def cmd_estimate(args) -> int:
    try:
        days = metrics.operational_time_days(
            args.budget_bytes, args.sample_bytes, args.samples_per_day, args.rate
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    print(days)
    return EXIT_OK


def cmd_bench(args) -> int:
    points, _ = read_track(args.input)
    if not args.epsilons or any(e <= 0 for e in args.epsilons):
        raise UsageError("--epsilons must be a non-empty list of positive numbers")
    try:
        rows = metrics.run_benchmark(
            points, args.epsilons, args.algos, args.buffers, timing=not args.no_timing
        )
    except ValueError as exc:
        raise DataError(f"{args.input}: {exc}") from exc
    write_json(args.output, [r.as_dict() for r in rows])
    failed = [r for r in rows if r.status != "ok"]
    for r in failed:
        log.error("bound violated: %s eps=%s buffer=%s", r.algorithm, r.epsilon_m, r.buffer)
    return EXIT_INTERNAL if failed else EXIT_OK


COMMANDS = {
    "compress": cmd_compress,
    "synth": cmd_synth,
    "estimate": cmd_estimate,
    "bench": cmd_bench,
    ("store", "ingest"): cmd_store_ingest,
    ("store", "age"): cmd_store_age,
}


def main(argv: Sequence[str] | None = None) -> int:
    logging.basicConfig(format="%(name)s: %(levelname)s: %(message)s")
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    if args.verbose:
        log.setLevel(logging.DEBUG)
    key = (args.command, args.store_command) if args.command == "store" else args.command
    try:
        return COMMANDS[key](args)
    except UsageError as exc:
        print(f"bqstrack: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"bqstrack: {exc}", file=sys.stderr)
        return EXIT_DATA
    except InternalConsistencyError as exc:
        print(f"bqstrack: internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
