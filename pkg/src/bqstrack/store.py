"""Compressed-trajectory store with error-bounded merge and ageing.

Segments live in a uniform-grid spatial index keyed by their bounding
boxes, loosened by each segment's deviation bound. Every segment records
the trajectories that own it and every trajectory lists its segments, so
a stored segment can stand in for several trajectories after merging.
"""

from __future__ import annotations

import json
import math
import os
import tempfile
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

from .compressors import Algorithm, CompressedTrajectory, CompressorConfig, compress
from .geometry import (
    BBox,
    PlanarSegment,
    TrackPoint,
    bbox_expand,
    bbox_intersects,
    point_to_segment_distance,
    segment_pair_distance,
)

EARTH_RADIUS_M = 6_371_000.0
SECONDS_PER_WEEK = 7 * 24 * 3600
FORMAT_VERSION = 1


class InternalConsistencyError(RuntimeError):
    """The store's indexes disagree with each other."""


def project(
    fixes: Sequence[tuple[float, float, float]],
    origin: tuple[float, float] | None = None,
) -> list[TrackPoint]:
    """Equirectangular projection of ``(t, lat, lon)`` fixes to local meters.

    The projection is centred on ``origin`` (lat, lon) or, by default, on the
    first fix.
    """
    if not fixes:
        raise ValueError("no fixes to project")
    for i, (_, lat, lon) in enumerate(fixes):
        if not (abs(lat) <= 90.0 and abs(lon) <= 180.0):
            raise ValueError(f"fix {i} out of range: lat={lat}, lon={lon}")
    lat0, lon0 = origin if origin is not None else (fixes[0][1], fixes[0][2])
    k = math.cos(math.radians(lat0))
    return [
        TrackPoint(
            float(t),
            EARTH_RADIUS_M * math.radians(lon - lon0) * k,
            EARTH_RADIUS_M * math.radians(lat - lat0),
        )
        for t, lat, lon in fixes
    ]


class GridIndex:
    """Uniform grid over bounding boxes with exact box-intersection queries.

    Boxes spanning more than ``max_cells`` cells are kept in a side list
    that every query scans, which bounds the cost of very long segments.
    """

    def __init__(self, cell_size: float, max_cells: int = 256) -> None:
        if not cell_size > 0:
            raise ValueError("cell_size must be positive")
        self.cell_size = cell_size
        self.max_cells = max_cells
        self._cells: dict[tuple[int, int], set[int]] = defaultdict(set)
        self._boxes: dict[int, BBox] = {}
        self._large: set[int] = set()

    def __len__(self) -> int:
        return len(self._boxes)

    def __contains__(self, key: int) -> bool:
        return key in self._boxes

    def _span(self, b: BBox) -> tuple[range, range]:
        c = self.cell_size
        return (
            range(math.floor(b.min_x / c), math.floor(b.max_x / c) + 1),
            range(math.floor(b.min_y / c), math.floor(b.max_y / c) + 1),
        )

    def insert(self, key: int, box: BBox) -> None:
        if key in self._boxes:
            self.remove(key)
        self._boxes[key] = box
        xs, ys = self._span(box)
        if len(xs) * len(ys) > self.max_cells:
            self._large.add(key)
            return
        for i in xs:
            for j in ys:
                self._cells[(i, j)].add(key)

    def remove(self, key: int) -> None:
        box = self._boxes.pop(key)
        if key in self._large:
            self._large.discard(key)
            return
        xs, ys = self._span(box)
        for i in xs:
            for j in ys:
                cell = self._cells[(i, j)]
                cell.discard(key)
                if not cell:
                    del self._cells[(i, j)]

    def query(self, box: BBox) -> list[int]:
        """Keys whose box intersects ``box``, in ascending order."""
        xs, ys = self._span(box)
        candidates = set(self._large)
        if len(xs) * len(ys) > len(self._cells):
            for key, cell in self._cells.items():
                if key[0] in xs and key[1] in ys:
                    candidates |= cell
        else:
            for i in xs:
                for j in ys:
                    cell = self._cells.get((i, j))
                    if cell:
                        candidates |= cell
        return sorted(k for k in candidates if bbox_intersects(self._boxes[k], box))

    def keys(self) -> Iterator[int]:
        return iter(self._boxes)


@dataclass
class SegmentRecord:
    id: int
    s: TrackPoint
    e: TrackPoint
    d_tau: float
    owners: set[int] = field(default_factory=set)

    @property
    def segment(self) -> PlanarSegment:
        return PlanarSegment((self.s.x, self.s.y), (self.e.x, self.e.y))

    @property
    def bbox(self) -> BBox:
        tight = BBox.of_points((self.s.x, self.s.y), (self.e.x, self.e.y))
        return bbox_expand(tight, self.d_tau)


@dataclass(frozen=True)
class SegmentLink:
    """One entry of a trajectory's segment list.

    ``t_start``/``t_end`` are the trajectory's own times for the stretch the
    segment represents; ``reversed`` is set when the trajectory traverses a
    merged segment from its ``e`` end to its ``s`` end.
    """

    segment_id: int
    t_start: float
    t_end: float
    reversed: bool = False


@dataclass
class TrajectoryRecord:
    id: int
    links: list[SegmentLink]
    created_week: int
    epsilon_d: float
    points: list[TrackPoint]

    @property
    def segment_ids(self) -> list[int]:
        return [link.segment_id for link in self.links]


@dataclass(frozen=True)
class AgeingPolicy:
    alpha: float = 1.5
    m_bar: float = 10.0

    def __post_init__(self) -> None:
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if not self.m_bar >= 1:
            raise ValueError("m_bar must be >= 1")


@dataclass(frozen=True)
class MergeOutcome:
    segment_id: int
    merged_into: int | None = None
    d_merged_ub: float | None = None


@dataclass
class AgeStats:
    recompressed: int = 0
    evicted: int = 0
    points_removed: int = 0
    skipped: int = 0


def significance(i: float, policy: AgeingPolicy = AgeingPolicy()) -> float:
    """Logistic significance of a trajectory aged ``i`` time units."""
    return 1.0 / (1.0 + math.exp(policy.alpha * i - policy.m_bar))


def aged_tolerance(epsilon_d: float, i: float, policy: AgeingPolicy = AgeingPolicy()) -> float:
    if not epsilon_d > 0:
        raise ValueError("epsilon_d must be positive")
    return epsilon_d * (1.0 + math.exp(policy.alpha * i - policy.m_bar))


def merged_bound(candidate: PlanarSegment, target: SegmentRecord) -> float:
    """Deviation bound of ``target`` after absorbing ``candidate``."""
    seg = target.segment
    return (
        max(point_to_segment_distance(candidate.s, seg), point_to_segment_distance(candidate.e, seg))
        + target.d_tau
    )


class TrajectoryStore:
    def __init__(
        self,
        cell_size: float = 40.0,
        origin: tuple[float, float] | None = None,
    ) -> None:
        self.segments: dict[int, SegmentRecord] = {}
        self.trajectories: dict[int, TrajectoryRecord] = {}
        self.spatial = GridIndex(cell_size)
        self.origin = origin
        self._next_segment = 0
        self._next_trajectory = 0

    # -- index maintenance -------------------------------------------------

    def _put_segment(self, seg: SegmentRecord) -> None:
        self.segments[seg.id] = seg
        self.spatial.insert(seg.id, seg.bbox)
        self._next_segment = max(self._next_segment, seg.id + 1)

    def _drop_owner(self, seg_id: int, traj_id: int) -> bool:
        """Remove one ownership link; delete the segment if it is orphaned."""
        seg = self.segments.get(seg_id)
        if seg is None:
            raise InternalConsistencyError(f"trajectory {traj_id} links missing segment {seg_id}")
        seg.owners.discard(traj_id)
        if not seg.owners:
            del self.segments[seg_id]
            self.spatial.remove(seg_id)
            return True
        return False

    def _release(self, traj: TrajectoryRecord) -> None:
        for sid in dict.fromkeys(traj.segment_ids):
            self._drop_owner(sid, traj.id)

    def owners(self, seg_id: int) -> set[int]:
        return set(self.segments[seg_id].owners)

    def segments_of(self, traj_id: int) -> list[int]:
        return self.trajectories[traj_id].segment_ids

    def check_consistency(self) -> None:
        for tid, traj in self.trajectories.items():
            for sid in traj.segment_ids:
                seg = self.segments.get(sid)
                if seg is None or tid not in seg.owners:
                    raise InternalConsistencyError(f"trajectory {tid} -> segment {sid} not mirrored")
        for sid, seg in self.segments.items():
            if not seg.owners:
                raise InternalConsistencyError(f"segment {sid} has no owners")
            for tid in seg.owners:
                traj = self.trajectories.get(tid)
                if traj is None or sid not in traj.segment_ids:
                    raise InternalConsistencyError(f"segment {sid} -> trajectory {tid} not mirrored")
        if set(self.spatial.keys()) != set(self.segments):
            raise InternalConsistencyError("spatial index out of sync with segment table")

    # -- queries -------------------------------------------------------------

    def query_similar(self, box: BBox) -> dict[int, list[SegmentRecord]]:
        """Segments whose loosened box meets ``box``, grouped by owning trajectory."""
        groups: dict[int, list[SegmentRecord]] = {}
        for sid in self.spatial.query(box):
            seg = self.segments[sid]
            for tid in sorted(seg.owners):
                groups.setdefault(tid, []).append(seg)
        return dict(sorted(groups.items()))

    # -- mutation ------------------------------------------------------------

    def insert_with_merge(
        self, candidate: SegmentRecord, epsilon_m: float, traj_id: int | None = None
    ) -> MergeOutcome:
        """Store ``candidate`` or absorb it into the nearest stored segment.

        The nearest segment is the one minimising the symmetric endpoint
        distance among those whose loosened box meets the candidate's box
        grown by ``epsilon_m``. The candidate is absorbed when the grown
        bound of that segment stays within ``epsilon_m``. ``traj_id``
        defaults to the candidate's single owner.
        """
        if epsilon_m < 0:
            raise ValueError("epsilon_m must be non-negative")
        if traj_id is None:
            if len(candidate.owners) != 1:
                raise ValueError("candidate must name exactly one owning trajectory")
            (traj_id,) = candidate.owners
        cand = candidate.segment
        groups = self.query_similar(bbox_expand(candidate.bbox, epsilon_m))
        nearest: SegmentRecord | None = None
        best = math.inf
        for segs in groups.values():
            group_best = math.inf
            group_seg = None
            for seg in segs:
                d = segment_pair_distance(cand, seg.segment)
                if d < group_best:
                    group_best, group_seg = d, seg
            if group_best < best or (
                group_best == best and nearest is not None and group_seg.id < nearest.id
            ):
                best, nearest = group_best, group_seg

        ub = None
        if nearest is not None:
            ub = merged_bound(cand, nearest)
            if ub <= epsilon_m:
                self.spatial.remove(nearest.id)
                nearest.d_tau = max(nearest.d_tau, ub)
                nearest.owners.add(traj_id)
                self.spatial.insert(nearest.id, nearest.bbox)
                return MergeOutcome(nearest.id, nearest.id, ub)

        seg = SegmentRecord(self._next_segment, candidate.s, candidate.e, candidate.d_tau, {traj_id})
        self._put_segment(seg)
        return MergeOutcome(seg.id, None, ub)

    def add_trajectory(
        self,
        ct: CompressedTrajectory,
        created_week: int,
        epsilon_m: float | None = None,
    ) -> tuple[int, list[MergeOutcome]]:
        """Insert a compressed trajectory segment by segment.

        With ``epsilon_m`` each segment goes through :meth:`insert_with_merge`;
        without it every segment is stored as is.
        """
        if epsilon_m is not None and epsilon_m < ct.epsilon_d:
            raise ValueError(
                f"merge tolerance {epsilon_m} is below the compression tolerance {ct.epsilon_d}"
            )
        tid = self._next_trajectory
        self._next_trajectory += 1
        traj = TrajectoryRecord(tid, [], created_week, ct.epsilon_d, list(ct.kept))
        self.trajectories[tid] = traj
        outcomes = []
        for k in range(len(ct.kept) - 1):
            s, e = ct.kept[k], ct.kept[k + 1]
            cand = SegmentRecord(-1, s, e, ct.d_tau[k], {tid})
            if epsilon_m is None:
                cand.id = self._next_segment
                self._put_segment(cand)
                out = MergeOutcome(cand.id)
            else:
                out = self.insert_with_merge(cand, epsilon_m, tid)
            outcomes.append(out)
            rev = False
            if out.merged_into is not None:
                tgt = self.segments[out.merged_into]
                rev = _dist2(s, tgt.e) + _dist2(e, tgt.s) < _dist2(s, tgt.s) + _dist2(e, tgt.e)
            traj.links.append(SegmentLink(out.segment_id, s.t, e.t, rev))
        return tid, outcomes

    def age_pass(self, current_week: int, policy: AgeingPolicy = AgeingPolicy()) -> AgeStats:
        """Evict trajectories older than ``m_bar`` and recompress the rest.

        A trajectory of age ``i`` is recompressed with FBQS at
        ``eps_a - base`` where ``eps_a`` is its aged tolerance and ``base`` is
        the larger of its creation tolerance and the largest bound among its
        segments. New segments carry ``d_tau = d_new + base``. Trajectories
        whose ``eps_a`` does not exceed ``base`` are skipped.
        """
        stats = AgeStats()
        for tid in sorted(self.trajectories):
            traj = self.trajectories[tid]
            age = current_week - traj.created_week
            if age > policy.m_bar:
                self._release(traj)
                del self.trajectories[tid]
                stats.evicted += 1
                continue
            if age < 0 or len(traj.points) < 3:
                continue
            b_max = max((self.segments[sid].d_tau for sid in traj.segment_ids), default=0.0)
            base = max(traj.epsilon_d, b_max)
            tol = (aged_tolerance(traj.epsilon_d, age, policy) - base) * (1.0 - 1e-12)
            if tol <= 0.0:
                stats.skipped += 1
                continue
            ct = compress(traj.points, CompressorConfig(Algorithm.FBQS, tol))
            if len(ct.kept) == len(traj.points):
                continue
            self._release(traj)
            traj.links = []
            for k in range(len(ct.kept) - 1):
                s, e = ct.kept[k], ct.kept[k + 1]
                seg = SegmentRecord(self._next_segment, s, e, ct.d_tau[k] + base, {tid})
                self._put_segment(seg)
                traj.links.append(SegmentLink(seg.id, s.t, e.t))
            stats.points_removed += len(traj.points) - len(ct.kept)
            traj.points = list(ct.kept)
            stats.recompressed += 1
        return stats

    # -- persistence ---------------------------------------------------------

    def header_record(self) -> dict:
        lat0, lon0 = self.origin if self.origin is not None else (None, None)
        return {
            "kind": "header",
            "version": FORMAT_VERSION,
            "lat0": lat0,
            "lon0": lon0,
            "cell_size": self.spatial.cell_size,
        }

    def records(self) -> Iterator[dict]:
        yield self.header_record()
        for sid in sorted(self.segments):
            yield segment_record(self.segments[sid])
        for tid in sorted(self.trajectories):
            yield trajectory_record(self.trajectories[tid])

    def save(self, path: str | os.PathLike) -> None:
        """Write the whole store atomically (temp file, then rename)."""
        path = os.fspath(path)
        directory = os.path.dirname(os.path.abspath(path))
        fd, tmp = tempfile.mkstemp(prefix=".store-", dir=directory)
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                for rec in self.records():
                    fh.write(json.dumps(rec) + "\n")
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise

    @classmethod
    def load(cls, path: str | os.PathLike) -> "TrajectoryStore":
        """Read a store file; later records with a repeated id replace earlier ones."""
        with open(path, encoding="utf-8") as fh:
            return cls.from_records(json.loads(line) for line in fh if line.strip())

    @classmethod
    def from_records(cls, records: Iterable[dict]) -> "TrajectoryStore":
        it = iter(records)
        header = next(it, None)
        if header is None or header.get("kind") != "header":
            raise ValueError("store file must start with a header record")
        if header.get("version") != FORMAT_VERSION:
            raise ValueError(f"unsupported store format version {header.get('version')}")
        origin = None
        if header.get("lat0") is not None:
            origin = (header["lat0"], header["lon0"])
        store = cls(cell_size=header["cell_size"], origin=origin)
        for rec in it:
            kind = rec.get("kind")
            if kind == "seg":
                seg = SegmentRecord(
                    rec["id"],
                    TrackPoint(rec["st"], rec["sx"], rec["sy"]),
                    TrackPoint(rec["et"], rec["ex"], rec["ey"]),
                    rec["d_tau"],
                    set(rec["owners"]),
                )
                store._put_segment(seg)
            elif kind == "traj":
                links = [
                    SegmentLink(sid, ts, te, bool(rev))
                    for sid, (ts, te, rev) in zip(rec["segments"], rec["links"])
                ]
                traj = TrajectoryRecord(
                    rec["id"],
                    links,
                    rec["created_week"],
                    rec["epsilon_d"],
                    [TrackPoint(*p) for p in rec["points"]],
                )
                store.trajectories[traj.id] = traj
                store._next_trajectory = max(store._next_trajectory, traj.id + 1)
            else:
                raise ValueError(f"unknown record kind {kind!r}")
        store.check_consistency()
        return store


def segment_record(seg: SegmentRecord) -> dict:
    return {
        "kind": "seg",
        "id": seg.id,
        "sx": seg.s.x,
        "sy": seg.s.y,
        "st": seg.s.t,
        "ex": seg.e.x,
        "ey": seg.e.y,
        "et": seg.e.t,
        "d_tau": seg.d_tau,
        "owners": sorted(seg.owners),
    }


def trajectory_record(traj: TrajectoryRecord) -> dict:
    return {
        "kind": "traj",
        "id": traj.id,
        "created_week": traj.created_week,
        "epsilon_d": traj.epsilon_d,
        "segments": traj.segment_ids,
        "links": [[ln.t_start, ln.t_end, ln.reversed] for ln in traj.links],
        "points": [[p.t, p.x, p.y] for p in traj.points],
    }


def week_of(t: float, epoch: float = 0.0) -> int:
    return math.floor((t - epoch) / SECONDS_PER_WEEK)


def _dist2(a: TrackPoint, b: TrackPoint) -> float:
    return (a.x - b.x) ** 2 + (a.y - b.y) ** 2
