"""Error-bounded streaming trajectory compression with bounded quadrant systems."""

from .bqs import BqsState, DeviationBounds, quadrant_of
from .compressors import (
    Algorithm,
    BQSCompressor,
    CompressedTrajectory,
    CompressorConfig,
    FBQSCompressor,
    compress,
    verify_error_bound,
)
from .geometry import BBox, LineThrough, PlanarSegment, TrackPoint

__all__ = [
    "Algorithm",
    "BBox",
    "BQSCompressor",
    "BqsState",
    "CompressedTrajectory",
    "CompressorConfig",
    "DeviationBounds",
    "FBQSCompressor",
    "LineThrough",
    "PlanarSegment",
    "TrackPoint",
    "compress",
    "quadrant_of",
    "verify_error_bound",
]
