"""Small weighted relative (p, eps)-approximations for geometric range spaces."""

from .core import (ApproxParams, ConstructionError, ConstructionReport, WeightedSample, construct,
                   resolve_plan, weighted_measure)
from .harness import ExperimentConfig, Report, generate_points, run
from .points import PointSet, read_points, write_points
from .ranges import RangeCatalog, RangeFamily, canonical_ranges, well_behaved_profile
from .verify import ViolationReport, baseline_sample, check_pnet, check_relative, compare

__all__ = [
    "ApproxParams", "ConstructionError", "ConstructionReport", "ExperimentConfig", "PointSet", "RangeCatalog",
    "RangeFamily", "Report", "ViolationReport", "WeightedSample", "baseline_sample", "canonical_ranges",
    "check_pnet", "check_relative", "compare", "construct", "generate_points", "read_points", "resolve_plan",
    "run", "weighted_measure", "well_behaved_profile", "write_points",
]
