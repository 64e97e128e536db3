"""Longest light paths in the stochastic mean-field model.

Instance generation, light/good path search, downcrossing statistics,
path-overlap combinatorics, the BRIDGE stitching algorithm and an exact
subset-DP oracle for small instances.
"""

from smf_paths.core import (
    Instance,
    PathStats,
    generate_instance,
    instance_from_weights,
    max_deviation,
    path_stats,
    path_weights,
    validate_path,
)
from smf_paths.errors import (
    AlgorithmInvariantViolation,
    AuditFailure,
    InvalidArgument,
    InvalidPath,
    RangeError,
    ResourceLimit,
)

__version__ = "0.1.0"

__all__ = [
    "AlgorithmInvariantViolation",
    "AuditFailure",
    "Instance",
    "InvalidArgument",
    "InvalidPath",
    "PathStats",
    "RangeError",
    "ResourceLimit",
    "generate_instance",
    "instance_from_weights",
    "max_deviation",
    "path_stats",
    "path_weights",
    "validate_path",
]
