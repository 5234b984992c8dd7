"""Evaluation toolkit for in-hand manipulation benchmarks.

Scores executions of benchmark tasks against their goals (hand pose error,
contact-region error on the object surface), gates experiment setups, and
produces summary tables and box-plot reports.
"""

__version__ = "0.1.0"

from .mesh import TriangleMesh, euclidean_metric, g_min, min_vertex, validate_mesh  # noqa: E402
from .meshio import load_mesh, save_mesh  # noqa: E402
from .pose import (  # noqa: E402
    Pose,
    RigidTransform,
    apply_transform,
    orientation_error_pct,
    position_error,
    position_error_pct,
    relative_transform,
)

__all__ = [
    "Pose",
    "RigidTransform",
    "TriangleMesh",
    "apply_transform",
    "euclidean_metric",
    "g_min",
    "load_mesh",
    "min_vertex",
    "orientation_error_pct",
    "position_error",
    "position_error_pct",
    "relative_transform",
    "save_mesh",
    "validate_mesh",
]
