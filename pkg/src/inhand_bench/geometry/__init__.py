from .contact import (
    DEFAULT_CONTACT_TOLERANCE,
    ContactMetric,
    ContactResult,
    contact_region_error,
    contact_region_result,
    max_min_distance,
    project_onto,
)
from .geodesic import GeodesicMethod, GeodesicSolver, geodesic_metric
from .intersect import IntersectionPointSet, intersect, triangle_pair_points

__all__ = [
    "DEFAULT_CONTACT_TOLERANCE",
    "ContactMetric",
    "ContactResult",
    "GeodesicMethod",
    "GeodesicSolver",
    "IntersectionPointSet",
    "contact_region_error",
    "contact_region_result",
    "geodesic_metric",
    "intersect",
    "max_min_distance",
    "project_onto",
    "triangle_pair_points",
]
