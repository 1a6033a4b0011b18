"""K-spectral sets: numerical ranges, rational calculus, double-layer dilations,
Riesz decompositions and Gleason parts for matrices."""

from .convex import ConvexRegion, hausdorff, hull_of_union, numrange_boundary, verify_hull_identity
from .curves import BoundaryCurve, BoundaryGrid, discretize
from .decomposition import (
    Contour, MeasureProjection, contractive_similarity_search, decompose_operator, idempotent_system,
    orthogonalize,
)
from .double_layer import elementary_measure, np_matrix, reconstruct, semispectral_density
from .errors import InputError, KSpectralError, NumericError
from .gleason import GleasonConfig, gleason_distance_lb, get_domain, load_catalog
from .rational import RationalFunction, SearchConfig, estimate_K, rat_eval, rat_eval_matrix, sup_norm
from .scenarios import Scenario, convergence_study, random_operator, run

__version__ = "0.1.0"

__all__ = [
    "BoundaryCurve", "BoundaryGrid", "Contour", "ConvexRegion", "GleasonConfig", "InputError",
    "KSpectralError", "MeasureProjection", "NumericError", "RationalFunction", "Scenario", "SearchConfig",
    "contractive_similarity_search", "convergence_study", "decompose_operator", "discretize",
    "elementary_measure", "estimate_K", "get_domain", "gleason_distance_lb", "hausdorff", "hull_of_union",
    "idempotent_system", "load_catalog", "np_matrix", "numrange_boundary", "orthogonalize", "random_operator",
    "rat_eval", "rat_eval_matrix", "reconstruct", "run", "semispectral_density", "sup_norm",
    "verify_hull_identity",
]
