"""mrmlab: log-normal multifractal random measures on a grid, the multistep
optimal transport pushing them onto the uniform ball measure, and the
downstream geometry: pullback distances and geodesics, KPZ dimension
relations, and multifractal time changes."""

from .params import (ExponentTable, ModelParams, exponent_table,
                     is_non_degenerate, min_steps, omega_lambda_moments,
                     psi, zeta)
from .fields import (EmbeddingError, FieldSlice, kernel, kernel_quadrature,
                     rho, sample_field, spectral_factorization)
from .measures import (DiscreteMeasure, ScalingReport, build_measure,
                       compose_chaos, energy, estimate_zeta, uniform_measure)
from .transport import (ChainedMap, SolverError, TransportMap, TransportPlan,
                        barycentric_map, exact_assignment, invert_map,
                        multi_step, pushforward, sinkhorn)
from .geometry import (PullbackChart, build_chart, dist, geodesic,
                       geodesic_polyline, metric_factor)
from .dimension import (DimensionEstimate, KpzReport, geodesic_dimension_experiment,
                        hausdorff_estimate, kpz_check, kpz_inverse,
                        kpz_transform)
from .timechange import CornerField, TimeChangedPath, corner_field, time_change_1d
from .kernels import backend_name

__version__ = "0.1.0"

__all__ = [
    "ExponentTable", "ModelParams", "exponent_table", "is_non_degenerate",
    "min_steps", "omega_lambda_moments", "psi", "zeta",
    "EmbeddingError", "FieldSlice", "kernel", "kernel_quadrature", "rho",
    "sample_field", "spectral_factorization",
    "DiscreteMeasure", "ScalingReport", "build_measure", "compose_chaos",
    "energy", "estimate_zeta", "uniform_measure",
    "ChainedMap", "SolverError", "TransportMap", "TransportPlan",
    "barycentric_map", "exact_assignment", "invert_map", "multi_step",
    "pushforward", "sinkhorn",
    "PullbackChart", "build_chart", "dist", "geodesic", "geodesic_polyline",
    "metric_factor",
    "DimensionEstimate", "KpzReport", "geodesic_dimension_experiment",
    "hausdorff_estimate", "kpz_check", "kpz_inverse", "kpz_transform",
    "CornerField", "TimeChangedPath", "corner_field", "time_change_1d",
    "backend_name",
]
