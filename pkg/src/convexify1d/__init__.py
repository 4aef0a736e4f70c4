"""Convexification reconstruction of a 1-D dielectric coefficient from
single-point, multi-frequency backscattering data."""

from .basis import BasisSet, ProjectionMatrix, build_basis, build_projection_matrix
from .forward import (ComplexSamples, FrequencyGrid, MediumProfile, add_noise, boundary_data,
                      derivative_data, smooth, solve_lippmann_schwinger)
from .galerkin import (BoundaryVectors, GalerkinSystem, SeedFunction, build_system, chi,
                       postprocess_c, project_boundary, recover_c, residual)
from .mesh import BoundaryConstraint, SpatialGrid
from .objective import (ObjectiveParams, convexity_probe, eval_J, eval_Phi, grad_J,
                        make_objective, project_ball)
from .optimizer import RunTrace, ScheduleParams, minimize_cg, minimize_gradient_projection
from .pipeline import (ContrastEstimate, PipelineConfig, ReconstructionResult, n_study,
                       run_experimental, run_synthetic, run_table1)
from .preprocess import (LocationEstimate, LogData, complex_log_unwrapped, compute_q,
                         estimate_location, propagate_data)

__version__ = "0.1.0"
