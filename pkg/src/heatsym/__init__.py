"""Lie-symmetry-preserving difference schemes for nonlinear heat equations.

``u_t = (K(u) u_x)_x + Q(u)``: case catalog with admitted operators, invariant
meshes and schemes, a numerical symmetry audit, discrete conservation checks,
point transforms between cases and closed-form reference solutions.
"""
from .errors import (DomainError, FlowBlowup, HeatSymError, InadmissibleImage, LayerMismatch,
                     LayerSkew, MissingMassGrid, NonpositiveDensity, SolverDiverged,
                     StabilityBreach, UnknownCase)
from .model_catalog import (HeatModel, KFamily, MeshClass, QFamily, case_keys, list_models,
                            lookup, optimal_system, parse_key)
from .symmetry import (SymmetryGenerator, check_mesh_conditions, flow_point, flow_stencil,
                       generator, invariance_defect, invariant_directional_defect)
from .stencil import Stencil, from_layers
from .meshes import (Layer, TimeMesh, init_mass_mesh, log_time_meth22, log_time_meth32,
                     mass_nodes, uniform_space, uniform_time)
from .schemes import SchemeId, SchemeParams, StepResult, residual, mesh_residual, run, step
from .transforms import Transform, TransformId, compose, transform_layer, transform_solution
from .conservation import (ConservationReport, Law, first_moment, first_moment_defect,
                           total_heat_orthogonal, total_mass)
from .exact_solutions import (Branch, KernelSolution, SuperposedKernels, kernel_mesh,
                              kernel_value, reduced_Y3_residuals, solve_Y3)

__version__ = "0.1.0"
