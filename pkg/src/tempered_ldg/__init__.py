"""Local discontinuous Galerkin solver for time-tempered fractional diffusion."""

from tempered_ldg.fractional import (
    ConvolutionWeights,
    TemperedParams,
    caputo_tempered_derivative,
    grunwald_weights,
    lubich_weights,
    mittag_leffler,
    tempered_rl_integral,
    tempered_weights,
)
from tempered_ldg.harness import (
    ConvergenceReport,
    run_profile,
    run_spatial_study,
    run_stability_sweep,
    run_temporal_study,
)
from tempered_ldg.ldg import BoundaryCondition, LDGSystem, assemble
from tempered_ldg.mesh import DGCoefficients, Mesh1D, build_mesh, l2_error
from tempered_ldg.problems import ProblemSpec, example1, example2, example3
from tempered_ldg.projections import l2_project, project_minus, project_plus
from tempered_ldg.timestep import MarchState, RunResult, run, start, step

__version__ = "0.1.0"

__all__ = [
    "BoundaryCondition",
    "ConvergenceReport",
    "ConvolutionWeights",
    "DGCoefficients",
    "LDGSystem",
    "MarchState",
    "Mesh1D",
    "ProblemSpec",
    "RunResult",
    "TemperedParams",
    "assemble",
    "build_mesh",
    "caputo_tempered_derivative",
    "example1",
    "example2",
    "example3",
    "grunwald_weights",
    "l2_error",
    "l2_project",
    "lubich_weights",
    "mittag_leffler",
    "project_minus",
    "project_plus",
    "run",
    "run_profile",
    "run_spatial_study",
    "run_stability_sweep",
    "run_temporal_study",
    "start",
    "step",
    "tempered_rl_integral",
    "tempered_weights",
]
