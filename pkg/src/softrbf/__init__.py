"""Mesh-free steady linear ODE/PDE solver via soft-partition Gaussian RBF collocation.

Partition lengths on the unit simplex jointly set collocation density and
Gaussian kernel widths; one weighted least-squares solve yields the solution
coefficients, and an optional Bayesian outer loop tunes the partitions
against an independent validation residual.
"""

from .sampling import (
    DomainBounds,
    PartitionSpec1D,
    PartitionSpec2D,
    SampledBasis,
    partition_boundaries,
    sample_1d,
    sample_2d,
    softmax_lengths,
)
from .kernel import fourier_magnitude, gauss_deriv_1d, gauss_partial_2d
from .geometry import FlowerParams, SdfField, SdfWeightParams, clip_centers, extract_boundary, flower_sdf, pde_weight
from .problem import (
    BoundaryConstraint,
    CaseSetup,
    ConfigError,
    LinearOperator,
    OperatorTerm,
    ProblemSpec,
    apply_operator,
    builtin_problem,
)
from .assembly import AssemblyError, LeastSquaresSystem, assemble
from .solver import SolveReport, SolverError, error_metrics, evaluate_solution, solve
from .tuner import BoTrace, GpSurrogate, ValidationObjective, expected_improvement, gp_posterior, objective_eval, optimize

__version__ = "0.1.0"
