"""Alternate-coin quantum walk on the two-dimensional integer lattice.

Exact unitary evolution (lattice and Fourier pictures), the long-time
velocity density on its two-ellipse support, and a verification harness
that cross-checks the two against each other.
"""

from .model import (
    CoinParameters,
    DerivedConstants,
    Model,
    ParameterDomainError,
    build_model,
    derive_constants,
)
from .lattice import (
    LatticeState,
    PositionDistribution,
    Moments,
    initial_state_delta,
    initial_state_from_sites,
    step,
    evolve,
    position_distribution,
    moments,
)
from .spectral import (
    DegeneracyError,
    EigenSystem,
    InitialSpectrum,
    bloch_matrix,
    eigenvalues,
    eigensystem,
    group_velocity,
    fourier_initial,
    spectral_evolve,
    spectral_reconstruct,
    band_weights,
    numeric_char_function,
)
from .limit import (
    Branch,
    BranchError,
    DensityGrid,
    IntegralResult,
    OutsideSupportError,
    forward_map,
    inverse_map,
    classify_branch,
    support_contains,
    support_corners,
    support_boundary,
    jacobian_forward,
    jacobian_inverse,
    density,
    density_grid,
    integrate_density,
    konno_density,
    reference_ellipse_grover,
)
from .verify import ComparisonReport, run_suite

__version__ = "0.1.0"

__all__ = [
    "CoinParameters",
    "DerivedConstants",
    "Model",
    "ParameterDomainError",
    "build_model",
    "derive_constants",
    "LatticeState",
    "PositionDistribution",
    "Moments",
    "initial_state_delta",
    "initial_state_from_sites",
    "step",
    "evolve",
    "position_distribution",
    "moments",
    "DegeneracyError",
    "EigenSystem",
    "InitialSpectrum",
    "bloch_matrix",
    "eigenvalues",
    "eigensystem",
    "group_velocity",
    "fourier_initial",
    "spectral_evolve",
    "spectral_reconstruct",
    "band_weights",
    "numeric_char_function",
    "Branch",
    "BranchError",
    "DensityGrid",
    "IntegralResult",
    "OutsideSupportError",
    "forward_map",
    "inverse_map",
    "classify_branch",
    "support_contains",
    "support_corners",
    "support_boundary",
    "jacobian_forward",
    "jacobian_inverse",
    "density",
    "density_grid",
    "integrate_density",
    "konno_density",
    "reference_ellipse_grover",
    "ComparisonReport",
    "run_suite",
    "__version__",
]
