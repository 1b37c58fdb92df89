"""Groundstate-weighted analysis of radial Schrodinger operators.

Numerics for L = -Delta + q on R^N with radial, increasing, coercive q:
principal eigenpairs, resolvent estimates in the groundstate-weighted
sup norm, sign-certified linear and semilinear solves near the principal
eigenvalue, and cooperative 2x2 systems by diagonalization.
"""

from .coop_system import (
    CoopMatrix,
    CoupledUniqueness,
    Rectangle,
    SystemProblem,
    SystemReport,
    TransformedData,
    analyze_matrix,
    block_solve,
    coupled_uniqueness_check,
    inherited_bounds,
    rectangle,
    solve_system,
    system_problem,
    system_two_start,
    transform_data,
    window_system,
)
from .errors import (
    BracketEscape,
    ConvergenceFailure,
    GroundstateError,
    HypothesisViolated,
    MalformedInput,
    MonotonicityBroken,
    NoConvergence,
    NonPositivePotential,
    NotCooperative,
    NotIncreasing,
    RectangleEscape,
    SectorBudget,
    SignMixed,
    SingularResolvent,
    UnboundedSearch,
    WindowViolation,
)
from .groundstate_space import (
    GroundstateVector,
    WindowEstimate,
    decompose,
    estimate_c0_delta0,
    projected_resolvent_norm,
    x_norm,
    x_norm_location,
)
from .linear_solver import (
    LinearCertificate,
    LinearProblem,
    certify_theorem1,
    linear_problem,
    solve_linear,
)
from .radial_grid import (
    ClassPReport,
    Grid,
    RadialPotential,
    build_grid,
    exp_potential,
    make_grid,
    power_potential,
    sphere_area,
    tabulated_potential,
    validate_class_P,
)
from .semilinear_solver import (
    Bracket,
    Nonlinearity,
    SemilinearReport,
    UniquenessDiagnostics,
    apply_T,
    brezis_oswald_check,
    constant_profile,
    exp_decay_profile,
    make_bracket,
    monotone_solve,
    rational_profile,
    solve_semilinear,
    two_start_diagnostics,
    validate_nonlinearity,
    window_semilinear,
)
from .spectral import (
    DiscreteOperator,
    SpectrumSummary,
    assemble,
    eigenpairs,
    eigenvalues,
    principal_eigenpair,
    second_eigenvalue,
    summarize_spectrum,
)

__version__ = "0.1.0"

__all__ = [
    "BracketEscape",
    "Bracket",
    "ClassPReport",
    "ConvergenceFailure",
    "CoopMatrix",
    "CoupledUniqueness",
    "DiscreteOperator",
    "Grid",
    "GroundstateError",
    "GroundstateVector",
    "HypothesisViolated",
    "LinearCertificate",
    "LinearProblem",
    "MalformedInput",
    "MonotonicityBroken",
    "NoConvergence",
    "NonPositivePotential",
    "Nonlinearity",
    "NotCooperative",
    "NotIncreasing",
    "RadialPotential",
    "Rectangle",
    "RectangleEscape",
    "SectorBudget",
    "SemilinearReport",
    "SignMixed",
    "SingularResolvent",
    "SpectrumSummary",
    "SystemProblem",
    "SystemReport",
    "TransformedData",
    "UnboundedSearch",
    "UniquenessDiagnostics",
    "WindowEstimate",
    "WindowViolation",
    "analyze_matrix",
    "apply_T",
    "assemble",
    "block_solve",
    "brezis_oswald_check",
    "build_grid",
    "certify_theorem1",
    "constant_profile",
    "coupled_uniqueness_check",
    "decompose",
    "eigenpairs",
    "eigenvalues",
    "estimate_c0_delta0",
    "exp_decay_profile",
    "exp_potential",
    "inherited_bounds",
    "linear_problem",
    "make_bracket",
    "make_grid",
    "monotone_solve",
    "power_potential",
    "principal_eigenpair",
    "projected_resolvent_norm",
    "rational_profile",
    "rectangle",
    "second_eigenvalue",
    "solve_linear",
    "solve_semilinear",
    "solve_system",
    "sphere_area",
    "summarize_spectrum",
    "system_problem",
    "system_two_start",
    "tabulated_potential",
    "transform_data",
    "two_start_diagnostics",
    "validate_class_P",
    "validate_nonlinearity",
    "window_semilinear",
    "window_system",
    "x_norm",
    "x_norm_location",
]
