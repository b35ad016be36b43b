"""Toolkit for almost periodic diffeomorphisms of the real line.

Trigonometric polynomials with frequencies on a finitely generated
lattice, the group of near-identity maps id + f they induce, Sobolev-type
inner products, geodesic flows of the right-invariant metrics (including
both exponential maps), Holder norm estimators, and JSON persistence.
"""

from .ap_algebra import (
    FrequencyLattice,
    MetricParams,
    TrigPoly,
    VectorField,
    apply_A_alpha,
    bohr_mean,
    derivative,
    evaluate,
    inner_product_alpha,
    invert_A_alpha,
    linear_combine,
    make_lattice,
    multiply,
    shift,
)
from .diff_group import (
    ApDiffeo,
    MatrixField,
    compose_diffeo,
    default_check_grid,
    invert_diffeo,
    jacobian,
    make_diffeo,
    shift_diffeo,
)
from .errors import (
    ApDiffError,
    BeyondBlowup,
    ConfigError,
    InvalidLattice,
    InvalidValue,
    LatticeMismatch,
    LowerBoundViolated,
    MarginViolated,
    NoConvergence,
    SchemaError,
    SolverError,
    StepFailure,
    UnsupportedOrder,
)
from .geodesic_flows import (
    EulerianResult,
    EulerianState,
    GeodesicResult,
    GeodesicState,
    SolverConfig,
    TrajectoryLog,
    b_alpha,
    burgers_blowup_time,
    burgers_solution,
    directional_derivative,
    energy,
    eulerian_velocity,
    exp_lie,
    exp_riemannian,
    geodesic_rhs,
    integrate_eulerian_ch,
    integrate_geodesic,
    metric_nu_alpha,
)
from .holder_norms import (
    EvaluableFunction,
    ModulusProfile,
    cm_norm,
    dyadic_offsets,
    holder_seminorm,
    little_holder_profile,
    sup_norm,
)
from .serialization import (
    load_state,
    save_state,
    vector_field_from_modes,
)
from .torus_engine import (
    CompositionReport,
    GridData,
    compose,
    default_grid,
    pointwise_product_dealiased,
    project_to_lattice,
    reciprocal,
    sample_grid,
)
from .verify import CheckResult, run_all

__version__ = "0.1.0"

__all__ = [
    "FrequencyLattice",
    "MetricParams",
    "TrigPoly",
    "VectorField",
    "make_lattice",
    "linear_combine",
    "multiply",
    "derivative",
    "shift",
    "evaluate",
    "bohr_mean",
    "apply_A_alpha",
    "invert_A_alpha",
    "inner_product_alpha",
    "ApDiffeo",
    "MatrixField",
    "make_diffeo",
    "compose_diffeo",
    "invert_diffeo",
    "shift_diffeo",
    "jacobian",
    "default_check_grid",
    "GridData",
    "CompositionReport",
    "compose",
    "sample_grid",
    "project_to_lattice",
    "pointwise_product_dealiased",
    "reciprocal",
    "default_grid",
    "SolverConfig",
    "GeodesicState",
    "GeodesicResult",
    "EulerianState",
    "EulerianResult",
    "TrajectoryLog",
    "integrate_geodesic",
    "integrate_eulerian_ch",
    "geodesic_rhs",
    "eulerian_velocity",
    "exp_riemannian",
    "exp_lie",
    "directional_derivative",
    "metric_nu_alpha",
    "energy",
    "b_alpha",
    "burgers_blowup_time",
    "burgers_solution",
    "EvaluableFunction",
    "ModulusProfile",
    "sup_norm",
    "holder_seminorm",
    "cm_norm",
    "little_holder_profile",
    "dyadic_offsets",
    "save_state",
    "load_state",
    "vector_field_from_modes",
    "CheckResult",
    "run_all",
    "ApDiffError",
    "InvalidLattice",
    "LatticeMismatch",
    "InvalidValue",
    "UnsupportedOrder",
    "LowerBoundViolated",
    "SolverError",
    "MarginViolated",
    "NoConvergence",
    "BeyondBlowup",
    "StepFailure",
    "SchemaError",
    "ConfigError",
    "__version__",
]
