"""Conic-programming toolkit for projective resource monotones."""

__version__ = "0.1.0"

from .errors import (  # noqa: F401
    CertificateError,
    ConfigError,
    DimensionError,
    DomainError,
    DualDegenerateError,
    NoGoError,
    NotGoldenError,
    ProjrobError,
    SolverError,
    TheoremViolationError,
)
from .free_sets import FreeSetSpec  # noqa: F401
from .operators import (  # noqa: F401
    HermitianOperator,
    QuantumState,
    hermitian,
    n_copies,
    partial_transpose,
    state,
    state_factory,
    support_projector,
)
from .solver import SolveOptions, Status  # noqa: F401
from .monotones import (  # noqa: F401
    free_projective_robustness,
    generalized_robustness,
    projective_robustness,
    pure_overlap,
    rmax,
    standard_robustness,
    support_overlap,
    weight,
)
from .distill import (  # noqa: F401
    achievable_error,
    distillation_report,
    eigenvalue_bound,
    error_lower_bound,
    isotropic_nogo_check,
    overhead_bound,
    solve_HP,
    solve_HP_aff,
    solve_HP_eps,
    solve_Theta_p,
    tau_eps,
)
from .protocols import (  # noqa: F401
    MeasurePrepareMap,
    apply_map,
    build_conversion_map,
    build_distillation_map,
    convertibility_decision,
    verify_free,
)
from .discrimination import (  # noqa: F401
    DiscriminationInstance,
    advantage_instance_from_duals,
    advantage_ratio,
    success_probability,
    verify_advantage_theorem,
)
from .figures import figure_sweep, tradeoff_sweep, write_csv, write_json  # noqa: F401
