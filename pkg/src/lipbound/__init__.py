"""Certified Lipschitz upper bounds for feedforward neural networks."""

__version__ = "0.1.0"

from .bounds import (
    BoundReport,
    MultiplierSequence,
    StrategyConfig,
    best_of,
    product_bound,
    run_recursion,
    strategy_gc,
    strategy_gcs,
    strategy_interp,
    strategy_shift,
    strategy_sn,
    sweep_c,
)
from .certify import (
    LmiCertificate,
    ValidationReport,
    assemble_lipsdp,
    empirical_lower_bound,
    validate,
    verify_feasibility,
)
from .errors import (
    AllInfeasible,
    DefinitenessLost,
    DimensionCapExceeded,
    DimensionChainError,
    DimensionMismatch,
    LipboundError,
    NonPositiveScaling,
    NotConverged,
    NotPositiveDefinite,
    ParseError,
    ValidationFailed,
)
from .linalg import (
    cholesky,
    gamma_matrix,
    power_iteration,
    psd_check,
    row_abs_sums,
    scaled_row_sums,
    spectral_norm,
    spectral_upper_bound,
)
from .network import (
    Network,
    forward,
    generate_random,
    jacobian_sigma,
    load_network,
    save_network,
)

__all__ = [
    "AllInfeasible",
    "BoundReport",
    "DefinitenessLost",
    "DimensionCapExceeded",
    "DimensionChainError",
    "DimensionMismatch",
    "LipboundError",
    "LmiCertificate",
    "MultiplierSequence",
    "Network",
    "NonPositiveScaling",
    "NotConverged",
    "NotPositiveDefinite",
    "ParseError",
    "StrategyConfig",
    "ValidationFailed",
    "ValidationReport",
    "assemble_lipsdp",
    "best_of",
    "cholesky",
    "empirical_lower_bound",
    "forward",
    "gamma_matrix",
    "generate_random",
    "jacobian_sigma",
    "load_network",
    "power_iteration",
    "product_bound",
    "psd_check",
    "row_abs_sums",
    "run_recursion",
    "save_network",
    "scaled_row_sums",
    "spectral_norm",
    "spectral_upper_bound",
    "strategy_gc",
    "strategy_gcs",
    "strategy_interp",
    "strategy_shift",
    "strategy_sn",
    "sweep_c",
    "validate",
    "verify_feasibility",
]
