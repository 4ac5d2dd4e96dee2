"""Sharp tail asymptotics and Monte Carlo verification for the drift MLE of the
explosive Cox-Ingersoll-Ross process dX = (delta + b X)dt + 2 sqrt(X) dB, b > 0."""

__version__ = "0.1.0"

from .cgf import (
    CgfDecomposition,
    OutOfDomainError,
    TiltState,
    cgf_total,
    decompose_cgf,
    girsanov_log_density,
    riccati_oracle,
    tilt_domain_contains,
    tilt_domain_interval,
    tilt_state,
)
from .core import (
    DegeneratePathError,
    ExplosiveModeError,
    ModelParams,
    Regime,
    SufficientStats,
    classify_regime,
    mle_drift,
    sufficient_stat_s,
)
from .montecarlo import (
    MCEstimate,
    Method,
    TailReport,
    compare_report,
    estimate_tail,
    is_drift,
    proposal_schedule,
    sample_tail_stats,
)
from .rate_saddle import (
    RatePoint,
    SaddleBracketError,
    SaddleSolution,
    UnsupportedRegimeError,
    delta_scaling_check,
    first_order_coeff,
    rate_function,
    rate_oracle,
    solve_saddle,
)
from .simulate import (
    RngStream,
    SamplePath,
    Scheme,
    exact_endpoint,
    exact_transition,
    horizon_scale,
    simulate_path,
)
from .sldp import (
    CoefficientUnavailableError,
    RegimeError,
    TailApprox,
    exact_tail_at_zero,
    half_power_endpoint_coeff,
    tail_above_b,
    tail_approx,
    tail_at_minus_b,
    tail_at_zero,
    tail_below_minus_b,
    tail_interior,
)

__all__ = [name for name in dir() if not name.startswith("_")]
