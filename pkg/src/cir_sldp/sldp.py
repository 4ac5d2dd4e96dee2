"""Sharp tail approximations for the drift MLE in the explosive regime.

Each branch evaluates a closed-form approximation of the form

    prefactor(T) * exp(-delta * T * I_1(d)) * (1 + corrections)

where I_1 is the unit-dimension rate.  Everything is assembled in log space
and exponentiated last; the exponential factor alone underflows quickly.

Correction policy: only coefficients with a stated closed form are applied
(the first-order tilted-mass coefficients, the half-power g_1, and the full
series in the d = 0 branch).  Orders beyond that are refused loudly rather
than approximated.  The first-order corrections in the above-b and interior
branches multiply the tilted-mass factor only, so they are approximation
grade: the comparison-integral side of the product contributes additional
same-order terms that have no stated closed form.

The d = 0 branch also exposes the exact law: with X_0 = 0 the normalized
endpoint X_T/L_T, L_T = (e^{bT}-1)/b, is chi-square with delta degrees of
freedom, so P(estimator <= 0) = P(X_T <= delta*T) is an incomplete-gamma
value with no asymptotics involved.  The series branch and the exact law are
compared by the reporting layer, never conflated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

from scipy.special import gammainc, gammaln

from .core import ModelParams, Regime, classify_regime
from .rate_saddle import first_order_coeff, rate_function
from .simulate import horizon_scale

#: minimum number of e-foldings T*rate below which the asymptotics are flagged
VALIDITY_EFOLDINGS = 2.0


class CoefficientUnavailableError(ValueError):
    """Requested expansion order has no stated closed-form coefficient."""


class RegimeError(ValueError):
    """Threshold does not belong to the requested branch."""


@dataclass(frozen=True)
class TailApprox:
    """One evaluated tail approximation.

    ``side`` records which tail is approximated ("lower" for
    P(estimator <= d), "upper" for P(estimator >= d)).  ``value`` equals
    exp(log_leading) * (1 + sum(correction_terms)); ``valid`` is False when
    the asymptotic formula cannot be trusted (value above one or fewer than
    VALIDITY_EFOLDINGS e-foldings of decay).
    """

    regime: Regime
    side: str
    d: float
    T: float
    order_p: int
    log_leading: float
    correction_terms: tuple[float, ...]
    t_rate: float  # T * I(d), the number of e-foldings of decay
    value: float = field(init=False)
    valid: bool = field(init=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "log_leading", float(self.log_leading))
        bracket = 1.0 + sum(self.correction_terms)
        value = math.exp(self.log_leading) * bracket if bracket > 0 else 0.0
        object.__setattr__(self, "value", value)
        object.__setattr__(
            self, "valid", bool(value <= 1.0 and self.t_rate >= VALIDITY_EFOLDINGS)
        )


def _require_order(order_p: int, available: int, regime: Regime) -> None:
    if order_p < 0:
        raise ValueError("order_p must be >= 0")
    if order_p > available:
        raise CoefficientUnavailableError(
            f"regime {regime.value}: no closed-form coefficient beyond order {available} "
            f"(requested {order_p})"
        )


def tail_below_minus_b(d: float, T: float, params: ModelParams, order_p: int = 0) -> TailApprox:
    """P(estimator <= d) for d < -b.

    Leading term -exp(-delta T I_1(d) + delta H(a_d)) / (a_d sigma_d sqrt(2 pi T))
    with a_d = (d^2-b^2)/(4d) < 0 (so the value is positive), sigma_d^2 = -1/d
    and H(a_d) = -1/2 log((d+b)(3d-b)/(4 d^2)).  No first-order coefficient is
    available in closed form.
    """
    if classify_regime(d, params) is not Regime.BELOW_MINUS_B:
        raise RegimeError(f"d={d} is not below -b for b={params.b}")
    _require_order(order_p, 0, Regime.BELOW_MINUS_B)
    delta, b = params.delta, params.b
    a_d = (d * d - b * b) / (4.0 * d)
    sigma_d = math.sqrt(-1.0 / d)
    h_arg = (d + b) * (3.0 * d - b) / (4.0 * d * d)
    assert h_arg > 0, "log argument must be positive below -b"
    H_ad = -0.5 * math.log(h_arg)
    rate1 = rate_function(d, params).rate / delta
    log_leading = (
        -delta * T * rate1 + delta * H_ad - math.log(-a_d * sigma_d * math.sqrt(2.0 * math.pi * T))
    )
    return TailApprox(Regime.BELOW_MINUS_B, "lower", d, T, order_p, log_leading, (),
                      t_rate=delta * T * rate1)


def tail_above_b(d: float, T: float, params: ModelParams, order_p: int = 0) -> TailApprox:
    """P(estimator >= d) for d > b.

    Leading term (delta T/2)^{delta/2-1} exp(-delta T I_1 + delta K_1)/(K_2 Gamma(delta/2))
    with K_1 = -1/2 log((d-b)/((2d-b)(3d-b))) and K_2 = (3d-b)(d-b)/(2d-b).
    order_p = 1 multiplies by (1 + gamma_1/T), approximation grade.
    """
    if classify_regime(d, params) is not Regime.ABOVE_B:
        raise RegimeError(f"d={d} is not above b for b={params.b}")
    _require_order(order_p, 1, Regime.ABOVE_B)
    delta, b = params.delta, params.b
    k1_arg = (d - b) / ((2.0 * d - b) * (3.0 * d - b))
    assert k1_arg > 0
    K1 = -0.5 * math.log(k1_arg)
    K2 = (3.0 * d - b) * (d - b) / (2.0 * d - b)
    rate1 = rate_function(d, params).rate / delta
    log_leading = (
        (delta / 2.0 - 1.0) * math.log(delta * T / 2.0)
        - delta * T * rate1
        + delta * K1
        - math.log(K2)
        - gammaln(delta / 2.0)
    )
    corr = (first_order_coeff(d, params) / T,) if order_p == 1 else ()
    return TailApprox(Regime.ABOVE_B, "upper", d, T, order_p, log_leading, corr,
                      t_rate=delta * T * rate1)


def tail_interior(d: float, T: float, params: ModelParams, order_p: int = 0) -> TailApprox:
    """P(estimator <= d) for |d| < b, d != 0.

    Leading term (delta T/2)^{delta/2-1} exp(-delta T I_1 + delta J)/Gamma(delta/2)
    with J = -1/2 log(2(b-d)/(b(d+b))); J diverges as d -> b, where the
    validity flag engages.  Same first-order correction policy as above b.
    """
    if classify_regime(d, params) is not Regime.INTERIOR:
        raise RegimeError(f"d={d} is not interior (|d| < b, d != 0) for b={params.b}")
    _require_order(order_p, 1, Regime.INTERIOR)
    delta, b = params.delta, params.b
    j_arg = 2.0 * (b - d) / (b * (d + b))
    assert j_arg > 0
    J = -0.5 * math.log(j_arg)
    rate1 = b / 2.0
    log_leading = (
        (delta / 2.0 - 1.0) * math.log(delta * T / 2.0)
        - delta * T * rate1
        + delta * J
        - gammaln(delta / 2.0)
    )
    corr = (first_order_coeff(d, params) / T,) if order_p == 1 else ()
    return TailApprox(Regime.INTERIOR, "lower", d, T, order_p, log_leading, corr,
                      t_rate=delta * T * rate1)


def tail_at_minus_b(T: float, params: ModelParams, order_p: int = 0) -> TailApprox:
    """P(estimator <= -b), the half-power branch.

    Leading term (delta T)^{delta/4-1/2} (b/2)^{delta/4} exp(-delta T b/2) / Gamma((delta+2)/4);
    corrections proceed in powers of 1/sqrt(T).  order_p = 1 applies
    (1 + g_1/sqrt(T)) with g_1 = 3 delta/(2 sqrt(b)), the tilted-mass
    first-order coefficient; the comparison-integral factor contributes
    same-order terms whose closed form is not stated, so this is
    approximation grade.  See :func:`half_power_endpoint_coeff` for the
    leading comparison-integral constant and the prefactor identity.
    """
    params.require_explosive()
    _require_order(order_p, 1, Regime.AT_MINUS_B)
    delta, b = params.delta, params.b
    log_leading = (
        (delta / 4.0 - 0.5) * math.log(delta * T)
        + (delta / 4.0) * math.log(b / 2.0)
        - delta * T * b / 2.0
        - gammaln((delta + 2.0) / 4.0)
    )
    g1 = 3.0 * delta / (2.0 * math.sqrt(b))
    corr = (g1 / math.sqrt(T),) if order_p == 1 else ()
    return TailApprox(Regime.AT_MINUS_B, "lower", -b, T, order_p, log_leading, corr,
                      t_rate=delta * T * b / 2.0)


def half_power_endpoint_coeff(params: ModelParams) -> float:
    """Leading comparison-integral constant in the half-power branch.

    Returns e^{-delta/4} delta^{(delta-2)/4} / (2^{delta/2} Gamma((delta+2)/4)),
    taken positive.  Composing the tilted-mass factor
    exp(-delta T b/2)(e b T/2)^{delta/4}(1 + g_1/sqrt(T) + ...) with
    coeff/sqrt(T) reproduces the branch prefactor up to the factor 2^{delta/2};
    dropping that factor from this constant makes the identity exact.
    """
    delta = params.delta
    return math.exp(
        -delta / 4.0
        + (delta - 2.0) / 4.0 * math.log(delta)
        - delta / 2.0 * math.log(2.0)
        - gammaln((delta + 2.0) / 4.0)
    )


def tail_at_zero(T: float, params: ModelParams, order_p: int = 0) -> TailApprox:
    """Series approximation of P(estimator <= 0).

    Leading term (delta b T/2)^{delta/2} exp(-delta T b/2) / (sqrt(delta/2) Gamma(delta/2))
    with the full correction series in powers of u = T e^{-bT}:

        h_k = (-1)^k delta / ((2k + delta) k!) * (delta b / 2)^k.

    Any order_p >= 0 is supported.  Compare against
    :func:`exact_tail_at_zero`; the ratio of the two converges as T grows and
    its limit is a report quantity, not an assertion.
    """
    params.require_explosive()
    if order_p < 0:
        raise ValueError("order_p must be >= 0")
    delta, b = params.delta, params.b
    log_leading = (
        (delta / 2.0) * math.log(delta * b * T / 2.0)
        - delta * T * b / 2.0
        - 0.5 * math.log(delta / 2.0)
        - gammaln(delta / 2.0)
    )
    u = T * math.exp(-b * T)
    corr = tuple(
        (-1.0) ** k * delta / ((2.0 * k + delta) * math.factorial(k)) * (delta * b / 2.0) ** k * u**k
        for k in range(1, order_p + 1)
    )
    return TailApprox(Regime.AT_ZERO, "lower", 0.0, T, order_p, log_leading, corr,
                      t_rate=delta * T * b / 2.0)


def exact_tail_at_zero(T: float, params: ModelParams) -> float:
    """Exact P(estimator <= 0) = P(X_T <= delta T) via the chi-square endpoint law.

    Regularized lower incomplete gamma of the half threshold: X_T/L_T is
    chi-square(delta), so the value is gammainc(delta/2, delta*T/(2 L_T)).
    """
    params.require_explosive()
    p = ModelParams(delta=params.delta, b=params.b, horizon=T)
    d_T = params.delta * T / horizon_scale(p)
    return float(gammainc(params.delta / 2.0, d_T / 2.0))


def tail_approx(
    d: float, T: float, params: ModelParams, order_p: int = 0, tol: float = 0.0
) -> TailApprox:
    """Dispatch to the branch owning d; refuses the truth point d = b."""
    regime = classify_regime(d, params, tol=tol)
    if regime is Regime.AT_B:
        raise RegimeError("no tail approximation at the truth point d = b")
    if regime is Regime.BELOW_MINUS_B:
        return tail_below_minus_b(d, T, params, order_p)
    if regime is Regime.ABOVE_B:
        return tail_above_b(d, T, params, order_p)
    if regime is Regime.INTERIOR:
        return tail_interior(d, T, params, order_p)
    if regime is Regime.AT_MINUS_B:
        return tail_at_minus_b(T, params, order_p)
    return tail_at_zero(T, params, order_p)


def tail_side(d: float, params: ModelParams, tol: float = 0.0) -> str:
    """Which tail of the estimator the branch at d approximates."""
    return "upper" if classify_regime(d, params, tol=tol) is Regime.ABOVE_B else "lower"


def exact_for(d: float, T: float, params: ModelParams, tol: float = 0.0) -> Optional[float]:
    """Exact tail value where one exists (only the d = 0 branch)."""
    if classify_regime(d, params, tol=tol) is Regime.AT_ZERO:
        return exact_tail_at_zero(T, params)
    return None
