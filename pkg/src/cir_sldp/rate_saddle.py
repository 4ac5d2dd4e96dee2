"""Piecewise rate function of the drift MLE, its optimization oracle, and the finite-T saddle.

All formulas live in tilt coordinates a = 2*lambda, where the limiting
per-unit-time CGF factor is

    L(a) = -1/2 (a + (b + s(a))/2),     s(a) = sqrt(b^2 + 4 a d),

and the subexponential factor is H(a) = -1/2 log((1+h(a))/2) with
h(a) = -(2a + b)/s(a).  The rate function is delta * sup_a (-L(a)) over the
closure of the tilt domain; the finite-horizon saddle a_T solves

    L'(a) + (1/T) H'(a) = 0

strictly inside the domain.  Derivatives are closed-form:

    L'(a) = -1/2 (1 + d/s),        L''(a) = d^2 / s^3,
    H'(a) = (2 a d - b (d - b)) / (s^3 (1 + h(a))).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.optimize import brentq, minimize_scalar

from .core import ModelParams, Regime, classify_regime


class SaddleBracketError(RuntimeError):
    """No sign change found when bracketing the saddle equation."""


class UnsupportedRegimeError(ValueError):
    """Operation not defined in this regime."""


@dataclass(frozen=True)
class RatePoint:
    d: float
    rate: float
    a_d: float
    boundary: bool  # whether the minimizer of L sits on the domain boundary


@dataclass(frozen=True)
class SaddleSolution:
    a_T: float
    residual: float
    iterations: int


def _s(a: float, d: float, b: float) -> float:
    disc = b * b + 4.0 * a * d
    if disc <= 0:
        raise ValueError(f"tilt a={a} outside the real branch for d={d}, b={b}")
    return math.sqrt(disc)


def ell(a: float, d: float, b: float) -> float:
    return -0.5 * (a + 0.5 * (b + _s(a, d, b)))


def ell_prime(a: float, d: float, b: float) -> float:
    return -0.5 * (1.0 + d / _s(a, d, b))


def one_plus_h(a: float, d: float, b: float) -> float:
    s = _s(a, d, b)
    return 2.0 * a * (2.0 * d - b - s) / (s * (s + b))


def cal_h(a: float, d: float, b: float) -> float:
    return -0.5 * math.log(0.5 * one_plus_h(a, d, b))


def cal_h_prime(a: float, d: float, b: float) -> float:
    s = _s(a, d, b)
    return (2.0 * a * d - b * (d - b)) / (s**3 * one_plus_h(a, d, b))


def tilt_interval_a(d: float, params: ModelParams) -> tuple[float, float]:
    """The tilt domain in a = 2*lambda coordinates; lower end may be -inf."""
    from .cgf import tilt_domain_interval

    lo, hi = tilt_domain_interval(d, params)
    return 2.0 * lo, 2.0 * hi


def rate_function(d: float, params: ModelParams) -> RatePoint:
    """Large-deviation rate of the drift MLE at threshold d, with its minimizer.

    The rate factors as delta * (rate at delta = 1), exactly.
    """
    params.require_explosive()
    b = params.b
    if d <= -b:
        rate1 = -((d - b) ** 2) / (8.0 * d)
        a_d = (d * d - b * b) / (4.0 * d)
        boundary = d == -b  # interior minimizer for d < -b; a_d = 0 on the boundary at d = -b
        return RatePoint(d=d, rate=params.delta * rate1, a_d=a_d, boundary=boundary)
    if d == b:
        return RatePoint(d=d, rate=0.0, a_d=0.0, boundary=True)
    if d > b:
        return RatePoint(d=d, rate=params.delta * (2.0 * d - b) / 2.0, a_d=d - b, boundary=True)
    return RatePoint(d=d, rate=params.delta * b / 2.0, a_d=0.0, boundary=True)


def delta_scaling_check(d: float, params: ModelParams) -> bool:
    """True iff the rate at delta equals delta times the rate at delta = 1, bitwise."""
    unit = ModelParams(delta=1.0, b=params.b, horizon=params.horizon)
    return rate_function(d, params).rate == params.delta * rate_function(d, unit).rate


def rate_oracle(d: float, params: ModelParams) -> float:
    """Numeric rate: maximize -delta*L over the closure of the tilt domain.

    Independent of the closed-form branches; boundary suprema are reached by
    bounded scalar optimization against the closed interval, with unbounded
    sides clamped far past the stationary point.
    """
    params.require_explosive()
    b = params.b
    lo, hi = tilt_interval_a(d, params)
    if lo == hi:  # truth point d = b
        return 0.0
    if not math.isfinite(lo):
        # stationary point of L exists only for d < 0 (at s = -d); clamp well past it
        scale = max(1.0, abs(d), b)
        lo = -16.0 * scale if d >= 0 else 4.0 * (d * d - b * b) / (4.0 * d) - 16.0 * scale

    def neg_obj(a: float) -> float:
        return params.delta * ell(a, d, b)

    # nudge off the ends where s may vanish
    span = hi - lo
    eps = 1e-13 * max(1.0, span)
    res = minimize_scalar(neg_obj, bounds=(lo + eps, hi - eps), method="bounded",
                          options={"xatol": 1e-12})
    best = -res.fun
    for endpoint in (lo + eps, hi - eps):
        try:
            best = max(best, -neg_obj(endpoint))
        except ValueError:
            continue
    return float(best)


def rate_argmax(d: float, params: ModelParams) -> float:
    """Location (in a-coordinates) where the oracle's supremum is attained."""
    params.require_explosive()
    b = params.b
    lo, hi = tilt_interval_a(d, params)
    if not math.isfinite(lo):
        scale = max(1.0, abs(d), b)
        lo = -16.0 * scale if d >= 0 else 4.0 * (d * d - b * b) / (4.0 * d) - 16.0 * scale
    span = hi - lo
    eps = 1e-13 * max(1.0, span)
    res = minimize_scalar(lambda a: params.delta * ell(a, d, b),
                          bounds=(lo + eps, hi - eps), method="bounded",
                          options={"xatol": 1e-12})
    candidates = [(params.delta * ell(res.x, d, b), res.x)]
    for endpoint in (lo + eps, hi - eps):
        try:
            candidates.append((params.delta * ell(endpoint, d, b), endpoint))
        except ValueError:
            continue
    return float(min(candidates)[1])


def solve_saddle(d: float, T: float, params: ModelParams) -> SaddleSolution:
    """Solve L'(a) + H'(a)/T = 0 strictly inside the tilt domain.

    Defined in the regimes whose minimizer a_d sits on the domain boundary
    (above b, interior, at -b); there the finite-T saddle is interior and
    approaches a_d as T grows, so the bracket is built by walking inward
    from the boundary until the equation changes sign.
    """
    if T <= 0:
        raise ValueError("T must be > 0")
    regime = classify_regime(d, params)
    if regime not in (Regime.ABOVE_B, Regime.INTERIOR, Regime.AT_MINUS_B, Regime.AT_ZERO):
        raise UnsupportedRegimeError(f"saddle equation is not used in regime {regime}")
    b = params.b
    lo, hi = tilt_interval_a(d, params)
    # a_d is the right end for every supported regime (d - b above b, else 0)
    span = (hi - lo) if math.isfinite(lo) else max(b, abs(d), 1.0)

    def g(a: float) -> float:
        return ell_prime(a, d, b) + cal_h_prime(a, d, b) / T

    evals = 0
    a_hi = None
    for j in range(2, 64):
        cand = hi - span * 2.0 ** (-j)
        if cand <= lo:
            continue
        try:
            val = g(cand)
        except ValueError:
            continue
        evals += 1
        if math.isfinite(val) and val > 0:
            a_hi = cand
            break
    a_lo = None
    if a_hi is not None:
        if math.isfinite(lo):
            # walk from the midpoint toward the far boundary
            offsets = [span * (1.0 - 2.0 ** (-j)) for j in range(1, 44)]
        else:
            offsets = [span * 2.0 ** (j - 1) for j in range(1, 44)]
        for off in offsets:
            cand = hi - off
            if math.isfinite(lo):
                cand = max(cand, lo + span * 1e-13)
            if cand >= a_hi:
                continue
            try:
                val = g(cand)
            except ValueError:
                continue
            evals += 1
            if math.isfinite(val) and val < 0:
                a_lo = cand
                break
    if a_hi is None or a_lo is None:
        raise SaddleBracketError(
            f"no sign change for d={d}, T={T}: searched ({lo}, {hi}), "
            f"a_hi={a_hi}, a_lo={a_lo}, evaluations={evals}"
        )
    root, info = brentq(g, a_lo, a_hi, xtol=1e-16, rtol=8.9e-16, maxiter=300,
                        full_output=True)
    return SaddleSolution(a_T=float(root), residual=float(g(root)),
                          iterations=evals + info.iterations)


def first_order_coeff(d: float, params: ModelParams) -> float:
    """First subexponential correction coefficient of the tilted-mass factor.

    Closed forms per regime:
      above b:        -delta d (d^2 - 3 b d + b^2) / ((d-b)(2d-b)(3d-b)^2)
      interior (!=0): -delta d (d^2 + b d - b^2) / (b (d-b) (d+b)^2)
      at -b:           3 delta / (2 sqrt(b))
    """
    regime = classify_regime(d, params)
    delta, b = params.delta, params.b
    if regime is Regime.ABOVE_B:
        return -delta * d * (d * d - 3.0 * b * d + b * b) / (
            (d - b) * (2.0 * d - b) * (3.0 * d - b) ** 2
        )
    if regime is Regime.INTERIOR:
        return -delta * d * (d * d + b * d - b * b) / (b * (d - b) * (d + b) ** 2)
    if regime is Regime.AT_MINUS_B:
        return 3.0 * delta / (2.0 * math.sqrt(b))
    raise UnsupportedRegimeError(f"no first-order coefficient in regime {regime}")
