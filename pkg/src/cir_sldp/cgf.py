"""Normalized cumulant generating function of S_T(d) and the drift change of measure.

For a tilt lambda in the domain

    Delta_d = { lam : b^2 + 8 d lam > 0  and  4 lam + b < sqrt(b^2 + 8 d lam) },

write s = sqrt(b^2 + 8 d lam), beta = -s and h = (4 lam + b)/beta.  Then

    (1/T) log E[exp(lam S_T(d))] = delta*L(2 lam) + (delta/T)(H(2 lam) + R_T(2 lam))

with

    L(2 lam)   = -1/2 (2 lam + (b - beta)/2),
    H(2 lam)   = -1/2 log((1 + h)/2),
    R_T(2 lam) = -1/2 log(1 + ((1-h)/(1+h)) e^{beta T}).

H and R are individually singular at h = -1 (lam = 0) while their sum is
finite, so the joint form -1/2 log((1+h)/2 + ((1-h)/2) e^{beta T}) is used for
all evaluated totals.  1 +/- h are computed in cancellation-free rational
form; in particular (1+h)/2 carries an explicit factor lam, which makes the
total vanish identically at lam = 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .core import ModelParams, SufficientStats


class OutOfDomainError(ValueError):
    """Tilt outside the finite region of the generating function."""


@dataclass(frozen=True)
class TiltState:
    """A tilt lambda with its induced beta = -sqrt(b^2+8 d lam), h and phi = beta/2."""

    lam: float
    d: float
    beta: float
    h: float
    phi: float


@dataclass(frozen=True)
class CgfDecomposition:
    L_val: float
    H_val: float  # +inf at h = -1
    R_val: float  # -inf at h = -1
    HR_joint: float
    total: float


def _discriminant(lam: float, d: float, b: float) -> float:
    return b * b + 8.0 * d * lam


def tilt_domain_contains(lam: float, d: float, params: ModelParams) -> bool:
    """Strict membership of lam in Delta_d (the open limit domain)."""
    params.require_explosive()
    disc = _discriminant(lam, d, params.b)
    if disc <= 0:
        return False
    return 4.0 * lam + params.b < math.sqrt(disc)


def tilt_domain_interval(d: float, params: ModelParams) -> tuple[float, float]:
    """Open interval (lo, hi) equal to Delta_d; lo may be -inf.

    Empty at the truth point d = b, where the interval degenerates to (0, 0).
    """
    params.require_explosive()
    b = params.b
    if d > b:
        return 0.0, (d - b) / 2.0
    if d == b:
        return 0.0, 0.0
    if d <= 0:
        # sqrt constraint binds only for d < 0: lam < -b^2/(8d); inequality gives lam < 0
        hi = 0.0
        lo = -math.inf
        return lo, hi
    # 0 < d < b: lower end is the larger of the sqrt cutoff and the inequality cutoff
    return max(-b * b / (8.0 * d), (d - b) / 2.0), 0.0


def tilt_state(lam: float, d: float, params: ModelParams) -> TiltState:
    disc = _discriminant(lam, d, params.b)
    if disc <= 0:
        raise OutOfDomainError(f"b^2 + 8*d*lambda = {disc} <= 0 at lambda={lam}, d={d}")
    s = math.sqrt(disc)
    beta = -s
    return TiltState(lam=lam, d=d, beta=beta, h=(4.0 * lam + params.b) / beta, phi=beta / 2.0)


def _one_plus_minus_h(lam: float, d: float, b: float, s: float) -> tuple[float, float]:
    # 1+h = 4 lam (2d - b - s) / (s (s + b));   1-h = (s + 4 lam + b)/s
    one_plus = 4.0 * lam * (2.0 * d - b - s) / (s * (s + b))
    one_minus = (s + 4.0 * lam + b) / s
    return one_plus, one_minus


def decompose_cgf(lam: float, d: float, params: ModelParams) -> CgfDecomposition:
    """Evaluate L, H, R_T and the cancellation-stable joint H+R at one tilt.

    Accepts the closure of Delta_d and, more generally, every tilt where the
    joint form stays finite for this horizon; raises OutOfDomainError
    otherwise.
    """
    params.require_explosive()
    b, delta, T = params.b, params.delta, params.horizon
    disc = _discriminant(lam, d, b)
    if disc <= 0:
        raise OutOfDomainError(f"b^2 + 8*d*lambda = {disc} <= 0 at lambda={lam}, d={d}")
    s = math.sqrt(disc)
    one_plus, one_minus = _one_plus_minus_h(lam, d, b, s)
    decay = math.exp(-s * T)
    joint_arg = 0.5 * one_plus + 0.5 * one_minus * decay
    if joint_arg <= 0:
        raise OutOfDomainError(
            f"generating function diverges before T={T} at lambda={lam}, d={d}"
        )
    L_val = -0.5 * (2.0 * lam + 0.5 * (b + s))
    if one_plus > 0:
        H_val = -0.5 * math.log(0.5 * one_plus)
        R_val = -0.5 * math.log1p((one_minus / one_plus) * decay)
    elif one_plus == 0:
        H_val = math.inf
        R_val = -math.inf
    else:
        # beyond the limit domain only the joint form is real-valued
        H_val = math.nan
        R_val = math.nan
    HR_joint = -0.5 * math.log(joint_arg)
    total = delta * (L_val + HR_joint / T)
    return CgfDecomposition(L_val=L_val, H_val=H_val, R_val=R_val, HR_joint=HR_joint, total=total)


def cgf_total(lam: float, d: float, params: ModelParams) -> float:
    """(1/T) log E[exp(lambda S_T(d))]; exactly 0 at lambda = 0."""
    return decompose_cgf(lam, d, params).total


def riccati_oracle(lam: float, d: float, params: ModelParams, rtol: float = 1e-11) -> float:
    """Independent evaluation of cgf_total by integrating the scalar Riccati ODE.

    E[exp(lam X_T - lam d int X)] = exp(delta * int_0^T psi(s) ds) with
    psi' = 2 psi^2 + b psi - lam d, psi(0) = lam, so the normalized CGF is
    (delta/T) int psi - lam delta.  Blow-up of psi before the horizon signals
    a tilt outside the finite region.
    """
    b, delta, T = params.b, params.delta, params.horizon

    def rhs(t: float, y: np.ndarray) -> list[float]:
        psi = y[0]
        return [2.0 * psi * psi + b * psi - lam * d, psi]

    def blowup(t: float, y: np.ndarray) -> float:
        return abs(y[0]) - 1e7

    blowup.terminal = True  # type: ignore[attr-defined]
    sol = solve_ivp(
        rhs, (0.0, T), [lam, 0.0], rtol=rtol, atol=1e-13, events=blowup, max_step=T / 16
    )
    if not sol.success or sol.t[-1] < T or not np.isfinite(sol.y[1, -1]):
        raise OutOfDomainError(f"Riccati flow diverges before T={T} at lambda={lam}, d={d}")
    return (delta / T) * float(sol.y[1, -1]) - lam * delta


def girsanov_log_density(
    stats: SufficientStats, from_drift: float, to_drift: float, params: ModelParams
) -> float:
    """log dP_{from}/dP_{to} evaluated on one path's sufficient statistics.

    Equals ((f-t)/4)(x_T - delta T) - ((f^2 - t^2)/8) int_x.  The integral
    coefficient is the difference of squared drifts; expectation of the
    exponential under the target drift is exactly 1.
    """
    return girsanov_log_density_segment(
        stats.x_T, params.delta * params.horizon, stats.int_x, from_drift, to_drift
    )


def girsanov_log_density_segment(
    dx: float, delta_dt: float, int_x: float, from_drift: float, to_drift: float
):
    """Segment form of the log likelihood ratio; works on any subinterval.

    ``dx`` is X_end - X_start, ``delta_dt`` is delta*(t_end - t_start) and
    ``int_x`` the integral over the segment.  Accepts arrays.
    """
    f, t = from_drift, to_drift
    return ((f - t) / 4.0) * (dx - delta_dt) - ((f * f - t * t) / 8.0) * int_x
