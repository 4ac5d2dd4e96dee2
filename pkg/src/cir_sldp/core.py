"""Model parameters, regime classification, sufficient statistics and the drift MLE.

The process is the square-root diffusion

    dX_t = (delta + b X_t) dt + 2 sqrt(X_t) dB_t,   X_0 = 0,

observed on [0, T].  Everything downstream is a function of the two
sufficient statistics (X_T, int_0^T X_t dt).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum


class DegeneratePathError(ValueError):
    """Raised when a path carries no information (int_x == 0)."""


class ExplosiveModeError(ValueError):
    """Raised when an operation that needs b > 0 receives b <= 0."""


@dataclass(frozen=True)
class ModelParams:
    """Process triple: dimension ``delta`` > 0, drift ``b``, horizon ``T`` > 0.

    ``b`` may be any real for simulation purposes; regime classification,
    rate functions and tail approximations additionally require b > 0 and
    raise :class:`ExplosiveModeError` otherwise.
    """

    delta: float
    b: float
    horizon: float

    def __post_init__(self) -> None:
        if not (self.delta > 0):
            raise ValueError(f"delta must be > 0, got {self.delta}")
        if not (self.horizon > 0):
            raise ValueError(f"horizon must be > 0, got {self.horizon}")
        if not math.isfinite(self.b):
            raise ValueError(f"b must be finite, got {self.b}")

    def require_explosive(self) -> None:
        if not (self.b > 0):
            raise ExplosiveModeError(f"operation requires b > 0, got b={self.b}")


@dataclass(frozen=True)
class SufficientStats:
    """Endpoint value ``x_T`` and time integral ``int_x`` of one trajectory."""

    x_T: float
    int_x: float

    def __post_init__(self) -> None:
        if self.x_T < 0 or self.int_x < 0:
            raise ValueError(f"sufficient statistics must be nonnegative: {self}")
        if self.int_x == 0 and self.x_T != 0:
            raise ValueError("int_x == 0 is only consistent with an all-zero path")


class Regime(Enum):
    """Position of a threshold d relative to the drift b (> 0).

    ``AT_B`` is the truth point d == b; tail approximations are refused there.
    """

    BELOW_MINUS_B = "below_minus_b"
    AT_MINUS_B = "at_minus_b"
    INTERIOR = "interior"
    AT_ZERO = "at_zero"
    ABOVE_B = "above_b"
    AT_B = "at_b"


def classify_regime(d: float, params: ModelParams, tol: float = 0.0) -> Regime:
    """Classify d into its analytic branch.

    Boundary points -b, 0, b are matched exactly by default; pass ``tol`` to
    snap nearly-boundary values (floating d = -b is rarely exact).
    """
    params.require_explosive()
    b = params.b
    if abs(d - b) <= tol or d == b:
        return Regime.AT_B
    if abs(d + b) <= tol or d == -b:
        return Regime.AT_MINUS_B
    if abs(d) <= tol or d == 0:
        return Regime.AT_ZERO
    if d < -b:
        return Regime.BELOW_MINUS_B
    if d > b:
        return Regime.ABOVE_B
    return Regime.INTERIOR


def mle_drift(stats: SufficientStats, params: ModelParams) -> float:
    """Maximum-likelihood drift estimate (x_T - delta*T) / int_x."""
    if stats.int_x == 0:
        raise DegeneratePathError("all-zero path: the drift estimator is undefined")
    return (stats.x_T - params.delta * params.horizon) / stats.int_x


def sufficient_stat_s(stats: SufficientStats, d: float, params: ModelParams) -> float:
    """Score statistic S_T(d) = x_T - delta*T - d*int_x.

    For int_x > 0, S_T(d) <= 0 holds exactly when the MLE is <= d, so tail
    events of the estimator are half-lines of S_T(d).
    """
    return stats.x_T - params.delta * params.horizon - d * stats.int_x
