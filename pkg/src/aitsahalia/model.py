"""Generalized Ait-Sahalia short-rate model.

The state follows the scalar SDE

    dX_t = (c_m1 * X_t**-1 - c0 + c1 * X_t - c2 * X_t**kappa) dt
           + c3 * X_t**rho dW_t,      X_0 = x0 > 0,

with positive coefficients and superlinear exponents kappa, rho > 1.
The drift blows up at the origin (which is what keeps paths positive)
and is strongly dissipative at infinity.  Admissible models satisfy
kappa + 1 >= 2 * rho; equality is the critical regime in which moment
and convergence statements additionally constrain c2 / c3**2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

Array = np.ndarray

__all__ = [
    "ModelParams",
    "Regime",
    "RegimeKind",
    "NonPositiveCoefficient",
    "ExponentOutOfRange",
    "InadmissibleRegime",
    "NonPositiveState",
    "validate",
    "classify_regime",
    "drift",
    "diffusion",
]

# Powers are evaluated as exp(p * log x); exp overflows just above 709.
LOG_OVERFLOW = 700.0

# Larger exponents are accepted nowhere: they overflow double precision on
# any state of interest and are untested.
MAX_EXPONENT = 64.0


class NonPositiveCoefficient(ValueError):
    """A model coefficient that must be > 0 is not."""


class ExponentOutOfRange(ValueError):
    """kappa or rho outside (1, MAX_EXPONENT]."""


class InadmissibleRegime(ValueError):
    """kappa + 1 < 2 * rho: diffusion dominates the dissipative drift."""


class NonPositiveState(ValueError):
    """Coefficient functions are only defined on x > 0."""


@dataclass(frozen=True)
class ModelParams:
    """Model coefficients.  Field names match the config-file keys."""

    c_m1: float
    c0: float
    c1: float
    c2: float
    c3: float
    kappa: float
    rho: float
    x0: float


def validate(params: ModelParams) -> ModelParams:
    """Check coefficient positivity, exponent ranges and admissibility.

    Returns the params unchanged so calls can be chained.
    """
    for name in ("c_m1", "c0", "c1", "c2", "c3"):
        value = getattr(params, name)
        if not (value > 0.0) or not math.isfinite(value):
            raise NonPositiveCoefficient(f"{name} must be finite and > 0, got {value!r}")
    if not (params.x0 > 0.0) or not math.isfinite(params.x0):
        raise NonPositiveState(f"x0 must be finite and > 0, got {params.x0!r}")
    for name in ("kappa", "rho"):
        value = getattr(params, name)
        if not (1.0 < value <= MAX_EXPONENT):
            raise ExponentOutOfRange(
                f"{name} must lie in (1, {MAX_EXPONENT:g}], got {value!r}"
            )
    if params.kappa + 1.0 < 2.0 * params.rho:
        raise InadmissibleRegime(
            f"kappa + 1 = {params.kappa + 1.0:g} < 2 rho = {2.0 * params.rho:g}"
        )
    return params


class RegimeKind(Enum):
    NON_CRITICAL = "non-critical"
    CRITICAL = "critical"


# Threshold comparisons tolerate a few ulps so that coefficients stored as
# irrational roots (eg3 has c3 = sqrt(2), c2 / c3**2 lands 2 ulps under 3.5)
# classify the way exact arithmetic would.
_THRESHOLD_RTOL = 8.0 * np.finfo(float).eps


@dataclass(frozen=True)
class Regime:
    """Criticality classification plus the drift/diffusion ratio tests.

    ratio is c2 / c3**2 exactly as computed in double precision.
    stm_threshold_ok reports ratio > 2 kappa - 3/2 (vacuously true in the
    non-critical regime), the condition under which the semi-implicit
    method converges with order 1/2 in the critical case.
    tamed_threshold_ok reports ratio >= (2 alpha + 1) kappa - 1/2, the
    analogous condition for the tamed coefficients.
    """

    kind: RegimeKind
    ratio: float
    stm_threshold_ok: bool
    tamed_threshold_ok: bool


def classify_regime(params: ModelParams, alpha: float) -> Regime:
    """Classify params as critical or non-critical for a taming exponent alpha."""
    if not alpha >= 0.5:
        raise ValueError(f"alpha must be >= 1/2, got {alpha!r}")
    validate(params)
    ratio = params.c2 / params.c3**2
    critical = params.kappa + 1.0 == 2.0 * params.rho
    if not critical:
        return Regime(RegimeKind.NON_CRITICAL, ratio, True, True)
    stm_thr = 2.0 * params.kappa - 1.5
    tamed_thr = (2.0 * alpha + 1.0) * params.kappa - 0.5
    stm_ok = bool(ratio > stm_thr - _THRESHOLD_RTOL * max(1.0, abs(stm_thr)))
    tamed_ok = bool(ratio >= tamed_thr - _THRESHOLD_RTOL * max(1.0, abs(tamed_thr)))
    return Regime(RegimeKind.CRITICAL, ratio, stm_ok, tamed_ok)


def _as_positive_array(x: float | Array) -> tuple[Array, bool]:
    arr = np.asarray(x, dtype=float)
    if arr.size == 0:
        raise NonPositiveState("state array is empty")
    if not np.all(np.isfinite(arr)) or np.any(arr <= 0.0):
        raise NonPositiveState("state must be finite and > 0")
    return arr, arr.ndim == 0


def power(x: Array, p: float) -> Array:
    """x**p for positive x via exp(p * log x).

    One code path for every power in the package keeps ulp-level
    comparisons between drift, diffusion and their tamed versions honest.
    Overflow is the caller's job to guard; underflow flushes to zero.
    """
    return np.exp(p * np.log(x))


def drift(params: ModelParams, x: float | Array) -> float | Array:
    """Drift c_m1/x - c0 + c1 x - c2 x**kappa, elementwise on x > 0.

    Raises NonPositiveState off the domain and OverflowError when
    x**kappa (or c_m1/x) leaves double range; exploded Euler paths must
    fail loudly rather than propagate infinities.
    """
    arr, scalar = _as_positive_array(x)
    t = params.kappa * np.log(arr)
    if np.any(t > LOG_OVERFLOW):
        raise OverflowError("x**kappa exceeds double precision range")
    with np.errstate(over="ignore"):
        out = params.c_m1 / arr - params.c0 + params.c1 * arr - params.c2 * np.exp(t)
    if not np.all(np.isfinite(out)):
        raise OverflowError("drift not representable at this state")
    return float(out) if scalar else out


def diffusion(params: ModelParams, x: float | Array) -> float | Array:
    """Diffusion c3 * x**rho, elementwise on x > 0."""
    arr, scalar = _as_positive_array(x)
    t = params.rho * np.log(arr)
    if np.any(t > LOG_OVERFLOW):
        raise OverflowError("x**rho exceeds double precision range")
    out = params.c3 * np.exp(t)
    return float(out) if scalar else out
