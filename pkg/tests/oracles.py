"""Independent reference implementations used only by the tests.

Everything here is written in the most literal way possible (naive
powers, bisection instead of closed forms or Newton) so that agreement
with the library is meaningful.  Nothing in src/ imports this module.
"""

from __future__ import annotations

import numpy as np


def bisect_positive_root(c_m1: float, h: float, a: float, iters: int = 200) -> float:
    """Solve x - c_m1*h/x = a for x > 0 by bisection.

    G(x) = x - c_m1*h/x is strictly increasing on (0, inf) with range
    (-inf, inf), so the root exists and is unique for every real a.
    """
    lo, hi = 1e-300, 1.0
    G = lambda x: x - c_m1 * h / x
    while G(hi) < a:
        hi *= 2.0
    while G(lo) > a:
        lo *= 0.5
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if G(mid) > a:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def bem_residual(params, h: float, z: float, rhs: float) -> float:
    """F(z) = z - h*f(z) - rhs with the full drift f evaluated naively."""
    f = params.c_m1 / z - params.c0 + params.c1 * z - params.c2 * z**params.kappa
    return z - h * f - rhs


def bisect_bem_root(params, h: float, y: float, dW: float, iters: int = 200) -> float:
    """Solve the implicit Euler step equation by bisection.

    For h*c1 < 1 the residual F is strictly increasing in z with
    F(0+) = -inf and F(inf) = +inf, so bisection always converges.
    """
    rhs = y + params.c3 * y**params.rho * dW
    lo, hi = 1e-300, 1.0
    while bem_residual(params, h, hi, rhs) < 0.0:
        hi *= 2.0
    while bem_residual(params, h, lo, rhs) > 0.0:
        lo *= 0.5
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if bem_residual(params, h, mid, rhs) > 0.0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def tamed_drift_naive(params, alpha: float, h: float, x: float) -> float:
    """-c2*x^kappa / (1 + h^alpha * x^(2*kappa*alpha)) with naive powers."""
    return -params.c2 * x**params.kappa / (1.0 + h**alpha * x ** (2.0 * params.kappa * alpha))


def tamed_diffusion_naive(params, alpha: float, h: float, x: float) -> float:
    return params.c3 * x**params.rho / (1.0 + h**alpha * x ** (2.0 * params.kappa * alpha))


def tem_step_naive(params, alpha: float, h: float, y: float, dW: float) -> float:
    """One tamed semi-implicit step via the naive quadratic formula."""
    theta = -params.c0 + params.c1 * y + tamed_drift_naive(params, alpha, h, y)
    a = y + theta * h + tamed_diffusion_naive(params, alpha, h, y) * dW
    return 0.5 * (a + np.sqrt(a * a + 4.0 * params.c_m1 * h))


def polyfit_rate(h, e) -> tuple[float, float]:
    """Slope and residual 2-norm of log2 e against log2 h via np.polyfit."""
    x = np.log2(np.asarray(h, dtype=float))
    y = np.log2(np.asarray(e, dtype=float))
    coeffs, residuals, *_ = np.polyfit(x, y, 1, full=True)
    resid = float(np.sqrt(residuals[0])) if residuals.size else 0.0
    return float(coeffs[0]), resid


def pairwise_sums(values: np.ndarray) -> np.ndarray:
    """Sum adjacent pairs: the defining property of dyadic coarsening."""
    v = np.asarray(values)
    return v[0::2] + v[1::2]
