"""Multilevel Monte Carlo estimation of terminal-value payoffs.

The estimator telescopes E[P(X_T)] over dyadic step-size levels.  Level
l couples a fine trajectory on 2**l steps with a coarse one on 2**(l-1)
steps driven by the pairwise-summed increments of the same lattice, so
the level differences have small variance and the usual three-part
driver applies: seed every level with a pilot sample, allocate samples
in proportion to sqrt(V_l / C_l), and extend the level range until the
weak-order-one bias estimate |mean_L| is within budget.

Sample m of level l draws its lattice from path index (l << 40) + m, so
levels are independent of each other yet every sample is reproducible
in isolation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .model import Array, ModelParams, validate
from .noise import coarsen_block, generate_block
from .schemes import NewtonConfig, SchemeConfig, SchemeKind, integrate_paths

__all__ = ["Payoff", "MlmcResult", "BudgetExceeded", "mlmc_estimate", "mlmc_fixed_levels"]

_PAYOFF_KINDS = ("identity", "call", "indicator")

# Path-index block per level; no run comes near 2**40 samples on a level.
_LEVEL_STRIDE = 1 << 40


class BudgetExceeded(RuntimeError):
    """Sample or level budget hit before the accuracy target."""


@dataclass(frozen=True)
class Payoff:
    """Terminal payoff P(X_T): identity, European call, or indicator X_T > K."""

    kind: str
    strike: float = 0.0

    def __post_init__(self) -> None:
        if self.kind not in _PAYOFF_KINDS:
            raise ValueError(f"payoff kind must be one of {_PAYOFF_KINDS}, got {self.kind!r}")
        if not math.isfinite(self.strike):
            raise ValueError("strike must be finite")

    @property
    def payoff_id(self) -> str:
        if self.kind == "identity":
            return "identity"
        return f"{self.kind}:{self.strike:g}"

    def evaluate(self, x_terminal: Array) -> Array:
        if self.kind == "identity":
            return np.asarray(x_terminal, dtype=float)
        if self.kind == "call":
            return np.maximum(np.asarray(x_terminal, dtype=float) - self.strike, 0.0)
        return (np.asarray(x_terminal, dtype=float) > self.strike).astype(float)


@dataclass(frozen=True)
class MlmcResult:
    """Level table and estimate; variance/bias split of the achieved MSE."""

    payoff_id: str
    scheme: SchemeKind
    horizon: float
    levels: tuple[int, ...]
    n_samples: tuple[int, ...]
    means: tuple[float, ...]
    variances: tuple[float, ...]
    estimate: float
    bias_sq: float
    variance: float
    target_rmse: float | None
    variance_decay_ok: bool
    seed: int


@dataclass
class _LevelStats:
    n: int = 0
    total: float = 0.0
    total_sq: float = 0.0

    def add(self, diffs: Array) -> None:
        self.n += diffs.size
        self.total += float(np.sum(diffs))
        self.total_sq += float(np.sum(diffs * diffs))

    @property
    def mean(self) -> float:
        return self.total / self.n

    @property
    def variance(self) -> float:
        if self.n < 2:
            return 0.0
        return max(0.0, (self.total_sq - self.total**2 / self.n) / (self.n - 1))


def _terminal_values(
    params: ModelParams,
    scheme: SchemeKind,
    level: int,
    increments: Array,
    horizon: float,
    alpha: float,
    newton: NewtonConfig | None,
) -> Array:
    cfg = SchemeConfig.for_level(scheme, horizon, level, alpha=alpha, newton=newton)
    return integrate_paths(params, cfg, increments).states[:, -1]


def _sample_level(
    params: ModelParams,
    scheme: SchemeKind,
    payoff: Payoff,
    level: int,
    base_level: int,
    m_start: int,
    m_count: int,
    seed: int,
    horizon: float,
    alpha: float,
    newton: NewtonConfig | None,
) -> Array:
    """Coupled payoff differences for samples m_start .. m_start + m_count - 1."""
    # cap the in-memory lattice chunk at about 2**21 doubles
    chunk = max(1, min(m_count, 1 << max(0, 21 - level)))
    out = np.empty(m_count)
    done = 0
    while done < m_count:
        n = min(chunk, m_count - done)
        start_index = level * _LEVEL_STRIDE + m_start + done
        fine = generate_block(seed, start_index, n, horizon, level)
        p_fine = payoff.evaluate(
            _terminal_values(params, scheme, level, fine, horizon, alpha, newton)
        )
        if level > base_level:
            coarse = coarsen_block(fine, level, level - 1)
            p_coarse = payoff.evaluate(
                _terminal_values(params, scheme, level - 1, coarse, horizon, alpha, newton)
            )
            out[done : done + n] = p_fine - p_coarse
        else:
            out[done : done + n] = p_fine
        done += n
    return out


def _variance_decay_flag(levels: Sequence[int], variances: Sequence[float], base_level: int) -> bool:
    coupled = [v for l, v in zip(levels, variances) if l > base_level]
    if len(coupled) < 3:
        return True
    return all(b < a for a, b in zip(coupled, coupled[1:]))


def mlmc_estimate(
    params: ModelParams,
    payoff: Payoff,
    target_rmse: float,
    seed: int,
    *,
    scheme: SchemeKind = SchemeKind.TEM,
    horizon: float = 1.0,
    alpha: float = 0.5,
    newton: NewtonConfig | None = None,
    base_level: int = 2,
    max_level: int = 12,
    n_initial: int = 100,
    max_total_samples: int = 50_000_000,
) -> MlmcResult:
    """Adaptive MLMC driver targeting E[payoff(X_T)] to a root-mean-square error.

    The error budget is split evenly: statistical variance <= target**2 / 2
    and squared bias <= target**2 / 2, with bias at the finest level
    estimated from |mean_L| under weak order one.
    """
    validate(params)
    if not (target_rmse > 0.0 and math.isfinite(target_rmse)):
        raise ValueError(f"target_rmse must be finite and > 0, got {target_rmse!r}")
    if n_initial < 2:
        raise ValueError("n_initial must be >= 2")
    if not 0 <= base_level <= max_level:
        raise ValueError("need 0 <= base_level <= max_level")

    stats: dict[int, _LevelStats] = {}
    levels = list(range(base_level, base_level + 3))
    total_drawn = 0

    def draw(level: int, count: int) -> None:
        nonlocal total_drawn
        if total_drawn + count > max_total_samples:
            raise BudgetExceeded(
                f"sample budget {max_total_samples} exhausted at level {level}"
            )
        st = stats.setdefault(level, _LevelStats())
        diffs = _sample_level(
            params, scheme, payoff, level, base_level, st.n, count, seed, horizon, alpha, newton
        )
        st.add(diffs)
        total_drawn += count

    while True:
        for level in levels:
            have = stats.setdefault(level, _LevelStats()).n
            if have < n_initial:
                draw(level, n_initial - have)

        # sample allocation minimizing cost at fixed variance budget
        var_budget = target_rmse**2 / 2.0
        costs = {
            l: float((1 << l) + ((1 << (l - 1)) if l > base_level else 0)) for l in levels
        }
        weight = sum(math.sqrt(stats[l].variance * costs[l]) for l in levels)
        needed = {
            l: int(math.ceil(math.sqrt(stats[l].variance / costs[l]) * weight / var_budget))
            if stats[l].variance > 0.0
            else n_initial
            for l in levels
        }
        grew = False
        for level in levels:
            if stats[level].n < needed[level]:
                draw(level, needed[level] - stats[level].n)
                grew = True
        if grew:
            continue

        # weak-order-one bias estimate at the finest level
        bias = abs(stats[levels[-1]].mean)
        if bias <= target_rmse / math.sqrt(2.0) or levels[-1] == base_level:
            break
        if levels[-1] >= max_level:
            raise BudgetExceeded(
                f"bias {bias:g} still above target at maximum level {max_level}"
            )
        levels.append(levels[-1] + 1)

    means = tuple(stats[l].mean for l in levels)
    variances = tuple(stats[l].variance for l in levels)
    n_samples = tuple(stats[l].n for l in levels)
    estimate = float(sum(means))
    variance = float(sum(v / n for v, n in zip(variances, n_samples)))
    bias_sq = float(means[-1] ** 2)
    return MlmcResult(
        payoff_id=payoff.payoff_id,
        scheme=scheme,
        horizon=horizon,
        levels=tuple(levels),
        n_samples=n_samples,
        means=means,
        variances=variances,
        estimate=estimate,
        bias_sq=bias_sq,
        variance=variance,
        target_rmse=target_rmse,
        variance_decay_ok=_variance_decay_flag(levels, variances, base_level),
        seed=seed,
    )


def mlmc_fixed_levels(
    params: ModelParams,
    payoff: Payoff,
    levels: Sequence[int],
    n_samples: int,
    seed: int,
    *,
    scheme: SchemeKind = SchemeKind.TEM,
    horizon: float = 1.0,
    alpha: float = 0.5,
    newton: NewtonConfig | None = None,
    shared_lattice: bool = True,
) -> MlmcResult:
    """MLMC with a fixed level range and equal sample counts per level.

    With shared_lattice=True every level of sample m is driven by
    coarsenings of one lattice drawn at the finest level, which makes the
    telescoping identity hold sample by sample: summing the level means
    reproduces the fine-level plain Monte Carlo mean up to accumulation
    error.  This mode exists for diagnostics and tests; for estimation
    use mlmc_estimate.
    """
    validate(params)
    if n_samples < 2:
        raise ValueError("n_samples must be >= 2")
    lvls = tuple(sorted(set(int(l) for l in levels)))
    if not lvls:
        raise ValueError("need at least one level")
    if lvls != tuple(range(lvls[0], lvls[-1] + 1)):
        raise ValueError(f"levels must be consecutive, got {lvls}")
    base = lvls[0]
    finest = lvls[-1]

    stats = {l: _LevelStats() for l in lvls}
    chunk = max(1, min(n_samples, 1 << max(0, 21 - finest)))
    done = 0
    while done < n_samples:
        n = min(chunk, n_samples - done)
        if shared_lattice:
            fine = generate_block(seed, done, n, horizon, finest)
            terminal = {
                l: _terminal_values(
                    params, scheme, l, coarsen_block(fine, finest, l), horizon, alpha, newton
                )
                for l in range(base, finest + 1)
            }
            for l in lvls:
                p_fine = payoff.evaluate(terminal[l])
                if l > base:
                    stats[l].add(p_fine - payoff.evaluate(terminal[l - 1]))
                else:
                    stats[l].add(p_fine)
        else:
            for l in lvls:
                stats[l].add(
                    _sample_level(
                        params, scheme, payoff, l, base, done, n, seed, horizon, alpha, newton
                    )
                )
        done += n

    means = tuple(stats[l].mean for l in lvls)
    variances = tuple(stats[l].variance for l in lvls)
    estimate = float(sum(means))
    variance = float(sum(v / n_samples for v in variances))
    return MlmcResult(
        payoff_id=payoff.payoff_id,
        scheme=scheme,
        horizon=horizon,
        levels=lvls,
        n_samples=tuple(n_samples for _ in lvls),
        means=means,
        variances=variances,
        estimate=estimate,
        bias_sq=float(means[-1] ** 2),
        variance=variance,
        target_rmse=None,
        variance_decay_ok=_variance_decay_flag(lvls, variances, base),
        seed=seed,
    )
