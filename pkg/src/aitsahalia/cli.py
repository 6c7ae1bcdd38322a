"""Command line driver.

Subcommands: simulate, convergence, check-assumptions, moments, mlmc.
Each writes one CSV artifact into --out and prints a short summary.
Exit codes: 0 success, 1 runtime failure (including a failed assumption
check), 2 invalid configuration.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from dataclasses import dataclass

import numpy as np

from .config import get_params
from .csvio import (
    write_assumptions_csv,
    write_convergence_csv,
    write_mlmc_csv,
    write_moments_csv,
    write_paths_csv,
)
from .mlmc import BudgetExceeded, Payoff, mlmc_estimate
from .model import ModelParams
from .montecarlo import moment_study, strong_error_study
from .model import RegimeKind, classify_regime
from .noise import generate_block
from .schemes import PathBatch, SchemeConfig, SchemeKind, integrate_paths
from .taming import GridSpec, TamingConfig, check_assumptions

__all__ = ["main", "run"]

DEFAULT_SEED = 1234567
HORIZON = 1.0

# full protocol: 10^4 paths against a 2^-14 reference on levels 4..9;
# desk protocol trades paths and reference depth for minutes of runtime
FULL_PATHS, FULL_REF, FULL_LEVELS = 10_000, 14, "4,5,6,7,8,9"
DESK_PATHS, DESK_REF, DESK_LEVELS = 1_000, 12, "4,5,6,7,8"


@dataclass(frozen=True)
class RunConfig:
    """Resolved run parameters shared by the study subcommands."""

    preset_id: str
    params: ModelParams
    schemes: tuple[SchemeKind, ...]
    seed: int
    n_paths: int
    ref_scheme: SchemeKind
    ref_level: int
    levels: tuple[int, ...]
    alpha: float
    horizon: float
    out_dir: str
    workers: int


def _parse_levels(text: str) -> tuple[int, ...]:
    try:
        levels = tuple(int(part) for part in text.split(",") if part.strip() != "")
    except ValueError as exc:
        raise ValueError(f"bad --levels value {text!r}: {exc}") from exc
    if not levels or any(l < 0 for l in levels):
        raise ValueError(f"--levels needs non-negative integers, got {text!r}")
    return levels


def _parse_schemes(text: str) -> tuple[SchemeKind, ...]:
    kinds = []
    for part in text.split(","):
        name = part.strip().lower()
        if name == "":
            continue
        try:
            kinds.append(SchemeKind(name))
        except ValueError as exc:
            valid = ", ".join(k.value for k in SchemeKind)
            raise ValueError(f"unknown scheme {name!r}; valid: {valid}") from exc
    if not kinds:
        raise ValueError("no scheme given")
    return tuple(dict.fromkeys(kinds))


def _out_path(out_dir: str, name: str) -> str:
    os.makedirs(out_dir, exist_ok=True)
    return os.path.join(out_dir, name)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="aitsahalia",
        description="Positivity-preserving schemes for the generalized Ait-Sahalia model",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--preset", default="eg1", help="built-in or config-file model name")
        p.add_argument("--config", default=None, help="INI file with extra model sections")
        p.add_argument("--seed", type=int, default=DEFAULT_SEED)
        p.add_argument("--alpha", type=float, default=0.5, help="taming exponent, >= 1/2")
        p.add_argument("--out", default=".", help="output directory for CSV artifacts")

    p_sim = sub.add_parser("simulate", help="write sample paths at one step size")
    common(p_sim)
    p_sim.add_argument("--scheme", default="tem", help="one of tem, bem, em")
    p_sim.add_argument("--paths", type=int, default=50)
    p_sim.add_argument("--levels", default="8", help="single dyadic level, h = 2**-level")

    p_conv = sub.add_parser("convergence", help="coupled strong-error study")
    common(p_conv)
    p_conv.add_argument("--scheme", default="tem,bem", help="comma list of schemes")
    p_conv.add_argument("--paths", type=int, default=None)
    p_conv.add_argument("--levels", default=None, help="comma list of dyadic levels")
    p_conv.add_argument("--ref-level", type=int, default=None, dest="ref_level")
    p_conv.add_argument(
        "--ref-scheme",
        default="bem",
        choices=("bem", "tem"),
        dest="ref_scheme",
        help="scheme that produces the reference path (tem for cross-validation)",
    )
    p_conv.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    p_conv.add_argument(
        "--desk",
        action="store_true",
        help=f"desk-scale defaults: {DESK_PATHS} paths, reference 2**-{DESK_REF}, levels {DESK_LEVELS}",
    )

    p_check = sub.add_parser("check-assumptions", help="taming assumption report")
    common(p_check)
    p_check.add_argument("--levels", default="6", help="single dyadic level for h")
    p_check.add_argument("--gamma", default="auto", help="monotonicity weight or 'auto'")
    p_check.add_argument("--grid-points", type=int, default=100_000)

    p_mom = sub.add_parser("moments", help="sup of empirical moments across step sizes")
    common(p_mom)
    p_mom.add_argument("--scheme", default="tem", help="one of tem, bem, em")
    p_mom.add_argument("--paths", type=int, default=2000)
    p_mom.add_argument("--levels", default="4,6,8")
    p_mom.add_argument("--p", default="2", help="comma list of moment orders")
    p_mom.add_argument("--inverse", action="store_true", help="track E|1/Y|**p instead")

    p_mlmc = sub.add_parser("mlmc", help="multilevel Monte Carlo estimate of E[payoff(X_T)]")
    common(p_mlmc)
    p_mlmc.add_argument("--scheme", default="tem", help="one of tem, bem, em")
    p_mlmc.add_argument("--target-rmse", type=float, default=0.01, dest="target_rmse")
    p_mlmc.add_argument("--payoff", default="identity", choices=("identity", "call", "indicator"))
    p_mlmc.add_argument("--strike", type=float, default=1.0)

    return parser


def _single_level(levels: tuple[int, ...], what: str) -> int:
    if len(levels) != 1:
        raise ValueError(f"{what} takes exactly one level, got {levels}")
    return levels[0]


def cmd_simulate(args: argparse.Namespace) -> int:
    params = get_params(args.preset, args.config)
    kinds = _parse_schemes(args.scheme)
    if len(kinds) != 1:
        raise ValueError("simulate takes exactly one scheme")
    if args.paths < 0:
        raise ValueError("--paths must be >= 0")
    level = _single_level(_parse_levels(args.levels), "simulate")
    cfg = SchemeConfig.for_level(kinds[0], HORIZON, level, alpha=args.alpha)
    out_file = _out_path(args.out, "paths.csv")
    if args.paths == 0:
        empty = PathBatch(
            states=np.empty((0, cfg.n_steps + 1)),
            status=np.empty(0, dtype=np.int8),
            first_bad=np.empty(0, dtype=np.int64),
            newton_iters=0,
            seconds=0.0,
        )
        write_paths_csv(empty, cfg, out_file)
        print(f"wrote {out_file} (0 paths)")
        return 0
    block = generate_block(args.seed, 0, args.paths, HORIZON, level)
    batch = integrate_paths(params, cfg, block)
    write_paths_csv(batch, cfg, out_file)
    stopped = int((batch.first_bad >= 0).sum())
    print(f"wrote {out_file} ({args.paths} paths, {stopped} stopped early)")
    return 0


def _convergence_run_config(args: argparse.Namespace) -> RunConfig:
    """Resolve flags (and the --desk shorthand) into one RunConfig."""
    defaults = (DESK_PATHS, DESK_REF, DESK_LEVELS) if args.desk else (FULL_PATHS, FULL_REF, FULL_LEVELS)
    n_paths = defaults[0] if args.paths is None else args.paths
    ref_level = defaults[1] if args.ref_level is None else args.ref_level
    levels = defaults[2] if args.levels is None else args.levels
    if args.workers < 1:
        raise ValueError("--workers must be >= 1")
    return RunConfig(
        preset_id=args.preset,
        params=get_params(args.preset, args.config),
        schemes=_parse_schemes(args.scheme),
        seed=args.seed,
        n_paths=n_paths,
        ref_scheme=SchemeKind(args.ref_scheme),
        ref_level=ref_level,
        levels=_parse_levels(levels),
        alpha=args.alpha,
        horizon=HORIZON,
        out_dir=args.out,
        workers=args.workers,
    )


def cmd_convergence(args: argparse.Namespace) -> int:
    run_cfg = _convergence_run_config(args)
    report = strong_error_study(
        run_cfg.params,
        run_cfg.schemes,
        run_cfg.n_paths,
        run_cfg.ref_level,
        run_cfg.levels,
        run_cfg.seed,
        horizon=run_cfg.horizon,
        alpha=run_cfg.alpha,
        ref_scheme=run_cfg.ref_scheme,
        workers=run_cfg.workers,
        preset_id=run_cfg.preset_id,
    )
    out_file = _out_path(args.out, "convergence.csv")
    write_convergence_csv(report, out_file)
    for kind in report.schemes:
        fit = report.fits[kind]
        if fit is None:
            print(
                f"scheme={kind.value}: fewer than three usable levels, rate fit skipped",
                file=sys.stderr,
            )
        else:
            print(f"scheme={kind.value} q={fit.q:.4f} resid={fit.resid:.4f}")
    print(f"wrote {out_file}")
    return 0


def cmd_check(args: argparse.Namespace) -> int:
    params = get_params(args.preset, args.config)
    taming = TamingConfig(alpha=args.alpha, horizon=HORIZON)
    level = _single_level(_parse_levels(args.levels), "check-assumptions")
    h = HORIZON * 2.0**-level
    if args.gamma == "auto":
        regime = classify_regime(params, args.alpha)
        if regime.kind is RegimeKind.CRITICAL:
            gamma = regime.ratio
        else:
            m1 = 2.0 * (2.0 * args.alpha + 1.0) * params.kappa
            gamma = max(0.5, (m1 - 1.0) / 2.0)
    else:
        gamma = float(args.gamma)
    report = check_assumptions(params, taming, h, gamma, GridSpec(n_points=args.grid_points))
    out_file = _out_path(args.out, "assumptions.csv")
    write_assumptions_csv(report, args.preset, out_file)
    verdict = "pass" if report.passed else "FAIL"
    print(
        f"{args.preset}: {verdict} at h={h:g}, alpha={args.alpha:g}, "
        f"gamma_used={report.gamma_used:g} (gamma_required={report.gamma_required:g})"
    )
    print(
        f"  a31 f/g margins {report.a31_f_margin:.3e} / {report.a31_g_margin:.3e}; "
        f"a32 sup {report.a32_sup:.6g} vs L={report.bound_l:.6g}; "
        f"a33 f/g margins {report.a33_f_margin:.3e} / {report.a33_g_margin:.3e}"
    )
    print(f"wrote {out_file}")
    return 0 if report.passed else 1


def cmd_moments(args: argparse.Namespace) -> int:
    params = get_params(args.preset, args.config)
    kinds = _parse_schemes(args.scheme)
    if len(kinds) != 1:
        raise ValueError("moments takes exactly one scheme")
    try:
        p_values = tuple(float(p) for p in args.p.split(",") if p.strip() != "")
    except ValueError as exc:
        raise ValueError(f"bad --p value {args.p!r}") from exc
    report = moment_study(
        params,
        kinds[0],
        p_values,
        _parse_levels(args.levels),
        args.paths,
        args.seed,
        horizon=HORIZON,
        alpha=args.alpha,
        inverse=args.inverse,
        preset_id=args.preset,
    )
    out_file = _out_path(args.out, "moments.csv")
    write_moments_csv(report, out_file)
    if report.insufficient_samples:
        print("warning: single path, moment estimates are not averages", file=sys.stderr)
    for p in report.p_values:
        sups = ", ".join(
            f"h=2^-{level}: {report.sup_moments[(p, level)]:.6g}" for level in report.levels
        )
        label = "stable" if report.stable[p] else "UNSTABLE"
        print(f"p={p:g} ({label}): {sups}")
    print(f"wrote {out_file}")
    return 0


def cmd_mlmc(args: argparse.Namespace) -> int:
    params = get_params(args.preset, args.config)
    kinds = _parse_schemes(args.scheme)
    if len(kinds) != 1:
        raise ValueError("mlmc takes exactly one scheme")
    payoff = Payoff(args.payoff, args.strike if args.payoff != "identity" else 0.0)
    result = mlmc_estimate(
        params,
        payoff,
        args.target_rmse,
        args.seed,
        scheme=kinds[0],
        horizon=HORIZON,
        alpha=args.alpha,
    )
    out_file = _out_path(args.out, "mlmc.csv")
    write_mlmc_csv(result, out_file)
    rmse = math.sqrt(result.bias_sq + result.variance)
    print(
        f"estimate={result.estimate:.6g} target_rmse={result.target_rmse:g} "
        f"bias2={result.bias_sq:.3e} variance={result.variance:.3e} rmse~{rmse:.3e}"
    )
    print(f"levels: {list(result.levels)} samples: {list(result.n_samples)}")
    if not result.variance_decay_ok:
        print("warning: level variances do not decay monotonically", file=sys.stderr)
    print(f"wrote {out_file}")
    return 0


_COMMANDS = {
    "simulate": cmd_simulate,
    "convergence": cmd_convergence,
    "check-assumptions": cmd_check,
    "moments": cmd_moments,
    "mlmc": cmd_mlmc,
}

_CONFIG_ERRORS = (ValueError, KeyError, OSError)


def main(argv: list[str] | None = None) -> int:
    """Returns the process exit code instead of raising SystemExit."""
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except _CONFIG_ERRORS as exc:
        message = exc.args[0] if exc.args else str(exc)
        print(f"error: {message}", file=sys.stderr)
        return 2
    except (BudgetExceeded, RuntimeError, OverflowError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def run() -> None:
    raise SystemExit(main())
