"""CSV artifacts.

Every writer emits a mandatory header row, LF line endings, UTF-8, and
floats with 17 significant digits, so files round-trip to the same
doubles and byte-compare across runs.  Timing columns are the only
fields expected to differ between otherwise identical runs.
"""

from __future__ import annotations

import csv
from typing import IO

from .mlmc import MlmcResult
from .montecarlo import ConvergenceReport, MomentReport
from .schemes import PathBatch, SchemeConfig, StepStatus
from .taming import AssumptionReport

__all__ = [
    "CONVERGENCE_HEADER",
    "PATHS_HEADER",
    "ASSUMPTIONS_HEADER",
    "MOMENTS_HEADER",
    "MLMC_HEADER",
    "f17",
    "write_convergence_csv",
    "write_paths_csv",
    "write_assumptions_csv",
    "write_moments_csv",
    "write_mlmc_csv",
]

CONVERGENCE_HEADER = ("scheme", "h", "e_h", "seconds", "violations")
PATHS_HEADER = ("path", "t", "y", "scheme", "status")
ASSUMPTIONS_HEADER = (
    "preset",
    "alpha",
    "h",
    "gamma_used",
    "gamma_required",
    "a31_f_margin",
    "a31_g_margin",
    "a32_sup",
    "bound_l",
    "a33_f_margin",
    "a33_g_margin",
    "pass",
)
MOMENTS_HEADER = ("scheme", "p", "h", "sup_moment", "censored", "inverse")
MLMC_HEADER = ("payoff", "scheme", "level", "h", "n_samples", "mean_diff", "var_diff")

_STATUS_NAMES = {
    StepStatus.OK: "ok",
    StepStatus.POSITIVITY_LOST: "positivity_lost",
    StepStatus.SOLVER_FAILED: "solver_failed",
    StepStatus.OVERFLOW: "overflow",
}


def f17(value: float) -> str:
    """Shortest form with 17 significant digits; round-trips any double."""
    return format(float(value), ".17g")


def _writer(stream: IO[str]):
    return csv.writer(stream, lineterminator="\n")


def write_convergence_csv(report: ConvergenceReport, path: str) -> None:
    """One row per (scheme, level): scheme,h,e_h,seconds,violations."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        out = _writer(fh)
        out.writerow(CONVERGENCE_HEADER)
        for kind in report.schemes:
            for i, h in enumerate(report.step_sizes):
                out.writerow(
                    (
                        kind.value,
                        f17(h),
                        f17(report.errors[kind][i]),
                        f17(report.timings[kind][i]),
                        str(report.violations[kind][i]),
                    )
                )


def write_paths_csv(batch: PathBatch, cfg: SchemeConfig, path: str) -> None:
    """Row per retained path point; a truncated path's final row carries
    its failure status in the last column."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        out = _writer(fh)
        out.writerow(PATHS_HEADER)
        for p in range(batch.states.shape[0]):
            bad_at = int(batch.first_bad[p])
            last = cfg.n_steps if bad_at < 0 else bad_at
            for k in range(last + 1):
                status = StepStatus.OK
                if bad_at >= 0 and k == last:
                    status = StepStatus(int(batch.status[p]))
                out.writerow(
                    (
                        str(p),
                        f17(cfg.h * k),
                        f17(batch.states[p, k]),
                        cfg.kind.value,
                        _STATUS_NAMES[status],
                    )
                )


def write_assumptions_csv(report: AssumptionReport, preset_id: str, path: str) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        out = _writer(fh)
        out.writerow(ASSUMPTIONS_HEADER)
        out.writerow(
            (
                preset_id,
                f17(report.alpha),
                f17(report.h),
                f17(report.gamma_used),
                f17(report.gamma_required),
                f17(report.a31_f_margin),
                f17(report.a31_g_margin),
                f17(report.a32_sup),
                f17(report.bound_l),
                f17(report.a33_f_margin),
                f17(report.a33_g_margin),
                "true" if report.passed else "false",
            )
        )


def write_moments_csv(report: MomentReport, path: str) -> None:
    """One row per (moment order, level)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        out = _writer(fh)
        out.writerow(MOMENTS_HEADER)
        for p in report.p_values:
            for level, h in zip(report.levels, report.h_values):
                out.writerow(
                    (
                        report.scheme.value,
                        f17(p),
                        f17(h),
                        f17(report.sup_moments[(p, level)]),
                        str(report.censored[level]),
                        "true" if report.inverse else "false",
                    )
                )


def write_mlmc_csv(result: MlmcResult, path: str) -> None:
    """One row per level; the estimate itself is printed, not stored."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        out = _writer(fh)
        out.writerow(MLMC_HEADER)
        for level, n, mean, var in zip(
            result.levels, result.n_samples, result.means, result.variances
        ):
            out.writerow(
                (
                    result.payoff_id,
                    result.scheme.value,
                    str(level),
                    f17(result.horizon * 2.0**-level),
                    str(n),
                    f17(mean),
                    f17(var),
                )
            )
