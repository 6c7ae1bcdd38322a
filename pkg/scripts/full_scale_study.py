#!/usr/bin/env python3
"""Full-protocol strong-error study over all built-in presets.

Runs TEM and BEM against the implicit reference for each preset, writes
one convergence CSV per preset, and prints the fitted rates and the
integration-time contrast.  The full protocol (10^4 paths, reference
2^-14, levels 4..9) takes on the order of ten minutes on one core;
--desk drops to the five-second desk protocol per preset.

Usage:
    python3 scripts/full_scale_study.py --out results/
    python3 scripts/full_scale_study.py --desk --workers 4
"""

from __future__ import annotations

import argparse
import os
import time

from aitsahalia import PRESETS, SchemeKind, strong_error_study, write_convergence_csv
from aitsahalia.cli import (
    DEFAULT_SEED,
    DESK_LEVELS,
    DESK_PATHS,
    DESK_REF,
    FULL_LEVELS,
    FULL_PATHS,
    FULL_REF,
)


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--presets", default="eg1,eg2,eg3", help="comma list of presets")
    parser.add_argument("--seed", type=int, default=DEFAULT_SEED)
    parser.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    parser.add_argument("--desk", action="store_true", help="desk protocol instead of full")
    parser.add_argument("--out", default="results", help="output directory")
    args = parser.parse_args()

    n_paths, ref_level, levels_text = (
        (DESK_PATHS, DESK_REF, DESK_LEVELS) if args.desk else (FULL_PATHS, FULL_REF, FULL_LEVELS)
    )
    levels = tuple(int(l) for l in levels_text.split(","))
    presets = [p.strip() for p in args.presets.split(",") if p.strip()]
    unknown = [p for p in presets if p not in PRESETS]
    if unknown:
        parser.error(f"unknown presets {unknown}; available: {sorted(PRESETS)}")
    os.makedirs(args.out, exist_ok=True)

    label = "desk" if args.desk else "full"
    print(
        f"{label} protocol: {n_paths} paths, reference 2^-{ref_level}, "
        f"levels {levels}, seed {args.seed}"
    )
    rows = []
    for preset in presets:
        t0 = time.perf_counter()
        report = strong_error_study(
            PRESETS[preset],
            (SchemeKind.TEM, SchemeKind.BEM),
            n_paths,
            ref_level,
            levels,
            args.seed,
            workers=args.workers,
            preset_id=preset,
        )
        wall = time.perf_counter() - t0
        out_file = os.path.join(args.out, f"convergence_{preset}.csv")
        write_convergence_csv(report, out_file)
        for kind in report.schemes:
            fit = report.fits[kind]
            rows.append(
                (
                    preset,
                    kind.value,
                    f"{fit.q:.4f}" if fit else "n/a",
                    f"{fit.resid:.4f}" if fit else "n/a",
                    f"{report.scheme_seconds(kind):.1f}",
                )
            )
        print(
            f"{preset}: wrote {out_file}  "
            f"(wall {wall:.1f}s, reference {report.reference_seconds:.1f}s)"
        )

    print()
    print(f"{'preset':<8}{'scheme':<8}{'q':>8}{'resid':>8}{'seconds':>9}")
    for preset, scheme, q, resid, seconds in rows:
        print(f"{preset:<8}{scheme:<8}{q:>8}{resid:>8}{seconds:>9}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
