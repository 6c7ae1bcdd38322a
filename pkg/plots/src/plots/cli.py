"""Command line driver: plots <figure-kind> --in <csv> --out <img>.

Exit codes follow the simulation CLI convention: 0 success, 2 invalid
input (bad flags, schema mismatch, empty or unreadable CSV).
"""

from __future__ import annotations

import argparse
import sys

from .figures import FigureKind, FigureSpec, render

__all__ = ["main", "run"]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plots", description="Render aitsahalia CSV artifacts as figures"
    )
    sub = parser.add_subparsers(dest="kind", required=True)

    p_conv = sub.add_parser("convergence", help="log-log strong-error figure")
    p_conv.add_argument("--in", dest="source", required=True, help="convergence CSV")
    p_conv.add_argument("--out", dest="out_path", required=True, help="output image (png/svg)")
    p_conv.add_argument("--slopes", default="0.5,1.0", help="comma list of reference slopes")
    p_conv.add_argument("--title", default=None)

    p_paths = sub.add_parser("paths", help="sample-trajectory panel")
    p_paths.add_argument("--in", dest="source", required=True, help="paths CSV")
    p_paths.add_argument("--out", dest="out_path", required=True, help="output image (png/svg)")
    p_paths.add_argument("--title", default=None)

    return parser


def _parse_slopes(text: str) -> tuple[float, ...]:
    try:
        slopes = tuple(float(p) for p in text.split(",") if p.strip() != "")
    except ValueError as exc:
        raise ValueError(f"bad --slopes value {text!r}") from exc
    if not slopes:
        raise ValueError("--slopes needs at least one value")
    return slopes


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        slopes = _parse_slopes(args.slopes) if args.kind == "convergence" else ()
        spec = FigureSpec(
            source=args.source,
            kind=FigureKind(args.kind),
            out_path=args.out_path,
            slopes=slopes or (0.5, 1.0),
            title=args.title,
        )
        result = render(spec)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {result.out_path}")
    return 0


def run() -> None:
    raise SystemExit(main())
