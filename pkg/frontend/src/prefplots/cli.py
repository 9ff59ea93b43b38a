"""Render one figure from simulator CSV artifacts.

Usage:
    prefplots KIND --input PATH [--input PATH ...] --out FILE [options]

KIND is one of: regret_curves, trajectories, gp_snapshot, baseline_regret,
uc_comparison.
"""

from __future__ import annotations

import argparse
import sys

from .csvio import SchemaError
from .figures import KINDS, FigureSpec, render


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="prefplots", description=__doc__)
    p.add_argument("kind", choices=KINDS)
    p.add_argument("--input", action="append", required=True, help="input CSV (repeatable)")
    p.add_argument("--label", action="append", default=[], help="series label (repeatable)")
    p.add_argument("--out", required=True, help="output image (.svg/.pdf vector, .png raster)")
    p.add_argument("--config", help="config.json of the run (trajectories)")
    p.add_argument("--checkpoint", type=int, help="feedback cutoff tick (gp_snapshot)")
    p.add_argument("--user", type=int, help="user index for feedback points (gp_snapshot)")
    p.add_argument("--windows", help="comma-separated rolling windows (uc_comparison)")
    p.add_argument("--no-reference", action="store_true", help="disable the rate reference")
    p.add_argument("--title")
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    windows = [int(w) for w in args.windows.split(",")] if args.windows else []
    spec = FigureSpec(
        kind=args.kind,
        inputs=args.input,
        output=args.out,
        labels=args.label,
        config=args.config,
        checkpoint=args.checkpoint,
        user=args.user,
        windows=windows,
        reference=not args.no_reference,
        title=args.title,
    )
    try:
        path = render(spec)
    except (SchemaError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
