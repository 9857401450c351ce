"""Batch figure CLI over the frozen sweep outputs."""

from __future__ import annotations

import argparse
import sys

from .figspec import FigureSpec
from .heatmap import render_heatmap
from .trends import render_trends


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rpplot",
        description="Render figures from rpcompass sweep CSV/JSON outputs.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    heat = sub.add_parser(
        "heatmap", help="(theta, phi) panels of sweep CSV quantities",
    )
    heat.add_argument("--csv", required=True, help="sweep CSV path")
    heat.add_argument(
        "--quantity", action="append", required=True,
        help="CSV column to panel; repeat the flag for several panels",
    )
    heat.add_argument(
        "--summary", default=None,
        help="matching sweep summary JSON, used for the gamma annotation",
    )
    heat.add_argument("--log", action="store_true", help="log color scale")
    heat.add_argument(
        "--no-annotate", dest="annotate", action="store_false",
        help="drop the extrema and gamma annotations",
    )
    heat.add_argument("--out", required=True, help="output image path")

    trend = sub.add_parser(
        "trends", help="summary statistics versus nucleus count",
    )
    trend.add_argument(
        "--summaries", nargs="+", required=True,
        help="sweep summary JSON paths, e.g. the per-n files a scan writes",
    )
    trend.add_argument("--out", required=True, help="output image path")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "heatmap":
            spec = FigureSpec(
                csv_path=args.csv,
                quantities=tuple(args.quantity),
                summary_path=args.summary,
                log_scale=args.log,
                annotate=args.annotate,
            )
            path = render_heatmap(spec, args.out)
        else:
            path = render_trends(args.summaries, args.out)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
