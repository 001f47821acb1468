"""`analyze` command-line entry point."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .figures import plot_correlation_panels, plot_team_size_hist
from .io import AnalysisError

logger = logging.getLogger(__name__)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="analyze")
    sub = parser.add_subparsers(dest="command", required=True)

    p_fig = sub.add_parser("figures", help="correlation scatter panels with fit lines")
    p_fig.add_argument("--metrics", required=True, type=Path)
    p_fig.add_argument("--correlations", required=True, type=Path)
    p_fig.add_argument("--out", required=True, type=Path)
    p_fig.add_argument("--format", choices=("png", "svg"), default="png")
    p_fig.add_argument("--bins", type=int, default=None,
                       help="bin the x axis for display (default: raw points)")

    p_teams = sub.add_parser("teams", help="team-size histogram with exponential fit")
    p_teams.add_argument("--run", type=Path, default=None,
                         help="run output dir holding team_sizes.csv and team_size_fit.json")
    p_teams.add_argument("--sizes", type=Path, default=None)
    p_teams.add_argument("--fit", type=Path, default=None)
    p_teams.add_argument("--out", required=True, type=Path)
    p_teams.add_argument("--format", choices=("png", "svg"), default="png")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "figures":
            reports = plot_correlation_panels(args.metrics, args.correlations,
                                              args.out, fmt=args.format,
                                              bins=args.bins)
            for report in reports:
                print(f"wrote {report.path} ({len(report.panels)} panels)")
        else:
            sizes = args.sizes or (args.run / "team_sizes.csv" if args.run else None)
            fit = args.fit or (args.run / "team_size_fit.json" if args.run else None)
            if sizes is None or fit is None:
                logger.error("teams needs --run or both --sizes and --fit")
                return 2
            report = plot_team_size_hist(sizes, fit, args.out, fmt=args.format)
            print(f"wrote {report.path} (rate={report.rate:.3f}, "
                  f"R²={report.r_squared:.3f})")
        return 0
    except AnalysisError as exc:
        logger.error("%s", exc)
        return 3


if __name__ == "__main__":
    sys.exit(main())
