"""Figure builders.

The correlation figure mirrors the run's factor-vs-citation analysis: one
row of panels per data source (real on top, simulated below), three columns
(ethnicity diversity, affiliation diversity, affiliation ranking), each
panel a scatter with a least-squares trend line and the (r, p) annotation
taken verbatim from correlations.csv. The team-size figure is a log-scale
histogram with the exponential fit line whose rate and R-squared come from
the run's team_size_fit.json.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .io import (AnalysisError, Correlation, MetricsRow, read_correlations,
                 read_metrics, read_team_size_fit, read_team_sizes)

logger = logging.getLogger(__name__)

FACTORS = (
    ("d_eth", "Ethnicity Diversity"),
    ("d_aff", "Affiliation Diversity"),
    ("mean_rank", "Affiliation Ranking"),
)


@dataclass
class PanelSpec:
    source: str
    factor: str
    n_points: int
    slope: float | None
    r: float | None
    p_value: float | None
    annotation: str


@dataclass
class FigureReport:
    path: Path
    panels: list[PanelSpec] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)


def _factor_values(row: MetricsRow, factor: str) -> float | None:
    return getattr(row, factor)


def _panel_points(rows: list[MetricsRow], factor: str, bins: int | None):
    pairs = [(_factor_values(r, factor), r.citations) for r in rows
             if _factor_values(r, factor) is not None]
    if not pairs:
        return np.empty(0), np.empty(0)
    xs = np.asarray([p[0] for p in pairs], dtype=float)
    ys = np.asarray([p[1] for p in pairs], dtype=float)
    if bins and bins > 0 and len(xs) > bins:
        edges = np.linspace(xs.min(), xs.max(), bins + 1)
        centers, means = [], []
        for lo, hi in zip(edges[:-1], edges[1:]):
            mask = (xs >= lo) & (xs <= hi if hi == edges[-1] else xs < hi)
            if mask.any():
                centers.append((lo + hi) / 2.0)
                means.append(float(ys[mask].mean()))
        return np.asarray(centers), np.asarray(means)
    return xs, ys


def _draw_panel(ax, rows: list[MetricsRow], source: str, factor: str,
                label: str, correlation: Correlation | None,
                bins: int | None) -> PanelSpec:
    xs, ys = _panel_points(rows, factor, bins)
    ax.scatter(xs, ys, s=12, alpha=0.6, color="#1f77b4", edgecolors="none")
    slope = None
    if len(xs) >= 2 and float(np.ptp(xs)) > 0:
        slope, intercept = np.polyfit(xs, ys, 1)
        grid = np.linspace(float(xs.min()), float(xs.max()), 50)
        ax.plot(grid, slope * grid + intercept, color="#d62728", linewidth=1.5)
    if correlation is not None:
        annotation = f"r={correlation.r:.3f}, p={correlation.p_value:.3g}"
    else:
        annotation = "r=n/a"
    ax.text(0.03, 0.95, annotation, transform=ax.transAxes,
            fontsize=8, va="top",
            bbox=dict(boxstyle="round", facecolor="white", alpha=0.75))
    ax.set_xlabel(label, fontsize=8)
    ax.set_ylabel("Citation Count", fontsize=8)
    ax.set_title(source, fontsize=9)
    ax.tick_params(labelsize=7)
    return PanelSpec(
        source=source, factor=factor, n_points=int(len(xs)),
        slope=None if slope is None else float(slope),
        r=None if correlation is None else correlation.r,
        p_value=None if correlation is None else correlation.p_value,
        annotation=annotation,
    )


def plot_correlation_panels(
    metrics_csv: Path,
    correlations_csv: Path,
    out_dir: Path,
    fmt: str = "png",
    bins: int | None = None,
) -> list[FigureReport]:
    """One figure per real-data year: real panels on top, simulated below."""
    rows = read_metrics(metrics_csv)
    correlations = read_correlations(correlations_csv)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    by_source: dict[str, list[MetricsRow]] = {}
    for row in rows:
        by_source.setdefault(row.source, []).append(row)
    real_sources = sorted(s for s in by_source if s.startswith("real"))
    has_sim = "simulated" in by_source
    if not real_sources and not has_sim:
        raise AnalysisError(f"{metrics_csv} holds no plottable rows")

    reports: list[FigureReport] = []
    groups = real_sources if real_sources else [None]
    for real_source in groups:
        report = FigureReport(path=Path())
        row_sources = [s for s in (real_source, "simulated" if has_sim else None) if s]
        if real_source is None:
            report.warnings.append("no real-data rows; plotting simulated row only")
        if not has_sim:
            report.warnings.append("no simulated rows; plotting real row only")
        for message in report.warnings:
            logger.warning("%s", message)

        fig, axes = plt.subplots(
            len(row_sources), len(FACTORS),
            figsize=(3.2 * len(FACTORS), 2.6 * len(row_sources)),
            squeeze=False,
        )
        for i, source in enumerate(row_sources):
            for j, (factor, label) in enumerate(FACTORS):
                correlation = correlations.get(f"{source}:{factor}")
                panel = _draw_panel(axes[i][j], by_source[source], source,
                                    factor, label, correlation, bins)
                report.panels.append(panel)
        fig.tight_layout()
        stem = f"correlations_{real_source or 'simulated'}"
        report.path = out_dir / f"{stem}.{fmt}"
        fig.savefig(report.path, dpi=150, metadata=_stable_metadata(fmt))
        plt.close(fig)
        reports.append(report)
    return reports


def _stable_metadata(fmt: str) -> dict | None:
    # Strip creation timestamps so identical inputs give identical bytes.
    if fmt == "png":
        return {"Software": "scisoc-analysis"}
    if fmt == "svg":
        return {"Date": None}
    return None


@dataclass
class TeamSizeReport:
    path: Path
    rate: float
    r_squared: float
    n_bins: int


def plot_team_size_hist(
    sizes_csv: Path,
    fit_json: Path,
    out_dir: Path,
    fmt: str = "png",
) -> TeamSizeReport:
    """Log-scale size histogram with the run's own exponential fit overlaid."""
    hist = read_team_sizes(sizes_csv)
    if not hist or sum(hist.values()) == 0:
        raise AnalysisError(f"{sizes_csv} records no teams")
    fit = read_team_size_fit(fit_json)
    if not fit or fit.get("rate") is None:
        raise AnalysisError(
            f"{fit_json} carries no exponential fit (too few occupied size bins)"
        )
    rate, r_squared = float(fit["rate"]), float(fit["r_squared"])

    sizes = sorted(hist)
    counts = [hist[s] for s in sizes]
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    fig, ax = plt.subplots(figsize=(4.2, 3.2))
    ax.bar(sizes, counts, color="#1f77b4", alpha=0.75, label="teams")
    # Anchor the fit line at the modal bin; its slope is the run's fitted rate.
    anchor = max(hist, key=lambda s: hist[s])
    grid = np.linspace(min(sizes), max(sizes), 100)
    ax.plot(grid, hist[anchor] * np.exp(-rate * (grid - anchor)),
            color="#d62728", linewidth=1.5,
            label=f"exp fit: rate={rate:.3f}, R²={r_squared:.3f}")
    ax.set_yscale("log")
    ax.set_xlabel("Team size")
    ax.set_ylabel("Frequency")
    ax.legend(fontsize=8)
    fig.tight_layout()
    path = out_dir / f"team_sizes.{fmt}"
    fig.savefig(path, dpi=150, metadata=_stable_metadata(fmt))
    plt.close(fig)
    return TeamSizeReport(path=path, rate=rate, r_squared=r_squared,
                          n_bins=len(sizes))
