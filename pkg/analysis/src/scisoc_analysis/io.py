"""Readers for the simulator's documented output schemas."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path


class AnalysisError(Exception):
    """Input files missing, malformed, or insufficient for a figure."""


METRICS_COLUMNS = ("paper_id", "d_eth", "d_aff", "mean_rank", "citations", "source")
CORRELATION_COLUMNS = ("factor", "r", "p_value", "n")


@dataclass
class MetricsRow:
    paper_id: str
    d_eth: float
    d_aff: float
    mean_rank: float | None
    citations: float
    source: str


@dataclass
class Correlation:
    factor: str
    r: float
    p_value: float
    n: int


def _check_columns(fieldnames, expected, path: Path) -> None:
    missing = set(expected) - set(fieldnames or ())
    if missing:
        raise AnalysisError(f"{path} is missing columns: {sorted(missing)}")


def read_metrics(path: Path) -> list[MetricsRow]:
    path = Path(path)
    if not path.exists():
        raise AnalysisError(f"metrics file not found: {path}")
    rows: list[MetricsRow] = []
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        _check_columns(reader.fieldnames, METRICS_COLUMNS, path)
        for rec in reader:
            rows.append(MetricsRow(
                paper_id=rec["paper_id"],
                d_eth=float(rec["d_eth"]),
                d_aff=float(rec["d_aff"]),
                mean_rank=float(rec["mean_rank"]) if rec["mean_rank"] else None,
                citations=float(rec["citations"]),
                source=rec["source"],
            ))
    return rows


def read_correlations(path: Path) -> dict[str, Correlation]:
    path = Path(path)
    if not path.exists():
        raise AnalysisError(f"correlations file not found: {path}")
    out: dict[str, Correlation] = {}
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        _check_columns(reader.fieldnames, CORRELATION_COLUMNS, path)
        for rec in reader:
            corr = Correlation(rec["factor"], float(rec["r"]),
                               float(rec["p_value"]), int(rec["n"]))
            out[corr.factor] = corr
    return out


def read_team_sizes(path: Path) -> dict[int, int]:
    path = Path(path)
    if not path.exists():
        raise AnalysisError(f"team size file not found: {path}")
    hist: dict[int, int] = {}
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        _check_columns(reader.fieldnames, ("size", "count"), path)
        for rec in reader:
            hist[int(rec["size"])] = int(rec["count"])
    return hist


def read_team_size_fit(path: Path) -> dict | None:
    path = Path(path)
    if not path.exists():
        raise AnalysisError(f"team size fit file not found: {path}")
    return json.loads(path.read_text(encoding="utf-8"))
