"""Exact cosine-similarity retrieval over the reference database, plus the
citation ledger fed by idea-stage retrievals.

The index stores one embedding per reference paper and supports incremental
insertion as agent papers are accepted. Search is exact: results are ordered
by cosine similarity descending with ties broken by ascending paper_id, so a
brute-force pairwise oracle reproduces it bit for bit.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .errors import DataError, LedgerError, RetrievalError
from .records import PaperRecord


class EmbeddingIndex:
    """Flat exact index mapping paper_id -> unit-normalized embedding."""

    def __init__(self, dim: int) -> None:
        if dim <= 0:
            raise DataError(f"index dim must be positive, got {dim}")
        self.dim = dim
        self._ids: list[str] = []
        self._pos: dict[str, int] = {}
        self._rows: list[np.ndarray] = []
        self._matrix: np.ndarray | None = None  # lazily stacked cache

    def __len__(self) -> int:
        return len(self._ids)

    def __contains__(self, paper_id: str) -> bool:
        return paper_id in self._pos

    @property
    def paper_ids(self) -> list[str]:
        return list(self._ids)

    def add(self, paper_id: str, vector: np.ndarray) -> None:
        vec = np.asarray(vector, dtype=float)
        if vec.shape != (self.dim,):
            raise DataError(
                f"embedding for {paper_id} has shape {vec.shape}, expected ({self.dim},)"
            )
        if paper_id in self._pos:
            raise DataError(f"paper {paper_id} already indexed")
        norm = float(np.linalg.norm(vec))
        if norm == 0.0 or not np.isfinite(norm):
            raise DataError(f"embedding for {paper_id} is zero or non-finite")
        self._pos[paper_id] = len(self._ids)
        self._ids.append(paper_id)
        self._rows.append(vec / norm)
        self._matrix = None

    def vector(self, paper_id: str) -> np.ndarray:
        return self._rows[self._pos[paper_id]]

    def _stacked(self) -> np.ndarray:
        if self._matrix is None:
            self._matrix = np.vstack(self._rows) if self._rows else np.empty((0, self.dim))
        return self._matrix

    def retrieve(self, query: np.ndarray, k: int) -> list[tuple[str, float]]:
        """Top-k papers by cosine similarity to ``query``.

        Returns min(k, len(index)) unique (paper_id, similarity) pairs sorted
        by similarity descending, ties by ascending paper_id.
        """
        if k <= 0:
            raise RetrievalError(f"k must be positive, got {k}")
        q = np.asarray(query, dtype=float)
        if q.shape != (self.dim,):
            raise RetrievalError(f"query shape {q.shape} does not match index dim {self.dim}")
        norm = float(np.linalg.norm(q))
        if norm == 0.0 or not np.isfinite(norm):
            raise RetrievalError("cosine similarity undefined for zero-norm query")
        if not self._ids:
            return []
        sims = self._stacked() @ (q / norm)
        order = sorted(range(len(self._ids)), key=lambda i: (-sims[i], self._ids[i]))
        return [(self._ids[i], float(sims[i])) for i in order[: min(k, len(order))]]

    def save(self, path: Path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        np.savez_compressed(
            path,
            ids=np.asarray(self._ids, dtype=object),
            matrix=self._stacked(),
            dim=np.asarray([self.dim]),
        )

    @classmethod
    def load(cls, path: Path) -> "EmbeddingIndex":
        data = np.load(Path(path), allow_pickle=True)
        idx = cls(dim=int(data["dim"][0]))
        # Rows were saved already normalized; re-normalizing would drift by an ulp.
        for pid, row in zip(data["ids"].tolist(), data["matrix"]):
            pid = str(pid)
            if pid in idx._pos:
                raise DataError(f"paper {pid} duplicated in snapshot")
            idx._pos[pid] = len(idx._ids)
            idx._ids.append(pid)
            idx._rows.append(np.asarray(row, dtype=float))
        return idx


def build_index(
    reference_db: Mapping[str, PaperRecord], embedder, dim: int | None = None
) -> EmbeddingIndex:
    """Embed every reference paper once and return the populated index.

    The first embedding fixes the dimension when ``dim`` is not given; any
    later mismatch is reported with the offending paper_id.
    """
    if not reference_db:
        raise DataError("cannot build an index over an empty reference database")
    index: EmbeddingIndex | None = None
    for paper_id in sorted(reference_db):
        vec = np.asarray(embedder.embed(reference_db[paper_id].embedding_text()), dtype=float)
        if index is None:
            index = EmbeddingIndex(dim if dim is not None else vec.shape[0])
        try:
            index.add(paper_id, vec)
        except DataError as exc:
            raise DataError(f"index build failed at paper {paper_id}: {exc}") from exc
    assert index is not None
    return index


@dataclass
class CitationEvent:
    epoch: int
    team_id: str
    paper_id: str


@dataclass
class CitationLedger:
    """Append-only record of citation credit earned through idea-stage retrieval.

    Effective citation count of a paper = its seed count + counts[paper_id].
    The sum of all deltas always equals the number of logged events.
    """

    counts: dict[str, int] = field(default_factory=dict)
    event_log: list[CitationEvent] = field(default_factory=list)

    def record(self, epoch: int, team_id: str, paper_ids: Iterable[str], known_ids) -> None:
        """Credit one citation per listed paper; empty lists are a no-op."""
        for paper_id in paper_ids:
            if paper_id not in known_ids:
                raise LedgerError(
                    f"citation recorded for unknown paper {paper_id} "
                    f"(team {team_id}, epoch {epoch})"
                )
            self.counts[paper_id] = self.counts.get(paper_id, 0) + 1
            self.event_log.append(CitationEvent(epoch, team_id, paper_id))

    def delta(self, paper_id: str) -> int:
        return self.counts.get(paper_id, 0)

    def total_delta(self) -> int:
        return sum(self.counts.values())

    def effective_count(self, paper: PaperRecord) -> int:
        return paper.citation_count + self.delta(paper.paper_id)

    def write_events_csv(self, path: Path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["epoch", "team_id", "paper_id"])
            for ev in self.event_log:
                writer.writerow([ev.epoch, ev.team_id, ev.paper_id])

    def write_deltas_csv(self, path: Path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["paper_id", "delta"])
            for paper_id in sorted(self.counts):
                writer.writerow([paper_id, self.counts[paper_id]])

    def to_dict(self) -> dict:
        return {
            "counts": dict(self.counts),
            "events": [[e.epoch, e.team_id, e.paper_id] for e in self.event_log],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CitationLedger":
        ledger = cls(counts=dict(d["counts"]))
        ledger.event_log = [CitationEvent(int(e[0]), str(e[1]), str(e[2])) for e in d["events"]]
        if sum(ledger.counts.values()) != len(ledger.event_log):
            raise DataError("citation ledger counts disagree with event log length")
        return ledger


def save_ledger(ledger: CitationLedger, path: Path) -> None:
    Path(path).write_text(json.dumps(ledger.to_dict()), encoding="utf-8")


def load_ledger(path: Path) -> CitationLedger:
    return CitationLedger.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
