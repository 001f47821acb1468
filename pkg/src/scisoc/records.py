"""Core bibliometric record types shared by ingestion, retrieval, and metrics.

Seed papers loaded from a scholarly dump keep year -1 inside the reference
database; papers written by agent teams carry the epoch at which their review
was accepted. Citation counters on these records are *seed* values: effective
counts during a simulation are seed value plus the citation ledger's delta.
"""

from __future__ import annotations

from dataclasses import dataclass, field, asdict
from typing import Any

SEED_YEAR = -1


@dataclass
class AuthorRecord:
    """A scientist profile derived from their extracted publication history."""

    author_id: str
    display_name: str  # anonymized "Scientist <n>" label
    ethnicity: str
    affiliations: list[str] = field(default_factory=list)
    affiliation_rank: int | None = None
    citation_count: int = 0
    coauthor_ids: set[str] = field(default_factory=set)
    discipline: str = ""
    research_topics: list[str] = field(default_factory=list)

    def __post_init__(self) -> None:
        if self.citation_count < 0:
            raise ValueError(f"author {self.author_id}: negative citation count")
        self.coauthor_ids.discard(self.author_id)

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["coauthor_ids"] = sorted(self.coauthor_ids)
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "AuthorRecord":
        d = dict(d)
        d["coauthor_ids"] = set(d.get("coauthor_ids", ()))
        return cls(**d)


@dataclass
class PaperRecord:
    """A seed or agent-authored paper."""

    paper_id: str
    title: str
    abstract: str
    year: int
    citation_count: int
    author_ids: list[str]
    cited_paper_ids: list[str] | None = None  # None for seed papers
    discipline: str = ""

    def __post_init__(self) -> None:
        if self.citation_count < 0:
            raise ValueError(f"paper {self.paper_id}: negative citation count")

    @property
    def is_seed(self) -> bool:
        return self.year == SEED_YEAR

    def embedding_text(self) -> str:
        return f"{self.title}\n{self.abstract}".strip()

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "PaperRecord":
        return cls(**d)


@dataclass
class CorpusSplit:
    """Reference papers (retrievable, citable) and held-out validation papers.

    The two collections are disjoint by paper_id; retrieval and citation
    bookkeeping only ever touch the reference side. Validation papers keep
    their real publication year so per-year comparisons stay possible.
    """

    reference_db: dict[str, PaperRecord] = field(default_factory=dict)
    validation_db: dict[str, PaperRecord] = field(default_factory=dict)

    def add_reference(self, paper: PaperRecord) -> None:
        if paper.paper_id in self.reference_db or paper.paper_id in self.validation_db:
            raise ValueError(f"duplicate paper_id: {paper.paper_id}")
        self.reference_db[paper.paper_id] = paper

    def add_validation(self, paper: PaperRecord) -> None:
        if paper.paper_id in self.reference_db or paper.paper_id in self.validation_db:
            raise ValueError(f"duplicate paper_id: {paper.paper_id}")
        self.validation_db[paper.paper_id] = paper
