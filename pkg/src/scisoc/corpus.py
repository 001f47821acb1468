"""Ingestion of scholarly-graph JSONL dumps into the simulator's data model.

Input format (UTF-8, one JSON object per line):

authors.jsonl
    {"id": "a1", "name": "Jane Doe", "affiliations": ["King's College London"],
     "papers": [{"id": "p1", "year": 2004, "discipline": "Psychology",
                 "n_citation": 10, "keywords": ["memory"], "author_ids": ["a1", "a7"]}]}

papers.jsonl
    {"id": "p1", "title": "...", "abstract": "...", "year": 2004,
     "n_citation": 10, "author_ids": ["a1", "a7"], "keywords": ["memory"],
     "discipline": "Psychology"}

Author profiles are derived from each author's own publication entries within
the reference window (2002-2009 by default, configurable) so that no
validation-era information leaks into agent profiles: the discipline is the
most frequent one among those papers, the citation count is their summed
citations, co-authors and keywords are unioned from them. Names are replaced
with "Scientist <n>" labels in first-seen order.

Papers split by original year: the reference window lands in the reference
database with stored year -1; 2010-2011 land in the validation database with
their real year; everything else is dropped and counted.
"""

from __future__ import annotations

import csv
import json
import logging
import random
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Iterator

from .backend import stable_hash
from .disciplines import DISCIPLINES, normalize_discipline
from .errors import DataError
from .metrics import fit_exponential
from .records import SEED_YEAR, AuthorRecord, CorpusSplit, PaperRecord

logger = logging.getLogger(__name__)

SNAPSHOT_SCHEMA_VERSION = 1

DEFAULT_REFERENCE_WINDOW = (2002, 2009)
VALIDATION_WINDOW = (2010, 2011)

DEFAULT_ETHNICITY_LABELS = (
    "African", "British", "EastAsian", "European", "Hispanic",
    "IndianSubcontinent", "Japanese", "Muslim", "Nordic",
)


class HashEthnicityClassifier:
    """Deterministic stand-in for a name-ethnicity classifier.

    Maps a raw name into a closed label set via a stable hash; the same name
    always yields the same label. Real classifiers can be injected instead.
    """

    def __init__(self, labels: tuple[str, ...] = DEFAULT_ETHNICITY_LABELS) -> None:
        if not labels:
            raise DataError("ethnicity label set must be non-empty")
        self.labels = labels

    def __call__(self, name: str) -> str:
        if not name or not name.strip():
            raise DataError("cannot classify an empty name")
        return self.labels[stable_hash("ethnicity", name) % len(self.labels)]


class FrequentKeywordSummarizer:
    """Mock topic summarizer: the k most frequent keywords, verbatim.

    Ties break by first appearance, keeping the output deterministic.
    """

    def __init__(self, k: int = 5) -> None:
        self.k = k

    def __call__(self, keywords: list[str]) -> list[str]:
        counts = Counter(keywords)
        first_seen = {kw: i for i, kw in reversed(list(enumerate(keywords)))}
        ranked = sorted(counts, key=lambda kw: (-counts[kw], first_seen[kw]))
        return ranked[: self.k]


class DefaultDisciplineClassifier:
    """Deterministic paper-discipline classifier.

    Prefers a valid label already present on the record, then scores the
    title and keywords against a small per-discipline vocabulary, and
    finally falls back to a stable hash of the title so the output always
    lies inside the 19-label set.
    """

    _VOCAB = {
        "Art": ("art", "painting", "aesthetic", "music", "visual"),
        "History": ("history", "historical", "archive", "century", "war"),
        "Philosophy": ("philosophy", "ethics", "epistemic", "ontology", "moral"),
        "Psychology": ("psychology", "cognitive", "behavior", "memory", "attention"),
        "Biology": ("biology", "gene", "cell", "protein", "species"),
        "Environmental Science": ("environmental", "climate", "ecosystem", "pollution", "soil"),
        "Geography": ("geography", "spatial", "urban", "region", "land"),
        "Geology": ("geology", "rock", "seismic", "mineral", "tectonic"),
        "Business": ("business", "management", "marketing", "firm", "strategy"),
        "Economics": ("economics", "market", "price", "trade", "labor"),
        "Computer Science": ("algorithm", "computing", "software", "network", "learning"),
        "Engineering": ("engineering", "design", "mechanical", "control", "sensor"),
        "Chemistry": ("chemistry", "chemical", "molecule", "reaction", "catalyst"),
        "Materials Science": ("materials", "alloy", "polymer", "nanostructure", "coating"),
        "Mathematics": ("mathematics", "theorem", "algebra", "geometry", "equation"),
        "Physics": ("physics", "quantum", "particle", "relativity", "photon"),
        "Medicine": ("medicine", "clinical", "patient", "disease", "therapy"),
        "Political Science": ("political", "policy", "election", "governance", "state"),
        "Sociology": ("sociology", "social", "community", "inequality", "gender"),
    }

    def __call__(self, record: dict) -> str:
        hinted = normalize_discipline(str(record.get("discipline", "")))
        if hinted:
            return hinted
        text = " ".join([str(record.get("title", ""))] + list(record.get("keywords", []))).lower()
        scores = {d: sum(text.count(tok) for tok in toks) for d, toks in self._VOCAB.items()}
        best = max(scores.values())
        if best > 0:
            return min(d for d, s in scores.items() if s == best)
        return DISCIPLINES[stable_hash("discipline", record.get("title", "")) % len(DISCIPLINES)]


class RankTable:
    """Institution -> ranking lookup loaded from a local CSV (no network).

    Misses are values, not errors; they are counted for the ingest report.
    """

    def __init__(self, ranks: dict[str, int]) -> None:
        self.ranks = ranks
        self.misses = 0

    @classmethod
    def from_csv(cls, path: Path) -> "RankTable":
        ranks: dict[str, int] = {}
        with Path(path).open(newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            if not reader.fieldnames or {"institution", "rank"} - set(reader.fieldnames):
                raise DataError(f"rank table {path} must have columns institution,rank")
            for i, rec in enumerate(reader):
                try:
                    ranks[rec["institution"]] = int(rec["rank"])
                except (TypeError, ValueError) as exc:
                    raise DataError(f"rank table row {i}: bad rank {rec.get('rank')!r}") from exc
        return cls(ranks)

    def lookup(self, institution: str) -> int | None:
        rank = self.ranks.get(institution)
        if rank is None:
            self.misses += 1
        return rank


def lookup_affiliation_rank(institution: str, rank_table: RankTable) -> int | None:
    """Exact-name match into the rank table; misses return None."""
    return rank_table.lookup(institution)


def best_rank(affiliations: list[str], rank_table: RankTable | None) -> int | None:
    """Best (lowest) rank among an author's affiliations, None if all miss."""
    if rank_table is None:
        return None
    ranks = [r for r in (rank_table.lookup(a) for a in affiliations) if r is not None]
    return min(ranks) if ranks else None


@dataclass
class IngestReport:
    authors_seen: int = 0
    authors_ingested: int = 0
    authors_skipped_no_papers: int = 0
    papers_seen: int = 0
    reference_count: int = 0
    validation_count: int = 0
    papers_dropped_out_of_window: int = 0
    papers_dropped_missing_year: int = 0
    classifier_rejects: int = 0
    rank_misses: int = 0

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def _iter_jsonl(lines: Iterable[str]) -> Iterator[tuple[int, dict]]:
    for i, line in enumerate(lines):
        line = line.strip()
        if not line:
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise DataError(f"record {i}: invalid JSON ({exc})") from exc
        if not isinstance(rec, dict):
            raise DataError(f"record {i}: expected a JSON object")
        yield i, rec


def ingest_authors(
    source: Iterable[str],
    topic_summarizer: Callable[[list[str]], list[str]] | None = None,
    ethnicity_classifier: Callable[[str], str] | None = None,
    rank_table: RankTable | None = None,
    window: tuple[int, int] = DEFAULT_REFERENCE_WINDOW,
    report: IngestReport | None = None,
) -> dict[str, AuthorRecord]:
    """Build anonymized author profiles from a raw JSONL record stream."""
    summarize = topic_summarizer or FrequentKeywordSummarizer()
    classify = ethnicity_classifier or HashEthnicityClassifier()
    report = report if report is not None else IngestReport()
    lo, hi = window

    authors: dict[str, AuthorRecord] = {}
    next_label = 1
    for i, rec in _iter_jsonl(source):
        report.authors_seen += 1
        author_id = rec.get("id")
        name = rec.get("name")
        raw_papers = rec.get("papers")
        if not author_id or not name or not isinstance(raw_papers, list):
            raise DataError(f"author record {i}: needs id, name, and a papers list")
        if author_id in authors:
            raise DataError(f"author record {i}: duplicate id {author_id}")

        in_window = []
        for p in raw_papers:
            year = p.get("year")
            if isinstance(year, int) and lo <= year <= hi:
                in_window.append(p)
        discipline_votes = Counter()
        for p in in_window:
            label = normalize_discipline(str(p.get("discipline", "")))
            if label:
                discipline_votes[label] += 1
        if not in_window or not discipline_votes:
            report.authors_skipped_no_papers += 1
            logger.warning("author %s: no usable papers in window %s-%s, skipped",
                           author_id, lo, hi)
            continue

        top = max(discipline_votes.values())
        discipline = min(d for d, c in discipline_votes.items() if c == top)
        citations = sum(int(p.get("n_citation", 0)) for p in in_window)
        coauthors = {a for p in in_window for a in p.get("author_ids", [])}
        coauthors.discard(author_id)
        keywords = [kw for p in in_window for kw in p.get("keywords", [])]
        affiliations = [str(a) for a in rec.get("affiliations", [])]

        authors[author_id] = AuthorRecord(
            author_id=str(author_id),
            display_name=f"Scientist {next_label}",
            ethnicity=classify(str(name)),
            affiliations=affiliations,
            affiliation_rank=best_rank(affiliations, rank_table),
            citation_count=citations,
            coauthor_ids=coauthors,
            discipline=discipline,
            research_topics=summarize(keywords),
        )
        next_label += 1

    report.authors_ingested = len(authors)
    if rank_table is not None:
        report.rank_misses = rank_table.misses
    return authors


def ingest_papers(
    source: Iterable[str],
    classifier: Callable[[dict], str] | None = None,
    window: tuple[int, int] = DEFAULT_REFERENCE_WINDOW,
    report: IngestReport | None = None,
) -> CorpusSplit:
    """Split a raw paper stream into reference and validation databases."""
    classify = classifier or DefaultDisciplineClassifier()
    report = report if report is not None else IngestReport()
    lo, hi = window
    val_lo, val_hi = VALIDATION_WINDOW

    split = CorpusSplit()
    for i, rec in _iter_jsonl(source):
        report.papers_seen += 1
        paper_id = rec.get("id")
        title = rec.get("title")
        if not paper_id or not title:
            raise DataError(f"paper record {i}: needs id and title")
        year = rec.get("year")
        if not isinstance(year, int):
            report.papers_dropped_missing_year += 1
            continue
        if not (lo <= year <= hi or val_lo <= year <= val_hi):
            report.papers_dropped_out_of_window += 1
            continue

        label = normalize_discipline(classify(rec))
        if label is None:
            report.classifier_rejects += 1
            logger.warning("paper %s: classifier label rejected, record dropped", paper_id)
            continue

        paper = PaperRecord(
            paper_id=str(paper_id),
            title=str(title),
            abstract=str(rec.get("abstract", "")),
            year=SEED_YEAR if lo <= year <= hi else year,
            citation_count=int(rec.get("n_citation", 0)),
            author_ids=[str(a) for a in rec.get("author_ids", [])],
            cited_paper_ids=None,
            discipline=label,
        )
        if lo <= year <= hi:
            split.add_reference(paper)
            report.reference_count += 1
        else:
            split.add_validation(paper)
            report.validation_count += 1
    return split


@dataclass
class Corpus:
    """Everything the simulator knows after ingestion.

    Immutable after load apart from accepted-paper insertion; citation
    counters change only through the index module's ledger.
    """

    authors: dict[str, AuthorRecord]
    split: CorpusSplit
    report: IngestReport = field(default_factory=IngestReport)
    team_rate: float | None = None
    team_rate_r_squared: float | None = None

    @property
    def reference_db(self) -> dict[str, PaperRecord]:
        return self.split.reference_db

    @property
    def validation_db(self) -> dict[str, PaperRecord]:
        return self.split.validation_db

    def add_accepted(self, paper: PaperRecord) -> None:
        self.split.add_reference(paper)

    def team_size_histogram(self) -> dict[int, int]:
        hist: Counter = Counter()
        for paper in self.reference_db.values():
            if paper.is_seed and paper.author_ids:
                hist[len(paper.author_ids)] += 1
        return dict(hist)

    def fit_team_rate(self) -> None:
        try:
            self.team_rate, self.team_rate_r_squared = fit_exponential(self.team_size_histogram())
        except Exception:
            self.team_rate, self.team_rate_r_squared = None, None

    def sample_author_ids(self, n: int, seed: int) -> list[str]:
        """Deterministic subsample of author ids for a society of size n."""
        ids = sorted(self.authors)
        if n > len(ids):
            raise DataError(f"requested {n} agents but corpus has {len(ids)} authors")
        rng = random.Random(stable_hash(seed, "agent-sample"))
        return sorted(rng.sample(ids, n))

    def save(self, out_dir: Path) -> None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        with (out_dir / "authors.jsonl").open("w", encoding="utf-8") as fh:
            for author_id in sorted(self.authors):
                fh.write(json.dumps(self.authors[author_id].to_dict(), sort_keys=True) + "\n")
        for name, db in (("reference.jsonl", self.reference_db),
                         ("validation.jsonl", self.validation_db)):
            with (out_dir / name).open("w", encoding="utf-8") as fh:
                for paper_id in sorted(db):
                    fh.write(json.dumps(db[paper_id].to_dict(), sort_keys=True) + "\n")
        meta = {
            "schema_version": SNAPSHOT_SCHEMA_VERSION,
            "report": self.report.to_dict(),
            "team_rate": self.team_rate,
            "team_rate_r_squared": self.team_rate_r_squared,
        }
        (out_dir / "meta.json").write_text(json.dumps(meta, indent=2), encoding="utf-8")

    @classmethod
    def load(cls, snapshot_dir: Path) -> "Corpus":
        snapshot_dir = Path(snapshot_dir)
        meta_path = snapshot_dir / "meta.json"
        if not meta_path.exists():
            raise DataError(f"no corpus snapshot at {snapshot_dir}")
        meta = json.loads(meta_path.read_text(encoding="utf-8"))
        if meta.get("schema_version") != SNAPSHOT_SCHEMA_VERSION:
            raise DataError(
                f"snapshot schema version {meta.get('schema_version')} "
                f"!= supported {SNAPSHOT_SCHEMA_VERSION}"
            )
        authors: dict[str, AuthorRecord] = {}
        with (snapshot_dir / "authors.jsonl").open(encoding="utf-8") as fh:
            for _, rec in _iter_jsonl(fh):
                author = AuthorRecord.from_dict(rec)
                authors[author.author_id] = author
        split = CorpusSplit()
        with (snapshot_dir / "reference.jsonl").open(encoding="utf-8") as fh:
            for _, rec in _iter_jsonl(fh):
                split.add_reference(PaperRecord.from_dict(rec))
        with (snapshot_dir / "validation.jsonl").open(encoding="utf-8") as fh:
            for _, rec in _iter_jsonl(fh):
                split.add_validation(PaperRecord.from_dict(rec))
        report = IngestReport(**meta.get("report", {}))
        return cls(authors=authors, split=split, report=report,
                   team_rate=meta.get("team_rate"),
                   team_rate_r_squared=meta.get("team_rate_r_squared"))


def ingest(
    authors_path: Path,
    papers_path: Path,
    rankings_path: Path | None = None,
    out_dir: Path | None = None,
    topic_summarizer: Callable[[list[str]], list[str]] | None = None,
    ethnicity_classifier: Callable[[str], str] | None = None,
    discipline_classifier: Callable[[dict], str] | None = None,
    window: tuple[int, int] = DEFAULT_REFERENCE_WINDOW,
) -> Corpus:
    """Full ingest pass over the three input files, optionally snapshotted."""
    report = IngestReport()
    rank_table = RankTable.from_csv(rankings_path) if rankings_path else None
    with Path(papers_path).open(encoding="utf-8") as fh:
        split = ingest_papers(fh, discipline_classifier, window=window, report=report)
    with Path(authors_path).open(encoding="utf-8") as fh:
        authors = ingest_authors(
            fh, topic_summarizer, ethnicity_classifier,
            rank_table=rank_table, window=window, report=report,
        )
    corpus = Corpus(authors=authors, split=split, report=report)
    corpus.fit_team_rate()
    if out_dir is not None:
        corpus.save(out_dir)
        (Path(out_dir) / "ingest_report.json").write_text(
            json.dumps(report.to_dict(), indent=2), encoding="utf-8"
        )
    return corpus
