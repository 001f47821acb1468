"""Deterministic fixture builders shared by tests and the golden generator."""

from __future__ import annotations

from pathlib import Path

from scisoc.backend import MockBackend
from scisoc.config import SimulationConfig
from scisoc.corpus import ingest
from scisoc.records import AuthorRecord, PaperRecord
from scisoc.society import Society
from scisoc.synth import make_synthetic_dump

ETHNICITY_FIXTURE_NAMES = [
    "Ada Lovelace", "Alan Turing", "Emmy Noether", "Srinivasa Ramanujan",
    "Katherine Johnson", "Liu Hui", "Sofia Kovalevskaya", "Omar Khayyam",
]

TEN_PAPER_TITLES = [
    ("px00", "Spectral clustering of citation graphs", "We partition citation graphs."),
    ("px01", "Soil carbon response to warming", "Warming alters soil carbon."),
    ("px02", "Market reactions to policy shocks", "Prices respond to policy."),
    ("px03", "Protein binding site prediction", "We predict binding sites."),
    ("px04", "Urban heat island dynamics", "Cities trap heat."),
    ("px05", "Quantum error mitigation at scale", "Noise limits quantum devices."),
    ("px06", "Attention shifts in reading", "Eye movements track attention."),
    ("px07", "Alloy fatigue under cyclic load", "Metals weaken under cycles."),
    ("px08", "Voting models with social ties", "Networks shape votes."),
    ("px09", "Language change in online media", "Usage drifts online."),
]


def ten_paper_reference_db() -> dict[str, PaperRecord]:
    return {
        pid: PaperRecord(
            paper_id=pid, title=title, abstract=abstract, year=-1,
            citation_count=5 * i, author_ids=[f"a{i}"], discipline="Physics",
        )
        for i, (pid, title, abstract) in enumerate(TEN_PAPER_TITLES)
    }


def twenty_agent_society(seed: int = 13) -> Society:
    """Hand-built 20-agent pool with overlapping topics and co-author links."""
    topics = ["waves", "graphs", "cells", "markets", "soil", "lasers"]
    authors = {}
    for i in range(20):
        aid = f"m{i:02d}"
        authors[aid] = AuthorRecord(
            author_id=aid,
            display_name=f"Scientist {i + 1}",
            ethnicity="British" if i % 3 == 0 else "Nordic",
            affiliations=[f"Institute {i % 4}"],
            affiliation_rank=(i % 4) * 10 + 1,
            citation_count=10 * i,
            coauthor_ids={f"m{(i + 1) % 20:02d}", f"m{(i + 5) % 20:02d}"},
            discipline="Physics" if i % 2 == 0 else "Biology",
            research_topics=[topics[i % len(topics)], topics[(i + 2) % len(topics)]],
        )
    return Society(authors, seed=seed)


def golden_run_setup(tmp: Path):
    """Corpus and config for the frozen small-run golden (several teams)."""
    paths = make_synthetic_dump(tmp / "dump", n_authors=24, n_papers=90, seed=19)
    corpus = ingest(paths["authors"], paths["papers"], paths["rankings"])
    config = SimulationConfig(
        n_agents=18, epochs=12, seed=21, team_formation_prob=0.25,
        deterministic=True, out_dir=str(tmp / "golden_run"),
    )
    return corpus, config


def golden_backend() -> MockBackend:
    return MockBackend(seed=11, dim=16)
