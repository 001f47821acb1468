"""Synthetic scholarly-dump generator for tests, demos, and experiments.

Produces authors.jsonl / papers.jsonl / rankings.csv files with the same
shape as a real graph dump: authors with publication histories inside the
reference window, papers spread over reference and validation years, team
sizes drawn 1 + floor(Exp(rate)), and institutions with plausible rankings.
Fully deterministic for a given seed.
"""

from __future__ import annotations

import json
import random
from pathlib import Path

from .backend import stable_hash
from .disciplines import DISCIPLINES

_TOPIC_BANK = (
    "diffusion processes", "network resilience", "catalytic surfaces",
    "market microstructure", "protein folding", "sediment transport",
    "attention dynamics", "voting behavior", "alloy fatigue",
    "spectral methods", "carbon cycling", "urban mobility",
    "immune signaling", "galaxy formation", "language change",
    "supply chains", "soil microbiomes", "quantum sensing",
)

_TITLE_WORDS = (
    "adaptive", "structural", "empirical", "multiscale", "latent",
    "robust", "dynamic", "comparative", "spatial", "causal",
    "patterns", "mechanisms", "models", "evidence", "analysis",
    "networks", "systems", "responses", "signals", "transitions",
)


def make_synthetic_dump(
    out_dir: Path,
    n_authors: int = 60,
    n_papers: int = 200,
    seed: int = 0,
    n_institutions: int = 20,
    team_rate: float = 1.0,
    validation_fraction: float = 0.2,
) -> dict[str, Path]:
    """Write the three ingest inputs into ``out_dir`` and return their paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = random.Random(stable_hash(seed, "synth"))

    institutions = [f"Institute {i:02d}" for i in range(n_institutions)]
    rankings_path = out_dir / "rankings.csv"
    with rankings_path.open("w", encoding="utf-8") as fh:
        fh.write("institution,rank\n")
        # Leave two institutions unranked so rank-miss paths stay exercised.
        for i, inst in enumerate(institutions[: max(1, n_institutions - 2)]):
            fh.write(f"{inst},{i + 1}\n")

    author_ids = [f"a{i:04d}" for i in range(n_authors)]
    author_home = {
        aid: {
            "name": f"Author Q. {aid.upper()}",
            "affiliations": [rng.choice(institutions)],
            "discipline": rng.choice(DISCIPLINES),
            "topics": rng.sample(_TOPIC_BANK, 3),
        }
        for aid in author_ids
    }

    papers = []
    for i in range(n_papers):
        pid = f"p{i:05d}"
        if rng.random() < validation_fraction:
            year = rng.choice((2010, 2011))
        else:
            year = rng.randint(2002, 2009)
        size = 1 + int(rng.expovariate(team_rate))
        team = rng.sample(author_ids, min(size, n_authors))
        lead = author_home[team[0]]
        title = " ".join(rng.sample(_TITLE_WORDS, 5)).capitalize()
        keywords = rng.sample(lead["topics"], 2) + [rng.choice(_TOPIC_BANK)]
        papers.append({
            "id": pid,
            "title": title,
            "abstract": f"We study {keywords[0]} and {keywords[1]} in {lead['discipline']}.",
            "year": year,
            "n_citation": max(0, int(rng.gauss(25, 20))),
            "author_ids": list(team),
            "keywords": keywords,
            "discipline": lead["discipline"],
        })

    papers_path = out_dir / "papers.jsonl"
    with papers_path.open("w", encoding="utf-8") as fh:
        for paper in papers:
            fh.write(json.dumps(paper, sort_keys=True) + "\n")

    by_author: dict[str, list[dict]] = {aid: [] for aid in author_ids}
    for paper in papers:
        for aid in paper["author_ids"]:
            by_author[aid].append({
                "id": paper["id"],
                "year": paper["year"],
                "discipline": paper["discipline"],
                "n_citation": paper["n_citation"],
                "keywords": paper["keywords"],
                "author_ids": paper["author_ids"],
            })

    authors_path = out_dir / "authors.jsonl"
    with authors_path.open("w", encoding="utf-8") as fh:
        for aid in author_ids:
            home = author_home[aid]
            fh.write(json.dumps({
                "id": aid,
                "name": home["name"],
                "affiliations": home["affiliations"],
                "papers": by_author[aid],
            }, sort_keys=True) + "\n")

    return {"authors": authors_path, "papers": papers_path, "rankings": rankings_path}
