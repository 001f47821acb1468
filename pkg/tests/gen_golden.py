"""Regenerate the frozen outputs under tests/golden/.

Run once after an intentional behavior change, inspect the diff, and commit:
    python3 tests/gen_golden.py
"""

from __future__ import annotations

import json
import shutil
import tempfile
from pathlib import Path

from scisoc.corpus import HashEthnicityClassifier
from scisoc.index import build_index
from scisoc.sim import run_simulation

from fixtures import (ETHNICITY_FIXTURE_NAMES, golden_backend,
                      golden_run_setup, ten_paper_reference_db,
                      twenty_agent_society)

GOLDEN = Path(__file__).parent / "golden"


def gen_ethnicity() -> None:
    classify = HashEthnicityClassifier()
    labels = {name: classify(name) for name in ETHNICITY_FIXTURE_NAMES}
    (GOLDEN / "ethnicity_labels.json").write_text(
        json.dumps(labels, indent=2, sort_keys=True), encoding="utf-8"
    )


def gen_index_vectors() -> None:
    index = build_index(ten_paper_reference_db(), golden_backend())
    vectors = {pid: [repr(x) for x in index.vector(pid)] for pid in index.paper_ids}
    (GOLDEN / "index_vectors.json").write_text(
        json.dumps(vectors, indent=1, sort_keys=True), encoding="utf-8"
    )


def gen_collaborators() -> None:
    society = twenty_agent_society()
    leader = society.agent("m03")
    team = society.select_collaborators(leader, size=5, epoch=0)
    (GOLDEN / "collaborators_20agent.json").write_text(
        json.dumps(team.member_ids, indent=2), encoding="utf-8"
    )


def gen_run() -> None:
    tmp = Path(tempfile.mkdtemp())
    try:
        corpus, config = golden_run_setup(tmp)
        run_simulation(config, corpus)
        out = Path(config.out_dir)
        shutil.copy(out / "actions.jsonl", GOLDEN / "actions_small_run.jsonl")
        shutil.copy(out / "metrics.csv", GOLDEN / "metrics_small_run.csv")
        shutil.copy(out / "reviews.jsonl", GOLDEN / "reviews_small_run.jsonl")
    finally:
        shutil.rmtree(tmp, ignore_errors=True)


if __name__ == "__main__":
    GOLDEN.mkdir(exist_ok=True)
    gen_ethnicity()
    gen_index_vectors()
    gen_collaborators()
    gen_run()
    print("golden files regenerated under", GOLDEN)
