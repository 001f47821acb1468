from __future__ import annotations

import logging
from pathlib import Path

import pytest

from scisoc.backend import MockBackend
from scisoc.corpus import ingest
from scisoc.synth import make_synthetic_dump

logging.getLogger("scisoc").setLevel(logging.ERROR)

GOLDEN_DIR = Path(__file__).parent / "golden"


@pytest.fixture(scope="session")
def dump_paths(tmp_path_factory) -> dict[str, Path]:
    """The canonical small synthetic dump used across the suite."""
    out = tmp_path_factory.mktemp("dump")
    return make_synthetic_dump(out, n_authors=40, n_papers=120, seed=7)


@pytest.fixture()
def corpus(dump_paths):
    """A freshly ingested corpus (runs mutate corpora, so never share one)."""
    return ingest(dump_paths["authors"], dump_paths["papers"], dump_paths["rankings"])


@pytest.fixture(scope="session")
def corpus_factory(dump_paths):
    def make():
        return ingest(dump_paths["authors"], dump_paths["papers"], dump_paths["rankings"])
    return make


@pytest.fixture()
def mock_backend() -> MockBackend:
    return MockBackend(seed=11, dim=16)


@pytest.fixture(scope="session")
def golden_dir() -> Path:
    return GOLDEN_DIR
