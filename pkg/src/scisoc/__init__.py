"""scisoc: a discrete-epoch multi-agent simulator of a scientific research
society, from scholarly-dump ingestion through team collaboration, peer
review, citation dynamics, and diversity-vs-impact analysis."""

__version__ = "0.1.0"

from .config import SimulationConfig
from .corpus import Corpus, ingest
from .sim import resume, run_simulation

__all__ = ["Corpus", "SimulationConfig", "ingest", "resume", "run_simulation", "__version__"]
