"""Exception hierarchy shared across the simulator.

Exit-code mapping for the CLI lives in cli.py: config errors exit 2,
data errors 3, backend errors 4.
"""


class SciSocError(Exception):
    """Base class for all simulator errors."""


class ConfigError(SciSocError):
    """Invalid configuration value or malformed config file."""


class DataError(SciSocError):
    """Malformed input records, snapshot mismatches, corrupt checkpoints."""


class BackendError(SciSocError):
    """A chat/embed backend call failed."""


class RetrievalError(SciSocError):
    """Invalid retrieval query (zero norm, dimension mismatch)."""


class LedgerError(SciSocError):
    """Citation ledger asked to credit an unknown paper."""


class ReviewError(SciSocError):
    """Peer review could not be carried out (e.g. reviewer pool too small)."""


class MetricsError(SciSocError):
    """Metric computation failed (bad proportions, unresolvable author)."""


class ChannelError(SciSocError):
    """Inference channel misuse (submit after shutdown)."""
