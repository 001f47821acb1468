"""Offline statistical-figure regeneration for simulator run outputs.

Consumes only the run's exported CSV/JSON files; every statistic shown is
read from those files rather than recomputed, so figures can never disagree
with the run that produced them."""

__version__ = "0.1.0"

from .figures import plot_correlation_panels, plot_team_size_hist

__all__ = ["plot_correlation_panels", "plot_team_size_hist", "__version__"]
