"""Data-driven sparse polynomial chaos surrogates for stochastic economic dispatch."""

__version__ = "0.1.0"
