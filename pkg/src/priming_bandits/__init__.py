"""Stochastic bandits with priming (wear-in / wear-out) reward censoring."""

__version__ = "0.1.0"
