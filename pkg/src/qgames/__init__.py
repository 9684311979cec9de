"""Mermin-Peres style pseudo-telepathy games on a noisy state-vector simulator."""

__version__ = "0.1.0"
