"""Variance asymptotics of random-wave polyspectra and the random-walk
densities that govern their constants, with Monte Carlo oracles."""

__version__ = "0.1.0"
