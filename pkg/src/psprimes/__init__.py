"""Consecutive primes in Piatetski-Shapiro sequences: sieving, exact membership,
singular series and the gap model."""

__version__ = "0.1.0"
