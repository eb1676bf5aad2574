"""Numerical laboratory for Φ-entropies and the M/M/∞ queue."""

__version__ = "0.1.0"
