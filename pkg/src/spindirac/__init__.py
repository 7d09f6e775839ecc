"""Numerical spin geometry of closed surfaces embedded in R^3."""

__version__ = "0.1.0"
