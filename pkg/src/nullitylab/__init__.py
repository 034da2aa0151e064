"""Numerical verification of submanifold geometry with relative nullity."""

__version__ = "0.1.0"
