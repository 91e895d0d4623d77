"""Exact, finite-depth laboratory for blind randomness tests."""

__version__ = "0.1.0"
