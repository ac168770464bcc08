"""Spectral data and rough-path numerics for pinned path groups over SU(n)."""

__version__ = "0.1.0"
