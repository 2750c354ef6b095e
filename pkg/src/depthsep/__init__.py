"""Numerical laboratory for a radial depth-separation construction."""

__version__ = "0.1.0"
