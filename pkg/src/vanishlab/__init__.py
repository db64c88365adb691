"""Numerical laboratory for vanishing of Green functions of -Delta + V in three dimensions."""

__version__ = "0.1.0"
