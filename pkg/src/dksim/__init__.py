"""Pseudo-spectral Dean-Kawasaki simulation laboratory."""

__version__ = "0.1.0"
