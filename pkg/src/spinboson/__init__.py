"""Spin-boson dynamics beyond the resonant approximation: HEOM, pseudo-modes and reaction coordinates."""

__version__ = "0.1.0"
