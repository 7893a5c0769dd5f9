"""Numerical checks for Lorentzian comparison geometry."""

__version__ = "0.1.0"
