"""Numerical laboratory for Kapustin–Witten fields with Nahm pole boundary conditions."""

__version__ = "0.1.0"
