"""Numerical verification of null-geodesic spaces, Engel prolongations and lens-space identifications."""
from .report import CheckReport

__all__ = ["CheckReport"]
__version__ = "0.1.0"
