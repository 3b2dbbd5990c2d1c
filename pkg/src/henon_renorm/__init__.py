"""Numerical Hénon-like renormalization: domains, charts, regularity, distortion."""

__version__ = "0.1.0"
