"""Numerical laboratory for chordal Loewner flows and SLE regularity estimates."""

__version__ = "0.1.0"
