"""Desk-scale construction and exhaustive verification of non-malleable extractors."""

__version__ = "0.1.0"
