"""Constructive polynomial approximation in weighted spaces of smooth functions."""

__version__ = "0.1.0"
