"""Magnitude-guided Go-Explore for black-box optimization."""

__version__ = "0.1.0"
