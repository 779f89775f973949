"""Clustered local projections for impulse responses that vary with observed drivers."""

__version__ = "0.1.0"
