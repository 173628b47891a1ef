"""Ensemble text classification over a partitioned execution engine."""

__version__ = "0.1.0"
