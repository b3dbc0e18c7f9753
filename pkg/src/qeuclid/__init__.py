"""Exact and numeric machinery for the q-deformed Euclidean differential calculus."""

__version__ = "0.1.0"
