"""Reasoning in the logic of limited belief."""

__version__ = "0.1.0"
