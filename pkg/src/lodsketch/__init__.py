"""Paired multi-LoD architectural sketch datasets."""

__version__ = "0.1.0"
