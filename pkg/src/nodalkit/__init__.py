"""Nodal structure of symmetric matrices viewed as signed graphs."""

__version__ = "0.1.0"
