"""Laminar (normal) coordinate systems between nested triangulated surfaces."""

__version__ = "0.1.0"
