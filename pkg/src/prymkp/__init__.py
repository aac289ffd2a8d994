"""Exact computations for the multicomponent KP hierarchy and Prym data."""

__version__ = "0.1.0"
