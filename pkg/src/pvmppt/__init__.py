"""Pyranometer-driven neural-network MPPT toolkit."""

__version__ = "0.1.0"
