"""Simulation library for entity-resolution limits under microclustering."""

__version__ = "0.1.0"
