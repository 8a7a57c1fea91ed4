"""Simulation and design toolkit for two-photon high-dimensional cluster states."""

__version__ = "0.1.0"
