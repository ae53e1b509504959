"""Finite-volume shallow water solvers built on an advection-pressure flux split."""

__version__ = "0.1.0"
