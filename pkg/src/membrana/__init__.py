"""Finite-volume solvers for a three-species competition model with a membrane interface."""

__version__ = "0.1.0"
