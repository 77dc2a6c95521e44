"""Numerical workbench for commuting-Hamiltonian ground-space connectivity instances."""

__version__ = "0.1.0"
