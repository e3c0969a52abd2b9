"""Numerical laboratory for laser-driven Dirac materials: replica Hamiltonians, bulk
invariants, interface spectral flow, truncated evolutions and high-frequency averaging."""

__version__ = "0.1.0"
