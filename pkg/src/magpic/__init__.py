"""Asymptotic-preserving stochastic particle-in-cell methods for
strongly magnetized collisional plasmas in 2D+2V."""

__version__ = "0.1.0"
