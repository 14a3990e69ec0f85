"""Radial part of Haar measure on U(n+m) under conjugation by U(m): characteristic functions, spectral coordinates, densities, Monte Carlo checks."""

__version__ = "0.1.0"
