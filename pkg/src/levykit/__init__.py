"""Polar-form Lévy processes: exponents, densities, sampling and bound checks."""

__version__ = "0.1.0"
