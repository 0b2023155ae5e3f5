"""Relativistic scattering, resonances, bound states and wave packets for a 1D Dirac double barrier."""

__version__ = "0.1.0"
