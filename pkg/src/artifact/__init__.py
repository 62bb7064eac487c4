"""Diffraction of symmetric sequences, operadic modules and bar/cobar duality."""

__version__ = "0.1.0"
