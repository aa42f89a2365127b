"""Symbolic 2-spinor calculus and a numerical laboratory for the massive
spin-3/2 (Rarita-Schwinger) field system."""

__version__ = "0.1.0"
