"""Euler-Lagrange derivation and second-variation classification for
variational problems with higher derivatives of vector-valued functions."""

__version__ = "0.1.0"
