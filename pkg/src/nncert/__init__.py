"""Constructive sums-of-squares nonnegativity certificates for smooth functions."""
