"""Gauss-Legendre rules on [0, 1]."""
from functools import lru_cache

import numpy as np


@lru_cache(maxsize=None)
def gauss_legendre_01(order):
    """Nodes and weights of the ``order``-point rule mapped to [0, 1].

    Exact for polynomials of degree <= 2*order - 1.
    """
    if order < 1:
        raise ValueError("quadrature order must be positive")
    x, w = np.polynomial.legendre.leggauss(order)
    s = 0.5 * (x + 1.0)
    w = 0.5 * w
    s.setflags(write=False)
    w.setflags(write=False)
    return s, w
