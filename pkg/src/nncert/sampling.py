"""Deterministic low-discrepancy samples of boxes and balls."""
import numpy as np
from scipy.stats import qmc


def box_samples(lower, upper, count, seed=0):
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    if count <= 0:
        return np.zeros((0, lower.size))
    u = qmc.Halton(d=lower.size, scramble=True, seed=seed).random(count)
    return lower + u * (upper - lower)


def ball_samples(center, radius, count, seed=0):
    """``count`` points strictly inside the Euclidean ball, by rejection from a Halton cube."""
    center = np.asarray(center, dtype=float)
    n = center.size
    if count <= 0:
        return np.zeros((0, n))
    gen = qmc.Halton(d=n, scramble=True, seed=seed)
    out = []
    have = 0
    while have < count:
        u = 2.0 * gen.random(max(64, 2 * count)) - 1.0
        u = u[np.sum(u * u, axis=1) < 1.0]
        out.append(u)
        have += len(u)
    u = np.concatenate(out)[:count]
    return center + radius * u
