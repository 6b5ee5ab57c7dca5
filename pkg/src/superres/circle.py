"""Arithmetic and distances on the unit circle [0, 1).

Positions live on the circle: every function reduces its inputs modulo 1,
so optimization iterates that step outside [0, 1) are handled transparently.
All functions are pure and accept scalars or numpy arrays.
"""

from __future__ import annotations

import numpy as np


def wrap(t):
    """Reduce a position (or array of positions) modulo 1 into [0, 1)."""
    return np.mod(t, 1.0)


def wrap_sub(a, b):
    """Subtraction modulo one: (a - b) mod 1, in [0, 1)."""
    return np.mod(np.asarray(a, dtype=float) - b, 1.0)


def wrap_signed(a, b):
    """Signed displacement from b to a, wrapped into (-1/2, 1/2].

    The antipodal case maps to +1/2, which breaks projection ties toward
    the positive side.
    """
    return 0.5 - np.mod(0.5 - (np.asarray(a, dtype=float) - b), 1.0)


def wrap_dist(a, b):
    """Wraparound distance min(a - b mod 1, b - a mod 1), in [0, 1/2]."""
    d = np.mod(np.asarray(a, dtype=float) - b, 1.0)
    return np.minimum(d, 1.0 - d)


def hausdorff(a, b) -> float:
    """Hausdorff distance between two finite point sets on the circle."""
    a = np.atleast_1d(np.asarray(a, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    if a.size == 0 or b.size == 0:
        raise ValueError("empty point set")
    d = wrap_dist(a[:, None], b[None, :])
    return float(max(d.min(axis=1).max(), d.min(axis=0).max()))


def separation(tau) -> float:
    """Minimum pairwise wraparound distance of a position vector."""
    tau = np.atleast_1d(np.asarray(tau, dtype=float))
    if tau.size < 2:
        raise ValueError("separation undefined")
    d = wrap_dist(tau[:, None], tau[None, :])
    iu = np.triu_indices(tau.size, k=1)
    return float(d[iu].min())


def dynamic_range(alpha) -> float:
    """Ratio of largest to smallest amplitude magnitude, >= 1."""
    alpha = np.atleast_1d(np.asarray(alpha, dtype=float))
    mags = np.abs(alpha)
    if np.any(mags == 0.0):
        raise ValueError("zero amplitude")
    return float(mags.max() / mags.min())
