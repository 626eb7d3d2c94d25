"""Dense linear-system oracle for the light-layer smoothing operation.

Builds the quadratic objective's normal equations explicitly and solves them
with a direct factorization, independent of the production code's
cosine-transform route.
"""

import numpy as np

from ldenhancer.light_label import fit_plane


def mirrored_second_difference(n):
    """1-D second-difference matrix under half-sample mirror extension."""
    d = np.zeros((n, n))
    for i in range(n):
        if i == 0:
            d[0, 0], d[0, 1] = -1.0, 1.0
        elif i == n - 1:
            d[i, i - 1], d[i, i] = 1.0, -1.0
        else:
            d[i, i - 1], d[i, i], d[i, i + 1] = 1.0, -2.0, 1.0
    return d


def dense_solve(channel, lam):
    """Direct solve of the smoothing objective on one 2-D channel."""
    h, w = channel.shape
    dy = mirrored_second_difference(h)
    dx = mirrored_second_difference(w)
    lap = np.kron(dy, np.eye(w)) + np.kron(np.eye(h), dx)
    plane = fit_plane(channel)
    residual = (channel - plane).ravel()
    system = np.eye(h * w) + lam * (lap.T @ lap)
    return plane + np.linalg.solve(system, residual).reshape(h, w)
