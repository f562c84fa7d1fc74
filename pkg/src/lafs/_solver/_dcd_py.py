"""Pure-python fallback for the dual coordinate descent inner loop.

Mirrors ``_dcd.pyx`` update for update; used when the compiled extension is
unavailable or when ``LAFS_PURE_SOLVER=1`` forces it.
"""

import numpy as np


def dcd_epoch(X, y, alpha, w, bias, C, qdiag, order):
    """One coordinate-descent pass over ``order``; see the compiled twin."""
    maxpg = 0.0
    for i in order:
        yi = y[i]
        xi = X[i]
        G = yi * (float(xi @ w) + bias) - 1.0

        a_old = alpha[i]
        if a_old <= 0.0:
            PG = G if G < 0.0 else 0.0
        elif a_old >= C:
            PG = G if G > 0.0 else 0.0
        else:
            PG = G

        if PG > maxpg:
            maxpg = PG
        elif -PG > maxpg:
            maxpg = -PG

        if PG != 0.0:
            a_new = min(max(a_old - G / qdiag[i], 0.0), C)
            if a_new != a_old:
                alpha[i] = a_new
                step = (a_new - a_old) * yi
                w += step * xi
                bias += step

    return bias, maxpg
