# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loop for the dual coordinate descent linear SVM solver."""


def dcd_epoch(const double[:, ::1] X, const double[::1] y, double[::1] alpha,
              double[::1] w, double bias, double C, const double[::1] qdiag,
              const long[::1] order):
    """Run one coordinate-descent pass over ``order``.

    Updates ``alpha`` and ``w`` in place; the bias is carried as an implicit
    constant-one feature (qdiag must already include its +1 contribution).
    Returns ``(bias, max_violation)`` where ``max_violation`` is the largest
    absolute projected gradient seen during the pass.
    """
    cdef Py_ssize_t n = order.shape[0]
    cdef Py_ssize_t d = X.shape[1]
    cdef Py_ssize_t k, i, j
    cdef double G, PG, a_old, a_new, step, yi, score
    cdef double maxpg = 0.0

    for k in range(n):
        i = order[k]
        yi = y[i]
        score = bias
        for j in range(d):
            score += X[i, j] * w[j]
        G = yi * score - 1.0

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
            a_new = a_old - G / qdiag[i]
            if a_new < 0.0:
                a_new = 0.0
            elif a_new > C:
                a_new = C
            if a_new != a_old:
                alpha[i] = a_new
                step = (a_new - a_old) * yi
                for j in range(d):
                    w[j] += step * X[i, j]
                bias += step

    return bias, maxpg
