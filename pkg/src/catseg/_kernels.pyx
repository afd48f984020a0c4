# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops. Semantics match ``catseg._pykernels`` exactly."""
from libc.math cimport fabs, sqrt


def jacobi_sweep(double[:, ::1] g, double[:, ::1] vt, double tol):
    """One cyclic sweep of one-sided Jacobi rotations.

    Rows of ``g`` are the columns of the matrix being orthogonalised; rows
    of ``vt`` accumulate the right singular vectors. Both are rotated in
    place. Returns the largest normalised inner product seen this sweep.
    """
    cdef Py_ssize_t n = g.shape[0], m = g.shape[1], nv = vt.shape[1]
    cdef Py_ssize_t i, j, k
    cdef double alpha, beta, gamma, ratio, zeta, t, c, s, x, y
    cdef double worst = 0.0
    for i in range(n - 1):
        for j in range(i + 1, n):
            alpha = 0.0
            beta = 0.0
            gamma = 0.0
            for k in range(m):
                alpha += g[i, k] * g[i, k]
                beta += g[j, k] * g[j, k]
                gamma += g[i, k] * g[j, k]
            if alpha == 0.0 or beta == 0.0 or gamma == 0.0:
                continue
            ratio = fabs(gamma) / sqrt(alpha * beta)
            if ratio > worst:
                worst = ratio
            if ratio <= tol:
                continue
            zeta = (beta - alpha) / (2.0 * gamma)
            if zeta >= 0.0:
                t = 1.0 / (zeta + sqrt(1.0 + zeta * zeta))
            else:
                t = -1.0 / (-zeta + sqrt(1.0 + zeta * zeta))
            c = 1.0 / sqrt(1.0 + t * t)
            s = c * t
            for k in range(m):
                x = g[i, k]
                y = g[j, k]
                g[i, k] = c * x - s * y
                g[j, k] = s * x + c * y
            for k in range(nv):
                x = vt[i, k]
                y = vt[j, k]
                vt[i, k] = c * x - s * y
                vt[j, k] = s * x + c * y
    return worst


def pk_disagreements(const long long[::1] ref_seg, const long long[::1] hyp_seg, Py_ssize_t k):
    """Count windows ``i`` in ``[0, n - k)`` whose same-segment verdicts differ."""
    cdef Py_ssize_t n = ref_seg.shape[0], i
    cdef long long count = 0
    cdef bint same_ref, same_hyp
    for i in range(n - k):
        same_ref = ref_seg[i] == ref_seg[i + k]
        same_hyp = hyp_seg[i] == hyp_seg[i + k]
        if same_ref != same_hyp:
            count += 1
    return count


def window_average(const double[:, ::1] probs, const long long[::1] starts,
                   const long long[::1] lengths, Py_ssize_t n):
    """Average per-window sentence probabilities onto document positions.

    ``probs[w, j]`` is the prediction for sentence ``starts[w] + j``; only
    the first ``lengths[w]`` entries of a window are real.
    Returns (mean, count) arrays of length ``n``.
    """
    import numpy as np
    total_arr = np.zeros(n, dtype=np.float64)
    count_arr = np.zeros(n, dtype=np.int64)
    cdef double[::1] total = total_arr
    cdef long long[::1] count = count_arr
    cdef Py_ssize_t w, j, pos
    for w in range(probs.shape[0]):
        for j in range(lengths[w]):
            pos = starts[w] + j
            total[pos] += probs[w, j]
            count[pos] += 1
    for pos in range(n):
        if count[pos] > 0:
            total[pos] /= count[pos]
    return total_arr, count_arr
