# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels.  Semantics mirror ``_kernels_py`` exactly."""
import numpy as np
cimport numpy as cnp
from libc.math cimport fabs

cnp.import_array()


def pbd_dp(probs):
    cdef const double[::1] p = np.ascontiguousarray(probs, dtype=np.float64)
    cdef Py_ssize_t n = p.shape[0]
    out = np.zeros(n + 1, dtype=np.float64)
    cdef double[::1] mass = out
    cdef Py_ssize_t i, j
    cdef double pi, qi
    mass[0] = 1.0
    for i in range(n):
        pi = p[i]
        qi = 1.0 - pi
        mass[i + 1] = mass[i] * pi
        for j in range(i, 0, -1):
            mass[j] = mass[j] * qi + mass[j - 1] * pi
        mass[0] = mass[0] * qi
    return out


def delta_statistics(pmfs, lo, hi, fhat):
    cdef const double[:, ::1] P = np.ascontiguousarray(pmfs, dtype=np.float64)
    cdef const long long[::1] L = np.ascontiguousarray(lo, dtype=np.int64)
    cdef const long long[::1] H = np.ascontiguousarray(hi, dtype=np.int64)
    cdef const double[::1] f = np.ascontiguousarray(fhat, dtype=np.float64)
    cdef Py_ssize_t N = P.shape[0]
    out = np.empty(N, dtype=np.float64)
    cdef double[::1] res = out
    cdef Py_ssize_t r, z
    cdef double gap, covered
    with nogil:
        for r in range(N):
            gap = 0.0
            covered = 0.0
            for z in range(L[r], H[r] + 1):
                gap = gap + fabs(P[r, z] - f[z])
                covered = covered + f[z]
            res[r] = 0.5 * (gap + 1.0 - covered)
    return out


def max_cdf_gaps(cdfs, ref):
    cdef const double[:, ::1] C = np.ascontiguousarray(cdfs, dtype=np.float64)
    cdef const double[::1] g = np.ascontiguousarray(ref, dtype=np.float64)
    cdef Py_ssize_t N = C.shape[0], D = C.shape[1]
    out = np.empty(N, dtype=np.float64)
    cdef double[::1] res = out
    cdef Py_ssize_t r, z
    cdef double best, d
    with nogil:
        for r in range(N):
            best = 0.0
            for z in range(D):
                d = fabs(C[r, z] - g[z])
                if d > best:
                    best = d
            res[r] = best
    return out


def tv_to_ref(pmfs, ref):
    cdef const double[:, ::1] P = np.ascontiguousarray(pmfs, dtype=np.float64)
    cdef const double[::1] g = np.ascontiguousarray(ref, dtype=np.float64)
    cdef Py_ssize_t N = P.shape[0], D = P.shape[1]
    out = np.empty(N, dtype=np.float64)
    cdef double[::1] res = out
    cdef Py_ssize_t r, z
    cdef double s
    with nogil:
        for r in range(N):
            s = 0.0
            for z in range(D):
                s = s + fabs(P[r, z] - g[z])
            res[r] = 0.5 * s
    return out


cdef inline void _orient(const double[:, ::1] P, Py_ssize_t r,
                         const double[::1] opp, Py_ssize_t D,
                         bint* any_diff, bint* row_first) noexcept nogil:
    cdef Py_ssize_t z
    any_diff[0] = False
    row_first[0] = True
    for z in range(D):
        if P[r, z] != opp[z]:
            any_diff[0] = True
            row_first[0] = P[r, z] > opp[z]
            return


def competitions_vs(pmfs, opp, counts, long long m, double delta):
    cdef const double[:, ::1] P = np.ascontiguousarray(pmfs, dtype=np.float64)
    cdef const double[::1] o = np.ascontiguousarray(opp, dtype=np.float64)
    cdef const double[::1] c = np.ascontiguousarray(counts, dtype=np.float64)
    cdef Py_ssize_t N = P.shape[0], D = P.shape[1]
    out = np.zeros(N, dtype=np.int8)
    cdef signed char[::1] res = out
    cdef Py_ssize_t r, z
    cdef bint any_diff, row_first
    cdef double a, b, p1, q1, t
    cdef signed char verdict
    with nogil:
        for r in range(N):
            _orient(P, r, o, D, &any_diff, &row_first)
            if not any_diff:
                res[r] = 0
                continue
            p1 = 0.0
            q1 = 0.0
            t = 0.0
            for z in range(D):
                if row_first:
                    a = P[r, z]
                    b = o[z]
                else:
                    a = o[z]
                    b = P[r, z]
                if a >= b:
                    p1 = p1 + a
                    q1 = q1 + b
                    t = t + c[z]
            t = t / m
            verdict = 0
            if p1 - q1 > 5 * delta:
                if t > p1 - 1.5 * delta:
                    verdict = 1
                elif t < q1 + 1.5 * delta:
                    verdict = -1
            res[r] = verdict if row_first else -verdict
    return out


def competition_detail(a, b, counts, long long m):
    A = np.ascontiguousarray(a, dtype=np.float64).reshape(1, -1)
    cdef const double[:, ::1] P = A
    cdef const double[::1] o = np.ascontiguousarray(b, dtype=np.float64)
    cdef const double[::1] c = np.ascontiguousarray(counts, dtype=np.float64)
    cdef Py_ssize_t D = P.shape[1], z
    cdef bint any_diff, a_first
    cdef double x, y, p1 = 0.0, q1 = 0.0, t = 0.0
    _orient(P, 0, o, D, &any_diff, &a_first)
    for z in range(D):
        if a_first:
            x = P[0, z]
            y = o[z]
        else:
            x = o[z]
            y = P[0, z]
        if x >= y:
            p1 = p1 + x
            q1 = q1 + y
            t = t + c[z]
    return bool(a_first), p1, q1, t / m
