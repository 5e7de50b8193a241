# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels: cyclic complex Jacobi and the fused section reduction.

Call signatures and return values match ``tomoscope._pykernels``.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, log2, fabs

from tomoscope._pykernels import ConvergenceError

cnp.import_array()

cdef double CLAMP = 1e-14


cdef inline double _abs2(double complex z) nogil:
    return z.real * z.real + z.imag * z.imag


cdef int _sweep(double complex[:, ::1] a, double complex[:, ::1] v, Py_ssize_t n) nogil:
    cdef Py_ssize_t p, q, k
    cdef double r, app, aqq, theta, t, c, s
    cdef double complex apq, ph, gqp, gqq, xp, xq
    for p in range(n - 1):
        for q in range(p + 1, n):
            apq = a[p, q]
            r = sqrt(_abs2(apq))
            if r == 0.0:
                continue
            app = a[p, p].real
            aqq = a[q, q].real
            ph = (apq / r).conjugate()
            theta = (aqq - app) / (2.0 * r)
            if fabs(theta) > 1e150:
                t = 0.5 / fabs(theta)
            else:
                t = 1.0 / (fabs(theta) + sqrt(theta * theta + 1.0))
            if theta < 0.0:
                t = -t
            c = 1.0 / sqrt(1.0 + t * t)
            s = t * c
            gqp = -s * ph
            gqq = c * ph
            for k in range(n):
                xp = a[k, p]
                xq = a[k, q]
                a[k, p] = c * xp + gqp * xq
                a[k, q] = s * xp + gqq * xq
            for k in range(n):
                xp = a[p, k]
                xq = a[q, k]
                a[p, k] = c * xp + gqp.conjugate() * xq
                a[q, k] = s * xp + gqq.conjugate() * xq
            a[p, q] = 0.0
            a[q, p] = 0.0
            a[p, p] = a[p, p].real
            a[q, q] = a[q, q].real
            for k in range(n):
                xp = v[k, p]
                xq = v[k, q]
                v[k, p] = c * xp + gqp * xq
                v[k, q] = s * xp + gqq * xq
    return 0


cdef double _offdiag(double complex[:, ::1] a, Py_ssize_t n) nogil:
    cdef Py_ssize_t i, j
    cdef double acc = 0.0
    for i in range(n):
        for j in range(n):
            if i != j:
                acc += _abs2(a[i, j])
    return sqrt(acc)


def jacobi_eigh(a_in, double tol=1e-13, int max_sweeps=100):
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] arr = np.array(a_in, dtype=np.complex128, order="C", copy=True)
    cdef Py_ssize_t n = arr.shape[0]
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] varr = np.eye(n, dtype=np.complex128)
    cdef double complex[:, ::1] a = arr
    cdef double complex[:, ::1] v = varr
    cdef double scale = max(float(np.linalg.norm(arr)), np.finfo(float).tiny)
    cdef double off = 0.0
    cdef int sweep
    for sweep in range(max_sweeps + 1):
        with nogil:
            off = _offdiag(a, n)
        if off <= tol * scale:
            return np.real(np.diag(arr)).copy(), varr, sweep
        if sweep == max_sweeps:
            break
        with nogil:
            _sweep(a, v, n)
    raise ConvergenceError(f"Jacobi did not converge in {max_sweeps} sweeps (off={off:.3e})")


cdef inline double _nplogp(double p) nogil:
    if p > CLAMP:
        return -p * log2(p)
    return 0.0


def section_stats(w_in, double da, double db, xa_in, xb_in):
    cdef const double[:, ::1] w = np.ascontiguousarray(w_in, dtype=np.float64)
    cdef const double[::1] xa = np.ascontiguousarray(xa_in, dtype=np.float64)
    cdef const double[::1] xb = np.ascontiguousarray(xb_in, dtype=np.float64)
    cdef Py_ssize_t na = w.shape[0], nb = w.shape[1], i, j
    cdef cnp.ndarray[cnp.float64_t, ndim=1] wa_arr = np.zeros(na)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] wb_arr = np.zeros(nb)
    cdef double[::1] wa = wa_arr
    cdef double[::1] wb = wb_arr
    cdef double cell = da * db
    cdef double mass = 0.0, s_joint = 0.0, s_a = 0.0, s_b = 0.0
    cdef double eta_ab = 0.0, eta_a = 0.0, eta_b = 0.0, bhatt = 0.0
    cdef double mean_a = 0.0, mean_b = 0.0, var_a = 0.0, var_b = 0.0, cov = 0.0
    cdef double x, y, row
    with nogil:
        for i in range(na):
            for j in range(nb):
                x = w[i, j]
                wa[i] += x
                wb[j] += x
                mass += x
                s_joint += _nplogp(x)
                eta_ab += x * x
        for i in range(na):
            wa[i] *= db
            s_a += _nplogp(wa[i])
            eta_a += wa[i] * wa[i]
            mean_a += wa[i] * xa[i]
        for j in range(nb):
            wb[j] *= da
            s_b += _nplogp(wb[j])
            eta_b += wb[j] * wb[j]
            mean_b += wb[j] * xb[j]
        mean_a *= da
        mean_b *= db
        for i in range(na):
            x = xa[i] - mean_a
            var_a += wa[i] * x * x
            row = 0.0
            for j in range(nb):
                y = w[i, j]
                row += y * (xb[j] - mean_b)
                bhatt += sqrt(y * wa[i] * wb[j])
            cov += x * row
        for j in range(nb):
            y = xb[j] - mean_b
            var_b += wb[j] * y * y
    return (s_joint * cell, s_a * da, s_b * db, eta_ab * cell, eta_a * da, eta_b * db,
            bhatt * cell, mean_a, mean_b, var_a * da, var_b * db, cov * cell, mass * cell)
