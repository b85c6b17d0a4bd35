# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled twin of ``_kernels_py``; same call signatures, same RNG contract."""

import numpy as np

cimport numpy as cnp
from libc.math cimport M_PI, exp, fabs, log, sin, sqrt, tan

cnp.import_array()

BACKEND = "cython"

cdef double TWO_PI = 2.0 * M_PI


def mh_sweep(
    double[:, ::1] thetas,
    double beta,
    double sigma,
    int start,
    double[:, ::1] noise,
    double[:, ::1] unif,
):
    cdef Py_ssize_t chains = thetas.shape[0]
    cdef Py_ssize_t n = thetas.shape[1]
    cdef Py_ssize_t attempts = noise.shape[0]
    cdef Py_ssize_t s, c, k, j
    cdef double prop, lo, hi, cur, ln_new, ln_old, dlog, snew, sold
    cdef long accepted = 0
    with nogil:
        for s in range(attempts):
            j = (start + s) % n
            for c in range(chains):
                cur = thetas[c, j]
                prop = cur + sigma * noise[s, c]
                lo = thetas[c, j - 1] if j > 0 else 0.0
                hi = thetas[c, j + 1] if j < n - 1 else TWO_PI
                if prop <= lo or prop >= hi:
                    continue
                ln_new = 0.0
                ln_old = 0.0
                for k in range(n):
                    if k == j:
                        continue
                    snew = fabs(2.0 * sin((prop - thetas[c, k]) / 2.0))
                    sold = fabs(2.0 * sin((cur - thetas[c, k]) / 2.0))
                    ln_new += log(snew)
                    ln_old += log(sold)
                dlog = beta * (ln_new - ln_old)
                if log(unif[s, c]) < dlog:
                    thetas[c, j] = prop
                    accepted += 1
    return int(accepted)


def cot_drift_sum(cnp.ndarray thetas_in):
    cdef cnp.ndarray[double, ndim=2] th = np.ascontiguousarray(thetas_in, dtype=np.float64)
    cdef Py_ssize_t R = th.shape[0]
    cdef Py_ssize_t n = th.shape[1]
    cdef cnp.ndarray[double, ndim=2] out = np.zeros((R, n), dtype=np.float64)
    cdef Py_ssize_t r, j, k
    cdef double c
    with nogil:
        for r in range(R):
            for j in range(n):
                for k in range(j + 1, n):
                    # cot is odd: each pair contributes with opposite signs
                    c = 1.0 / tan((th[r, j] - th[r, k]) / 2.0)
                    out[r, j] += c
                    out[r, k] -= c
    return out


def cdbm_propose(
    cnp.ndarray cur_in,
    cnp.ndarray dts_in,
    cnp.ndarray noise_in,
    double beta,
    double guard,
):
    cdef cnp.ndarray[double, ndim=2] cur = np.ascontiguousarray(cur_in, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] dts = np.ascontiguousarray(dts_in, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=2] noise = np.ascontiguousarray(noise_in, dtype=np.float64)
    cdef Py_ssize_t R = cur.shape[0]
    cdef Py_ssize_t n = cur.shape[1]
    cdef cnp.ndarray[double, ndim=2] prop = np.empty((R, n), dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] drift = np.empty(n, dtype=np.float64)
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] ok = np.ones(R, dtype=np.uint8)
    cdef Py_ssize_t r, j, k
    cdef double c, root, dt
    with nogil:
        for r in range(R):
            dt = dts[r]
            root = sqrt(2.0 * dt)
            for j in range(n):
                drift[j] = 0.0
            for j in range(n):
                for k in range(j + 1, n):
                    c = 1.0 / tan((cur[r, j] - cur[r, k]) / 2.0)
                    drift[j] += c
                    drift[k] -= c
            for j in range(n):
                prop[r, j] = cur[r, j] + root * noise[r, j] + dt * (beta / 2.0) * drift[j]
            if n > 1:
                for j in range(n - 1):
                    if prop[r, j + 1] - prop[r, j] <= guard:
                        ok[r] = 0
                        break
                if ok[r] and TWO_PI - (prop[r, n - 1] - prop[r, 0]) <= guard:
                    ok[r] = 0
    return prop, ok.astype(bool)
