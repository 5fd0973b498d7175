# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled Gibbs-sweep kernels; semantics mirror ``_fallback.py``."""

import numpy as np

cimport cython
from libc.math cimport exp, log, sqrt

NAME = "compiled"


def sample_indicators(const double[:, ::1] resid, const double[:, ::1] u,
                      const double[::1] log_norm, const double[::1] mu,
                      const double[::1] inv_two_sigma2, long[:, ::1] out):
    """Draw one mixture indicator per cell; see the NumPy reference.

    Returns the mixture log-density of ``resid`` summed over cells.
    """
    cdef Py_ssize_t n = resid.shape[0], T = resid.shape[1], J = mu.shape[0]
    cdef Py_ssize_t i, t, j, z
    cdef double m, d, tot, target, cum
    cdef double marg = 0.0
    cdef double[32] logw
    cdef double[32] w
    if J > 32:
        raise ValueError("at most 32 mixture components supported")
    with nogil:
        for i in range(n):
            for t in range(T):
                m = -1e308
                for j in range(J):
                    d = resid[i, t] - mu[j]
                    logw[j] = log_norm[j] - d * d * inv_two_sigma2[j]
                    if logw[j] > m:
                        m = logw[j]
                tot = 0.0
                for j in range(J):
                    w[j] = exp(logw[j] - m)
                    tot += w[j]
                target = u[i, t] * tot
                cum = w[0]
                z = 0
                while cum < target and z < J - 1:
                    z += 1
                    cum += w[z]
                out[i, t] = z
                marg += m + log(tot)
    return marg


cdef inline int _chol_solve_draw(double* G, double* rhs, double* noise,
                                 double* out, Py_ssize_t q) noexcept nogil:
    """In-place N(G^{-1} rhs, G^{-1}) draw for a small q x q precision G.

    Overwrites G with its lower Cholesky factor and rhs with scratch.
    Returns nonzero when G is not positive definite.
    """
    cdef Py_ssize_t a, b, c
    cdef double s
    # lower Cholesky factor, stored in the lower triangle of G
    for a in range(q):
        for b in range(a + 1):
            s = G[a * q + b]
            for c in range(b):
                s -= G[a * q + c] * G[b * q + c]
            if a == b:
                if s <= 0.0:
                    return 1
                G[a * q + a] = sqrt(s)
            else:
                G[a * q + b] = s / G[b * q + b]
    # forward solve L a = rhs  (rhs := a)
    for a in range(q):
        s = rhs[a]
        for c in range(a):
            s -= G[a * q + c] * rhs[c]
        rhs[a] = s / G[a * q + a]
    # back solve L' m = a  (rhs := mean)
    for a in range(q - 1, -1, -1):
        s = rhs[a]
        for c in range(a + 1, q):
            s -= G[c * q + a] * rhs[c]
        rhs[a] = s / G[a * q + a]
    # back solve L' x = noise  (noise := perturbation)
    for a in range(q - 1, -1, -1):
        s = noise[a]
        for c in range(a + 1, q):
            s -= G[c * q + a] * noise[c]
        noise[a] = s / G[a * q + a]
    for a in range(q):
        out[a] = rhs[a] + noise[a]
    return 0


def sample_factors(const double[:, ::1] lam, const double[:, ::1] w,
                   const double[:, ::1] yf, const double[:, ::1] noise,
                   double[:, ::1] out):
    """Draw the common factors, one q-vector per period."""
    cdef Py_ssize_t n = lam.shape[0], q = lam.shape[1], T = w.shape[1]
    cdef Py_ssize_t i, t, a, b
    cdef double wi
    cdef double[64] G
    cdef double[8] rhs
    cdef double[8] z
    cdef double[8] res
    cdef int bad = 0
    if q > 8:
        raise ValueError("at most 8 factors supported by the compiled kernel")
    with nogil:
        for t in range(T):
            for a in range(q):
                rhs[a] = 0.0
                z[a] = noise[a, t]
                for b in range(q):
                    G[a * q + b] = 1.0 if a == b else 0.0
            for i in range(n):
                wi = w[i, t]
                for a in range(q):
                    for b in range(a + 1):
                        G[a * q + b] += wi * lam[i, a] * lam[i, b]
                    rhs[a] += wi * lam[i, a] * yf[i, t]
            for a in range(q):
                for b in range(a + 1, q):
                    G[a * q + b] = G[b * q + a]
            if _chol_solve_draw(G, rhs, z, res, q):
                bad = 1
                break
            for a in range(q):
                out[a, t] = res[a]
    if bad:
        raise np.linalg.LinAlgError("factor precision not positive definite")
    return np.asarray(out)


def sample_loadings(const double[:, ::1] F, const double[:, ::1] w,
                    const double[:, ::1] yf, const double[:, ::1] prior_prec,
                    const double[::1] prior_rhs, const double[:, ::1] noise,
                    double[:, ::1] out):
    """Draw the factor loadings, one q-vector per unit."""
    cdef Py_ssize_t q = F.shape[0], T = F.shape[1], n = w.shape[0]
    cdef Py_ssize_t i, t, a, b
    cdef double wt
    cdef double[64] G
    cdef double[8] rhs
    cdef double[8] z
    cdef double[8] res
    cdef int bad = 0
    if q > 8:
        raise ValueError("at most 8 factors supported by the compiled kernel")
    with nogil:
        for i in range(n):
            for a in range(q):
                rhs[a] = prior_rhs[a]
                z[a] = noise[i, a]
                for b in range(q):
                    G[a * q + b] = prior_prec[a, b]
            for t in range(T):
                wt = w[i, t]
                for a in range(q):
                    for b in range(a + 1):
                        G[a * q + b] += wt * F[a, t] * F[b, t]
                    rhs[a] += wt * F[a, t] * yf[i, t]
            for a in range(q):
                for b in range(a + 1, q):
                    G[a * q + b] = G[b * q + a]
            if _chol_solve_draw(G, rhs, z, res, q):
                bad = 1
                break
            for a in range(q):
                out[i, a] = res[a]
    if bad:
        raise np.linalg.LinAlgError("loading precision not positive definite")
    return np.asarray(out)
