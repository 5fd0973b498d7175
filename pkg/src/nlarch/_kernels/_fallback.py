"""Pure-NumPy implementations of the hot Gibbs-sweep kernels.

These are the reference semantics for the compiled backend in ``_fast.pyx``:
both compute the same quantities through the same algebraic route (Cholesky
of the precision, forward/back substitution), so single-step outputs agree
to floating-point round-off.
"""

import numpy as np

NAME = "numpy"


def sample_indicators(resid, u, log_norm, mu, inv_two_sigma2, out):
    """Draw one mixture indicator per cell of ``resid``.

    Per cell, component j has log weight
    ``log_norm[j] - (resid - mu[j])^2 * inv_two_sigma2[j]``; the draw inverts
    the normalized CDF at ``u`` after a max-shift.  ``out`` is an int64 array
    shaped like ``resid``.  Returns the summed log of the per-cell weight
    totals, i.e. the mixture log-density of ``resid`` summed over cells.
    """
    d = resid[..., None] - mu
    logw = log_norm - d * d * inv_two_sigma2
    m = logw.max(axis=-1, keepdims=True)
    w = np.exp(logw - m)
    c = np.cumsum(w, axis=-1)
    tot = c[..., -1]
    target = u * tot
    z = (c < target[..., None]).sum(axis=-1)
    np.minimum(z, mu.size - 1, out=out)
    return float((m[..., 0] + np.log(tot)).sum())


def _draw_from_precision(prec, rhs, noise):
    """Sample N(prec^{-1} rhs, prec^{-1}) batched over the leading axis.

    Uses the lower Cholesky factor L of the precision: the mean follows from
    a forward and a back substitution, and the perturbation is L^{-T} noise.
    """
    L = np.linalg.cholesky(prec)
    a = np.linalg.solve(L, rhs[..., None])
    Lt = np.swapaxes(L, -1, -2)
    mean = np.linalg.solve(Lt, a)
    pert = np.linalg.solve(Lt, noise[..., None])
    return (mean + pert)[..., 0]


def sample_factors(lam, w, yf, noise, out):
    """Draw the common factors, one q-vector per period.

    Precision at period t is ``I_q + lam' diag(w[:, t]) lam``; the linear
    term is ``lam' (w[:, t] * yf[:, t])``.  ``noise`` is (q, T) standard
    normal; ``out`` is (q, T).
    """
    q = lam.shape[1]
    prec = np.eye(q) + np.einsum("iq,it,ir->tqr", lam, w, lam)
    rhs = np.einsum("iq,it,it->tq", lam, w, yf)
    out[...] = _draw_from_precision(prec, rhs, noise.T).T
    return out


def sample_loadings(F, w, yf, prior_prec, prior_rhs, noise, out):
    """Draw the factor loadings, one q-vector per unit.

    Precision for unit i is ``prior_prec + sum_t w[i, t] f_t f_t'``; the
    linear term is ``prior_rhs + sum_t w[i, t] yf[i, t] f_t``.  ``noise`` and
    ``out`` are (n, q).
    """
    prec = prior_prec + np.einsum("qt,it,rt->iqr", F, w, F)
    rhs = prior_rhs + np.einsum("qt,it,it->iq", F, w, yf)
    out[...] = _draw_from_precision(prec, rhs, noise)
    return out
