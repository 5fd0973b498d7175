"""Gibbs sampler for the log-ARCH volatility panel with latent factors.

One sweep updates, in order: the mixture indicators, the covariate
coefficients, the factors, the loadings, the lag coefficients (gamma, delta)
and finally the network coefficient rho through a random-walk
Metropolis-Hastings step.  All conditional covariances are handled through
Cholesky factors of the precision; no explicit inverses of data-sized
matrices are formed.  log|det(I - rho M)| is evaluated in O(n) per proposal
from the spectrum of M, computed once per chain.
"""

import time
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular
from scipy.stats import truncnorm

from . import __version__
from . import _kernels as kernels
from .core import (
    ChainError,
    DataError,
    LogSquaredPanel,
    PanelData,
    SpatialOperator,
    SpatialParams,
    WeightMatrix,
    log_squared_transform,
    stability_check,
)
from .inference import PosteriorDraws
from .mixture import DEFAULT_MIXTURE, MixtureTable

LOG_2PI = float(np.log(2.0 * np.pi))


# ---------------------------------------------------------------------------
# priors and configuration
# ---------------------------------------------------------------------------

def _expand_vector(value, dim, name):
    v = np.atleast_1d(np.asarray(value, dtype=float))
    if v.size == 1:
        v = np.full(dim, float(v[0]))
    if v.shape != (dim,):
        raise DataError(f"{name} must be a scalar or length-{dim} vector")
    return v


def _expand_cov(value, dim, name):
    v = np.asarray(value, dtype=float)
    if v.ndim == 0:
        v = float(v) * np.eye(dim)
    elif v.ndim == 1:
        if v.size != dim:
            raise DataError(f"{name} diagonal must have length {dim}")
        v = np.diag(v)
    if v.shape != (dim, dim):
        raise DataError(f"{name} must be scalar, diagonal or ({dim}, {dim})")
    if not np.allclose(v, v.T):
        raise DataError(f"{name} must be symmetric")
    try:
        np.linalg.cholesky(v)
    except np.linalg.LinAlgError:
        raise DataError(f"{name} must be positive definite") from None
    return v


@dataclass(frozen=True)
class PriorSpec:
    """Independent priors for the sampled blocks.

    Scalars are broadcast: a scalar ``B_*`` means that multiple of the
    identity.  Defaults are diffuse zero-mean normals (variance 100).  The
    prior on rho is uniform over ``rho_support``; when unset, the support is
    derived from the weight matrix at fit time.  ``enforce_stability``
    truncates the (rho, gamma, delta) prior to the stable region.
    """

    b_phi: object = 0.0
    B_phi: object = 100.0
    b_beta: object = 0.0
    B_beta: object = 100.0
    b_lambda: object = 0.0
    B_lambda: object = 100.0
    rho_support: tuple = None
    enforce_stability: bool = True

    def materialize(self, k: int, q: int, M: WeightMatrix) -> "Priors":
        b_phi = _expand_vector(self.b_phi, 2, "b_phi")
        B_phi = _expand_cov(self.B_phi, 2, "B_phi")
        b_beta = _expand_vector(self.b_beta, k, "b_beta") if k else np.zeros(0)
        B_beta = _expand_cov(self.B_beta, k, "B_beta") if k else np.zeros((0, 0))
        b_lam = _expand_vector(self.b_lambda, q, "b_lambda") if q else np.zeros(0)
        B_lam = _expand_cov(self.B_lambda, q, "B_lambda") if q else np.zeros((0, 0))
        support = self.rho_support if self.rho_support is not None else M.rho_range()
        lo, hi = float(support[0]), float(support[1])
        mlo, mhi = M.rho_range()
        if lo < mlo or hi > mhi:
            raise DataError(f"rho_support ({lo}, {hi}) exceeds invertibility range ({mlo}, {mhi})")
        return Priors(
            b_phi=b_phi, B_phi_inv=np.linalg.inv(B_phi),
            b_beta=b_beta, B_beta_inv=np.linalg.inv(B_beta) if k else np.zeros((0, 0)),
            b_lambda=b_lam, B_lambda_inv=np.linalg.inv(B_lam) if q else np.zeros((0, 0)),
            rho_lo=lo, rho_hi=hi, enforce_stability=self.enforce_stability,
        )


@dataclass(frozen=True)
class Priors:
    """Concrete prior arrays for given dimensions (internal)."""

    b_phi: np.ndarray
    B_phi_inv: np.ndarray
    b_beta: np.ndarray
    B_beta_inv: np.ndarray
    b_lambda: np.ndarray
    B_lambda_inv: np.ndarray
    rho_lo: float
    rho_hi: float
    enforce_stability: bool


@dataclass(frozen=True)
class SamplerConfig:
    """Chain length, adaptation and retention settings.

    ``c_rho`` is the initial random-walk step for rho; during burn-in it is
    scaled by 1.1 up or down once per ``adapt_window`` iterations to keep the
    window acceptance rate inside ``adapt_target``, and it is frozen after
    burn-in.  Full (n, T) fields are retained for at most
    ``max_field_draws`` equally spaced retained iterations.
    """

    iterations: int = 100_000
    burn_in: int = 20_000
    thin: int = 1
    c_rho: float = 0.1
    adapt_target: tuple = (0.40, 0.60)
    adapt_window: int = 100
    seed: int = 0
    max_field_draws: int = 2000

    def __post_init__(self):
        if not (0 <= self.burn_in < self.iterations):
            raise DataError("need 0 <= burn_in < iterations")
        if self.thin < 1 or self.adapt_window < 1 or self.max_field_draws < 1:
            raise DataError("thin, adapt_window and max_field_draws must be >= 1")
        if not self.c_rho > 0:
            raise DataError("c_rho must be positive")


# ---------------------------------------------------------------------------
# workspace and state
# ---------------------------------------------------------------------------

class ChainWorkspace:
    """Preprocessed data shared by every sweep of a chain.

    Holds the log-squared panel, its lag, the M-products of both (which are
    fixed across the whole chain) and the spectral log-determinant facility.
    """

    def __init__(self, logsq: LogSquaredPanel, M: WeightMatrix, X=None):
        self.ystar = np.ascontiguousarray(logsq.ystar)
        self.ystar0 = np.ascontiguousarray(logsq.ystar0)
        n, T = self.ystar.shape
        if X is None:
            X = np.zeros((n, T, 0))
        self.X = np.ascontiguousarray(X, dtype=float)
        if self.X.shape[:2] != (n, T):
            raise DataError(f"X shape {self.X.shape} does not match panel ({n}, {T})")
        if M.n != n:
            raise DataError(f"weight matrix size {M.n} does not match panel n={n}")
        self.M = M
        self.ylag = np.column_stack([self.ystar0, self.ystar[:, :-1]])
        self.Mystar = np.ascontiguousarray(M.M @ self.ystar)
        self.Mylag = np.ascontiguousarray(M.M @ self.ylag)
        self.op = SpatialOperator(M)
        self.n, self.T = n, T
        self.k = self.X.shape[2]

    def logdet(self, rho: float) -> float:
        return self.op.logdet(rho)

    def xb(self, beta) -> np.ndarray:
        if self.k == 0:
            return np.zeros((self.n, self.T))
        return np.einsum("itk,k->it", self.X, beta)


@dataclass
class ChainState:
    """One point of the Markov chain (mutable; owned by a single chain)."""

    z: np.ndarray        # (n, T) int64 mixture indicators, 0-based
    beta: np.ndarray     # (k,)
    lam: np.ndarray      # (n, q)
    F: np.ndarray        # (q, T)
    phi: np.ndarray      # (gamma, delta)
    rho: float
    d: np.ndarray = None         # (n, T) component means at z
    inv_sig2: np.ndarray = None  # (n, T) component precisions at z

    def set_indicators(self, z, table: MixtureTable = DEFAULT_MIXTURE):
        self.z = z
        self.d = table.mu[z]
        self.inv_sig2 = table.inv_sigma2[z]

    @property
    def q(self) -> int:
        return self.lam.shape[1]

    def copy(self) -> "ChainState":
        return ChainState(
            z=self.z.copy(), beta=self.beta.copy(), lam=self.lam.copy(),
            F=self.F.copy(), phi=self.phi.copy(), rho=self.rho,
            d=None if self.d is None else self.d.copy(),
            inv_sig2=None if self.inv_sig2 is None else self.inv_sig2.copy(),
        )


def initial_state(ws: ChainWorkspace, pri: Priors, q: int, rng,
                  table: MixtureTable = DEFAULT_MIXTURE) -> ChainState:
    """Prior-centered, stability-safe starting point.

    beta = phi = rho = 0, loadings at their prior mean, factors at zero and
    indicators drawn from the prior categorical.
    """
    z = np.searchsorted(np.cumsum(table.p), rng.random((ws.n, ws.T)), side="right")
    z = np.minimum(z, table.n_components - 1).astype(np.int64)
    state = ChainState(
        z=z,
        beta=np.zeros(ws.k),
        lam=np.tile(pri.b_lambda, (ws.n, 1)) if q else np.zeros((ws.n, 0)),
        F=np.zeros((q, ws.T)),
        phi=np.zeros(2),
        rho=0.0,
    )
    state.set_indicators(z, table)
    return state


def _is_stable(ws: ChainWorkspace, rho: float, phi) -> bool:
    if ws.M.row_normalized:
        return abs(rho) + abs(phi[0]) + abs(phi[1]) < 1.0
    verdict = stability_check(SpatialParams(rho, phi[0], phi[1]), ws.M)
    return verdict.stable


def _chol_draw(prec, rhs, noise):
    """N(prec^{-1} rhs, prec^{-1}) draw for a small dense precision."""
    try:
        L = np.linalg.cholesky(prec)
    except np.linalg.LinAlgError:
        raise ChainError(
            f"conditional precision not positive definite (cond ~ {np.linalg.cond(prec):.3g})"
        ) from None
    a = solve_triangular(L, rhs, lower=True)
    mean = solve_triangular(L.T, a, lower=False)
    pert = solve_triangular(L.T, noise, lower=False)
    return mean + pert


# ---------------------------------------------------------------------------
# individual Gibbs steps (standalone versions used by the tests)
# ---------------------------------------------------------------------------

def _components(ws: ChainWorkspace, state: ChainState):
    base = ws.ystar - state.rho * ws.Mystar
    wphi = state.phi[0] * ws.ylag + state.phi[1] * ws.Mylag
    xb = ws.xb(state.beta)
    lf = state.lam @ state.F if state.q else np.zeros((ws.n, ws.T))
    return base, wphi, xb, lf


def sample_indicators(ws, state, rng, table: MixtureTable = DEFAULT_MIXTURE):
    """Draw the mixture indicator of every cell from its 10-point posterior."""
    base, wphi, xb, lf = _components(ws, state)
    resid = base - wphi - xb - lf
    out = np.empty((ws.n, ws.T), dtype=np.int64)
    kernels.sample_indicators(resid, rng.random((ws.n, ws.T)),
                              table.log_norm, table.mu, table.inv_two_sigma2, out)
    return out


def sample_beta(ws, state, pri: Priors, rng):
    """Conjugate normal draw of the covariate coefficients."""
    if ws.k == 0:
        return np.zeros(0)
    base, wphi, _, lf = _components(ws, state)
    yb = base - wphi - lf - state.d
    w = state.inv_sig2
    prec = pri.B_beta_inv + np.einsum("itk,it,itl->kl", ws.X, w, ws.X)
    rhs = pri.B_beta_inv @ pri.b_beta + np.einsum("itk,it->k", ws.X, w * yb)
    return _chol_draw(prec, rhs, rng.standard_normal(ws.k))


def sample_factors(ws, state, rng):
    """Draw the factors period by period; returns a (q, T) matrix."""
    if state.q == 0:
        return np.zeros((0, ws.T))
    base, wphi, xb, _ = _components(ws, state)
    yf = base - wphi - xb - state.d
    out = np.empty((state.q, ws.T))
    kernels.sample_factors(state.lam, state.inv_sig2, yf,
                           rng.standard_normal((state.q, ws.T)), out)
    return out


def sample_loadings(ws, state, pri: Priors, rng,
                    prior_prec=None, prior_rhs=None):
    """Draw the loadings unit by unit; returns an (n, q) matrix.

    ``prior_prec``/``prior_rhs`` override the normal prior (the shrinkage
    sampler passes diag(1/tau^2) and zero).
    """
    if state.q == 0:
        return np.zeros((ws.n, 0))
    base, wphi, xb, _ = _components(ws, state)
    yf = base - wphi - xb - state.d
    if prior_prec is None:
        prior_prec = pri.B_lambda_inv
        prior_rhs = pri.B_lambda_inv @ pri.b_lambda
    out = np.empty((ws.n, state.q))
    kernels.sample_loadings(np.ascontiguousarray(state.F), state.inv_sig2, yf,
                            np.ascontiguousarray(prior_prec),
                            np.ascontiguousarray(prior_rhs),
                            rng.standard_normal((ws.n, state.q)), out)
    return out


def _truncnorm_draw(mean, sd, lo, hi, rng):
    a, b = (lo - mean) / sd, (hi - mean) / sd
    return float(truncnorm.rvs(a, b, loc=mean, scale=sd, random_state=rng))


def _phi_truncated_gibbs(prec, rhs, phi, bound, rng, sweeps: int = 8):
    """Exact truncated-normal Gibbs sub-scan on (gamma, delta).

    Fallback for the rare states where iid rejection cannot hit the stable
    region |gamma| + |delta| < bound; starts from the current (stable) phi,
    so every univariate truncation interval is nonempty.  Leaves the
    truncated conditional invariant.
    """
    K = np.linalg.inv(prec)
    mean = K @ rhs
    g, d = float(phi[0]), float(phi[1])
    for _ in range(sweeps):
        lim = bound - abs(d)
        mu_g = mean[0] - prec[0, 1] / prec[0, 0] * (d - mean[1])
        g = _truncnorm_draw(mu_g, 1.0 / np.sqrt(prec[0, 0]), -lim, lim, rng)
        lim = bound - abs(g)
        mu_d = mean[1] - prec[0, 1] / prec[1, 1] * (g - mean[0])
        d = _truncnorm_draw(mu_d, 1.0 / np.sqrt(prec[1, 1]), -lim, lim, rng)
    return np.array([g, d])


def _draw_phi(ws, state, pri, prec, rhs, rng, max_retries: int = 1000):
    for _ in range(max_retries):
        draw = _chol_draw(prec, rhs, rng.standard_normal(2))
        if not pri.enforce_stability or _is_stable(ws, state.rho, draw):
            return draw
    # iid rejection cannot reach the (tiny) stable region; switch to the
    # exact truncated sub-scan instead of aborting the chain
    if ws.M.row_normalized:
        bound = 1.0 - abs(state.rho)
        return _phi_truncated_gibbs(prec, rhs, state.phi, bound, rng)
    raise ChainError(f"stability rejection budget ({max_retries}) exhausted in phi step")


def sample_phi(ws, state, pri: Priors, rng, max_retries: int = 1000):
    """Draw (gamma, delta), truncated to the stable region when enforced."""
    base, _, xb, lf = _components(ws, state)
    yp = base - xb - lf - state.d
    w = state.inv_sig2
    wy1, wy2 = w * ws.ylag, w * ws.Mylag
    prec = pri.B_phi_inv + np.array([
        [np.vdot(wy1, ws.ylag), np.vdot(wy1, ws.Mylag)],
        [np.vdot(wy1, ws.Mylag), np.vdot(wy2, ws.Mylag)],
    ])
    rhs = pri.B_phi_inv @ pri.b_phi + np.array([np.vdot(wy1, yp), np.vdot(wy2, yp)])
    return _draw_phi(ws, state, pri, prec, rhs, rng, max_retries)


def sample_rho_mh(ws, state, pri: Priors, c_rho: float, rng):
    """One random-walk MH step for rho; returns (rho, accepted).

    Proposals outside the support (or the stable region, when enforced)
    count as rejections.  The acceptance ratio uses the panel likelihood;
    the uniform prior on rho cancels.
    """
    base, wphi, xb, lf = _components(ws, state)
    r0 = ws.ystar - wphi - xb - lf - state.d
    w = state.inv_sig2
    a0 = float(np.vdot(w * r0, r0))
    a1 = float(np.vdot(w * r0, ws.Mystar))
    a2 = float(np.vdot(w * ws.Mystar, ws.Mystar))
    return _rho_step(ws, state, pri, c_rho, rng, a0, a1, a2, ws.logdet(state.rho))


def _rho_step(ws, state, pri, c_rho, rng, a0, a1, a2, ld_cur):
    rho = state.rho
    cand = rho + c_rho * rng.standard_normal()
    if not (pri.rho_lo < cand < pri.rho_hi):
        return rho, False, ld_cur
    if pri.enforce_stability and not _is_stable(ws, cand, state.phi):
        return rho, False, ld_cur
    ld_cand = ws.logdet(cand)
    dq = (a0 - 2.0 * cand * a1 + cand**2 * a2) - (a0 - 2.0 * rho * a1 + rho**2 * a2)
    log_accept = ws.T * (ld_cand - ld_cur) - 0.5 * dq
    if np.log(rng.random()) < log_accept:
        return cand, True, ld_cand
    return rho, False, ld_cur


def log_likelihood(ws: ChainWorkspace, state: ChainState,
                   table: MixtureTable = DEFAULT_MIXTURE) -> float:
    """Panel log-likelihood at the given state (indicators conditioned on)."""
    base, wphi, xb, lf = _components(ws, state)
    resid = base - wphi - xb - lf - table.mu[state.z]
    log_sig2_sum = float(np.log(table.sigma2)[state.z].sum())
    return _panel_loglik(ws, state.rho, resid, table.inv_sigma2[state.z], log_sig2_sum)


def _panel_loglik(ws, rho, resid, inv_sig2, log_sig2_sum):
    quad = float(np.vdot(inv_sig2 * resid, resid))
    return (-0.5 * ws.n * ws.T * LOG_2PI + ws.T * ws.logdet(rho)
            - 0.5 * log_sig2_sum - 0.5 * quad)


def marginal_loglik(ws: ChainWorkspace, state: ChainState,
                    table: MixtureTable = DEFAULT_MIXTURE) -> float:
    """Observed-data log-likelihood: indicators integrated out per cell.

    Each cell's error density is the full ten-component mixture, so this
    does not depend on the sampled indicators; it backs the default DIC.
    """
    from .mixture import mixture_logpdf

    base, wphi, xb, lf = _components(ws, state)
    resid = base - wphi - xb - lf
    return float(ws.T * ws.logdet(state.rho) + mixture_logpdf(resid, table).sum())


# ---------------------------------------------------------------------------
# the sweep and the chain driver
# ---------------------------------------------------------------------------

@dataclass
class _ShrinkDriver:
    """Per-chain shrinkage state plus its two update callables (internal)."""

    tau2: np.ndarray
    phi2: float
    sample_tau2: object
    sample_phi2: object


def gibbs_sweep(ws, state, pri, rng, c_rho, table=DEFAULT_MIXTURE,
                shrink: _ShrinkDriver = None, ld_cur=None):
    """One in-place systematic scan over all blocks.

    Returns ``(accepted, loglik, marg_in, ld_cur)``: the indicator-
    conditional log-likelihood of the new state, the observed-data
    log-likelihood of the *incoming* state (a free by-product of the
    indicator step), and log|det S(rho)| at the new state (pass it back in
    to avoid recomputation).
    """
    n, T, q = ws.n, ws.T, state.q
    if ld_cur is None:
        ld_cur = ws.logdet(state.rho)
    base = ws.ystar - state.rho * ws.Mystar
    wphi = state.phi[0] * ws.ylag + state.phi[1] * ws.Mylag
    xb = ws.xb(state.beta)
    lf = state.lam @ state.F if q else np.zeros((n, T))

    # indicators; the kernel also returns the mixture log-density of the
    # incoming residuals, which completes the incoming state's marginal ll
    resid = base - wphi - xb - lf
    mix_ll = kernels.sample_indicators(resid, rng.random((n, T)), table.log_norm,
                                       table.mu, table.inv_two_sigma2, state.z)
    marg_in = mix_ll + T * ld_cur
    state.d = table.mu[state.z]
    state.inv_sig2 = table.inv_sigma2[state.z]
    w = state.inv_sig2

    # covariate coefficients
    if ws.k:
        yb = base - wphi - lf - state.d
        prec = pri.B_beta_inv + np.einsum("itk,it,itl->kl", ws.X, w, ws.X)
        rhs = pri.B_beta_inv @ pri.b_beta + np.einsum("itk,it->k", ws.X, w * yb)
        state.beta = _chol_draw(prec, rhs, rng.standard_normal(ws.k))
        xb = ws.xb(state.beta)

    # factors and loadings
    if q:
        yf = base - wphi - xb - state.d
        kernels.sample_factors(state.lam, w, yf, rng.standard_normal((q, T)), state.F)
        if shrink is None:
            prior_prec = pri.B_lambda_inv
            prior_rhs = pri.B_lambda_inv @ pri.b_lambda
        else:
            prior_prec = np.diag(1.0 / shrink.tau2)
            prior_rhs = np.zeros(q)
        kernels.sample_loadings(state.F, w, yf, np.ascontiguousarray(prior_prec),
                                np.ascontiguousarray(prior_rhs),
                                rng.standard_normal((n, q)), state.lam)
        lf = state.lam @ state.F
        if shrink is not None:
            shrink.tau2 = shrink.sample_tau2(state.lam, shrink.phi2, rng)
            shrink.phi2 = shrink.sample_phi2(shrink.tau2, rng)

    # lag coefficients
    yp = base - xb - lf - state.d
    wy1, wy2 = w * ws.ylag, w * ws.Mylag
    prec = pri.B_phi_inv + np.array([
        [np.vdot(wy1, ws.ylag), np.vdot(wy1, ws.Mylag)],
        [np.vdot(wy1, ws.Mylag), np.vdot(wy2, ws.Mylag)],
    ])
    rhs = pri.B_phi_inv @ pri.b_phi + np.array([np.vdot(wy1, yp), np.vdot(wy2, yp)])
    state.phi = _draw_phi(ws, state, pri, prec, rhs, rng)
    wphi = state.phi[0] * ws.ylag + state.phi[1] * ws.Mylag

    # network coefficient
    r0 = ws.ystar - wphi - xb - lf - state.d
    a0 = float(np.vdot(w * r0, r0))
    a1 = float(np.vdot(w * r0, ws.Mystar))
    a2 = float(np.vdot(w * ws.Mystar, ws.Mystar))
    state.rho, accepted, ld_cur = _rho_step(ws, state, pri, c_rho, rng, a0, a1, a2, ld_cur)

    quad = a0 - 2.0 * state.rho * a1 + state.rho**2 * a2
    log_sig2_sum = float(np.log(table.sigma2)[state.z].sum())
    ll = (-0.5 * n * T * LOG_2PI + T * ld_cur - 0.5 * log_sig2_sum - 0.5 * quad)
    return accepted, ll, marg_in, ld_cur


def run_chain(data: PanelData, M: WeightMatrix, prior: PriorSpec,
              cfg: SamplerConfig, q: int, floor: float = 1e-12,
              table: MixtureTable = DEFAULT_MIXTURE,
              progress: bool = False, _shrink_setup=None) -> PosteriorDraws:
    """Run the standard sampler; returns retained posterior draws.

    With ``q = 0`` the factor and loading steps are skipped.  Loadings and
    factors are retained only through their product (they are not separately
    identified); per-cell log-volatility fields are stored for at most
    ``cfg.max_field_draws`` equally spaced retained iterations.
    """
    t_start = time.time()
    if q < 0:
        raise DataError("q must be >= 0")
    logsq = log_squared_transform(data, floor)
    ws = ChainWorkspace(logsq, M, data.X)
    pri = prior.materialize(ws.k, q, M)
    rng = np.random.default_rng(cfg.seed)
    state = initial_state(ws, pri, q, rng, table)

    shrink = None
    if _shrink_setup is not None:
        shrink = _shrink_setup(q, rng)

    n_ret = -(-(cfg.iterations - cfg.burn_in) // cfg.thin)  # ceil
    field_stride = max(1, -(-n_ret // cfg.max_field_draws))
    n_field = -(-n_ret // field_stride)

    names = ("rho", "gamma", "delta") + tuple(f"beta_{j + 1}" for j in range(ws.k))
    params = np.empty((n_ret, 3 + ws.k))
    loglik = np.empty(n_ret)
    loglik_marginal = np.empty(n_ret)
    tau2 = np.empty((n_ret, q)) if shrink is not None else None
    phi2 = np.empty(n_ret) if shrink is not None else None
    field_iters = np.empty(n_field, dtype=np.int64)
    h_star_draws = np.empty((n_field, ws.n, ws.T))
    lam_f_draws = np.empty((n_field, ws.n, ws.T))
    sum_lam_f = np.zeros((ws.n, ws.T))
    sum_d = np.zeros((ws.n, ws.T))
    sum_sig2 = np.zeros((ws.n, ws.T))

    ld_cur = ws.logdet(state.rho)
    c_rho = cfg.c_rho
    lo_t, hi_t = cfg.adapt_target
    window_accepts = 0
    post_accepts = 0
    adapt_log = []
    r = 0
    f_idx = 0
    report = max(1, cfg.iterations // 20)

    for g in range(cfg.iterations):
        accepted, ll, marg_in, ld_cur = gibbs_sweep(ws, state, pri, rng, c_rho,
                                                    table, shrink, ld_cur)
        # marg_in is the observed-data ll of the state *before* this sweep;
        # file it under the previous iteration's retained slot when there is one
        gp = g - 1 - cfg.burn_in
        if gp >= 0 and gp % cfg.thin == 0:
            loglik_marginal[gp // cfg.thin] = marg_in
        if g < cfg.burn_in:
            window_accepts += accepted
            if (g + 1) % cfg.adapt_window == 0:
                rate = window_accepts / cfg.adapt_window
                if rate > hi_t:
                    c_rho *= 1.1
                elif rate < lo_t:
                    c_rho /= 1.1
                adapt_log.append((g + 1, rate, c_rho))
                window_accepts = 0
        else:
            post_accepts += accepted
            off = g - cfg.burn_in
            if off % cfg.thin == 0:
                params[r, 0] = state.rho
                params[r, 1:3] = state.phi
                params[r, 3:] = state.beta
                loglik[r] = ll
                if shrink is not None:
                    tau2[r] = shrink.tau2
                    phi2[r] = shrink.phi2
                lam_f = state.lam @ state.F if q else np.zeros((ws.n, ws.T))
                sum_lam_f += lam_f
                sum_d += state.d
                sum_sig2 += table.sigma2[state.z]
                if not (np.isfinite(ll) and np.all(np.isfinite(params[r]))):
                    raise ChainError(f"non-finite retained draw at iteration {g}")
                if r % field_stride == 0:
                    h = (state.rho * ws.Mystar + state.phi[0] * ws.ylag
                         + state.phi[1] * ws.Mylag + ws.xb(state.beta) + lam_f)
                    field_iters[f_idx] = r
                    h_star_draws[f_idx] = h
                    lam_f_draws[f_idx] = lam_f
                    f_idx += 1
                r += 1
        if progress and (g + 1) % report == 0:
            print(f"  iter {g + 1}/{cfg.iterations}  c_rho={c_rho:.4f}", flush=True)

    # the final retained state's marginal ll has no following sweep
    gp = cfg.iterations - 1 - cfg.burn_in
    if gp % cfg.thin == 0:
        loglik_marginal[gp // cfg.thin] = marginal_loglik(ws, state, table)

    post_iters = cfg.iterations - cfg.burn_in
    manifest = {
        "package": "nlarch",
        "version": __version__,
        "backend": kernels.BACKEND,
        "numpy": np.__version__,
        "seed": cfg.seed,
        "q": q,
        "n": ws.n,
        "T": ws.T,
        "k": ws.k,
        "iterations": cfg.iterations,
        "burn_in": cfg.burn_in,
        "thin": cfg.thin,
        "floor": floor,
        "floored_cells": logsq.floored_cells,
        "c_rho_initial": cfg.c_rho,
        "c_rho_final": c_rho,
        "acceptance_rate": post_accepts / post_iters,
        "adapt_log": adapt_log[-10:],
        "field_stride": field_stride,
        "shrinkage": shrink is not None,
        "runtime_seconds": None,  # filled below
    }
    manifest["runtime_seconds"] = time.time() - t_start
    return PosteriorDraws(
        names=names, params=params, loglik=loglik, loglik_marginal=loglik_marginal,
        field_iters=field_iters[:f_idx], h_star_draws=h_star_draws[:f_idx],
        lam_f_draws=lam_f_draws[:f_idx],
        mean_lam_f=sum_lam_f / n_ret, mean_d=sum_d / n_ret,
        mean_sigma2=sum_sig2 / n_ret,
        tau2=tau2, phi2=phi2, manifest=manifest,
    )
