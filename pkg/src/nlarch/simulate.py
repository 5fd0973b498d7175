"""Synthetic panel generation from the reduced-form volatility process.

The generator draws unit-variance normal shocks, propagates the log-squared
outcome through the stable reduced form, and recovers the outcome level with
the shock's sign so the squaring round-trip is exact.  Random draws use four
independent seeded streams (loadings, factors, covariates, shocks) so that
e.g. zeroing the loadings makes the panel independent of the factor stream.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from .core import (
    DataError,
    PanelData,
    SpatialParams,
    StabilityError,
    WeightMatrix,
    build_S,
    stability_check,
)

COVARIATE_LAWS = ("uniform_pm1", "uniform_centered", "uniform")
FACTOR_LAWS = ("normal", "zero_loadings")


@dataclass(frozen=True)
class SimConfig:
    """Configuration of one synthetic panel.

    ``covariate_law`` defaults to uniform draws on (-1, 1): a mean-zero
    covariate reproduces the published overall log-volatility level and its
    second moment reproduces the published parameter precision.
    ``uniform_centered`` uses U(0,1) - 0.5; ``uniform`` keeps raw (0, 1)
    draws.  ``factor_law='zero_loadings'`` draws factors but forces all
    loadings to zero.
    """

    T: int
    q: int
    params: SpatialParams
    beta: np.ndarray
    M: WeightMatrix
    burn_in_periods: int = 200
    seed: int = 0
    covariate_law: str = "uniform_pm1"
    factor_law: str = "normal"

    def __post_init__(self):
        beta = np.atleast_1d(np.asarray(self.beta, dtype=float))
        object.__setattr__(self, "beta", beta)
        if self.T < 1 or self.q < 0 or self.burn_in_periods < 0:
            raise DataError("T must be >= 1, q and burn_in_periods >= 0")
        if self.covariate_law not in COVARIATE_LAWS:
            raise DataError(f"unknown covariate_law {self.covariate_law!r}")
        if self.factor_law not in FACTOR_LAWS:
            raise DataError(f"unknown factor_law {self.factor_law!r}")

    @property
    def n(self) -> int:
        return self.M.n

    @property
    def k(self) -> int:
        return self.beta.size


@dataclass(frozen=True)
class SimTruth:
    """Ground truth retained from a simulation run."""

    params: SpatialParams
    beta: np.ndarray
    lam: np.ndarray      # (n, q) loadings
    F: np.ndarray        # (q, T) factors for the recorded periods
    h_star: np.ndarray   # (n, T) true log-volatility
    eps_star: np.ndarray = field(repr=False, default=None)  # (n, T) log eps^2


def _draw_covariates(rng, n, k, law):
    x = rng.random((n, k))
    if law == "uniform_pm1":
        x = 2.0 * x - 1.0
    elif law == "uniform_centered":
        x -= 0.5
    return x


def simulate_panel(cfg: SimConfig):
    """Generate one panel; returns ``(PanelData, SimTruth)``.

    The chain starts from zero, runs ``burn_in_periods`` warm-up steps that
    are discarded, records the last warm-up state as the observed initial
    vector, then records T periods.  The returned truth satisfies
    ``ystar = h_star + eps_star`` cell by cell, to solver round-off.
    """
    verdict = stability_check(cfg.params, cfg.M)
    if not verdict.stable:
        raise StabilityError(
            f"unstable configuration ({verdict.criterion}: "
            f"sum={verdict.triple_sum:.4f}, radius={verdict.spectral_radius})"
        )
    n, T, q, k = cfg.n, cfg.T, cfg.q, cfg.k
    rho, gam, dlt = cfg.params.rho, cfg.params.gamma, cfg.params.delta
    M = cfg.M.M

    ss = np.random.SeedSequence(cfg.seed)
    rng_load, rng_fact, rng_cov, rng_shock = map(np.random.default_rng, ss.spawn(4))

    lam = rng_load.standard_normal((n, q))
    if cfg.factor_law == "zero_loadings":
        lam = np.zeros((n, q))

    S = build_S(cfg.M, rho)
    lu = lu_factor(S)

    y = np.zeros(n)
    ystar = np.empty((n, T))
    eps_star = np.empty((n, T))
    signs = np.empty((n, T))
    F = np.empty((q, T))
    X = np.empty((n, T, k))
    y0 = np.zeros(n)
    sign0 = np.ones(n)

    total = cfg.burn_in_periods + T
    for step in range(total):
        x = _draw_covariates(rng_cov, n, k, cfg.covariate_law)
        f = rng_fact.standard_normal(q)
        eps = rng_shock.standard_normal(n)
        es = np.log(eps**2)
        rhs = gam * y + dlt * (M @ y) + x @ cfg.beta + lam @ f + es
        y = lu_solve(lu, rhs)
        if step == cfg.burn_in_periods - 1:
            y0 = y.copy()
            sign0 = np.sign(eps)
        if step >= cfg.burn_in_periods:
            t = step - cfg.burn_in_periods
            ystar[:, t] = y
            eps_star[:, t] = es
            signs[:, t] = np.sign(eps)
            F[:, t] = f
            X[:, t, :] = x

    # special case: no warm-up means the zero start is the initial state
    if cfg.burn_in_periods == 0:
        y0 = np.zeros(n)

    ylag = np.column_stack([y0, ystar[:, :-1]])
    h_star = (
        rho * (M @ ystar)
        + gam * ylag
        + dlt * (M @ ylag)
        + np.einsum("itk,k->it", X, cfg.beta)
        + lam @ F
    )

    Y = signs * np.exp(ystar / 2.0)
    Y0 = sign0 * np.exp(y0 / 2.0)
    panel = PanelData(Y=Y, Y0=Y0, X=X)
    truth = SimTruth(params=cfg.params, beta=cfg.beta, lam=lam, F=F,
                     h_star=h_star, eps_star=eps_star)
    return panel, truth
