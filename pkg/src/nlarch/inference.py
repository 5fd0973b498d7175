"""Posterior post-processing: summaries, volatility recovery, trace export.

Quantiles throughout are empirical with linear (type-7) interpolation, the
NumPy default; credible-interval reproduction depends on this choice, so it
is fixed here and documented rather than configurable.
"""

import csv
from dataclasses import dataclass, field

import numpy as np

from .core import DataError, LogSquaredPanel, WeightMatrix


@dataclass
class PosteriorDraws:
    """Retained draws of one chain plus the accumulators needed downstream.

    ``params`` holds one column per scalar parameter, named by ``names``
    (rho, gamma, delta, beta_1..k).  Factors and loadings appear only through
    their product: ``lam_f_draws`` and ``h_star_draws`` are (n, T) fields
    stored for the retained iterations listed in ``field_iters``, while
    ``mean_lam_f``, ``mean_d`` and ``mean_sigma2`` average over *all*
    retained iterations (used by the information criterion).
    """

    names: tuple
    params: np.ndarray
    loglik: np.ndarray
    field_iters: np.ndarray
    h_star_draws: np.ndarray
    lam_f_draws: np.ndarray
    mean_lam_f: np.ndarray
    mean_d: np.ndarray
    mean_sigma2: np.ndarray
    manifest: dict
    loglik_marginal: np.ndarray = None
    tau2: np.ndarray = None
    phi2: np.ndarray = None

    def __post_init__(self):
        if self.params.shape != (self.loglik.size, len(self.names)):
            raise DataError("params / names / loglik shapes disagree")
        if not np.all(np.isfinite(self.params)) or not np.all(np.isfinite(self.loglik)):
            raise DataError("retained draws contain non-finite values")
        if self.loglik_marginal is not None and not np.all(np.isfinite(self.loglik_marginal)):
            raise DataError("marginal log-likelihood trace contains non-finite values")

    @property
    def draw_count(self) -> int:
        return self.params.shape[0]

    def column(self, name: str) -> np.ndarray:
        try:
            j = self.names.index(name)
        except ValueError:
            extras = tuple(self.extra_names())
            if name in extras:
                return self._extra(name)
            raise DataError(f"unknown parameter {name!r}; have {self.names + extras}") from None
        return self.params[:, j]

    def extra_names(self):
        names = []
        if self.tau2 is not None:
            names += [f"tau2_{m + 1}" for m in range(self.tau2.shape[1])]
            names.append("phi2")
        return tuple(names)

    def _extra(self, name):
        if name == "phi2":
            return self.phi2
        return self.tau2[:, int(name.split("_")[1]) - 1]

    def posterior_means(self) -> dict:
        out = {n: float(self.params[:, j].mean()) for j, n in enumerate(self.names)}
        out["lam_f"] = self.mean_lam_f
        out["d"] = self.mean_d
        out["sigma2"] = self.mean_sigma2
        return out

    def beta_matrix(self) -> np.ndarray:
        """(R, k) view of the covariate-coefficient draws."""
        return self.params[:, 3:]


@dataclass(frozen=True)
class VolatilityField:
    """Per-cell posterior summary of the log-volatility surface.

    ``median``, ``lo`` and ``hi`` are (n, T) per-cell posterior quantiles
    (2.5/50/97.5%); ``plugin`` evaluates the recovery formula once at the
    posterior means.  ``overall_average`` is the mean of the per-cell
    medians, and ``spread`` is the (2.5%, 97.5%) cross-sectional interval of
    those medians, which is how the aggregate is usually quoted.
    """

    median: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    plugin: np.ndarray
    overall_average: float
    spread: tuple = field(default=None)

    def __post_init__(self):
        if not (np.all(self.lo <= self.median) and np.all(self.median <= self.hi)):
            raise DataError("volatility quantiles out of order")


def _lagged(ystar, ystar0):
    return np.column_stack([ystar0, ystar[:, :-1]])


def recover_volatility(draws: PosteriorDraws, logsq: LogSquaredPanel,
                       M: WeightMatrix, X=None) -> VolatilityField:
    """Recover the log-volatility surface from the retained draws.

    For every stored field draw the surface is
    ``rho*M ystar + gamma*ystar_lag + delta*M ystar_lag + X beta + lam_f``;
    cells are then summarized by their 2.5/50/97.5% quantiles across draws.
    The plug-in surface evaluates the same formula at the posterior means.
    """
    ystar = logsq.ystar
    n, T = ystar.shape
    if draws.lam_f_draws.shape[1:] != (n, T):
        raise DataError(
            f"draws were produced for a {draws.lam_f_draws.shape[1:]} panel, got ({n}, {T})"
        )
    if X is None:
        X = np.zeros((n, T, 0))
    ylag = _lagged(ystar, logsq.ystar0)
    My = M.M @ ystar
    Mylag = M.M @ ylag
    idx = draws.field_iters
    rho = draws.column("rho")[idx]
    gam = draws.column("gamma")[idx]
    dlt = draws.column("delta")[idx]
    beta = draws.beta_matrix()[idx]
    xb = np.einsum("itk,rk->rit", X, beta)
    h = (rho[:, None, None] * My + gam[:, None, None] * ylag
         + dlt[:, None, None] * Mylag + xb + draws.lam_f_draws)
    lo, med, hi = np.quantile(h, [0.025, 0.5, 0.975], axis=0)
    means = draws.posterior_means()
    plugin = (means["rho"] * My + means["gamma"] * ylag + means["delta"] * Mylag
              + np.einsum("itk,k->it", X, draws.beta_matrix().mean(axis=0))
              + means["lam_f"])
    return VolatilityField(
        median=med, lo=lo, hi=hi, plugin=plugin,
        overall_average=float(med.mean()),
        spread=(float(np.quantile(med, 0.025)), float(np.quantile(med, 0.975))),
    )


@dataclass(frozen=True)
class SummaryRow:
    name: str
    median: float
    lo: float
    hi: float


def summarize(draws: PosteriorDraws, names=None):
    """Median and 95% interval per parameter (type-7 quantiles).

    Requires at least 100 retained draws; returns a list of
    :class:`SummaryRow` in the requested order.
    """
    if draws.draw_count < 100:
        raise DataError(f"need >= 100 retained draws, have {draws.draw_count}")
    if names is None:
        names = draws.names + draws.extra_names()
    rows = []
    for name in names:
        col = draws.column(name)
        lo, med, hi = np.quantile(col, [0.025, 0.5, 0.975])
        rows.append(SummaryRow(name, float(med), float(lo), float(hi)))
    return rows


def format_summary(rows) -> str:
    """Fixed-width table: one parameter per column, median and CI rows."""
    width = max(12, max(len(r.name) for r in rows) + 2)
    head = "".join(f"{r.name:>{width}}" for r in rows)
    med = "".join(f"{r.median:>{width}.4f}" for r in rows)
    ci = "".join(f"{'[%.3f, %.3f]' % (r.lo, r.hi):>{width}}" for r in rows)
    return "\n".join([head, med, ci])


def trace_export(draws: PosteriorDraws, names, out_dir):
    """Write one ``(iteration, value, running_mean)`` CSV per parameter.

    Values are written with 17 significant digits so a re-import reproduces
    the draw vector bitwise.  Returns the written paths.
    """
    import os

    paths = []
    for name in names:
        col = draws.column(name)  # raises DataError for unknown names
        running = np.cumsum(col) / np.arange(1, col.size + 1)
        path = os.path.join(out_dir, f"trace_{name}.csv")
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["iteration", "value", "running_mean"])
            for i, (v, m) in enumerate(zip(col, running)):
                wr.writerow([i, f"{v:.17g}", f"{m:.17g}"])
        paths.append(path)
    return paths
