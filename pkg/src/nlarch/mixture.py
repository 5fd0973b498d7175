"""Log-chi-squared(1) error distribution and its ten-component normal mixture.

The log-squared transform of a standard normal shock follows the
log-chi-squared distribution with one degree of freedom, a heavily
left-skewed density with mean ``-euler_gamma - log(2)`` and variance
``pi**2 / 2``.  For conjugate Gibbs updates this density is replaced by a
fixed ten-component normal mixture whose constants were obtained by moment
matching; the constants are embedded verbatim below and are not meant to be
re-derived at runtime.
"""

from dataclasses import dataclass, field

import numpy as np

EULER_GAMMA = 0.5772156649015329
#: Mean of log(eps^2) for eps ~ N(0, 1).
LOG_CHI2_MEAN = -EULER_GAMMA - np.log(2.0)
#: Variance of log(eps^2) for eps ~ N(0, 1).
LOG_CHI2_VAR = np.pi**2 / 2.0

_P = (0.00609, 0.04775, 0.13057, 0.20674, 0.22715,
      0.18842, 0.12047, 0.05591, 0.01575, 0.00115)
_MU = (1.92677, 1.34744, 0.73504, 0.02266, -0.85173,
       -1.97278, -3.46788, -5.55246, -8.68384, -14.65000)
_SIGMA2 = (0.11265, 0.17788, 0.26768, 0.40611, 0.62699,
           0.98583, 1.57469, 2.54498, 4.16591, 7.33342)


@dataclass(frozen=True)
class MixtureTable:
    """Component probabilities, means and variances of the normal mixture.

    Derived arrays used by the samplers (log weights, precisions) are
    precomputed once at construction.
    """

    p: np.ndarray
    mu: np.ndarray
    sigma2: np.ndarray
    # derived, filled in __post_init__
    log_p: np.ndarray = field(init=False, repr=False)
    inv_sigma2: np.ndarray = field(init=False, repr=False)
    inv_two_sigma2: np.ndarray = field(init=False, repr=False)
    log_norm: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        for name in ("p", "mu", "sigma2"):
            arr = np.asarray(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if not (self.p.shape == self.mu.shape == self.sigma2.shape):
            raise ValueError("mixture component arrays must have equal length")
        if np.any(self.sigma2 <= 0):
            raise ValueError("mixture variances must be positive")
        if abs(self.p.sum() - 1.0) > 1e-5:
            raise ValueError("mixture probabilities must sum to one")
        object.__setattr__(self, "log_p", np.log(self.p))
        object.__setattr__(self, "inv_sigma2", 1.0 / self.sigma2)
        object.__setattr__(self, "inv_two_sigma2", 0.5 / self.sigma2)
        # log p_j - 0.5 log(2 pi sigma_j^2): constant part of each component's
        # log posterior weight.
        object.__setattr__(
            self,
            "log_norm",
            self.log_p - 0.5 * np.log(2.0 * np.pi * self.sigma2),
        )
        for name in ("log_p", "inv_sigma2", "inv_two_sigma2", "log_norm"):
            getattr(self, name).setflags(write=False)

    @property
    def n_components(self) -> int:
        return self.p.size

    def mean(self) -> float:
        return float(self.p @ self.mu)

    def variance(self) -> float:
        return float(self.p @ (self.sigma2 + self.mu**2) - self.mean() ** 2)


#: The fixed table used everywhere; ten components.
DEFAULT_MIXTURE = MixtureTable(np.array(_P), np.array(_MU), np.array(_SIGMA2))


def log_chi2_density(x):
    """Density of log(eps^2) for standard normal eps.

    ``p(x) = (2 pi)^{-1/2} exp(-(exp(x) - x) / 2)``, evaluated elementwise.
    """
    x = np.asarray(x, dtype=float)
    return np.exp(-0.5 * (np.exp(x) - x)) / np.sqrt(2.0 * np.pi)


def log_chi2_logpdf(x):
    """Log-density of log(eps^2); safe for very negative x."""
    x = np.asarray(x, dtype=float)
    return -0.5 * (np.exp(x) - x) - 0.5 * np.log(2.0 * np.pi)


def mixture_logpdf(x, table: MixtureTable = DEFAULT_MIXTURE):
    """Log-density of the normal mixture, evaluated with a max-shift.

    Linear-space evaluation underflows around x < -30, which breaks the
    indicator posterior; all mixture evaluations therefore go through here.
    """
    x = np.asarray(x, dtype=float)
    logw = table.log_norm - (x[..., None] - table.mu) ** 2 * table.inv_two_sigma2
    m = logw.max(axis=-1)
    return m + np.log(np.exp(logw - m[..., None]).sum(axis=-1))


def mixture_density(x, table: MixtureTable = DEFAULT_MIXTURE):
    """Density of the normal mixture approximation."""
    return np.exp(mixture_logpdf(x, table))


def sample_mixture_error(rng, size=None, table: MixtureTable = DEFAULT_MIXTURE):
    """Draw (component index, value) pairs from the mixture.

    The component is categorical with the table probabilities; the value is
    normal with that component's mean and variance.  Component indices are
    0-based.
    """
    u = rng.random(size)
    z = np.searchsorted(np.cumsum(table.p), u, side="right")
    z = np.minimum(z, table.n_components - 1)
    value = table.mu[z] + np.sqrt(table.sigma2[z]) * rng.standard_normal(size)
    return z, value
