"""Panel containers, weight matrices and the shared linear-algebra kernels.

Everything here is immutable after construction and safe to share across
concurrently running chains.
"""

from dataclasses import dataclass, field

import numpy as np


class NlarchError(Exception):
    """Base class for all package errors."""


class DataError(NlarchError):
    """Invalid input data or file format."""


class StabilityError(NlarchError):
    """Parameter values outside the stable / invertible region."""


class ChainError(NlarchError):
    """An MCMC chain failed (NaN draw, exhausted rejection budget, ...)."""


def _readonly(a, dtype=float):
    a = np.ascontiguousarray(a, dtype=dtype)
    a.setflags(write=False)
    return a


# ---------------------------------------------------------------------------
# panels
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PanelData:
    """Observed outcomes over n units and T periods plus the initial vector.

    Parameters
    ----------
    Y : (n, T) array
        Outcome for unit i at period t = 1..T.
    Y0 : (n,) array
        Observed initial outcome vector (period 0).
    X : (n, T, k) array, optional
        Exogenous covariates for periods 1..T; k may be zero.
    unit_ids : sequence of str, optional
        Stable unit labels, used by the CSV round-trip.
    """

    Y: np.ndarray
    Y0: np.ndarray
    X: np.ndarray = None
    unit_ids: tuple = None

    def __post_init__(self):
        Y = _readonly(self.Y)
        Y0 = _readonly(self.Y0)
        if Y.ndim != 2 or Y0.ndim != 1 or Y0.shape[0] != Y.shape[0]:
            raise DataError(f"inconsistent panel shapes Y{Y.shape}, Y0{Y0.shape}")
        X = self.X
        if X is None:
            X = np.zeros((Y.shape[0], Y.shape[1], 0))
        X = _readonly(X)
        if X.ndim != 3 or X.shape[:2] != Y.shape:
            raise DataError(f"covariate tensor shape {X.shape} does not match Y {Y.shape}")
        for name, arr in (("Y", Y), ("Y0", Y0), ("X", X)):
            if not np.all(np.isfinite(arr)):
                idx = tuple(int(v) for v in np.argwhere(~np.isfinite(arr))[0])
                raise DataError(f"non-finite entry in {name} at index {idx}")
        object.__setattr__(self, "Y", Y)
        object.__setattr__(self, "Y0", Y0)
        object.__setattr__(self, "X", X)
        if self.unit_ids is not None:
            ids = tuple(str(u) for u in self.unit_ids)
            if len(ids) != Y.shape[0]:
                raise DataError("unit_ids length does not match n")
            object.__setattr__(self, "unit_ids", ids)

    @property
    def n(self) -> int:
        return self.Y.shape[0]

    @property
    def T(self) -> int:
        return self.Y.shape[1]

    @property
    def k(self) -> int:
        return self.X.shape[2]


@dataclass(frozen=True)
class LogSquaredPanel:
    """log Y^2 of a panel, guaranteed finite everywhere."""

    ystar: np.ndarray
    ystar0: np.ndarray
    floored_cells: int = 0

    def __post_init__(self):
        object.__setattr__(self, "ystar", _readonly(self.ystar))
        object.__setattr__(self, "ystar0", _readonly(self.ystar0))
        if not (np.all(np.isfinite(self.ystar)) and np.all(np.isfinite(self.ystar0))):
            raise DataError("log-squared panel contains non-finite entries")

    @property
    def n(self) -> int:
        return self.ystar.shape[0]

    @property
    def T(self) -> int:
        return self.ystar.shape[1]


def log_squared_transform(panel: PanelData, floor: float = 1e-12) -> LogSquaredPanel:
    """Apply ``y -> log(max(y^2, floor))`` to a panel, including Y0.

    The floor keeps the transform total when outcomes are exactly (or
    numerically) zero; the number of floored cells is reported on the result
    so silent distortion is visible to the caller.
    """
    if not floor > 0:
        raise DataError("floor must be positive")
    for name, arr in (("Y", panel.Y), ("Y0", panel.Y0)):
        if not np.all(np.isfinite(arr)):
            idx = tuple(int(v) for v in np.argwhere(~np.isfinite(np.atleast_2d(arr)))[0])
            raise DataError(f"non-finite entry in {name} at {idx}")
    y2 = panel.Y**2
    y02 = panel.Y0**2
    floored = int((y2 < floor).sum() + (y02 < floor).sum())
    return LogSquaredPanel(
        ystar=np.log(np.maximum(y2, floor)),
        ystar0=np.log(np.maximum(y02, floor)),
        floored_cells=floored,
    )


# ---------------------------------------------------------------------------
# weight matrices
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WeightMatrix:
    """Nonnegative n x n network weights with zero diagonal.

    ``spectral_radius_tau`` is cached at construction for matrices that are
    not row-normalized; it bounds the invertibility range of I - rho*M.
    """

    M: np.ndarray
    row_normalized: bool = False
    spectral_radius_tau: float = field(default=None)

    def __post_init__(self):
        M = _readonly(self.M)
        if M.ndim != 2 or M.shape[0] != M.shape[1]:
            raise DataError(f"weight matrix must be square, got {M.shape}")
        if np.any(M < 0):
            i, j = np.argwhere(M < 0)[0]
            raise DataError(f"negative weight at ({i}, {j})")
        if np.any(np.diag(M) != 0):
            raise DataError("weight matrix diagonal must be zero")
        if self.row_normalized:
            sums = M.sum(axis=1)
            bad = np.abs(sums - 1.0) > 1e-12
            if np.any(bad & (sums != 0)):
                raise DataError("row_normalized set but a nonzero row does not sum to 1")
        object.__setattr__(self, "M", M)
        tau = self.spectral_radius_tau
        if tau is None:
            tau = 1.0 if self.row_normalized else float(np.abs(np.linalg.eigvals(M)).max())
        object.__setattr__(self, "spectral_radius_tau", float(tau))

    @property
    def n(self) -> int:
        return self.M.shape[0]

    def rho_range(self):
        """Open interval of rho for which I - rho*M is invertible."""
        if self.row_normalized:
            return (-1.0, 1.0)
        tau = self.spectral_radius_tau
        if tau <= 0:
            return (-np.inf, np.inf)
        return (-1.0 / tau, 1.0 / tau)


def row_normalize(M) -> WeightMatrix:
    """Divide each row with positive sum by that sum; zero rows stay zero."""
    raw = M.M if isinstance(M, WeightMatrix) else np.asarray(M, dtype=float)
    if np.any(raw < 0):
        raise DataError("cannot row-normalize a matrix with negative entries")
    sums = raw.sum(axis=1, keepdims=True)
    out = np.divide(raw, np.where(sums == 0, 1.0, sums))
    return WeightMatrix(out, row_normalized=True)


def queen_contiguity(rows: int, cols: int) -> WeightMatrix:
    """Binary queen-contiguity weights on a rows x cols lattice.

    Cells are indexed row-major; two cells are neighbors when they are
    horizontally, vertically or diagonally adjacent.  The result is symmetric
    and unnormalized.
    """
    n = rows * cols
    if rows < 1 or cols < 1 or n < 2:
        raise DataError("lattice must contain at least two cells")
    M = np.zeros((n, n))
    for r in range(rows):
        for c in range(cols):
            i = r * cols + c
            for dr in (-1, 0, 1):
                for dc in (-1, 0, 1):
                    if dr == 0 and dc == 0:
                        continue
                    rr, cc = r + dr, c + dc
                    if 0 <= rr < rows and 0 <= cc < cols:
                        M[i, rr * cols + cc] = 1.0
    return WeightMatrix(M, row_normalized=False)


def correlation_network(returns, cap: float = 1e6, row_normalized: bool = True) -> WeightMatrix:
    """Weights from the correlation distance between rows of a returns panel.

    For each pair (i, j) the Pearson correlation r_ij is mapped to the
    distance ``d_ij = sqrt(2 (1 - r_ij))`` and the weight is ``1 / d_ij``,
    capped at ``cap`` so perfectly correlated series stay finite.  The raw
    weights are symmetric; by default the matrix is row-normalized afterward
    (pass ``row_normalized=False`` to keep the raw weights).
    """
    R = np.asarray(returns, dtype=float)
    if R.ndim != 2 or R.shape[0] < 2:
        raise DataError("returns must be an (n, T) matrix with n >= 2")
    if not cap > 0:
        raise DataError("cap must be positive")
    sd = R.std(axis=1)
    if np.any(sd == 0):
        raise DataError(f"constant series at row {int(np.argwhere(sd == 0)[0, 0])}")
    corr = np.corrcoef(R)
    d = np.sqrt(np.maximum(2.0 * (1.0 - corr), 0.0))
    with np.errstate(divide="ignore"):
        W = np.where(d > 0, 1.0 / np.where(d == 0, 1.0, d), np.inf)
    W = np.minimum(W, cap)
    np.fill_diagonal(W, 0.0)
    raw = WeightMatrix(W, row_normalized=False)
    return row_normalize(raw) if row_normalized else raw


# ---------------------------------------------------------------------------
# spatial parameters and the S(rho) facility
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SpatialParams:
    """Spatial (rho), temporal (gamma) and spatiotemporal (delta) effects."""

    rho: float
    gamma: float
    delta: float

    def triple_sum(self) -> float:
        return abs(self.rho) + abs(self.gamma) + abs(self.delta)


def build_S(M: WeightMatrix, rho: float) -> np.ndarray:
    """Return I - rho*M, rejecting rho outside the invertibility interval."""
    lo, hi = M.rho_range()
    if not (lo < rho < hi):
        raise StabilityError(f"rho={rho} outside invertibility range ({lo:.6g}, {hi:.6g})")
    return np.eye(M.n) - rho * M.M


class SpatialOperator:
    """Solve/determinant facility for S(rho) = I - rho*M with M fixed.

    The complex spectrum of M is computed once, so log|det S(rho)| is O(n)
    per evaluation; dense factorizations back the solve path and the
    cross-check used in the tests.
    """

    def __init__(self, M: WeightMatrix):
        self.M = M
        self.eigvals = np.linalg.eigvals(M.M)

    def S(self, rho: float) -> np.ndarray:
        return build_S(self.M, rho)

    def apply(self, rho: float, V: np.ndarray) -> np.ndarray:
        """S(rho) @ V without forming S."""
        return V - rho * (self.M.M @ V)

    def solve(self, rho: float, B: np.ndarray) -> np.ndarray:
        return np.linalg.solve(self.S(rho), B)

    def logdet(self, rho: float) -> float:
        """log|det S(rho)| via the cached spectrum of M."""
        lo, hi = self.M.rho_range()
        if not (lo < rho < hi):
            raise StabilityError(f"rho={rho} outside invertibility range ({lo:.6g}, {hi:.6g})")
        return float(np.log(np.abs(1.0 - rho * self.eigvals)).sum())

    def logdet_lu(self, rho: float) -> float:
        """log|det S(rho)| via dense LU; cross-check for :meth:`logdet`."""
        sign, ld = np.linalg.slogdet(self.S(rho))
        if sign == 0:
            raise StabilityError(f"S(rho) singular at rho={rho}")
        return float(ld)


@dataclass(frozen=True)
class StabilityVerdict:
    stable: bool
    criterion: str  # "sufficient" or "eigenvalue"
    triple_sum: float
    spectral_radius: float = None


def stability_check(params: SpatialParams, M: WeightMatrix) -> StabilityVerdict:
    """Decide stability of the log-squared process under (rho, gamma, delta).

    With a row-normalized M, |rho| + |gamma| + |delta| < 1 is sufficient.
    When that test is unavailable or fails, the spectral radius of
    ``A = S(rho)^{-1} (gamma I + delta M)`` decides.
    """
    s = params.triple_sum()
    if M.row_normalized and s < 1.0:
        return StabilityVerdict(True, "sufficient", s)
    lo, hi = M.rho_range()
    if not (lo < params.rho < hi):
        return StabilityVerdict(False, "eigenvalue", s, spectral_radius=np.inf)
    A = np.linalg.solve(build_S(M, params.rho),
                        params.gamma * np.eye(M.n) + params.delta * M.M)
    rad = float(np.abs(np.linalg.eigvals(A)).max())
    return StabilityVerdict(rad < 1.0, "eigenvalue", s, spectral_radius=rad)
