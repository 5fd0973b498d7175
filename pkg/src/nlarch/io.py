"""File formats: panel CSV, weight CSV / edge list, prior JSON, result files.

All numeric output uses 17 significant digits so write-then-read round-trips
are lossless for float64.
"""

import csv
import json
import os

import numpy as np

from .core import DataError, PanelData, WeightMatrix
from .inference import PosteriorDraws
from .sampler import PriorSpec

_FMT = "%.17g"


def _fmt(x) -> str:
    return _FMT % float(x)


# ---------------------------------------------------------------------------
# panels: long CSV with header unit,time,y[,x1..xk]; time 0 is the initial row
# ---------------------------------------------------------------------------

def parse_panel_csv(path) -> PanelData:
    """Read a long-format panel; time index 0 supplies the initial vector.

    Units are ordered lexicographically by their id.  Times must be the
    dense set 0..T for every unit; duplicates, gaps, and non-numeric cells
    are reported with their line number.  Covariate cells may be empty at
    time 0 (they are not used there).
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        if header[:3] != ["unit", "time", "y"]:
            raise DataError(f"{path}: header must start with unit,time,y, got {header[:3]}")
        k = len(header) - 3
        rows = {}
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise DataError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
            unit = row[0].strip()
            try:
                t = int(row[1])
            except ValueError:
                raise DataError(f"{path}:{lineno}: non-integer time {row[1]!r}") from None
            if t < 0:
                raise DataError(f"{path}:{lineno}: negative time {t}")
            try:
                y = float(row[2])
            except ValueError:
                raise DataError(f"{path}:{lineno}: non-numeric y {row[2]!r}") from None
            xs = []
            for j, cell in enumerate(row[3:], start=1):
                cell = cell.strip()
                if cell == "":
                    if t == 0:
                        xs.append(0.0)
                        continue
                    raise DataError(f"{path}:{lineno}: empty x{j} at time {t}")
                try:
                    xs.append(float(cell))
                except ValueError:
                    raise DataError(f"{path}:{lineno}: non-numeric x{j} {cell!r}") from None
            key = (unit, t)
            if key in rows:
                raise DataError(f"{path}:{lineno}: duplicate (unit, time) = {key}")
            rows[key] = (y, xs)

    units = sorted({u for u, _ in rows})
    times = sorted({t for _, t in rows})
    if not units or not times:
        raise DataError(f"{path}: no data rows")
    if times != list(range(len(times))):
        raise DataError(f"{path}: times must be dense 0..T, got {times[:5]}...")
    if times[-1] < 1:
        raise DataError(f"{path}: need at least times 0 and 1")
    n, T = len(units), times[-1]
    Y = np.empty((n, T))
    Y0 = np.empty(n)
    X = np.empty((n, T, k))
    for i, u in enumerate(units):
        for t in range(T + 1):
            if (u, t) not in rows:
                raise DataError(f"{path}: missing cell (unit={u}, time={t})")
            y, xs = rows[(u, t)]
            if t == 0:
                Y0[i] = y
            else:
                Y[i, t - 1] = y
                X[i, t - 1, :] = xs
    return PanelData(Y=Y, Y0=Y0, X=X, unit_ids=tuple(units))


def write_panel_csv(path, panel: PanelData):
    """Write a panel in the long format read by :func:`parse_panel_csv`."""
    units = panel.unit_ids or tuple(f"u{i:04d}" for i in range(panel.n))
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["unit", "time", "y"] + [f"x{j + 1}" for j in range(panel.k)])
        for i, u in enumerate(units):
            wr.writerow([u, 0, _fmt(panel.Y0[i])] + [""] * panel.k)
            for t in range(panel.T):
                wr.writerow([u, t + 1, _fmt(panel.Y[i, t])]
                            + [_fmt(v) for v in panel.X[i, t]])


# ---------------------------------------------------------------------------
# weight matrices: dense CSV (no header) and i,j,weight edge list
# ---------------------------------------------------------------------------

def write_weights_dense(path, M: WeightMatrix):
    np.savetxt(path, M.M, fmt=_FMT, delimiter=",")


def write_weights_edgelist(path, M: WeightMatrix):
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["i", "j", "weight"])
        for i, j in zip(*np.nonzero(M.M)):
            wr.writerow([i, j, _fmt(M.M[i, j])])


def read_weights(path, n: int = None, row_normalized: str = "auto") -> WeightMatrix:
    """Read a weight matrix from a dense CSV or an i,j,weight edge list.

    The format is sniffed from the first line.  ``row_normalized`` may be
    ``True``, ``False`` or ``"auto"`` (flag set when every nonzero row sums
    to one).  For edge lists, ``n`` overrides the inferred node count so
    trailing isolated nodes are representable.
    """
    with open(path, newline="") as fh:
        first = fh.readline()
    if first.strip().lower().replace(" ", "").startswith("i,j,weight"):
        M = _read_edgelist(path, n)
    else:
        M = np.loadtxt(path, delimiter=",", ndmin=2)
        if M.shape[0] != M.shape[1]:
            raise DataError(f"{path}: dense weight matrix must be square, got {M.shape}")
    if row_normalized == "auto":
        sums = M.sum(axis=1)
        row_normalized = bool(np.all((np.abs(sums - 1.0) <= 1e-12) | (sums == 0)))
    return WeightMatrix(M, row_normalized=bool(row_normalized))


def _read_edgelist(path, n):
    entries = []
    max_idx = -1
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        next(reader)  # header
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                i, j, wgt = int(row[0]), int(row[1]), float(row[2])
            except (ValueError, IndexError):
                raise DataError(f"{path}:{lineno}: malformed edge row {row!r}") from None
            if i < 0 or j < 0:
                raise DataError(f"{path}:{lineno}: negative node index")
            entries.append((i, j, wgt))
            max_idx = max(max_idx, i, j)
    size = n if n is not None else max_idx + 1
    if size <= max_idx:
        raise DataError(f"{path}: n={n} smaller than max node index {max_idx}")
    M = np.zeros((size, size))
    for i, j, wgt in entries:
        M[i, j] = wgt
    return M


# ---------------------------------------------------------------------------
# prior JSON
# ---------------------------------------------------------------------------

def load_prior_json(path) -> PriorSpec:
    """PriorSpec from JSON; absent keys keep the diffuse defaults."""
    with open(path) as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DataError(f"{path}: invalid JSON ({exc})") from None
    allowed = {"b_phi", "B_phi", "b_beta", "B_beta", "b_lambda", "B_lambda",
               "rho_support", "enforce_stability"}
    unknown = set(obj) - allowed
    if unknown:
        raise DataError(f"{path}: unknown prior keys {sorted(unknown)}")
    if "rho_support" in obj and obj["rho_support"] is not None:
        obj["rho_support"] = tuple(obj["rho_support"])
    return PriorSpec(**obj)


# ---------------------------------------------------------------------------
# chain outputs
# ---------------------------------------------------------------------------

def write_draws_csv(path, draws: PosteriorDraws):
    """One row per retained iteration: named parameters, loglik, extras."""
    names = list(draws.names) + list(draws.extra_names())
    cols = [draws.column(n) for n in names]
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["iteration"] + names + ["loglik"])
        for r in range(draws.draw_count):
            wr.writerow([r] + [_fmt(c[r]) for c in cols] + [_fmt(draws.loglik[r])])


def read_draws_csv(path):
    """Columns of a draws CSV as a dict of arrays (for `summarize`)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [row for row in reader if row]
    try:
        data = np.array([[float(v) for v in row] for row in rows])
    except ValueError as exc:
        raise DataError(f"{path}: non-numeric draw value ({exc})") from None
    if data.ndim != 2 or data.shape[1] != len(header):
        raise DataError(f"{path}: ragged draws file")
    return {name: data[:, j] for j, name in enumerate(header)}


def write_volatility_csv(path, vol, unit_ids=None):
    n, T = vol.median.shape
    units = unit_ids or tuple(f"u{i:04d}" for i in range(n))
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["unit", "time", "median", "lo", "hi"])
        for i in range(n):
            for t in range(T):
                wr.writerow([units[i], t + 1, _fmt(vol.median[i, t]),
                             _fmt(vol.lo[i, t]), _fmt(vol.hi[i, t])])


def write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, default=_json_default)
        fh.write("\n")


def _json_default(x):
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, (np.integer, np.floating)):
        return x.item()
    raise TypeError(f"not JSON serializable: {type(x)}")


def ensure_dir(path):
    os.makedirs(path, exist_ok=True)
    probe = os.path.join(path, ".write_probe")
    try:
        with open(probe, "w"):
            pass
        os.remove(probe)
    except OSError as exc:
        raise DataError(f"output directory {path!r} not writable: {exc}") from None
