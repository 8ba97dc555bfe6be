"""Estimate reports: per-ball or per-radius rows plus an optional fitted exponent."""
import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field as dc_field

import numpy as np

__all__ = ["Row", "EstimateReport", "fit_loglog", "stability", "CSV_COLUMNS", "fmt"]

CSV_COLUMNS = ("name", "r", "LHS", "RHS", "ratio", "pass")


def fmt(x):
    """Round-trippable, platform-stable float formatting."""
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    return repr(float(x))


@dataclass
class Row:
    name: str
    r: float
    lhs: float
    rhs: float
    ratio: float
    passed: bool = True

    def as_csv(self):
        return [self.name, fmt(self.r), fmt(self.lhs), fmt(self.rhs), fmt(self.ratio),
                fmt(self.passed)]


@dataclass
class EstimateReport:
    name: str
    rows: list = dc_field(default_factory=list)
    exponent: float = None
    exponent_residual: float = None
    passed: bool = True
    metadata: dict = dc_field(default_factory=dict)

    def __bool__(self):
        return bool(self.passed)

    @property
    def ratios(self):
        return np.array([row.ratio for row in self.rows])

    @property
    def lhs(self):
        return np.array([row.lhs for row in self.rows])

    @property
    def rhs(self):
        return np.array([row.rhs for row in self.rows])

    def to_csv(self, path=None, header=True):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        if header:
            w.writerow(CSV_COLUMNS)
        for row in self.rows:
            w.writerow(row.as_csv())
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text

    def to_dict(self):
        out = asdict(self)
        out["rows"] = [asdict(r) for r in self.rows]
        return _jsonable(out)

    def to_json(self, path=None):
        text = json.dumps(self.to_dict(), indent=2, sort_keys=True)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text + "\n")
        return text


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if np.isfinite(x) else str(x)
    return obj


def fit_loglog(x, y, return_prediction=False):
    """Unweighted least-squares slope of log y against log x, with its RMS residual."""
    x, y = np.asarray(x, float), np.asarray(y, float)
    if x.size < 3:
        raise ValueError("an exponent fit needs at least 3 radii")
    if np.any(y <= 0):
        raise ValueError("log-log fit needs positive values")
    A = np.stack([np.log(x), np.ones_like(x)], axis=1)
    coef, *_ = np.linalg.lstsq(A, np.log(y), rcond=None)
    pred = A @ coef
    rms = float(np.sqrt(np.mean((np.log(y) - pred) ** 2)))
    if return_prediction:
        return float(coef[0]), rms, np.exp(pred)
    return float(coef[0]), rms


def stability(coarse, fine, tol=0.05, atol=1e-10):
    """Row-by-row relative change of the ratios between two resolutions.

    A row passes when ``|fine - coarse| <= tol |coarse| + atol``; ``atol``
    keeps ratios that are both at rounding level from counting as unstable.
    """
    if len(coarse.rows) != len(fine.rows):
        raise ValueError("reports have different row counts")
    rows, ok = [], True
    for a, b in zip(coarse.rows, fine.rows):
        diff = abs(b.ratio - a.ratio)
        change = diff / abs(a.ratio) if a.ratio != 0 else (0.0 if diff == 0 else math.inf)
        passed = bool(diff <= tol * abs(a.ratio) + atol)
        ok &= passed
        rows.append(Row(a.name, a.r, a.ratio, b.ratio, change, passed))
    return EstimateReport(f"stability:{coarse.name}", rows, passed=ok,
                          metadata={"tol": tol, "atol": atol, "h_coarse": coarse.metadata.get("h"),
                                    "h_fine": fine.metadata.get("h")})
