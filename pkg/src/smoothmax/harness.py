"""Monte Carlo experiments on E[M_n]: running cells, fitting exponents, reports.

A *cell* is one ``(p, q, δ, n)`` combination run for a number of replicates.
Replicate ``r`` of a cell always uses the stream ``SeedSpec(master_seed,
cell_index(p, q, δ, n), r)``, so outputs do not depend on scheduling.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy import stats
from sklearn.base import BaseEstimator, RegressorMixin

from .geometry import PLike, PNorm, as_pnorm
from .maxima import count_maxima_batch, maximal_points
from .sampling import SeedSpec, SmoothedDist, cell_index, make_rng, sample_smoothed
from .theory import RegimePrediction, regime

SCHEMA_VERSION = 1
RECORD_FIELDS = ("p", "q", "delta", "n", "replicate", "seed_digest", "m_n", "wall_time_s")
MAX_POINTS_PER_CELL = 10**9
DEFAULT_TOLERANCE = 0.07
MIN_FIT_POINTS = 4
MIN_FIT_REPLICATES = 30


# --------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class DeltaRule:
    """Either a fixed δ or the power rule ``δ = scale · n^power``."""

    value: float | None = None
    power: float | None = None
    scale: float = 1.0

    def __post_init__(self):
        if (self.value is None) == (self.power is None):
            raise ValueError("a delta rule needs exactly one of 'value' or 'power'")
        if self.value is not None and not (math.isfinite(self.value) and self.value >= 0):
            raise ValueError(f"delta must be finite and >= 0, got {self.value}")
        if self.scale <= 0:
            raise ValueError("scale must be positive")

    def at(self, n: int) -> float:
        if self.value is not None:
            return float(self.value)
        return float(self.scale * n**self.power)

    @classmethod
    def parse(cls, spec) -> "DeltaRule":
        """Accepts a number, ``"n^a"``, or a dict with ``value``/``power``/``scale``."""
        if isinstance(spec, DeltaRule):
            return spec
        if isinstance(spec, dict):
            return cls(**spec)
        if isinstance(spec, str):
            s = spec.strip().replace(" ", "")
            if s.startswith("n^"):
                return cls(power=float(s[2:].strip("()")))
            return cls(value=float(s))
        return cls(value=float(spec))

    def label(self) -> str:
        if self.value is not None:
            return f"{self.value:g}"
        pre = "" if self.scale == 1 else f"{self.scale:g}*"
        return f"{pre}n^{self.power:g}"

    def to_json(self):
        if self.value is not None:
            return self.value
        return {"power": self.power, "scale": self.scale}


@dataclass
class ExperimentConfig:
    pairs: list[tuple[PNorm, PNorm]]
    delta_spec: list[DeltaRule]
    n_grid: list[int]
    replicates: int
    master_seed: int = 0
    records_path: str = "records.csv"
    fits_path: str = "fits.json"
    verdicts_path: str = "verdicts.json"
    plot_dir: str = "plots"
    workers: int = 1

    def __post_init__(self):
        self.pairs = [(as_pnorm(p), as_pnorm(q)) for p, q in self.pairs]
        self.delta_spec = [DeltaRule.parse(d) for d in self.delta_spec]
        self.n_grid = [int(n) for n in self.n_grid]
        if any(n < 1 for n in self.n_grid):
            raise ValueError("n values must be positive")
        if any(b <= a for a, b in zip(self.n_grid, self.n_grid[1:])):
            raise ValueError("n_grid must be strictly increasing")
        if self.replicates < 1:
            raise ValueError("replicates must be positive")
        SeedSpec(self.master_seed)  # range check

    def fit_ready(self) -> bool:
        """Whether the grid meets the minimum sizes required for a fit."""
        return len(self.n_grid) >= MIN_FIT_POINTS and self.replicates >= MIN_FIT_REPLICATES

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = set(cls.__dataclass_fields__)
        extra = set(d) - known
        if extra:
            raise ValueError(f"unknown config fields: {sorted(extra)}")
        return cls(**d)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["pairs"] = [[str(p), str(q)] for p, q in self.pairs]
        d["delta_spec"] = [r.to_json() for r in self.delta_spec]
        return d


@dataclass(frozen=True)
class ExperimentRecord:
    p: str
    q: str
    delta: float
    n: int
    replicate: int
    seed_digest: str
    m_n: int
    wall_time_s: float = 0.0

    def row(self) -> list:
        return [self.p, self.q, repr(float(self.delta)), self.n, self.replicate,
                self.seed_digest, self.m_n, f"{self.wall_time_s:.6f}"]


# --------------------------------------------------------------------------
# running cells


def _chunk_counts(dist: SmoothedDist, n: int, specs: Sequence[SeedSpec]) -> np.ndarray:
    pts = np.empty((len(specs), n, 2))
    for i, s in enumerate(specs):
        pts[i] = sample_smoothed(dist, make_rng(s), n)
    return count_maxima_batch(pts)


def _run_block(args) -> tuple[int, list[int], float]:
    p, q, delta, n, master_seed, cell, first, last = args
    dist = SmoothedDist(p, q, delta)
    t0 = time.perf_counter()
    specs = [SeedSpec(master_seed, cell, r) for r in range(first, last)]
    # batches of at most ~4M coordinates keep memory flat
    per = max(1, (1 << 21) // n)
    counts = [_chunk_counts(dist, n, specs[i:i + per]) for i in range(0, len(specs), per)]
    return first, [int(c) for c in np.concatenate(counts)], time.perf_counter() - t0


def run_cell(p: PLike, q: PLike, delta: float, n: int, replicates: int, master_seed: int = 0,
             workers: int = 1, timing: bool = False) -> list[ExperimentRecord]:
    """Maxima counts of ``replicates`` independent n-point samples.

    Records are ordered by replicate whatever ``workers`` is.  Wall time is
    recorded only with ``timing=True`` (as the block time divided evenly), so
    that by default the output is byte-for-byte reproducible.
    """
    p, q = as_pnorm(p), as_pnorm(q)
    n, replicates = int(n), int(replicates)
    if n < 1 or replicates < 1:
        raise ValueError("n and replicates must be positive")
    if n * replicates > MAX_POINTS_PER_CELL:
        raise ValueError(f"cell needs {n * replicates:.3g} points, above the guard of {MAX_POINTS_PER_CELL:.0e}")
    SmoothedDist(p, q, delta)  # validation
    cell = cell_index(p, q, delta, n)
    n_blocks = max(1, min(workers * 4, replicates)) if workers > 1 else 1
    edges = np.linspace(0, replicates, n_blocks + 1).astype(int)
    jobs = [(p, q, float(delta), n, master_seed, cell, int(a), int(b))
            for a, b in zip(edges[:-1], edges[1:]) if b > a]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_run_block, jobs))
    else:
        results = [_run_block(j) for j in jobs]
    results.sort(key=lambda r: r[0])
    out = []
    for first, counts, secs in results:
        each = secs / len(counts) if timing else 0.0
        for k, m in enumerate(counts):
            r = first + k
            out.append(ExperimentRecord(str(p), str(q), float(delta), n, r,
                                        SeedSpec(master_seed, cell, r).digest(), m, each))
    return out


def run_experiment(config: ExperimentConfig, timing: bool = False) -> list[ExperimentRecord]:
    records = []
    for p, q in config.pairs:
        for rule in config.delta_spec:
            for n in config.n_grid:
                records += run_cell(p, q, rule.at(n), n, config.replicates, config.master_seed,
                                    workers=config.workers, timing=timing)
    return records


# --------------------------------------------------------------------------
# aggregation and fitting


@dataclass(frozen=True)
class CellSummary:
    p: str
    q: str
    delta: float
    n: int
    replicates: int
    mean: float
    stderr: float


def summarize(records: Iterable[ExperimentRecord]) -> list[CellSummary]:
    """Mean and standard error per ``(p, q, δ, n)``, sorted by key."""
    groups: dict[tuple, list[int]] = defaultdict(list)
    for r in records:
        groups[(r.p, r.q, float(r.delta), int(r.n))].append(int(r.m_n))
    out = []
    for key in sorted(groups, key=lambda k: (k[0], k[1], k[3], k[2])):
        # sort the counts so the floating-point sums do not depend on record order
        v = np.sort(np.asarray(groups[key], dtype=float))
        se = float(v.std(ddof=1) / math.sqrt(len(v))) if len(v) > 1 else float("nan")
        out.append(CellSummary(*key, len(v), float(math.fsum(v) / len(v)), se))
    return out


@dataclass
class FitResult:
    slope: float
    intercept: float
    slope_ci95: tuple[float, float]
    r_squared: float
    points_used: int
    slope_stderr: float = float("nan")
    curvature: float = float("nan")  # quadratic coefficient of a log-log fit
    residuals: list[float] = field(default_factory=list)
    n: list[int] = field(default_factory=list)
    mean: list[float] = field(default_factory=list)
    stderr: list[float] = field(default_factory=list)
    pair: tuple[str, str] | None = None
    delta_label: str | None = None
    deltas: list[float] = field(default_factory=list)

    def to_json(self) -> dict:
        d = asdict(self)
        d["slope_ci95"] = list(self.slope_ci95)
        d["pair"] = list(self.pair) if self.pair else None
        return d


def _weights(mean: np.ndarray, se: np.ndarray) -> np.ndarray:
    """Inverse variance of log(mean), i.e. (mean/stderr)²."""
    se = np.asarray(se, dtype=float)
    ok = np.isfinite(se) & (se > 0)
    if not ok.any():
        return np.ones_like(mean)
    se = np.where(ok, se, se[ok].min())
    return (mean / se) ** 2


class ExponentFitter(RegressorMixin, BaseEstimator):
    """Weighted least squares of log(mean M_n) on log n.

    ``fit(n, mean, stderr)``; ``predict(n)`` returns the fitted mean.
    """

    def __init__(self, confidence: float = 0.95):
        self.confidence = confidence

    def fit(self, X, y, sample_stderr=None):
        n = np.asarray(X, dtype=float).reshape(-1)
        mean = np.asarray(y, dtype=float).reshape(-1)
        if len(n) != len(mean):
            raise ValueError("n and mean must have the same length")
        if len(n) < 2 or np.ptp(np.log(n)) == 0:
            raise ValueError("singular design: need at least two distinct n values")
        if np.any(mean <= 0):
            raise ValueError("means must be positive to take logs")
        se = np.full_like(mean, np.nan) if sample_stderr is None else np.asarray(sample_stderr, float)
        w = _weights(mean, se)
        x, yl = np.log(n), np.log(mean)
        A = np.stack([np.ones_like(x), x], axis=1)
        sw = np.sqrt(w)
        coef, *_ = np.linalg.lstsq(A * sw[:, None], yl * sw, rcond=None)
        resid = yl - A @ coef
        k = len(n)
        dof = k - 2
        xtwx_inv = np.linalg.inv((A * w[:, None]).T @ A)
        if dof > 0:
            s2 = float(np.sum(w * resid**2) / dof)
            se_slope = math.sqrt(max(s2 * xtwx_inv[1, 1], 0.0))
            tq = float(stats.t.ppf(0.5 + self.confidence / 2, dof))
        else:
            se_slope, tq = float("nan"), float("nan")
        ybar = np.sum(w * yl) / np.sum(w)
        ss_tot = float(np.sum(w * (yl - ybar) ** 2))
        ss_res = float(np.sum(w * resid**2))
        self.intercept_, self.coef_ = float(coef[0]), float(coef[1])
        self.slope_stderr_ = se_slope
        self.slope_ci95_ = (self.coef_ - tq * se_slope, self.coef_ + tq * se_slope)
        self.r_squared_ = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
        self.residuals_ = resid
        if k >= 4:
            Q = np.stack([np.ones_like(x), x, x * x], axis=1)
            qc, *_ = np.linalg.lstsq(Q * sw[:, None], yl * sw, rcond=None)
            self.curvature_ = float(qc[2])
        else:
            self.curvature_ = float("nan")
        self.n_, self.mean_, self.stderr_ = n, mean, se
        return self

    def predict(self, X):
        return np.exp(self.intercept_ + self.coef_ * np.log(np.asarray(X, dtype=float)))

    def score(self, X, y, sample_weight=None):
        # R² in log space, the quantity the fit minimises
        yl = np.log(np.asarray(y, float))
        pred = np.log(self.predict(X))
        ss = np.sum((yl - yl.mean()) ** 2)
        return 1.0 - float(np.sum((yl - pred) ** 2) / ss) if ss > 0 else 1.0

    def result(self) -> FitResult:
        return FitResult(self.coef_, self.intercept_, tuple(map(float, self.slope_ci95_)),
                         float(self.r_squared_), len(self.n_), self.slope_stderr_, self.curvature_,
                         [float(r) for r in self.residuals_], [int(v) for v in self.n_],
                         [float(v) for v in self.mean_], [float(v) for v in self.stderr_])


def fit_exponent(records: Iterable[ExperimentRecord] | Sequence[CellSummary], strict: bool = True,
                 confidence: float = 0.95) -> FitResult:
    """Fit one exponent to the records of a single ``(pair, δ-rule)`` group.

    With ``strict`` the group must have at least 4 n values and at least 30
    replicates per n.  δ may vary with n (a power rule); the fitted group is
    keyed by the pair only.
    """
    items = list(records)
    cells = items if items and isinstance(items[0], CellSummary) else summarize(items)
    if not cells:
        raise ValueError("no records to fit")
    pairs = {(c.p, c.q) for c in cells}
    if len(pairs) != 1:
        raise ValueError(f"records mix several pairs: {sorted(pairs)}")
    by_n: dict[int, list[CellSummary]] = defaultdict(list)
    for c in cells:
        by_n[c.n].append(c)
    if any(len(v) > 1 for v in by_n.values()):
        raise ValueError("several delta values share one n; split the records by delta rule first")
    cells = sorted(cells, key=lambda c: c.n)
    if strict:
        if len(cells) < MIN_FIT_POINTS:
            raise ValueError(f"need at least {MIN_FIT_POINTS} n values, got {len(cells)}")
        low = [c.n for c in cells if c.replicates < MIN_FIT_REPLICATES]
        if low:
            raise ValueError(f"cells with fewer than {MIN_FIT_REPLICATES} replicates at n={low}")
    f = ExponentFitter(confidence).fit([c.n for c in cells], [c.mean for c in cells],
                                       [c.stderr for c in cells])
    res = f.result()
    res.pair = next(iter(pairs))
    res.deltas = [c.delta for c in cells]
    ds = set(res.deltas)
    res.delta_label = f"{cells[0].delta:g}" if len(ds) == 1 else _power_label(cells)
    return res


def _power_label(cells: Sequence[CellSummary]) -> str:
    x = np.log([c.n for c in cells])
    y = np.log([max(c.delta, 1e-300) for c in cells])
    a = np.polyfit(x, y, 1)[0]
    return f"n^{a:.4g}"


def group_records(records: Iterable[ExperimentRecord],
                  rules: Sequence[DeltaRule] | None = None) -> dict[tuple[str, str, str], list[ExperimentRecord]]:
    """Split records into fit groups keyed by ``(p, q, δ-rule label)``.

    Without ``rules`` every distinct δ is its own group.
    """
    groups: dict[tuple[str, str, str], list[ExperimentRecord]] = defaultdict(list)
    for r in records:
        label = None
        if rules:
            for rule in rules:
                if math.isclose(rule.at(r.n), r.delta, rel_tol=1e-12, abs_tol=0.0) or rule.at(r.n) == r.delta:
                    label = rule.label()
                    break
        if label is None:
            label = f"{r.delta:g}"
        groups[(r.p, r.q, label)].append(r)
    return dict(sorted(groups.items()))


# --------------------------------------------------------------------------
# verdicts


def _table_exponents() -> list[float]:
    return [0.0, 0.25, 2 / 7, 1 / 3, 0.5]


@dataclass
class Verdict:
    passed: bool
    expected_exponent: float
    slope: float
    tolerance: float
    growth: str
    path: str  # "exponent" or "log"
    message: str
    ln_r_squared: float | None = None
    neighbor_exponent: float | None = None
    closer_to_expected: bool | None = None
    curvature: float | None = None
    pair: tuple[str, str] | None = None
    delta_label: str | None = None

    def to_json(self) -> dict:
        d = asdict(self)
        d["pair"] = list(self.pair) if self.pair else None
        return d


def _ln_fit_r2(n, mean, stderr) -> float:
    x = np.log(np.asarray(n, float))
    y = np.asarray(mean, float)
    w = _weights(y, np.asarray(stderr, float)) / np.maximum(y, 1e-300) ** 2  # 1/stderr² on the mean scale
    A = np.stack([np.ones_like(x), x], axis=1)
    sw = np.sqrt(w)
    coef, *_ = np.linalg.lstsq(A * sw[:, None], y * sw, rcond=None)
    res = y - A @ coef
    ybar = np.sum(w * y) / np.sum(w)
    tot = float(np.sum(w * (y - ybar) ** 2))
    return 1.0 - float(np.sum(w * res**2)) / tot if tot > 0 else 1.0


def compare_to_theory(fit: FitResult, prediction: RegimePrediction,
                      tolerance: float = DEFAULT_TOLERANCE) -> Verdict:
    """PASS/FAIL of a fitted exponent against the table prediction.

    Logarithmic regimes pass when the power-law slope is within
    ``tolerance`` of 0, or when the mean is linear in ln n with r² ≥ 0.99
    and the power-law slope is at most 0.1.  Power regimes pass when the
    slope is within ``tolerance``; when another table exponent also lies
    within the tolerance (1/4 against 2/7) the slope must in addition be
    closer to the expected exponent than to that neighbour.
    """
    expected = prediction.expected_exponent
    pair = (str(prediction.pair[0]), str(prediction.pair[1]))
    base = dict(expected_exponent=expected, slope=fit.slope, tolerance=tolerance,
                growth=prediction.growth.label, curvature=fit.curvature, pair=fit.pair,
                delta_label=fit.delta_label)
    if fit.pair is not None and tuple(fit.pair) != pair:
        return Verdict(False, path="mismatch",
                       message=f"regime mismatch: fit is for {tuple(fit.pair)}, prediction for {pair}", **base)
    if fit.deltas and fit.n:
        # the prediction must describe the regime the data were taken in
        for n_i, d_i in zip(fit.n, fit.deltas):
            r = regime(prediction.pair[0], prediction.pair[1], d_i, n_i)
            if r.growth != prediction.growth:
                return Verdict(False, path="mismatch",
                               message=(f"regime mismatch at n={n_i}, delta={d_i:g}: data lie in "
                                        f"'{r.growth.label}', prediction says '{prediction.growth.label}'"),
                               **base)
    err = abs(fit.slope - expected)
    if prediction.log_regime:
        # either the power slope is already within tolerance of 0, or the
        # mean is linear in ln n and the power slope stays small
        r2 = _ln_fit_r2(fit.n, fit.mean, fit.stderr) if fit.n else float("nan")
        ok = err <= tolerance or (r2 >= 0.99 and fit.slope <= 0.1)
        msg = (f"power slope {fit.slope:.4f} (within {tolerance} of 0, or <= 0.1 with "
               f"r^2 >= 0.99 of mean vs ln n; r^2={r2:.4f})")
        return Verdict(ok, path="log", message=msg, ln_r_squared=r2, **base)
    others = [e for e in _table_exponents() if e != expected and abs(e - expected) <= tolerance]
    neighbor = min(others, key=lambda e: abs(e - expected)) if others else None
    closer = None if neighbor is None else abs(fit.slope - expected) < abs(fit.slope - neighbor)
    ok = err <= tolerance and (closer is None or closer)
    msg = f"slope {fit.slope:.4f} vs expected {expected:.4f}: |diff|={err:.4f}, tolerance {tolerance}"
    if neighbor is not None:
        msg += f"; neighbour exponent {neighbor:.4f}, slope {'is' if closer else 'is not'} closer to the expected one"
    return Verdict(ok, path="exponent", message=msg, neighbor_exponent=neighbor, closer_to_expected=closer, **base)


# --------------------------------------------------------------------------
# delta sweeps


@dataclass
class SweepResult:
    pair: tuple[str, str]
    n: int
    deltas: list[float]
    mean: list[float]
    stderr: list[float]
    delta_at_min: float
    symmetry_defect: dict[float, float]  # δ -> |m(δ) - m(1/δ)| / pooled stderr

    def branch_slope(self, lo: float, hi: float, trim: float = 0.0, baseline: float = 0.0) -> FitResult:
        """Log-log slope of ``mean - baseline`` against δ over ``lo <= δ <= hi``.

        ``trim`` drops that fraction of the interval (in log δ) at each end,
        keeping the fit away from the crossovers into neighbouring regimes.
        A positive ``baseline`` removes an additive floor such as the ln n
        level under ``ln n + √δ n^{1/4}``.
        """
        if trim:
            a, b = math.log(lo), math.log(hi)
            lo, hi = math.exp(a + trim * (b - a)), math.exp(b - trim * (b - a))
        d = np.asarray(self.deltas)
        sel = (d >= lo * (1 - 1e-9)) & (d <= hi * (1 + 1e-9))
        if sel.sum() < 2:
            raise ValueError("fewer than two grid points in the branch")
        y = np.asarray(self.mean)[sel] - baseline
        if np.any(y <= 0):
            raise ValueError("baseline is not below the branch means")
        f = ExponentFitter().fit(d[sel], y, np.asarray(self.stderr)[sel])
        return f.result()

    def plateau(self, upto: float) -> float:
        """Mean M_n averaged over the grid points with ``δ <= upto``."""
        d = np.asarray(self.deltas)
        sel = d <= upto * (1 + 1e-9)
        return float(np.mean(np.asarray(self.mean)[sel]))

    def max_min_ratio(self) -> float:
        return max(self.mean) / min(self.mean)

    def to_json(self) -> dict:
        d = asdict(self)
        d["symmetry_defect"] = {repr(k): v for k, v in self.symmetry_defect.items()}
        return d


def log_delta_grid(n: int, points_per_half: int = 6, lo_power: float = -0.5, hi_power: float = 0.5) -> np.ndarray:
    """Log-spaced δ grid over ``[n^lo, n^hi]``, symmetric under δ -> 1/δ when the powers are."""
    k = 2 * points_per_half + 1
    return np.exp(np.linspace(lo_power, hi_power, k) * math.log(n))


def delta_sweep(p: PLike, q: PLike, n: int, deltas: Sequence[float], replicates: int,
                master_seed: int = 0, workers: int = 1) -> SweepResult:
    deltas = [float(d) for d in deltas]
    means, ses = [], []
    for d in deltas:
        s = summarize(run_cell(p, q, d, n, replicates, master_seed, workers))[0]
        means.append(s.mean)
        ses.append(s.stderr)
    defect = {}
    arr = np.asarray(deltas)
    for i, d in enumerate(deltas):
        j = np.flatnonzero(np.isclose(arr, 1.0 / d, rtol=1e-9))
        if len(j):
            j = int(j[0])
            pooled = math.sqrt(ses[i] ** 2 + ses[j] ** 2)
            defect[d] = abs(means[i] - means[j]) / pooled if pooled > 0 else 0.0
    i_min = int(np.argmin(means))
    return SweepResult((str(as_pnorm(p)), str(as_pnorm(q))), int(n), deltas, means, ses,
                       deltas[i_min], defect)


# --------------------------------------------------------------------------
# output


def records_csv(records: Iterable[ExperimentRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RECORD_FIELDS)
    for r in sorted(records, key=lambda r: (r.p, r.q, r.n, r.delta, r.replicate)):
        w.writerow(r.row())
    return buf.getvalue()


def read_records(path) -> list[ExperimentRecord]:
    with open(path, newline="") as fh:
        rd = csv.DictReader(fh)
        if tuple(rd.fieldnames or ()) != RECORD_FIELDS:
            raise ValueError(f"{path}: expected header {','.join(RECORD_FIELDS)}")
        return [ExperimentRecord(r["p"], r["q"], float(r["delta"]), int(r["n"]), int(r["replicate"]),
                                 r["seed_digest"], int(r["m_n"]), float(r["wall_time_s"]))
                for r in rd]


def _write(path: Path, text: str):
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    except OSError as e:
        raise OSError(f"cannot write {path}: {e}") from e


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n"


def evaluate(records: Sequence[ExperimentRecord], rules: Sequence[DeltaRule] | None = None,
             tolerance: float = DEFAULT_TOLERANCE, strict: bool = True):
    """Fit every group and compare it with the table.  Returns ``(fits, verdicts)``
    keyed by ``"p,q,delta-rule"``; groups that cannot be fitted get an error entry."""
    fits, verdicts = {}, {}
    for (p, q, label), recs in group_records(records, rules).items():
        key = f"{p},{q},{label}"
        try:
            fit = fit_exponent(recs, strict=strict)
        except ValueError as e:
            fits[key] = {"error": str(e)}
            continue
        fits[key] = fit.to_json()
        rule = None
        for r in rules or ():
            if r.label() == label:
                rule = r
        c = rule.power if rule is not None and rule.power is not None else None
        mid = fit.n[len(fit.n) // 2]
        d_mid = fit.deltas[len(fit.n) // 2]
        try:
            pred = regime(p, q, d_mid, mid, delta_power=c)
        except ValueError as e:
            verdicts[key] = {"error": str(e)}
            continue
        verdicts[key] = compare_to_theory(fit, pred, tolerance).to_json()
    return fits, verdicts


def emit_report(out_dir, records: Sequence[ExperimentRecord] = (), rules: Sequence[DeltaRule] | None = None,
                config: ExperimentConfig | None = None, sweeps: Sequence[SweepResult] = (),
                tolerance: float = DEFAULT_TOLERANCE, strict: bool = True) -> dict[str, Path]:
    """Write records CSV, fits JSON, verdict JSON and per-group plot CSVs.

    File names come from ``config`` when given.  Returns the written paths.
    """
    out = Path(out_dir)
    cfg = config
    names = dict(records=cfg.records_path if cfg else "records.csv",
                 fits=cfg.fits_path if cfg else "fits.json",
                 verdicts=cfg.verdicts_path if cfg else "verdicts.json",
                 plots=cfg.plot_dir if cfg else "plots")
    if cfg is not None and rules is None:
        rules = cfg.delta_spec
    records = list(records)
    fits, verdicts = evaluate(records, rules, tolerance, strict) if records else ({}, {})
    paths = {k: out / v for k, v in names.items()}
    _write(paths["records"], records_csv(records))
    _write(paths["fits"], _dump({"schema_version": SCHEMA_VERSION, "fits": fits}))
    n_pass = sum(1 for v in verdicts.values() if v.get("passed"))
    summary = {"schema_version": SCHEMA_VERSION, "verdicts": verdicts,
               "summary": {"cells": len(verdicts), "passed": n_pass, "failed": len(verdicts) - n_pass},
               "sweeps": [s.to_json() for s in sweeps]}
    if cfg is not None:
        summary["config"] = cfg.to_dict()
    _write(paths["verdicts"], _dump(summary))
    plot_dir = paths["plots"]
    try:
        plot_dir.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise OSError(f"cannot create {plot_dir}: {e}") from e
    written = []
    for key, fit in fits.items():
        if "error" in fit:
            continue
        fname = plot_dir / ("plot_" + key.replace(",", "_").replace("^", "pow").replace("/", "-") + ".csv")
        lines = ["log_n,log_mean,stderr"]
        for n, m, s in zip(fit["n"], fit["mean"], fit["stderr"]):
            lines.append(f"{math.log(n)!r},{math.log(m)!r},{s!r}")
        _write(fname, "\n".join(lines) + "\n")
        written.append(fname)
    paths_out = {k: paths[k] for k in ("records", "fits", "verdicts")}
    paths_out["plots"] = plot_dir
    return paths_out


def quadrant_outliers(dist: SmoothedDist, n: int, replicates: int, master_seed: int = 0) -> tuple[float, float]:
    """Mean and stderr of the number of maximal points with a negative coordinate."""
    cell = cell_index(dist.p, dist.q, dist.delta, n)
    counts = []
    for r in range(replicates):
        pts = sample_smoothed(dist, make_rng(SeedSpec(master_seed, cell, r)), n)
        mx = maximal_points(pts).maxima
        counts.append(int(np.sum((mx[:, 0] < 0) | (mx[:, 1] < 0))))
    c = np.asarray(counts, float)
    return float(c.mean()), float(c.std(ddof=1) / math.sqrt(len(c))) if len(c) > 1 else float("nan")
