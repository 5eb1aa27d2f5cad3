"""Density and region measures of B_p + δB_q.

The density at v is the area of the preimage ``(v + δB_q) ∩ B_p`` divided by
``a_p a_q δ²``.  :func:`density_numeric` computes that area by clipping two
inscribed polygons.  The closed-form families further down only describe the
density (or a region measure) up to a constant.  Each family is a small
estimator whose ``fit`` pins one constant per branch against the numeric
oracle and whose ``predict`` evaluates the calibrated expression.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy.special import roots_legendre
from sklearn.base import BaseEstimator
from sklearn.utils import check_array
from sklearn.utils.validation import check_is_fitted

from .geometry import (
    DEFAULT_M,
    PLike,
    as_pnorm,
    ball_polygon,
    intersection_areas,
    lp_norm,
    support_contains,
    unit_ball_area,
)
from .sampling import SeedSpec, SmoothedDist, make_rng, sample_ball, sample_smoothed

MIN_MC_SAMPLES = 1000
_CHUNK = 1 << 20


def _as_points(v) -> tuple[np.ndarray, bool]:
    arr = np.asarray(v, dtype=float)
    single = arr.ndim == 1
    pts = check_array(np.atleast_2d(arr), dtype=np.float64)
    if pts.shape[1] != 2:
        raise ValueError(f"points must have 2 coordinates, got shape {pts.shape}")
    return pts, single


# --------------------------------------------------------------------------
# support helpers


def support_reach(dist: SmoothedDist, y, iters: int = 60) -> np.ndarray:
    """Largest ``x >= 0`` with ``(x, y)`` in the support, for each ``y``.

    Returns ``nan`` where the horizontal line misses the support.  The
    support is symmetric and, in the first quadrant, closed under moving
    towards the axes, so bisection on x is enough.
    """
    y = np.abs(np.atleast_1d(np.asarray(y, dtype=float)))
    lo = np.zeros_like(y)
    hi = np.full_like(y, dist.extent)
    inside = support_contains(dist, np.stack([lo, y], axis=1))
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        ok = support_contains(dist, np.stack([mid, y], axis=1))
        lo = np.where(ok, mid, lo)
        hi = np.where(ok, hi, mid)
    return np.where(inside, lo, np.nan)


# --------------------------------------------------------------------------
# regions


class Region:
    """A planar set with a membership test and a bounding box.

    Subclasses that can be sampled uniformly set ``exact_sampler = True``
    and implement ``area`` and ``sample_uniform``.
    """

    exact_sampler = False

    def contains(self, pts) -> np.ndarray:
        raise NotImplementedError

    def bbox(self, dist: SmoothedDist) -> tuple[np.ndarray, np.ndarray]:
        e = dist.extent
        return np.array([-e, -e]), np.array([e, e])

    def area(self) -> float:
        raise NotImplementedError

    def sample_uniform(self, rng, k: int) -> np.ndarray:
        raise NotImplementedError


@dataclass(frozen=True)
class AxisRectangle(Region):
    lo: tuple
    hi: tuple
    exact_sampler = True

    def __post_init__(self):
        lo, hi = np.asarray(self.lo, float), np.asarray(self.hi, float)
        if lo.shape != (2,) or hi.shape != (2,) or np.any(hi < lo):
            raise ValueError("rectangle needs lo <= hi coordinate-wise")

    def contains(self, pts):
        pts = np.atleast_2d(pts)
        return np.all((pts >= self.lo) & (pts <= self.hi), axis=1)

    def bbox(self, dist=None):
        return np.asarray(self.lo, float), np.asarray(self.hi, float)

    def area(self):
        lo, hi = self.bbox()
        return float(np.prod(hi - lo))

    def sample_uniform(self, rng, k):
        lo, hi = self.bbox()
        return rng.uniform(lo, hi, size=(k, 2))


@dataclass(frozen=True)
class CornerRegion(Region):
    """P(v): support points that dominate ``v``."""

    v: tuple
    dist: SmoothedDist

    def contains(self, pts):
        pts = np.atleast_2d(pts)
        out = (pts[:, 0] >= self.v[0]) & (pts[:, 1] >= self.v[1])
        if out.any():
            out[out] = support_contains(self.dist, pts[out])
        return out

    def bbox(self, dist=None):
        d = self.dist
        vx, vy = float(self.v[0]), float(self.v[1])
        # the farthest support point right of / above v sits on the line
        # through v (or on the axis when v is below it)
        reach = support_reach(d, [max(vy, 0.0), max(vx, 0.0)])
        reach = np.nan_to_num(reach, nan=-np.inf)
        e = d.extent
        lo = np.array([max(vx, -e), max(vy, -e)])
        hi = np.array([reach[0], reach[1]])
        return lo, np.maximum(hi, lo)


@dataclass(frozen=True)
class CornerTriangle(Region):
    """T(v) for B_1 + δB_1: the right triangle above-right of ``v`` cut by
    the line ``x + y = 1 + δ``."""

    v: tuple
    delta: float
    exact_sampler = True

    @property
    def sigma(self) -> float:
        return 1.0 + self.delta - self.v[0] - self.v[1]

    def contains(self, pts):
        pts = np.atleast_2d(pts)
        return (
            (pts[:, 0] >= self.v[0])
            & (pts[:, 1] >= self.v[1])
            & (pts[:, 0] + pts[:, 1] <= 1.0 + self.delta)
        )

    def bbox(self, dist=None):
        s = max(self.sigma, 0.0)
        lo = np.asarray(self.v, float)
        return lo, lo + s

    def area(self):
        return 0.5 * max(self.sigma, 0.0) ** 2

    def sample_uniform(self, rng, k):
        a = rng.uniform(size=(k, 2))
        flip = a.sum(axis=1) > 1.0
        a[flip] = 1.0 - a[flip]
        return np.asarray(self.v, float) + max(self.sigma, 0.0) * a


@dataclass(frozen=True)
class AnnularSector(Region):
    """R_i(σ): angles in ``[theta_lo, theta_hi]``, Euclidean radius in
    ``[outer - σ, outer]``."""

    theta_lo: float
    theta_hi: float
    sigma: float
    outer: float
    exact_sampler = True

    def __post_init__(self):
        if not (0 <= self.sigma <= self.outer and self.theta_lo <= self.theta_hi):
            raise ValueError("invalid annular sector")

    def contains(self, pts):
        pts = np.atleast_2d(pts)
        r = np.hypot(pts[:, 0], pts[:, 1])
        th = np.mod(np.arctan2(pts[:, 1], pts[:, 0]) - self.theta_lo, 2 * np.pi) + self.theta_lo
        return (r >= self.outer - self.sigma) & (r <= self.outer) & (th <= self.theta_hi)

    def area(self):
        r0 = self.outer - self.sigma
        return 0.5 * (self.theta_hi - self.theta_lo) * (self.outer**2 - r0**2)

    def sample_uniform(self, rng, k):
        r0 = self.outer - self.sigma
        r = np.sqrt(rng.uniform(r0 * r0, self.outer**2, size=k))
        th = rng.uniform(self.theta_lo, self.theta_hi, size=k)
        return np.stack([r * np.cos(th), r * np.sin(th)], axis=1)


@dataclass(frozen=True)
class Wedge(Region):
    """Support points whose angle seen from ``apex`` lies in ``(theta_lo, theta_hi]``."""

    theta_lo: float
    theta_hi: float
    dist: SmoothedDist
    apex: tuple = (1.0, 0.0)

    def contains(self, pts):
        pts = np.atleast_2d(pts)
        th = np.arctan2(pts[:, 1] - self.apex[1], pts[:, 0] - self.apex[0])
        out = (th > self.theta_lo) & (th <= self.theta_hi)
        if out.any():
            out[out] = support_contains(self.dist, pts[out])
        return out


@dataclass(frozen=True)
class PredicateRegion(Region):
    indicator: Callable[[np.ndarray], np.ndarray]
    lo: tuple | None = None
    hi: tuple | None = None

    def contains(self, pts):
        return np.asarray(self.indicator(np.atleast_2d(pts)), dtype=bool)

    def bbox(self, dist):
        if self.lo is None:
            return super().bbox(dist)
        return np.asarray(self.lo, float), np.asarray(self.hi, float)


@dataclass(frozen=True)
class FullSupport(Region):
    dist: SmoothedDist

    def contains(self, pts):
        return support_contains(self.dist, np.atleast_2d(pts))


# --------------------------------------------------------------------------
# numeric density


@lru_cache(maxsize=64)
def _polygons(p, q, delta, m):
    P = ball_polygon(p, 1.0, m=m)
    Q = ball_polygon(q, delta, m=m)
    return P, Q


def preimage_area(dist: SmoothedDist, v, m: int = DEFAULT_M) -> np.ndarray:
    """``Area((v + δB_q) ∩ B_p)`` from inscribed m-gons, for each point."""
    pts, _ = _as_points(v)
    P, Q = _polygons(dist.p, dist.q, dist.delta, m)
    # clip the smaller body against the larger one
    if dist.delta <= 1.0:
        return intersection_areas(Q, P, pts)
    return intersection_areas(P, Q, -pts)


def density_numeric(dist: SmoothedDist, v, m: int = DEFAULT_M):
    """Density of ``dist`` at ``v`` (a point or an ``(N, 2)`` array)."""
    if dist.delta <= 0:
        raise ValueError("density_numeric needs delta > 0; B_p alone has density 1/a_p")
    pts, single = _as_points(v)
    norm = unit_ball_area(dist.p) * unit_ball_area(dist.q) * dist.delta**2
    f = np.maximum(preimage_area(dist, pts, m), 0.0) / norm
    return float(f[0]) if single else f


def density_integral(dist: SmoothedDist, points: int = 10**6, m: int = 256) -> float:
    """Midpoint-rule integral of the density over the support box.

    Only the first quadrant is evaluated (``points / 4`` nodes); the density
    is symmetric under both coordinate reflections.
    """
    k = max(8, int(round(math.sqrt(points / 4))))
    h = dist.extent / k
    g = (np.arange(k) + 0.5) * h
    X, Y = np.meshgrid(g, g, indexing="ij")
    pts = np.stack([X.ravel(), Y.ravel()], axis=1)
    return 4.0 * float(density_numeric(dist, pts, m=m).sum()) * h * h


# --------------------------------------------------------------------------
# measures


@dataclass
class MCEstimate:
    mean: float
    stderr: float
    samples: int

    def interval(self, z: float = 4.0) -> tuple[float, float]:
        return self.mean - z * self.stderr, self.mean + z * self.stderr


def _seed_rng(seed):
    if seed is None:
        seed = SeedSpec(0)
    return make_rng(seed)


def measure_mc(
    dist: SmoothedDist,
    region: Region,
    samples: int = 100_000,
    seed: SeedSpec | int | None = None,
    method: str = "auto",
) -> MCEstimate:
    """Monte Carlo estimate of ``μ(region)``.

    ``method="direct"`` counts how many draws of ``dist`` land in the region.
    ``method="local"`` draws ``a`` uniformly from the region (or its bounding
    box) and ``w`` from B_q and scores ``[a - δw ∈ B_p]``, scaled by
    ``Area/a_p``.  Both are unbiased; the local form is far more precise for
    small regions.  ``"auto"`` picks local when the proposal area is below
    ``a_p``.
    """
    if samples < MIN_MC_SAMPLES:
        raise ValueError(f"need at least {MIN_MC_SAMPLES} samples")
    rng = _seed_rng(seed)
    a_p = unit_ball_area(dist.p)

    if region.exact_sampler:
        prop_area = region.area()
        draw = region.sample_uniform
        filt = False
    else:
        lo, hi = region.bbox(dist)
        prop_area = float(np.prod(np.maximum(hi - lo, 0.0)))

        def draw(r, k):
            return r.uniform(lo, hi, size=(k, 2))

        filt = True

    if method == "auto":
        method = "local" if prop_area < a_p else "direct"
    if method not in ("local", "direct"):
        raise ValueError(f"unknown method {method!r}")

    hits = 0
    done = 0
    if method == "local" and prop_area == 0.0:
        return MCEstimate(0.0, 0.0, samples)
    while done < samples:
        k = min(_CHUNK, samples - done)
        if method == "direct":
            pts = sample_smoothed(dist, rng, k)
            hit = region.contains(pts)
        else:
            a = draw(rng, k)
            w = sample_ball(dist.q, rng, k)
            hit = lp_norm(dist.p, a - dist.delta * w) <= 1.0
            if filt:
                hit &= region.contains(a)
        hits += int(np.count_nonzero(hit))
        done += k
    scale = prop_area / a_p if method == "local" else 1.0
    frac = hits / samples
    var = frac * (1.0 - frac)
    return MCEstimate(scale * frac, scale * math.sqrt(var / samples), samples)


def measure_quad(dist: SmoothedDist, region: Region, nodes: int = 200, m: int = 1024) -> float:
    """Product Gauss-Legendre integral of ``f · 1_region`` over the region's box."""
    lo, hi = region.bbox(dist)
    if np.any(hi <= lo):
        return 0.0
    t, w = roots_legendre(nodes)
    xs = lo[0] + (hi[0] - lo[0]) * (t + 1) / 2
    ys = lo[1] + (hi[1] - lo[1]) * (t + 1) / 2
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    W = np.outer(w, w) * (hi[0] - lo[0]) * (hi[1] - lo[1]) / 4
    pts = np.stack([X.ravel(), Y.ravel()], axis=1)
    inside = region.contains(pts)
    f = np.zeros(len(pts))
    if inside.any():
        f[inside] = density_numeric(dist, pts[inside], m=m)
    return float((f * W.ravel()).sum())


def measure_sector_quad(delta: float, theta_lo: float, theta_hi: float, sigma: float,
                        nodes: int = 48, m: int = DEFAULT_M) -> float:
    """μ of an annular sector of B_2 + δB_2 by radial Gauss-Legendre quadrature.

    The density there is radial, so the angular integral is exact.
    """
    dist = SmoothedDist(2, 2, delta)
    outer = 1.0 + delta
    t, w = roots_legendre(nodes)
    r = outer - sigma * (t + 1) / 2
    f = density_numeric(dist, np.stack([r, np.zeros_like(r)], axis=1), m=m)
    return float((theta_hi - theta_lo) * np.sum(w * f * r) * sigma / 2)


# --------------------------------------------------------------------------
# closed-form families


class _ThetaFamily(BaseEstimator):
    """Branch-wise ``constant × scale`` model of a density or region measure.

    ``fit`` picks, for every branch, the candidate input with the median
    scale value and sets that branch's constant to oracle / scale there.
    """

    def _check_input(self, X):
        raise NotImplementedError

    def classify(self, X) -> np.ndarray:
        raise NotImplementedError

    def scale(self, X) -> np.ndarray:
        raise NotImplementedError

    def oracle(self, X) -> np.ndarray:
        raise NotImplementedError

    def _candidates(self) -> np.ndarray:
        raise NotImplementedError

    def fit(self, X=None, y=None):
        X = self._candidates() if X is None else self._check_input(X)
        br = self.classify(X)
        sc = self.scale(X)
        refs = {}
        for b in np.unique(br):
            sel = np.flatnonzero((br == b) & (sc > 0))
            if len(sel) == 0:
                continue
            order = sel[np.argsort(sc[sel])]
            refs[str(b)] = X[order[len(order) // 2]]
        self.reference_points_ = refs
        self.constants_ = {}
        for b, x in refs.items():
            xx = np.asarray([x])
            self.constants_[b] = float(self.oracle(xx)[0] / self.scale(xx)[0])
        return self

    def predict(self, X):
        check_is_fitted(self, "constants_")
        X = self._check_input(X)
        br = self.classify(X)
        out = self.scale(X).astype(float)
        for b in np.unique(br):
            sel = br == b
            if str(b) not in self.constants_:
                raise ValueError(f"branch {b!r} was not calibrated for these parameters")
            out[sel] *= self.constants_[str(b)]
        return out

    def ratio(self, X) -> np.ndarray:
        """oracle / prediction on ``X``."""
        return self.oracle(X) / self.predict(X)


class B2B2Density(_ThetaFamily):
    """Density of B_2 + δB_2 as a function of ``σ = 1 + δ - ‖v‖``."""

    def __init__(self, delta: float = 0.25, m: int = DEFAULT_M):
        self.delta = delta
        self.m = m

    def _check_input(self, X):
        s = np.atleast_1d(np.asarray(X, dtype=float)).ravel()
        if np.any(s < 0) or np.any(s > 1 + self.delta):
            raise ValueError("sigma must lie in [0, 1 + delta]")
        return s

    def classify(self, X):
        s = self._check_input(X)
        return np.where(s < self.delta, "lens", "flat")

    def scale(self, X):
        s = self._check_input(X)
        return np.where(s < self.delta, (s / self.delta) ** 1.5, 1.0)

    def radial_points(self, X):
        s = self._check_input(X)
        r = 1.0 + self.delta - s
        return np.stack([r / math.sqrt(2), r / math.sqrt(2)], axis=1)

    def oracle(self, X):
        return density_numeric(SmoothedDist(2, 2, self.delta), self.radial_points(X), m=self.m)

    def _candidates(self):
        d = self.delta
        return np.array([d / 10, d / 5, d / 2, d + 0.25, d + 0.5])

    def fit(self, X=None, y=None):
        super().fit(X, y)
        if "flat" not in self.constants_:
            self.constants_["flat"] = self.constants_["lens"]
        return self


class B1B1CornerMeasure(_ThetaFamily):
    """μ(T(v)) for B_1 + δB_1, split into the U/B/M/I regions."""

    def __init__(self, delta: float = 0.5, samples: int = 400_000, seed: int = 11):
        self.delta = delta
        self.samples = samples
        self.seed = seed

    def _check_input(self, X):
        X, _ = _as_points(X)
        d = self.delta
        if np.any(X < 0) or np.any(X.sum(axis=1) > 1 + d + 1e-12):
            raise ValueError("points must lie in the first-quadrant support of B_1 + δB_1")
        return X

    def classify(self, X):
        X = self._check_input(X)
        x, y = X[:, 0], X[:, 1]
        out = np.full(len(X), "M", dtype=object)
        out[x + y <= 1.0] = "I"
        out[(x >= 1.0) & (x + y > 1.0)] = "B"
        out[(y >= 1.0) & (x + y > 1.0)] = "U"
        return out.astype(str)

    def scale(self, X):
        X = self._check_input(X)
        d = self.delta
        x, y = X[:, 0], X[:, 1]
        s = 1.0 + d - x - y
        br = self.classify(X)
        return np.select(
            [br == "U", br == "B", br == "M"],
            [(1 + d - y) * s**3 / d**2, (1 + d - x) * s**3 / d**2, s**3 / d],
            s**2,
        )

    def oracle(self, X):
        X = self._check_input(X)
        dist = SmoothedDist(1, 1, self.delta)
        return np.array([
            measure_mc(dist, CornerTriangle(tuple(v), self.delta), self.samples,
                       SeedSpec(self.seed, 0, i)).mean
            for i, v in enumerate(X)
        ])

    def _candidates(self):
        d = self.delta
        s = d / 3
        diag = (1 + d - s) / 2
        pts = np.array([
            (diag, diag),            # M
            (d / 6, 1.0 + d / 2),    # U, with Δ_y = δ/2
            (1.0 + d / 2, d / 6),    # B
            (0.25, 0.25),            # I
        ])
        return pts


class B2B2SectorMeasure(_ThetaFamily):
    """μ(R_i(σ)) for B_2 + δB_2 with ``t`` sectors, as a function of σ."""

    def __init__(self, delta: float = 0.25, t: int = 8, samples: int = 2_000_000, seed: int = 13):
        self.delta = delta
        self.t = t
        self.samples = samples
        self.seed = seed

    def _check_input(self, X):
        if self.t < 8:
            raise ValueError("t must be at least 8")
        s = np.atleast_1d(np.asarray(X, dtype=float)).ravel()
        if np.any(s < 0) or np.any(s > 1 + self.delta):
            raise ValueError("sigma must lie in [0, 1 + delta]")
        return s

    def classify(self, X):
        s = self._check_input(X)
        return np.where(s <= self.delta, "thin", "thick")

    def scale(self, X):
        s = self._check_input(X)
        d, t = self.delta, self.t
        return np.where(s <= d, s**2.5 / (t * d**1.5), s / t)

    def region(self, sigma: float) -> AnnularSector:
        return AnnularSector(0.0, 2 * math.pi / self.t, float(sigma), 1.0 + self.delta)

    def oracle(self, X):
        s = self._check_input(X)
        dist = SmoothedDist(2, 2, self.delta)
        return np.array([
            measure_mc(dist, self.region(v), self.samples, SeedSpec(self.seed, 1, i)).mean
            for i, v in enumerate(s)
        ])

    def _candidates(self):
        d = self.delta
        return np.array([d / 8, d / 4, d / 2, d + 0.25, d + 0.5])


class B1B2Density(_ThetaFamily):
    """Density of B_1 + δB_2 on the first octant ``0 <= y <= x``."""

    def __init__(self, delta: float = 0.5, m: int = DEFAULT_M):
        self.delta = delta
        self.m = m

    @property
    def dist(self):
        return SmoothedDist(1, 2, self.delta)

    def _check_input(self, X):
        X, _ = _as_points(X)
        if np.any(X[:, 1] < -1e-12) or np.any(X[:, 1] > X[:, 0] + 1e-12):
            raise ValueError("points must lie in the first octant 0 <= y <= x")
        if not np.all(support_contains(self.dist, X)):
            raise ValueError("points must lie in the support of B_1 + δB_2")
        return X

    def coordinates(self, X) -> dict[str, np.ndarray]:
        """Region label and the per-region σ, r, θ, γ."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        x, y = X[:, 0], X[:, 1]
        d = self.delta
        region = np.where(x + y <= 1.0, "A", np.where(x - y <= 1.0, "B", "C"))
        r = np.hypot(x - 1.0, y)
        theta = np.arctan2(y, x - 1.0)
        sigma = np.where(region == "C", d - r, (1 + math.sqrt(2) * d - (x + y)) / math.sqrt(2))
        return {"region": region, "sigma": sigma, "r": r, "theta": theta,
                "gamma": math.pi / 4 - theta}

    def classify(self, X):
        c = self.coordinates(self._check_input(X))
        d = self.delta
        s, g = c["sigma"], c["gamma"]
        out = np.full(len(s), "A", dtype=object)
        inB = c["region"] == "B"
        out[inB & (s >= 1)] = "B_flat"
        out[inB & (s < 1) & (d * s >= 1)] = "B_linear"
        out[inB & (s < 1) & (d * s < 1)] = "B_lens"
        inC = c["region"] == "C"
        out[inC & (s > d / 2)] = "C_numeric"
        near = inC & (s <= d / 2)
        out[near & (s >= d * g * g)] = "C_root"
        out[near & (s < d * g * g)] = "C_gamma"
        return out.astype(str)

    def scale(self, X):
        X = self._check_input(X)
        c = self.coordinates(X)
        d = self.delta
        s = np.maximum(c["sigma"], 0.0)
        g = np.maximum(c["gamma"], 1e-300)
        br = self.classify(X)
        out = np.empty(len(X))
        for name, val in (
            ("A", np.full(len(X), 1.0 if d <= 1 else 1.0 / d**2)),
            ("B_flat", np.full(len(X), 1.0 / d**2)),
            ("B_linear", s / d**2),
            ("B_lens", (s / d) ** 1.5),
            ("C_root", np.minimum(s, 1) * np.minimum(np.sqrt(d * s), 1) / d**2),
            ("C_gamma", np.minimum(s, 1) * np.minimum(s / g, 1) / d**2),
        ):
            sel = br == name
            out[sel] = val[sel]
        sel = br == "C_numeric"
        if sel.any():
            out[sel] = self.oracle(X[sel])
        return out

    def oracle(self, X):
        return density_numeric(self.dist, X, m=self.m)

    def _candidates(self):
        d = self.delta
        ext = 1 + d
        g = np.linspace(0.005, ext, 90)
        X, Y = np.meshgrid(g, g, indexing="ij")
        pts = np.stack([X.ravel(), Y.ravel()], axis=1)
        pts = pts[pts[:, 1] <= pts[:, 0]]
        pts = pts[support_contains(self.dist, pts)]
        # extra points hugging the outer edge so the thin branches are hit
        r2 = math.sqrt(2)
        for s in (d / 8, d / 4):
            c = (1 + r2 * d - r2 * s) / 2
            u = np.linspace(-0.3, 0.3, 7)
            pts = np.vstack([pts, np.stack([c + u, c - u], axis=1)])
            th = np.linspace(0.05, 0.7, 7)
            arc = np.stack([1 + (d - s) * np.cos(th), (d - s) * np.sin(th)], axis=1)
            pts = np.vstack([pts, arc])
        pts = pts[(pts[:, 1] >= 0) & (pts[:, 1] <= pts[:, 0])]
        return pts[support_contains(self.dist, pts)]


class BinfQDensity(_ThetaFamily):
    """Density of B_∞ + δB_q on the first quadrant (regions A, B, C, D)."""

    def __init__(self, q: PLike = 2, delta: float = 0.5, m: int = DEFAULT_M):
        self.q = q
        self.delta = delta
        self.m = m

    @property
    def dist(self):
        return SmoothedDist(math.inf, self.q, self.delta)

    def _check_input(self, X):
        if as_pnorm(self.q).is_inf:
            raise ValueError("q must be finite")
        X, _ = _as_points(X)
        if np.any(X < 0):
            raise ValueError("points must lie in the first quadrant")
        if not np.all(support_contains(self.dist, X)):
            raise ValueError("points must lie in the support of B_∞ + δB_q")
        return X

    def alpha_beta(self, X) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Region labels with α (horizontal room) and β (vertical room)."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        q = as_pnorm(self.q).value
        d = self.delta
        x, y = X[:, 0], X[:, 1]
        region = np.where(x <= 1, np.where(y <= 1, "A", "D"), np.where(y <= 1, "C", "B"))

        def cap(t):
            return np.maximum(d**q - np.clip(t, 0, d) ** q, 0.0) ** (1 / q)

        alpha = np.full(len(X), np.nan)
        beta = np.full(len(X), np.nan)
        b = region == "B"
        alpha[b] = 1 + cap(y[b] - 1) - x[b]
        beta[b] = 1 + cap(x[b] - 1) - y[b]
        c = region == "C"
        alpha[c] = 1 + d - x[c]
        beta[c] = cap(d - alpha[c])
        dd = region == "D"  # mirror image of C
        beta[dd] = 1 + d - y[dd]
        alpha[dd] = cap(d - beta[dd])
        return region, np.maximum(alpha, 0.0), np.maximum(beta, 0.0)

    def classify(self, X):
        region, _, _ = self.alpha_beta(self._check_input(X))
        return np.where(region == "D", "C", region)

    def scale(self, X):
        X = self._check_input(X)
        region, a, b = self.alpha_beta(X)
        d = self.delta
        out = np.minimum(a, 1) * np.minimum(b, 1) / d**2
        out[region == "A"] = 1.0 if d <= 1 else 1.0 / d**2
        return out

    def oracle(self, X):
        return density_numeric(self.dist, X, m=self.m)

    def _candidates(self):
        d = self.delta
        g = np.linspace(0.01, 1 + d, 60)
        X, Y = np.meshgrid(g, g, indexing="ij")
        pts = np.stack([X.ravel(), Y.ravel()], axis=1)
        return pts[support_contains(self.dist, pts)]


# --------------------------------------------------------------------------
# functional wrappers with cached calibrations


@lru_cache(maxsize=32)
def _fitted(cls, *args):
    return cls(*args).fit()


def density_b2b2(delta: float, sigma):
    """Calibrated closed-form density of B_2 + δB_2 at boundary distance σ."""
    return _fitted(B2B2Density, float(delta)).predict(sigma)


def measure_t_b1b1(delta: float, v):
    """Calibrated closed-form μ(T(v)) for B_1 + δB_1."""
    return _fitted(B1B1CornerMeasure, float(delta)).predict(v)


def measure_sector_b2b2(delta: float, t: int, sigma):
    """Calibrated closed-form μ(R_i(σ)) for B_2 + δB_2 with ``t`` sectors."""
    return _fitted(B2B2SectorMeasure, float(delta), int(t)).predict(sigma)


def density_b1b2(delta: float, v):
    """Calibrated closed-form density of B_1 + δB_2 on the first octant."""
    return _fitted(B1B2Density, float(delta)).predict(v)


def density_binfq(q: PLike, delta: float, v):
    """Calibrated closed-form density of B_∞ + δB_q on the first quadrant."""
    return _fitted(BinfQDensity, float(as_pnorm(q).value), float(delta)).predict(v)
