"""Growth laws for E[M_n] and lower-bound witness constructions.

The regime table maps ``(p, q)`` and the size of δ relative to n to a growth
law.  A law is either a monomial ``n^a δ^b``, ``ln n``, or
``ln n + √δ n^{1/4}``.  Pairs the table lists only one way round, such as
(2, 1) or (q, ∞), are handled through the duality ``(p, q, δ) ~ (q, p, 1/δ)``.

A witness is a family of pairwise disjoint dominant regions of measure about
1/n each.  Every region catches a sample point with constant probability and
then holds a maximal point, so the family size bounds E[M_n] from below.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .density import (
    CornerRegion,
    CornerTriangle,
    MCEstimate,
    Region,
    measure_mc,
    support_reach,
)
from .geometry import PLike, PNorm, as_pnorm, support_contains
from .sampling import SeedSpec, SmoothedDist, make_rng, sample_smoothed

# --------------------------------------------------------------------------
# growth laws


@dataclass(frozen=True)
class GrowthLaw:
    """``kind`` is ``"power"`` (n^a δ^b), ``"log"`` or ``"log_plus"``."""

    kind: str
    a: float = 0.0
    b: float = 0.0
    label: str = ""

    def value(self, n: float, delta: float) -> float:
        if self.kind == "log":
            return math.log(n)
        if self.kind == "log_plus":
            return math.log(n) + math.sqrt(delta) * n**0.25
        return n**self.a * delta**self.b

    def exponent(self, delta_power: float | None = None) -> float:
        """d log g / d log n, with δ fixed or tied to n by ``δ = n^c``.

        For ``ln n + √δ n^{1/4}`` this is the exponent of the power term.
        """
        c = 0.0 if delta_power is None else delta_power
        if self.kind == "log":
            return 0.0
        if self.kind == "log_plus":
            return 0.25 + 0.5 * c
        return self.a + self.b * c


SQRT_N = GrowthLaw("power", 0.5, 0.0, "sqrt(n)")
LN_N = GrowthLaw("log", label="ln(n)")

# rows: list of (upper end of the δ interval as an n-exponent, law); the
# first interval starts at δ = 0 and the last one is unbounded
_TABLE: dict[tuple[str, str], list[tuple[float, GrowthLaw]]] = {
    ("inf", "inf"): [(math.inf, LN_N)],
    ("1", "1"): [
        (-0.5, SQRT_N),
        (0.0, GrowthLaw("power", 1 / 3, -1 / 3, "(n/delta)^(1/3)")),
        (0.5, GrowthLaw("power", 1 / 3, 1 / 3, "(delta*n)^(1/3)")),
        (math.inf, SQRT_N),
    ],
    ("2", "2"): [
        (-0.5, SQRT_N),
        (0.0, GrowthLaw("power", 2 / 7, -3 / 7, "n^(2/7)/delta^(3/7)")),
        (0.5, GrowthLaw("power", 2 / 7, 3 / 7, "delta^(3/7)*n^(2/7)")),
        (math.inf, SQRT_N),
    ],
    ("inf", "q"): [
        (-0.5, LN_N),
        (0.5, GrowthLaw("log_plus", label="ln(n)+sqrt(delta)*n^(1/4)")),
        (math.inf, SQRT_N),
    ],
    ("1", "2"): [
        (-0.5, SQRT_N),
        (1 / 26, GrowthLaw("power", 2 / 7, -3 / 7, "n^(2/7)/delta^(3/7)")),
        (0.5, GrowthLaw("power", 0.25, 0.5, "sqrt(delta)*n^(1/4)")),
        (math.inf, SQRT_N),
    ],
}


def _key(p: PNorm) -> str:
    return "inf" if p.is_inf else f"{p.value:g}"


def _lookup(p: PNorm, q: PNorm) -> tuple[list, bool]:
    """Table row for (p, q) and whether it was reached by swapping."""
    kp, kq = _key(p), _key(q)
    if p.is_inf and q.is_inf:
        return _TABLE[("inf", "inf")], False
    if p.is_inf:
        return _TABLE[("inf", "q")], False
    if q.is_inf:
        return _TABLE[("inf", "q")], True
    if (kp, kq) in _TABLE:
        return _TABLE[(kp, kq)], False
    if (kq, kp) in _TABLE:
        return _TABLE[(kq, kp)], True
    raise ValueError(f"no growth law is known for the pair ({p}, {q})")


@dataclass(frozen=True)
class RegimePrediction:
    pair: tuple[PNorm, PNorm]
    delta_regime: tuple[float, float]  # δ interval as n-exponents (after any swap)
    growth: GrowthLaw
    swapped: bool
    value: float
    expected_exponent: float

    @property
    def log_regime(self) -> bool:
        return self.growth.kind == "log"

    def describe(self) -> str:
        lo, hi = self.delta_regime
        flip = " (via 1/delta)" if self.swapped else ""
        return f"{self.growth.label} for n^{lo:g} <= delta <= n^{hi:g}{flip}"


def regime(p: PLike, q: PLike, delta: float, n: float, delta_power: float | None = None) -> RegimePrediction:
    """The table cell that contains ``delta`` at sample size ``n``."""
    p, q = as_pnorm(p), as_pnorm(q)
    if n < 2:
        raise ValueError("n must be at least 2")
    delta = float(delta)
    if delta < 0:
        raise ValueError("delta must be non-negative")
    row, swapped = _lookup(p, q)
    c = delta_power
    if delta == 0:
        if p.is_inf:
            law, lo, hi = LN_N, -math.inf, -0.5
            swapped = False
        else:
            law, lo, hi = SQRT_N, -math.inf, -0.5
            swapped = False
        return RegimePrediction((p, q), (lo, hi), law, swapped, law.value(n, 0.0), law.exponent())
    d = 1.0 / delta if swapped else delta
    if c is not None and swapped:
        c = -c
    e = math.log(d) / math.log(n)
    lo = -math.inf
    for hi, law in row:
        if e <= hi + 1e-12:
            break
        lo = hi
    return RegimePrediction((p, q), (lo, hi), law, swapped, law.value(n, d), law.exponent(c))


def predicted_growth(p: PLike, q: PLike, delta: float, n: float,
                     delta_power: float | None = None) -> tuple[float, float]:
    """``(growth value, n-exponent)`` of the table law for these parameters.

    With ``delta_power=c`` the exponent is that of ``g(n, n^c)``; otherwise δ
    is held fixed.
    """
    r = regime(p, q, delta, n, delta_power)
    return r.value, r.expected_exponent


def regime_boundaries(p: PLike, q: PLike) -> list[tuple[float, GrowthLaw, GrowthLaw]]:
    """Interior boundaries of the row as ``(n-exponent of δ, left law, right law)``."""
    row, _ = _lookup(as_pnorm(p), as_pnorm(q))
    return [(row[i][0], row[i][1], row[i + 1][1]) for i in range(len(row) - 1)]


def harmonic_number(n: int) -> float:
    if int(n) != n or n < 1:
        raise ValueError("n must be a positive integer")
    k = np.arange(1, int(n) + 1, dtype=float)
    return float(math.fsum(1.0 / k))


# --------------------------------------------------------------------------
# witnesses


@dataclass
class WitnessSet:
    dist: SmoothedDist
    n: int
    regions: list[Region]
    anchors: np.ndarray
    sigma: float
    predicted_m: float
    name: str = ""

    @property
    def m(self) -> int:
        return len(self.regions)

    def count_ratio(self) -> float:
        """``m / predicted``; within ``[1/3, 3]`` is the accepted window."""
        return self.m / self.predicted_m


def _check_regime(delta, n, lo_pow, hi_pow, what):
    if n < 2:
        raise ValueError("n must be at least 2")
    lo, hi = n**lo_pow, n**hi_pow
    if not (lo * (1 - 1e-12) <= delta <= hi * (1 + 1e-12)):
        raise ValueError(f"{what} needs n^{lo_pow:g} <= delta <= n^{hi_pow:g}, got delta={delta}")


def witness_b1b1(delta: float, n: int) -> WitnessSet:
    """Triangles T(p_i) along the outer edge of B_1 + δB_1, middle third only."""
    _check_regime(delta, n, -0.5, 0.0, "witness_b1b1")
    sigma = (delta / n) ** (1 / 3)
    m_all = int(math.floor((1 + delta) / sigma))
    idx = np.arange(math.ceil(m_all / 3), math.floor(2 * m_all / 3) + 1)
    x = idx * sigma
    anchors = np.stack([x, 1 + delta - x - sigma], axis=1)
    regions = [CornerTriangle((float(a), float(b)), delta) for a, b in anchors]
    return WitnessSet(SmoothedDist(1, 1, delta), n, regions, anchors, sigma,
                      (n / delta) ** (1 / 3), "b1b1")


def witness_b2b2(delta: float, n: int, c: float = 1.0,
                 theta_range: tuple[float, float] = (math.pi / 12, 5 * math.pi / 12)) -> WitnessSet:
    """Corner regions P(v_i) for anchors on the circle of radius 1 + δ - σ.

    Consecutive anchors are spaced by ``max(cσ, β(v_i))`` in x, where β(v) is
    the horizontal width of P(v); that keeps the regions disjoint.
    """
    _check_regime(delta, n, -0.5, 0.0, "witness_b2b2")
    sigma = delta ** (3 / 7) / n ** (2 / 7)
    R, outer = 1 + delta - sigma, 1 + delta
    t_lo, t_hi = theta_range
    if not 0 < t_lo < t_hi < math.pi / 2:
        raise ValueError("theta_range must sit strictly inside (0, π/2)")
    x_end = R * math.cos(t_lo)
    x = R * math.cos(t_hi)
    anchors = []
    while x <= x_end:
        y = math.sqrt(R * R - x * x)
        anchors.append((x, y))
        beta = math.sqrt(outer * outer - y * y) - x
        x += max(c * sigma, beta) * (1 + 1e-9)
    anchors = np.array(anchors)
    dist = SmoothedDist(2, 2, delta)
    regions = [CornerRegion((float(a), float(b)), dist) for a, b in anchors]
    return WitnessSet(dist, n, regions, anchors, sigma,
                      n ** (2 / 7) / delta ** (3 / 7), "b2b2")


def _cap(q: float, delta: float):
    def g(x):
        t = np.clip(np.asarray(x, dtype=float) - 1.0, 0.0, delta)
        return 1.0 + np.maximum(delta**q - t**q, 0.0) ** (1.0 / q)

    return g


# n·μ(P(p)) ≈ C_q α² β² / δ² for small corner regions on the cap; C_q is
# measured once per q (it does not depend on δ for small regions)
_CAP_CONSTANT: dict[float, float] = {}


def cap_constant(q: float, samples: int = 2_000_000) -> float:
    if q not in _CAP_CONSTANT:
        d = 1.0
        dist = SmoothedDist(math.inf, q, d)
        g = _cap(q, d)
        a = 0.05
        x = 1.0 + 0.5 * d
        v = (x, float(g(x + a)))
        b = float(g(x) - g(x + a))
        mu = measure_mc(dist, CornerRegion(v, dist), samples, SeedSpec(2**31 - 1, 7, 0)).mean
        _CAP_CONSTANT[q] = mu * d * d / (a * a * b * b)
    return _CAP_CONSTANT[q]


def witness_binfq(q: PLike, delta: float, n: int, c_prime: float = 1.0,
                  spacing: str = "equal_measure", target: float = 0.05,
                  span: tuple[float, float] = (0.05, 0.95)) -> WitnessSet:
    """Corner regions P(p_i) with anchors ``p_i = (x_i, g(x_{i+1}))`` on the cap
    ``g(x) = 1 + (δ^q - (x-1)^q)^{1/q}`` of B_∞ + δB_q.

    ``spacing="uniform"`` uses the fixed step ``σ = c'√δ / n^{1/4}`` over
    ``x ∈ [1 + δ/3, 1 + 2δ/3]``.  ``spacing="equal_measure"`` walks
    ``x`` over ``1 + δ·span`` and sizes each step α so that the modelled
    ``n·μ(P(p_i)) ≈ C_q α² β² n / δ²`` equals ``target``.
    """
    qn = as_pnorm(q)
    if qn.is_inf:
        raise ValueError("q must be finite")
    _check_regime(delta, n, -0.5, 0.5, "witness_binfq")
    qv = qn.value
    g = _cap(qv, delta)
    sigma = c_prime * math.sqrt(delta) / n**0.25
    xs: list[float] = []
    if spacing == "uniform":
        m = int(math.floor(delta / (3 * sigma)))
        xs = list(1 + delta / 3 + np.arange(m + 1) * sigma)
    elif spacing == "equal_measure":
        C = cap_constant(qv)
        goal = math.sqrt(target * delta * delta / (n * C))  # desired α·β
        x, x_end = 1 + span[0] * delta, 1 + span[1] * delta
        xs = [x]
        while True:
            # α·β grows with α; bisect for the step that hits the goal
            lo, hi = 0.0, 1 + delta - x
            if hi * float(g(x) - g(x + hi)) < goal:
                break
            for _ in range(60):
                mid = 0.5 * (lo + hi)
                if mid * float(g(x) - g(x + mid)) < goal:
                    lo = mid
                else:
                    hi = mid
            x = x + hi
            if x > x_end:
                break
            xs.append(x)
    else:
        raise ValueError(f"unknown spacing {spacing!r}")
    xs_arr = np.asarray(xs)
    anchors = np.stack([xs_arr[:-1], g(xs_arr[1:])], axis=1)
    dist = SmoothedDist(math.inf, qn, delta)
    regions = [CornerRegion((float(a), float(b)), dist) for a, b in anchors]
    return WitnessSet(dist, n, regions, anchors, sigma,
                      math.sqrt(delta) * n**0.25, f"binfq(q={qn})")


# --------------------------------------------------------------------------
# verification


def _dominance_corner(r: Region) -> tuple[float, float] | None:
    if isinstance(r, (CornerRegion, CornerTriangle)):
        return float(r.v[0]), float(r.v[1])
    return None


def regions_overlap(a: Region, b: Region, dist: SmoothedDist, probes: int = 20_000, seed: int = 0,
                    tol: float = 1e-9) -> bool:
    """Whether two regions share a set of positive area.

    Corner regions of a first-quadrant support meet exactly when the
    coordinate-wise max of their corners is strictly inside the support;
    a join within ``tol`` (relative) of the boundary counts as touching.
    Anything else is probed on random points of the common bounding box.
    """
    ca, cb = _dominance_corner(a), _dominance_corner(b)
    if ca is not None and cb is not None:
        j = (max(ca[0], cb[0]), max(ca[1], cb[1]))
        if isinstance(a, CornerTriangle) and isinstance(b, CornerTriangle):
            edge = 1 + min(a.delta, b.delta)
            return j[0] + j[1] < edge - tol * edge
        if j[0] >= 0 and j[1] >= 0:
            reach = support_reach(dist, [j[1]])[0]
            return bool(np.isfinite(reach) and j[0] < reach - tol * max(1.0, reach))
    la, ha = a.bbox(dist)
    lb, hb = b.bbox(dist)
    lo, hi = np.maximum(la, lb), np.minimum(ha, hb)
    if np.any(hi <= lo):
        return False
    pts = make_rng(seed).uniform(lo, hi, size=(probes, 2))
    return bool(np.any(a.contains(pts) & b.contains(pts)))


def _uniform_in(region: Region, dist: SmoothedDist, k: int, rng) -> np.ndarray:
    if region.exact_sampler:
        return region.sample_uniform(rng, k)
    lo, hi = region.bbox(dist)
    out = []
    have = 0
    for _ in range(50):
        pts = rng.uniform(lo, hi, size=(4 * k, 2))
        pts = pts[region.contains(pts)]
        out.append(pts)
        have += len(pts)
        if have >= k:
            break
    pts = np.concatenate(out)[:k]
    return pts


def dominance_violations(region: Region, dist: SmoothedDist, outside: np.ndarray, inside: np.ndarray) -> int:
    """Number of ``outside`` points (not in the region) that dominate some ``inside`` point."""
    if len(inside) == 0:
        return 0
    cand = outside[~region.contains(outside)]
    if len(cand) == 0:
        return 0
    # lower-left staircase of the inside points: sorted by x, y strictly falling
    order = np.lexsort((inside[:, 1], inside[:, 0]))
    pts = inside[order]
    run_min = np.minimum.accumulate(pts[:, 1])
    # for an outside point u, the relevant inside point has the largest x <= u.x
    k = np.searchsorted(pts[:, 0], cand[:, 0], side="right") - 1
    ok = k >= 0
    dom = np.zeros(len(cand), dtype=bool)
    dom[ok] = run_min[k[ok]] <= cand[ok, 1]
    return int(dom.sum())


@dataclass
class WitnessReport:
    passed: bool
    disjoint: bool
    dominant: bool
    measures_ok: bool
    count_ratio: float
    n_mu: list[float] = field(default_factory=list)
    n_mu_stderr: list[float] = field(default_factory=list)
    failures: list[str] = field(default_factory=list)

    def summary(self) -> str:
        lo = min(self.n_mu) if self.n_mu else float("nan")
        hi = max(self.n_mu) if self.n_mu else float("nan")
        state = "PASS" if self.passed else "FAIL"
        return (f"{state}: disjoint={self.disjoint} dominant={self.dominant} "
                f"n*mu in [{lo:.4g}, {hi:.4g}] m/predicted={self.count_ratio:.3g}")


def verify_witness(dist: SmoothedDist, w: WitnessSet, mc_samples: int = 200_000,
                   support_samples: int = 100_000, inside_samples: int = 2_000,
                   band: tuple[float, float] = (0.02, 50.0), seed: int = 0) -> WitnessReport:
    """Check disjointness, dominance closure and per-region measure bands."""
    failures: list[str] = []
    regs = w.regions
    disjoint = True
    # anchors are sorted along the edge, but check every pair anyway
    for i in range(len(regs)):
        for j in range(i + 1, len(regs)):
            if regions_overlap(regs[i], regs[j], dist, seed=seed + i):
                disjoint = False
                failures.append(f"regions {i} and {j} overlap")
    rng = make_rng(SeedSpec(seed, 1, 0))
    support = sample_smoothed(dist, rng, support_samples)
    dominant = True
    for i, r in enumerate(regs):
        inside = _uniform_in(r, dist, inside_samples, rng)
        inside = inside[support_contains(dist, inside)] if len(inside) else inside
        extra = _uniform_in(_Box(r.bbox(dist)), dist, inside_samples, rng)
        extra = extra[support_contains(dist, extra)]
        bad = dominance_violations(r, dist, np.vstack([support, extra]), inside)
        if bad:
            dominant = False
            failures.append(f"region {i}: {bad} support points outside it dominate points inside")
    n_mu, n_se = [], []
    for i, r in enumerate(regs):
        est: MCEstimate = measure_mc(dist, r, mc_samples, SeedSpec(seed, 2, i))
        n_mu.append(w.n * est.mean)
        n_se.append(w.n * est.stderr)
        if not band[0] <= w.n * est.mean <= band[1]:
            failures.append(f"region {i}: n*mu = {w.n * est.mean:.4g} outside [{band[0]}, {band[1]}]")
    measures_ok = all(band[0] <= v <= band[1] for v in n_mu)
    if not regs:
        failures.append("empty witness")
    passed = disjoint and dominant and measures_ok and bool(regs)
    return WitnessReport(passed, disjoint, dominant, measures_ok, w.count_ratio() if w.predicted_m else float("nan"),
                         n_mu, n_se, failures)


class _Box(Region):
    """Bounding box of another region, slightly enlarged; used to probe its surroundings."""

    def __init__(self, bbox):
        lo, hi = bbox
        pad = 0.5 * (np.asarray(hi) - np.asarray(lo)) + 1e-9
        self.lo, self.hi = np.asarray(lo) - pad, np.asarray(hi) + pad

    def contains(self, pts):
        pts = np.atleast_2d(pts)
        return np.all((pts >= self.lo) & (pts <= self.hi), axis=1)

    def bbox(self, dist=None):
        return self.lo, self.hi
