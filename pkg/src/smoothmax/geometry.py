"""Planar L_p-ball geometry.

Points are plain ``(x, y)`` pairs or numpy arrays with a trailing axis of
length 2; every function here is pure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np
from numba import njit
from scipy.special import gammaln

EPS_AREA = 1e-9
EPS_POINT = 1e-12

# resolutions for density/measure work and for quick membership checks
DEFAULT_M = 4096
PRECHECK_M = 256


@dataclass(frozen=True)
class PNorm:
    """Norm index: a real ``value >= 1`` or ``math.inf``."""

    value: float

    def __post_init__(self):
        v = float(self.value)
        if math.isnan(v) or v < 1:
            raise ValueError(f"norm index must be >= 1 or inf, got {self.value!r}")
        object.__setattr__(self, "value", v)

    @property
    def is_inf(self) -> bool:
        return math.isinf(self.value)

    def __float__(self):
        return self.value

    def __str__(self):
        if self.is_inf:
            return "inf"
        return f"{self.value:g}"

    @classmethod
    def parse(cls, text) -> "PNorm":
        if isinstance(text, PNorm):
            return text
        if isinstance(text, str):
            t = text.strip().lower()
            if t in ("inf", "infinity", "∞", "oo"):
                return cls(math.inf)
            return cls(float(t))
        return cls(float(text))


PLike = Union[PNorm, float, int, str]


def as_pnorm(p: PLike) -> PNorm:
    return PNorm.parse(p)


def lp_norm(p: PLike, v) -> np.ndarray | float:
    """L_p norm of a point (or of an array of points along the last axis).

    Finite ``p`` is evaluated as ``m * ((|x|/m)^p + (|y|/m)^p)^(1/p)`` with
    ``m = max(|x|, |y|)``, so large exponents cannot overflow.
    """
    p = as_pnorm(p)
    a = np.abs(np.asarray(v, dtype=float))
    x, y = a[..., 0], a[..., 1]
    big = np.maximum(x, y)
    if p.is_inf:
        out = big
    else:
        with np.errstate(invalid="ignore", divide="ignore"):
            small = np.minimum(x, y) / big
            out = big * (1.0 + small ** p.value) ** (1.0 / p.value)
        out = np.where(big > 0, out, 0.0)
    if np.ndim(out) == 0:
        return float(out)
    return out


def unit_ball_area(p: PLike) -> float:
    """Area of the unit L_p ball: ``4 Γ(1+1/p)² / Γ(1+2/p)``; 4 for p = ∞."""
    p = as_pnorm(p)
    if p.is_inf:
        return 4.0
    s = 1.0 / p.value
    return 4.0 * math.exp(2.0 * gammaln(1.0 + s) - gammaln(1.0 + 2.0 * s))


def ball_boundary(p: PLike, t) -> np.ndarray:
    """Boundary points of the unit L_p ball at angular parameters ``t``.

    Finite p uses the signed-power map ``(sgn(cos t)|cos t|^(2/p), ...)``;
    p = ∞ projects the unit circle radially onto the square.
    """
    p = as_pnorm(p)
    t = np.asarray(t, dtype=float)
    c, s = np.cos(t), np.sin(t)
    if p.is_inf:
        scale = np.maximum(np.abs(c), np.abs(s))
        return np.stack([c / scale, s / scale], axis=-1)
    e = 2.0 / p.value
    return np.stack([np.sign(c) * np.abs(c) ** e, np.sign(s) * np.abs(s) ** e], axis=-1)


def polygon_area(vertices) -> float:
    """Signed shoelace area (positive for counter-clockwise order)."""
    v = np.asarray(vertices, dtype=float)
    if len(v) < 3:
        return 0.0
    x, y = v[:, 0], v[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def _cross_turns(v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    prev = np.roll(v, 1, axis=0)
    nxt = np.roll(v, -1, axis=0)
    e1 = v - prev
    e2 = nxt - v
    cross = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
    scale = np.hypot(e1[:, 0], e1[:, 1]) * np.hypot(e2[:, 0], e2[:, 1])
    return cross, scale


def _simplify(v: np.ndarray, tol: float = EPS_POINT) -> np.ndarray:
    """Drop repeated and collinear vertices of a convex CCW polygon."""
    if len(v) == 0:
        return v
    step = np.diff(np.vstack([v, v[:1]]), axis=0)
    keep = np.hypot(step[:, 0], step[:, 1]) > tol
    v = v[keep]
    while len(v) >= 3:
        cross, scale = _cross_turns(v)
        keep = cross > tol * np.maximum(scale, tol)
        if keep.all():
            break
        v = v[keep]
    return v


class ConvexPolygon:
    """Counter-clockwise, strictly convex polygon."""

    __slots__ = ("vertices", "_area")

    def __init__(self, vertices, check: bool = True):
        v = np.ascontiguousarray(vertices, dtype=float).reshape(-1, 2)
        if check:
            if not np.all(np.isfinite(v)):
                raise ValueError("polygon vertices must be finite")
            if len(v) < 3:
                raise ValueError("a polygon needs at least 3 vertices")
            if polygon_area(v) < 0:
                v = v[::-1].copy()
            cross, scale = _cross_turns(v)
            if np.any(cross <= EPS_POINT * np.maximum(scale, EPS_POINT)):
                raise ValueError("vertices are not strictly convex in CCW order")
        self.vertices = v
        self._area = None

    def __len__(self):
        return len(self.vertices)

    def __repr__(self):
        return f"ConvexPolygon(n={len(self)}, area={self.area:.6g})"

    @property
    def area(self) -> float:
        if self._area is None:
            self._area = polygon_area(self.vertices)
        return self._area

    def translate(self, offset) -> "ConvexPolygon":
        out = ConvexPolygon.__new__(ConvexPolygon)
        out.vertices = self.vertices + np.asarray(offset, dtype=float)
        out._area = self._area
        return out

    def halfplanes(self) -> tuple[np.ndarray, np.ndarray]:
        """Outward unit normals ``n`` and offsets ``c`` with inside = ``n·x <= c``."""
        v = self.vertices
        e = np.roll(v, -1, axis=0) - v
        n = np.stack([e[:, 1], -e[:, 0]], axis=1)
        n /= np.hypot(n[:, 0], n[:, 1])[:, None]
        return n, np.einsum("ij,ij->i", n, v)

    def support(self, directions) -> np.ndarray:
        """Support function ``max_v d·v`` for each row of ``directions``."""
        d = np.atleast_2d(np.asarray(directions, dtype=float))
        v = self.vertices
        if len(v) <= 64:
            return (d @ v.T).max(axis=1)
        # binary search on the (increasing) outward-normal angles
        n, _ = self.halfplanes()
        psi = np.unwrap(np.arctan2(n[:, 1], n[:, 0]))
        phi = np.arctan2(d[:, 1], d[:, 0])
        phi = psi[0] + np.mod(phi - psi[0], 2 * np.pi)
        j = np.searchsorted(psi, phi) % len(v)
        cand = np.stack([j, (j + 1) % len(v), (j - 1) % len(v)], axis=1)
        return np.einsum("ik,ikj->ij", d, v[cand].transpose(0, 2, 1)).max(axis=1)

    def contains(self, pts, tol: float = EPS_POINT) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        n, c = self.halfplanes()
        return np.all(pts @ n.T <= c + tol, axis=1)


def ball_polygon(p: PLike, radius: float = 1.0, center=(0.0, 0.0), m: int = DEFAULT_M) -> ConvexPolygon:
    """Inscribed m-gon of ``B_p(center, radius)`` at equally spaced parameters.

    Vertices that fall on straight edges (p = 1, p = ∞) are dropped, so the
    diamond and the square come back as exact 4-gons when ``m % 4 == 0``.
    """
    if m < 16:
        raise ValueError("ball_polygon needs m >= 16")
    if not radius > 0:
        raise ValueError("radius must be positive")
    p = as_pnorm(p)
    t = 2.0 * np.pi * np.arange(m) / m
    if p.is_inf and m % 4 == 0:
        # corners at t = (2k+1)π/4 are among the parameters only if m % 8 == 0
        t = np.concatenate([t, np.pi / 4 + np.pi / 2 * np.arange(4)])
        t = np.unique(np.mod(t, 2 * np.pi))
    v = ball_boundary(p, t) * radius + np.asarray(center, dtype=float)
    return ConvexPolygon(_simplify(v), check=False)


@njit(cache=True)
def _bbox(P, k):
    xlo = xhi = P[0, 0]
    ylo = yhi = P[0, 1]
    for i in range(1, k):
        x = P[i, 0]
        y = P[i, 1]
        if x < xlo:
            xlo = x
        elif x > xhi:
            xhi = x
        if y < ylo:
            ylo = y
        elif y > yhi:
            yhi = y
    return xlo, xhi, ylo, yhi


@njit(cache=True)
def _sh_clip(P, normals, offsets):
    """Clip polygon ``P`` by the half-planes ``n·x <= c``.

    Half-planes that contain the bounding box of the current polygon are
    skipped without a pass.
    """
    cap = len(P) + len(normals) + 2
    cur = np.empty((cap, 2))
    nxt = np.empty((cap, 2))
    d = np.empty(cap)
    k = len(P)
    cur[:k] = P
    xlo, xhi, ylo, yhi = _bbox(cur, k)
    for e in range(len(normals)):
        nx = normals[e, 0]
        ny = normals[e, 1]
        c = offsets[e]
        far = (xhi if nx > 0 else xlo) * nx + (yhi if ny > 0 else ylo) * ny
        if far <= c:
            continue
        any_in = False
        for i in range(k):
            d[i] = cur[i, 0] * nx + cur[i, 1] * ny - c
            if d[i] <= 0.0:
                any_in = True
        if not any_in:
            return cur[:0].copy()
        m = 0
        for i in range(k):
            j = i + 1 if i + 1 < k else 0
            di = d[i]
            dj = d[j]
            if di <= 0.0:
                nxt[m, 0] = cur[i, 0]
                nxt[m, 1] = cur[i, 1]
                m += 1
            if (di <= 0.0) != (dj <= 0.0):
                w = di / (di - dj)
                nxt[m, 0] = cur[i, 0] + (cur[j, 0] - cur[i, 0]) * w
                nxt[m, 1] = cur[i, 1] + (cur[j, 1] - cur[i, 1]) * w
                m += 1
        cur, nxt = nxt, cur
        k = m
        if k < 3:
            return cur[:0].copy()
        xlo, xhi, ylo, yhi = _bbox(cur, k)
    return cur[:k].copy()


@njit(cache=True)
def _shoelace(P):
    s = 0.0
    k = len(P)
    for i in range(k):
        j = i + 1 if i + 1 < k else 0
        s += P[i, 0] * P[j, 1] - P[j, 0] * P[i, 1]
    return 0.5 * s


@njit(cache=True)
def _batch_area(A, shifts, normals, offsets):
    out = np.empty(len(shifts))
    S = np.empty_like(A)
    for i in range(len(shifts)):
        S[:, 0] = A[:, 0] + shifts[i, 0]
        S[:, 1] = A[:, 1] + shifts[i, 1]
        C = _sh_clip(S, normals, offsets)
        out[i] = _shoelace(C) if len(C) >= 3 else 0.0
    return out


def clip_convex(a: ConvexPolygon, b: ConvexPolygon) -> ConvexPolygon | None:
    """Intersection of two convex polygons, or ``None`` when it is empty.

    Sutherland-Hodgman clipping of the polygon with fewer vertices against
    the other one's edges.
    """
    subject, clipper = (a, b) if len(a) <= len(b) else (b, a)
    n, c = clipper.halfplanes()
    P = _simplify(_sh_clip(subject.vertices, n, c))
    if len(P) < 3 or polygon_area(P) <= EPS_AREA * EPS_AREA:
        return None
    return ConvexPolygon(P, check=False)


def intersection_areas(a: ConvexPolygon, b: ConvexPolygon, shifts) -> np.ndarray:
    """``Area((a + s) ∩ b)`` for every row ``s`` of ``shifts``."""
    shifts = np.atleast_2d(np.asarray(shifts, dtype=float))
    n, c = b.halfplanes()
    return _batch_area(a.vertices, np.ascontiguousarray(shifts), n, c)


def clip_area(a: ConvexPolygon, b: ConvexPolygon) -> float:
    out = clip_convex(a, b)
    return 0.0 if out is None else out.area


class LensDomainError(ValueError):
    """Raised when two circles do not meet in a lens."""

    def __init__(self, kind: str, R: float, r: float, d: float):
        self.kind = kind
        super().__init__(f"circles are {kind}: R={R!r}, r={r!r}, d={d!r}")


def lens_height(R: float, r: float, d: float) -> float:
    """Height of the lens cut out by circles of radii R, r at center distance d."""
    if not (R > 0 and r > 0):
        raise ValueError("radii must be positive")
    tol = 1e-12 * (R + r)
    if d > R + r + tol:
        raise LensDomainError("disjoint", R, r, d)
    if d < abs(R - r) - tol or d <= 0:
        raise LensDomainError("nested", R, r, d)
    # (-d+r-R)(-d-r+R)(-d+r+R)(d+r+R) regrouped as two differences of
    # squares; this form is exactly symmetric in R and r and loses less
    # precision near tangency
    g = abs(R - r)
    prod = (d - g) * (d + g) * (R + r - d) * (R + r + d)
    return math.sqrt(max(prod, 0.0)) / d


def _project_distance_q1(p: PNorm, q: PNorm, a: np.ndarray, grid: int = 257, iters: int = 40) -> np.ndarray:
    """L_q distance from points ``a`` (first quadrant, outside B_p) to B_p.

    Coarse search over the boundary arc t in [0, π/2], then golden-section
    refinement inside the bracketing grid cell.
    """
    t = np.linspace(0.0, np.pi / 2, grid)
    b = ball_boundary(p, t)
    out = np.empty(len(a))
    chunk = max(1, 2_000_000 // grid)
    g = (math.sqrt(5.0) - 1.0) / 2.0
    for s in range(0, len(a), chunk):
        pa = a[s:s + chunk]
        dist = lp_norm(q, pa[:, None, :] - b[None, :, :])
        k = np.argmin(dist, axis=1)
        lo = t[np.maximum(k - 1, 0)]
        hi = t[np.minimum(k + 1, grid - 1)]
        best = dist[np.arange(len(pa)), k]

        def f(tt):
            return lp_norm(q, pa - ball_boundary(p, tt))

        for _ in range(iters):
            x1 = hi - g * (hi - lo)
            x2 = lo + g * (hi - lo)
            left = f(x1) < f(x2)
            hi = np.where(left, x2, hi)
            lo = np.where(left, lo, x1)
        out[s:s + chunk] = np.minimum(best, f(0.5 * (lo + hi)))
    return out


def distance_to_ball(p: PLike, q: PLike, pts) -> np.ndarray:
    """L_q distance from each point to the unit ball B_p (0 inside)."""
    p, q = as_pnorm(p), as_pnorm(q)
    a = np.abs(np.atleast_2d(np.asarray(pts, dtype=float)))
    out = np.zeros(len(a))
    outside = lp_norm(p, a) > 1.0
    if not outside.any():
        return out
    ao = a[outside]
    if p.is_inf:
        out[outside] = lp_norm(q, ao - np.minimum(ao, 1.0))
    elif p.value == q.value:
        out[outside] = lp_norm(p, ao) - 1.0
    else:
        out[outside] = _project_distance_q1(p, q, ao)
    return out


def support_contains(dist, v) -> np.ndarray | bool:
    """Whether ``v`` lies in the support ``B_p + δB_q`` of ``dist``.

    ``dist`` is any object with ``p``, ``q`` and ``delta`` attributes.
    Accepts a single point (returns bool) or an ``(N, 2)`` array.
    """
    pts = np.asarray(v, dtype=float)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)
    p, q, delta = as_pnorm(dist.p), as_pnorm(dist.q), float(dist.delta)
    tol = EPS_POINT * (1.0 + delta)
    if delta == 0:
        res = lp_norm(p, pts) <= 1.0 + EPS_POINT
    elif p == q:
        res = lp_norm(p, pts) <= 1.0 + delta + tol
    else:
        res = distance_to_ball(p, q, pts) <= delta + tol
    return bool(res[0]) if single else res
