"""Random points from B_p, δB_q and the convolution B_p + δB_q.

Every replicate owns its generator, derived from a :class:`SeedSpec`, so a
replicate can be re-run alone or in any order and gives the same bits.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

import numpy as np

from .geometry import PLike, PNorm, as_pnorm, lp_norm, support_contains, unit_ball_area


@dataclass(frozen=True)
class SmoothedDist:
    """The law of ``u + delta * w`` with ``u ~ U(B_p)`` and ``w ~ U(B_q)``."""

    p: PNorm
    q: PNorm
    delta: float

    def __init__(self, p: PLike, q: PLike, delta: float):
        delta = float(delta)
        if not (math.isfinite(delta) and delta >= 0):
            raise ValueError(f"delta must be a finite number >= 0, got {delta!r}")
        object.__setattr__(self, "p", as_pnorm(p))
        object.__setattr__(self, "q", as_pnorm(q))
        object.__setattr__(self, "delta", delta)

    @property
    def extent(self) -> float:
        """Half-width of the square ``[-e, e]²`` that holds the support."""
        return 1.0 + self.delta

    def dual(self) -> "SmoothedDist":
        """``(q, p, 1/δ)``; its samples are those of ``self`` scaled by 1/δ."""
        if self.delta == 0:
            raise ValueError("the dual of an unperturbed distribution is undefined")
        return SmoothedDist(self.q, self.p, 1.0 / self.delta)

    def contains(self, v):
        return support_contains(self, v)

    def __str__(self):
        return f"B_{self.p} + {self.delta:g} B_{self.q}"


@dataclass(frozen=True)
class SeedSpec:
    master_seed: int
    cell_index: int = 0
    replicate_index: int = 0

    def __post_init__(self):
        for name in ("master_seed", "cell_index", "replicate_index"):
            v = getattr(self, name)
            if int(v) != v or v < 0:
                raise ValueError(f"{name} must be a non-negative integer, got {v!r}")
            object.__setattr__(self, name, int(v))
        if self.master_seed >= 2**64:
            raise ValueError("master_seed must fit in 64 bits")

    def seed_sequence(self) -> np.random.SeedSequence:
        # SeedSequence mixes entropy and spawn key through its own hash, so
        # distinct (cell, replicate) pairs give unrelated streams.
        return np.random.SeedSequence(
            entropy=self.master_seed, spawn_key=(self.cell_index, self.replicate_index)
        )

    def digest(self) -> str:
        """Short stable hex tag for logs and CSV files."""
        raw = f"{self.master_seed}:{self.cell_index}:{self.replicate_index}".encode()
        return hashlib.blake2b(raw, digest_size=8).hexdigest()


def make_rng(seed) -> np.random.Generator:
    """Generator from a SeedSpec, an int, or an existing Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, SeedSpec):
        return np.random.Generator(np.random.PCG64(seed.seed_sequence()))
    return np.random.default_rng(seed)


def cell_index(p: PLike, q: PLike, delta: float, n: int) -> int:
    """Stable integer id for an experiment cell (used as a seed coordinate)."""
    key = f"{as_pnorm(p)}|{as_pnorm(q)}|{float(delta)!r}|{int(n)}".encode()
    return int.from_bytes(hashlib.blake2b(key, digest_size=6).digest(), "little")


def sample_ball(p: PLike, rng, size: int | None = None) -> np.ndarray:
    """Uniform point(s) in the unit L_p ball by rejection from ``[-1, 1]²``.

    With ``size=None`` a single ``(2,)`` point is returned, otherwise an
    array of shape ``(size, 2)``.
    """
    p = as_pnorm(p)
    rng = make_rng(rng)
    k = 1 if size is None else int(size)
    if k < 0:
        raise ValueError("size must be non-negative")
    if p.is_inf:
        out = rng.uniform(-1.0, 1.0, size=(k, 2))
    else:
        accept = unit_ball_area(p) / 4.0
        parts = []
        need = k
        while need > 0:
            m = int(need / accept * 1.05) + 16
            cand = rng.uniform(-1.0, 1.0, size=(m, 2))
            cand = cand[lp_norm(p, cand) <= 1.0]
            parts.append(cand[:need])
            need -= len(parts[-1])
        out = np.concatenate(parts) if parts else np.empty((0, 2))
    return out[0] if size is None else out


def sample_smoothed(dist: SmoothedDist, rng, size: int | None = None) -> np.ndarray:
    """Point(s) ``u + δw`` drawn from ``dist``; the u's are drawn before the w's."""
    rng = make_rng(rng)
    u = sample_ball(dist.p, rng, size)
    if dist.delta == 0:
        return u
    w = sample_ball(dist.q, rng, size)
    return u + dist.delta * w


def sample_set(dist: SmoothedDist, n: int, seed: SeedSpec | int) -> np.ndarray:
    """``n`` iid points of ``dist``, a pure function of ``(dist, n, seed)``."""
    if int(n) != n or n < 1:
        raise ValueError(f"n must be a positive integer, got {n!r}")
    return sample_smoothed(dist, make_rng(seed), int(n))
