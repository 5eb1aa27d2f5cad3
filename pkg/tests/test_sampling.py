import math
import time
from functools import lru_cache

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from smoothmax.geometry import lp_norm, unit_ball_area
from smoothmax.maxima import count_maxima
from smoothmax.sampling import (
    SeedSpec,
    SmoothedDist,
    cell_index,
    make_rng,
    sample_ball,
    sample_set,
    sample_smoothed,
)

N = 10**6


@lru_cache(maxsize=None)
def ball_draws(p, n=N, seed=5):
    return sample_ball(p, make_rng(seed), n)


def test_single_point_shape():
    v = sample_ball(2, make_rng(0))
    assert v.shape == (2,)
    assert sample_smoothed(SmoothedDist(1, 2, 0.3), make_rng(0)).shape == (2,)


def test_inf_ball_mean_zero():
    x = ball_draws(math.inf)[:, 0]
    assert abs(x.mean()) <= 4 * x.std() / math.sqrt(len(x))


def test_disk_inner_quarter():
    v = ball_draws(2)
    frac = np.mean(np.hypot(v[:, 0], v[:, 1]) <= 0.5)
    assert abs(frac - 0.25) <= 4 * math.sqrt(0.25 * 0.75 / len(v))


def test_diamond_first_quadrant():
    v = ball_draws(1)
    frac = np.mean((v[:, 0] > 0) & (v[:, 1] > 0))
    assert abs(frac - 0.25) <= 4 * math.sqrt(0.25 * 0.75 / len(v))


@pytest.mark.parametrize("p", [1, 1.5, 2, 4, math.inf])
def test_ball_samples_inside(p):
    assert np.all(lp_norm(p, ball_draws(p, 10**5)) <= 1 + 1e-12)


@pytest.mark.parametrize("p", [1, 2, 4, math.inf])
@settings(max_examples=15)
@given(cx=st.floats(-0.6, 0.6), cy=st.floats(-0.6, 0.6), w=st.floats(0.05, 0.6), h=st.floats(0.05, 0.6))
def test_uniform_on_boxes(p, cx, cy, w, h):
    lo = np.array([cx - w / 2, cy - h / 2])
    hi = lo + [w, h]
    corners = np.array([lo, [hi[0], lo[1]], hi, [lo[0], hi[1]]])
    if np.any(lp_norm(p, corners) > 1):
        return  # box not inside the ball
    v = ball_draws(p)
    freq = np.mean(np.all((v >= lo) & (v <= hi), axis=1))
    expect = w * h / unit_ball_area(p)
    assert abs(freq - expect) <= 4 * math.sqrt(expect * (1 - expect) / len(v))


def test_zero_delta_matches_ball_law():
    a = sample_smoothed(SmoothedDist(2, 1, 0.0), make_rng(1), 200_000)
    b = sample_ball(2, make_rng(2), 200_000)
    for k in range(2):
        se = math.sqrt(a[:, k].var() / len(a) + b[:, k].var() / len(b))
        assert abs(a[:, k].mean() - b[:, k].mean()) <= 4 * se
        # variance of the sample variance for a symmetric law: (m4 - s^4)/n
        va = (np.mean(a[:, k] ** 4) - a[:, k].var() ** 2) / len(a)
        vb = (np.mean(b[:, k] ** 4) - b[:, k].var() ** 2) / len(b)
        assert abs(a[:, k].var() - b[:, k].var()) <= 4 * math.sqrt(va + vb)


def test_square_perturbed_by_square_has_independent_coordinates():
    v = sample_smoothed(SmoothedDist(math.inf, math.inf, 0.7), make_rng(3), N)
    rho = np.corrcoef(v[:, 0], v[:, 1])[0, 1]
    assert abs(rho) < 4 / math.sqrt(N)


def test_disk_sum_support_bound():
    v = sample_smoothed(SmoothedDist(2, 2, 0.5), make_rng(4), N)
    assert np.all(np.hypot(v[:, 0], v[:, 1]) <= 1.5 + 1e-12)


@pytest.mark.parametrize("p, q, delta", [(1, 2, 0.4), (math.inf, 1, 2.0), (2, math.inf, 0.3)])
def test_samples_lie_in_support(p, q, delta):
    d = SmoothedDist(p, q, delta)
    assert d.contains(sample_smoothed(d, make_rng(9), 20_000)).all()


def _pair_chi2(H, G):
    """Chi-square statistic for H == G cell by cell, each unordered pair once."""
    num = (H - G) ** 2
    den = H + G
    ok = den > 0
    stat = float(np.sum(num[ok] / den[ok])) / 2  # every pair is visited twice
    dof = int(ok.sum() // 2)
    return stat, dof


@pytest.mark.parametrize("p, q, delta", [(1, 2, 0.5), (math.inf, 1, 0.3), (2, 4, 1.5)])
def test_density_symmetry(p, q, delta):
    d = SmoothedDist(p, q, delta)
    v = sample_smoothed(d, make_rng(21), 400_000)
    e = d.extent
    H, _, _ = np.histogram2d(v[:, 0], v[:, 1], bins=10, range=[[-e, e], [-e, e]])
    for G in (H.T, H[::-1, ::-1]):
        stat, dof = _pair_chi2(H, G)
        assert stats.chi2.sf(stat, dof) > 0.01


def test_sample_set_determinism_and_streams():
    d = SmoothedDist(1, 2, 1.0)
    a = sample_set(d, 500, SeedSpec(7, 3, 0))
    b = sample_set(d, 500, SeedSpec(7, 3, 0))
    c = sample_set(d, 500, SeedSpec(7, 3, 1))
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_sample_set_speed():
    t = time.perf_counter()
    sample_set(SmoothedDist(1, 2, 1.0), 10**5, SeedSpec(1))
    assert time.perf_counter() - t < 1.0


def test_sample_set_rejects_empty():
    with pytest.raises(ValueError):
        sample_set(SmoothedDist(2, 2, 1.0), 0, SeedSpec(1))


def test_seed_spec_validation():
    with pytest.raises(ValueError):
        SeedSpec(-1)
    with pytest.raises(ValueError):
        SeedSpec(2**64)
    with pytest.raises(ValueError):
        SeedSpec(1, replicate_index=1.5)
    assert SeedSpec(1, 2, 3).digest() == SeedSpec(1, 2, 3).digest()
    assert SeedSpec(1, 2, 3).digest() != SeedSpec(1, 3, 2).digest()


@given(a=st.integers(0, 50), b=st.integers(0, 50))
def test_distinct_streams_differ(a, b):
    x = make_rng(SeedSpec(99, a, b)).random(4)
    y = make_rng(SeedSpec(99, b, a)).random(4)
    assert (a == b) == np.array_equal(x, y)


def test_cell_index_stable():
    assert cell_index(1, 2, 0.5, 64) == cell_index("1", 2.0, 0.5, 64)
    assert cell_index(1, 2, 0.5, 64) != cell_index(2, 1, 0.5, 64)


def test_dist_validation_and_dual():
    with pytest.raises(ValueError):
        SmoothedDist(2, 2, -0.1)
    with pytest.raises(ValueError):
        SmoothedDist(0.5, 2, 0.1)
    d = SmoothedDist(1, math.inf, 4.0).dual()
    assert d.p.is_inf and d.q.value == 1 and d.delta == 0.25


def test_scaling_duality_small():
    # (p, q, δ) and (q, p, 1/δ) give identically distributed maxima counts
    n, reps = 256, 2000
    d1, d2 = SmoothedDist(1, 2, 3.0), SmoothedDist(2, 1, 1 / 3)
    m1 = [count_maxima(sample_set(d1, n, SeedSpec(5, 1, r))) for r in range(reps)]
    m2 = [count_maxima(sample_set(d2, n, SeedSpec(5, 2, r))) for r in range(reps)]
    se = math.sqrt(np.var(m1, ddof=1) / reps + np.var(m2, ddof=1) / reps)
    assert abs(np.mean(m1) - np.mean(m2)) <= 3 * se
    ks = stats.ks_2samp(m1, m2).statistic
    assert ks < 1.628 * math.sqrt(2 / reps)
