import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from smoothmax.density import (
    AnnularSector,
    AxisRectangle,
    B1B1CornerMeasure,
    B1B2Density,
    B2B2Density,
    B2B2SectorMeasure,
    BinfQDensity,
    CornerRegion,
    CornerTriangle,
    FullSupport,
    PredicateRegion,
    density_b1b2,
    density_b2b2,
    density_binfq,
    density_integral,
    density_numeric,
    measure_mc,
    measure_quad,
    measure_sector_b2b2,
    measure_t_b1b1,
)
from smoothmax.geometry import lp_norm, support_contains, unit_ball_area
from smoothmax.sampling import SeedSpec, SmoothedDist, make_rng, sample_smoothed

from oracles import histogram_density

PAIRS = [(1, 1), (1, 2), (1, math.inf), (2, 1), (2, 2), (2, math.inf), (math.inf, 1), (math.inf, 2),
         (math.inf, math.inf)]


# --- numeric density -------------------------------------------------------------

def test_nested_squares_center():
    assert density_numeric(SmoothedDist(math.inf, math.inf, 0.1), (0, 0)) == pytest.approx(0.25, abs=1e-12)


def test_outside_support_is_zero():
    d = SmoothedDist(1, 2, 0.3)
    assert density_numeric(d, (1.0, 1.0)) == 0.0
    assert density_numeric(d, (2.0, 0.0)) == 0.0


def test_disk_interior_value():
    d = SmoothedDist(2, 2, 0.3)
    pts = np.array([[0, 0], [0.5, 0], [0.3, -0.35], [-0.2, 0.1]])
    assert np.allclose(density_numeric(d, pts), 1 / math.pi, atol=1e-3)


def test_zero_delta_rejected():
    with pytest.raises(ValueError):
        density_numeric(SmoothedDist(2, 2, 0.0), (0, 0))


@pytest.mark.parametrize("p, q", PAIRS)
@settings(max_examples=20)
@given(x=st.floats(-2.2, 2.2), y=st.floats(-2.2, 2.2), delta=st.sampled_from([0.1, 0.5, 1.2]))
def test_positive_density_implies_support(p, q, x, y, delta):
    d = SmoothedDist(p, q, delta)
    f = density_numeric(d, (x, y), m=256)
    assert f >= 0
    if f > 0:
        assert support_contains(d, (x, y))


@pytest.mark.parametrize("p, q", PAIRS)
@settings(max_examples=15)
@given(t=st.floats(0, 2 * math.pi), r=st.floats(0, 1), delta=st.floats(0.01, 0.45))
def test_interior_flatness(p, q, t, r, delta):
    d = SmoothedDist(p, q, delta)
    # widest p-norm of a point of B_q, so that v + δB_q stays inside B_p
    inv = lambda x: 0.0 if math.isinf(x) else 1.0 / x
    reach = 2.0 ** max(0.0, inv(p) - inv(q))
    v = np.array([math.cos(t), math.sin(t)])
    v = v / lp_norm(p, v) * r * (1 - reach * delta)
    assert density_numeric(d, v) == pytest.approx(1 / unit_ball_area(p), abs=1e-3)


@pytest.mark.parametrize("p, q, delta, v", [
    (1, 2, 0.5, (0.9, 0.3)), (math.inf, 1, 0.4, (1.2, 0.9)), (2, 2, 0.25, (0.85, 0.45)),
    (2, 1, 2.0, (1.5, 1.2)),
])
def test_numeric_density_matches_histogram(p, q, delta, v):
    # a second route to f(v): the share of samples in a small square around v
    d = SmoothedDist(p, q, delta)
    s = sample_smoothed(d, make_rng(77), 4_000_000)
    h = 0.04
    est, se = histogram_density(s, v, h)
    # average the numeric density over the same square (3x3 midpoint rule)
    off = (np.arange(3) - 1) * h / 3
    grid = np.array([[v[0] + a, v[1] + b] for a in off for b in off])
    f = density_numeric(d, grid, m=1024).mean()
    assert abs(est - f) <= 4 * se + 2e-3 * max(f, 1e-3)


def test_normalization_quick():
    assert density_integral(SmoothedDist(2, 1, 0.5), points=400_000) == pytest.approx(1.0, abs=0.01)


# --- measures -------------------------------------------------------------------

def test_full_support_measure_is_one():
    d = SmoothedDist(1, 2, 0.7)
    est = measure_mc(d, FullSupport(d), 10_000, SeedSpec(1))
    assert est.mean == 1.0 and est.stderr == 0.0


def test_ball_carries_almost_everything_for_small_delta():
    d = SmoothedDist(2, 2, 0.01)
    ball = PredicateRegion(lambda pts: lp_norm(2, pts) <= 1.0, (-1, -1), (1, 1))
    assert measure_mc(d, ball, 100_000, SeedSpec(2), method="direct").mean >= 0.95


def test_mc_needs_enough_samples():
    d = SmoothedDist(2, 2, 0.1)
    with pytest.raises(ValueError):
        measure_mc(d, FullSupport(d), 999)


@settings(max_examples=8)
@given(x0=st.floats(-1.2, 1.0), y0=st.floats(-1.2, 1.0), w=st.floats(0.05, 0.4), h=st.floats(0.05, 0.4),
       pair=st.sampled_from([(1, 2, 0.3), (math.inf, 2, 0.5), (2, 1, 1.0)]))
def test_mc_agrees_with_quadrature_on_rectangles(x0, y0, w, h, pair):
    d = SmoothedDist(*pair)
    rect = AxisRectangle((x0, y0), (x0 + w, y0 + h))
    est = measure_mc(d, rect, 200_000, SeedSpec(3))
    quad = measure_quad(d, rect, nodes=80, m=512)
    # a density jump inside the box slows quadrature; allow its error too
    assert abs(est.mean - quad) <= 4 * est.stderr + 2e-3 * quad + 1e-7


def test_direct_and_local_agree():
    d = SmoothedDist(1, 1, 0.3)
    tri = CornerTriangle((0.5, 0.6), 0.3)
    a = measure_mc(d, tri, 400_000, SeedSpec(4), method="direct")
    b = measure_mc(d, tri, 400_000, SeedSpec(5), method="local")
    assert abs(a.mean - b.mean) <= 4 * math.hypot(a.stderr, b.stderr)


def test_regions_membership():
    d = SmoothedDist(2, 2, 0.5)
    c = CornerRegion((0.8, 0.8), d)
    assert c.contains([[0.9, 0.9], [0.7, 0.9], [1.2, 1.2]]).tolist() == [True, False, False]
    s = AnnularSector(0.0, math.pi / 4, 0.1, 1.5)
    assert s.contains([[1.45, 0.1], [1.3, 0.1], [0.1, 1.45]]).tolist() == [True, False, False]
    with pytest.raises(ValueError):
        AnnularSector(0.0, 1.0, 2.0, 1.5)


# --- closed-form families ----------------------------------------------------------

def test_b2b2_examples():
    f = B2B2Density(0.25).fit()
    lens = f.constants_["lens"]
    flat = f.constants_["flat"]
    # at σ = δ both branches have scale 1, so they meet up to their constants
    assert 0.2 <= lens / flat <= 5
    assert density_b2b2(0.25, 0.0) == 0.0
    with pytest.raises(ValueError):
        f.predict([2.0])


def test_b2b2_lens_slope():
    f = B2B2Density(0.25)
    s = np.geomspace(0.25 / 100, 0.25 / 2, 12)
    assert np.polyfit(np.log(s), np.log(f.oracle(s)), 1)[0] == pytest.approx(1.5, abs=0.1)


def test_b1b1_interior_is_triangle_area():
    d = 0.001
    v = np.array([[0.2, 0.3], [0.1, 0.5]])
    got = measure_t_b1b1(d, v)
    sigma = 1 + d - v.sum(axis=1)
    ref = np.array([measure_mc(SmoothedDist(1, 1, d), CornerTriangle(tuple(x), d), 200_000, SeedSpec(6, 0, i)).mean
                    for i, x in enumerate(v)])
    assert np.allclose(ref, sigma**2 / 2 / unit_ball_area(1), rtol=0.02)
    assert np.all((got / ref > 0.2) & (got / ref < 5))


def test_b1b1_zero_on_boundary_and_validation():
    assert measure_t_b1b1(0.5, [[0.75, 0.75]])[0] == 0.0
    with pytest.raises(ValueError):
        measure_t_b1b1(0.5, [[1.0, 1.0]])


def test_b1b1_middle_branch_slope_is_three():
    d = 0.5
    f = B1B1CornerMeasure(d, samples=200_000)
    s = np.geomspace(d / 40, d / 3, 8)
    X = np.stack([(1 + d - s) / 2] * 2, axis=1)
    assert set(f.classify(X)) == {"M"}
    assert np.polyfit(np.log(s), np.log(f.oracle(X)), 1)[0] == pytest.approx(3.0, abs=0.1)


def test_sector_branches_meet_and_t_scaling():
    d, t = 0.25, 8
    f = B2B2SectorMeasure(d, t)
    assert f.scale([d])[0] == pytest.approx(d / t)
    dist = SmoothedDist(2, 2, d)
    a = measure_mc(dist, AnnularSector(0, 2 * math.pi / 8, 0.05, 1 + d), 1_000_000, SeedSpec(7)).mean
    b = measure_mc(dist, AnnularSector(0, 2 * math.pi / 16, 0.05, 1 + d), 1_000_000, SeedSpec(8)).mean
    assert b / a == pytest.approx(0.5, abs=0.05)
    with pytest.raises(ValueError):
        B2B2SectorMeasure(d, 4).scale([0.1])
    assert measure_sector_b2b2(d, 8, [0.0])[0] == 0.0


def test_b1b2_region_a_and_continuity():
    d = 0.5
    f = B1B2Density(d).fit()
    a = np.array([[0.3, 0.1], [0.6, 0.2]])
    assert set(f.classify(a)) == {"A"}
    r = f.ratio(a)
    assert np.all((r > 0.2) & (r < 5))
    # on both sides of the ray θ = π/4 from (1, 0) the B and C formulas agree up to constants
    rr = d - 0.05
    eps = 0.02
    b_side = np.array([[1 + rr * math.cos(math.pi / 4 + eps), rr * math.sin(math.pi / 4 + eps)]])
    c_side = np.array([[1 + rr * math.cos(math.pi / 4 - eps), rr * math.sin(math.pi / 4 - eps)]])
    assert f.classify(b_side)[0].startswith("B") and f.classify(c_side)[0].startswith("C")
    ratio = density_b1b2(d, b_side)[0] / density_b1b2(d, c_side)[0]
    assert 0.2 <= ratio <= 5


def test_b1b2_region_b_slope():
    d = 0.5
    f = B1B2Density(d)
    s = np.geomspace(d / 100, d / 3, 10)
    c = (1 + math.sqrt(2) * d - math.sqrt(2) * s) / 2
    pts = np.stack([c + 0.05, c - 0.05], axis=1)
    assert set(f.classify(pts)) == {"B_lens"}
    assert np.polyfit(np.log(s), np.log(f.oracle(pts)), 1)[0] == pytest.approx(1.5, abs=0.1)


def test_b1b2_rejects_points_off_octant():
    with pytest.raises(ValueError):
        density_b1b2(0.5, [[0.1, 0.3]])


def test_binfq_examples():
    d = 0.5
    f = BinfQDensity(2, d).fit()
    a = np.array([[0.2, 0.3], [0.9, 0.5]])
    r = f.ratio(a)
    assert np.all((r > 0.2) & (r < 5))
    v = np.array([[1.2, 1.1]])
    _, _, b1 = BinfQDensity(1, d).alpha_beta(v)
    _, _, b2 = BinfQDensity(2, d).alpha_beta(v)
    assert b1[0] != pytest.approx(b2[0])
    for q in (1, 2):
        rq = BinfQDensity(q, d).fit().ratio(v)[0]
        assert 0.2 < rq < 5
    assert density_binfq(2, d, v)[0] > 0
    with pytest.raises(ValueError):
        density_binfq(2, d, [[1.5, 1.5]])


def test_family_api_requires_fit():
    with pytest.raises(Exception):
        B2B2Density(0.25).predict([0.1])
