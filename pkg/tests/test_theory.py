import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from smoothmax.density import AxisRectangle, CornerRegion
from smoothmax.sampling import SmoothedDist
from smoothmax.theory import (
    WitnessSet,
    dominance_violations,
    harmonic_number,
    predicted_growth,
    regime,
    regime_boundaries,
    regions_overlap,
    verify_witness,
    witness_b1b1,
    witness_b2b2,
    witness_binfq,
)

from oracles import harmonic_exact

INF = math.inf
KNOWN_PAIRS = [(1, 1), (2, 2), (1, 2), (2, 1), (INF, 1), (INF, 2), (1, INF), (2, INF), (INF, INF)]


# --- growth laws ---------------------------------------------------------------

@pytest.mark.parametrize("p, q, expected", [
    ((1), 1, 1 / 3), (2, 2, 2 / 7), (1, 2, 2 / 7), (2, 1, 2 / 7), (INF, 2, 0.25), (INF, 1, 0.25),
    (INF, INF, 0.0),
])
def test_exponent_at_unit_delta(p, q, expected):
    assert predicted_growth(p, q, 1.0, 2**16)[1] == pytest.approx(expected)


def test_exponents_with_tied_delta():
    assert predicted_growth(1, 2, 2**-8, 2**16, delta_power=-0.5)[1] == pytest.approx(0.5)
    assert predicted_growth(2, 2, 2**4, 2**16, delta_power=0.25)[1] == pytest.approx(2 / 7 + 3 / 28)
    assert predicted_growth(INF, 2, 2**4, 2**16, delta_power=0.25)[1] == pytest.approx(0.375)


def test_b1b2_middle_boundary_value():
    n = 2.0**26
    value, _ = predicted_growth(1, 2, n ** (1 / 26), n)
    assert value == pytest.approx(n ** (7 / 26), rel=1e-9)


def test_zero_delta_limits():
    assert regime(2, 2, 0.0, 1000).value == pytest.approx(math.sqrt(1000))
    assert regime(INF, 1, 0.0, 1000).value == pytest.approx(math.log(1000))
    assert regime(INF, INF, 0.0, 1000).log_regime


def test_large_delta_limits():
    n = 2**12
    assert regime(1, 2, float(n), n).growth.label == "sqrt(n)"
    assert regime(INF, 2, float(n), n).growth.label == "sqrt(n)"
    assert regime(2, INF, float(n), n).log_regime  # B_∞ now carries the shape


def test_regime_validation():
    with pytest.raises(ValueError):
        regime(2, 2, 1.0, 1)
    with pytest.raises(ValueError):
        regime(2, 2, -0.1, 100)
    with pytest.raises(ValueError):
        regime(3, 1.5, 1.0, 100)


def test_describe_mentions_swap():
    assert "1/delta" in regime(2, 1, 0.5, 1000).describe()
    assert "1/delta" not in regime(1, 2, 0.5, 1000).describe()


@pytest.mark.parametrize("pair", [(1, 1), (2, 2), (1, 2), (INF, 2)])
@given(k=st.integers(4, 30))
def test_growth_is_continuous_across_boundaries(pair, k):
    n = 2.0**k
    for e, left, right in regime_boundaries(*pair):
        d = n**e
        r = left.value(n, d) / right.value(n, d)
        assert 0.5 <= r <= 2.0


@pytest.mark.parametrize("pair", KNOWN_PAIRS)
@settings(max_examples=40)
@given(e=st.floats(-1.0, 1.0), k=st.integers(4, 24))
def test_duality(pair, e, k):
    p, q = pair
    n = 2.0**k
    d = n**e
    assert regime(p, q, d, n).value == pytest.approx(regime(q, p, 1 / d, n).value, rel=1e-9)


@pytest.mark.parametrize("pair", KNOWN_PAIRS)
@given(e=st.floats(-2.0, 2.0), k=st.integers(4, 30))
def test_growth_between_log_and_sqrt(pair, e, k):
    n = 2.0**k
    v = regime(*pair, n**e, n).value
    assert 0.5 * math.log(n) <= v <= 2.0 * math.sqrt(n)


# --- harmonic numbers ----------------------------------------------------------

def test_harmonic_examples():
    assert harmonic_number(1) == 1.0
    assert harmonic_number(4) == pytest.approx(25 / 12, abs=1e-15)
    assert harmonic_number(1024) == pytest.approx(7.5092, abs=1e-4)


@given(n=st.integers(1, 3000))
def test_harmonic_matches_exact(n):
    assert harmonic_number(n) == pytest.approx(harmonic_exact(n), rel=1e-14)


def test_harmonic_validation():
    for bad in (0, -3, 2.5):
        with pytest.raises(ValueError):
            harmonic_number(bad)


# --- witness construction ---------------------------------------------------------

def test_b1b1_witness_geometry():
    d, n = 0.1, 4096
    w = witness_b1b1(d, n)
    assert w.sigma == pytest.approx((d / n) ** (1 / 3))
    assert np.allclose(w.anchors.sum(axis=1), 1 + d - w.sigma)
    assert 1 / 3 <= w.count_ratio() <= 3
    for a, b in zip(w.regions, w.regions[1:]):
        assert not regions_overlap(a, b, w.dist)


def test_b2b2_witness_geometry():
    d, n = 0.1, 4096
    w = witness_b2b2(d, n)
    assert np.allclose(np.hypot(*w.anchors.T), 1 + d - w.sigma)
    assert np.all(np.diff(w.anchors[:, 0]) >= w.sigma)
    assert 1 / 3 <= w.count_ratio() <= 3
    with pytest.raises(ValueError):
        witness_b2b2(d, n, theta_range=(0.0, 1.0))


def test_binfq_uniform_spacing():
    d, n = 0.5, 4096
    w = witness_binfq(2, d, n, spacing="uniform")
    xs = w.anchors[:, 0]
    assert np.allclose(np.diff(xs), w.sigma)
    # each anchor sits at the cap height of the next abscissa
    g = 1 + np.sqrt(d * d - (xs[1:] - 1) ** 2)
    assert np.allclose(w.anchors[:-1, 1], g)


@pytest.mark.parametrize("q", [1, 2])
def test_binfq_equal_measure_is_disjoint(q):
    w = witness_binfq(q, 0.5, 2**16)
    assert w.m >= 3
    for a, b in zip(w.regions, w.regions[1:]):
        assert not regions_overlap(a, b, w.dist)


def test_witness_regime_errors():
    with pytest.raises(ValueError):
        witness_b1b1(1.5, 1024)
    with pytest.raises(ValueError):
        witness_b2b2(1e-3, 1024)
    with pytest.raises(ValueError):
        witness_binfq(INF, 0.5, 1024)
    with pytest.raises(ValueError):
        witness_binfq(2, 0.5, 1024, spacing="zigzag")


def test_small_witness_verifies():
    w = witness_b1b1(0.25, 512)
    rep = verify_witness(w.dist, w, mc_samples=20_000, support_samples=20_000, inside_samples=500)
    assert rep.passed, rep.failures
    assert rep.summary().startswith("PASS")


# --- negative controls ----------------------------------------------------------

def test_overlapping_corners_detected():
    d = SmoothedDist(2, 2, 0.3)
    a = CornerRegion((0.6, 0.6), d)
    b = CornerRegion((0.62, 0.58), d)
    assert regions_overlap(a, b, d)


def test_interior_rectangle_is_not_dominant():
    d = SmoothedDist(2, 2, 0.3)
    rect = AxisRectangle((0.0, 0.0), (0.1, 0.1))
    w = WitnessSet(d, 100, [rect], np.array([[0.0, 0.0]]), 0.1, 1.0, "bad")
    rep = verify_witness(d, w, mc_samples=20_000, support_samples=20_000, inside_samples=500)
    assert not rep.dominant and not rep.passed
    assert any("dominate" in f for f in rep.failures)


def test_dominance_violation_count():
    rect = AxisRectangle((0.0, 0.0), (0.1, 0.1))
    inside = np.array([[0.05, 0.05]])
    outside = np.array([[0.2, 0.2], [-0.5, 0.9], [0.06, 0.5]])
    assert dominance_violations(rect, None, outside, inside) == 2


def test_wrong_n_fails_measure_band():
    w = witness_b1b1(0.25, 512)
    w.n = 512 * 10_000
    rep = verify_witness(w.dist, w, mc_samples=20_000, support_samples=20_000, inside_samples=500)
    assert not rep.measures_ok and not rep.passed
