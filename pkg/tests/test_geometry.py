import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from logunfold.errors import DataError
from logunfold.geometry import (
    classify,
    distance_matrix,
    endorse_prob,
    linear_predictor,
    max_regions,
)


def test_distance_345():
    D = distance_matrix([[0.0, 0.0]], [[3.0, 4.0]])
    assert D.shape == (1, 1)
    assert D[0, 0] == pytest.approx(5.0, abs=1e-12)


def test_distance_zero_diagonal():
    pts = np.random.default_rng(1).standard_normal((4, 3))
    D = distance_matrix(pts, pts)
    assert np.allclose(np.diag(D), 0.0)


def test_distance_matches_scalar_loop():
    rng = np.random.default_rng(7)
    U = rng.standard_normal((4, 2))
    V = rng.standard_normal((3, 2))
    D = distance_matrix(U, V)
    for i in range(4):
        for r in range(3):
            expected = math.sqrt(sum((U[i, s] - V[r, s]) ** 2 for s in range(2)))
            assert D[i, r] == pytest.approx(expected, abs=1e-12)


def test_distance_dimension_mismatch():
    with pytest.raises(DataError):
        distance_matrix(np.zeros((2, 2)), np.zeros((2, 3)))


def test_prob_half_at_offset_distance():
    Pi = endorse_prob(np.array([1.3]), np.array([[1.3]]))
    assert Pi[0, 0] == pytest.approx(0.5, abs=1e-15)


def test_prob_peak_value():
    # 1/(1 + exp(-2)) evaluated independently at high precision
    Pi = endorse_prob(np.array([2.0]), np.array([[0.0]]))
    assert Pi[0, 0] == pytest.approx(0.8807970779778823, abs=1e-12)


def test_prob_capped_at_half_for_zero_offset():
    D = np.linspace(0.0, 10.0, 50)[None, :]
    Pi = endorse_prob(np.zeros(50), D)
    assert np.all(Pi <= 0.5)


def test_prob_saturates_without_overflow():
    Pi = endorse_prob(np.array([2000.0, -2000.0]), np.array([[0.0, 0.0]]))
    assert Pi[0, 0] == 1.0
    assert Pi[0, 1] == 0.0


def test_prob_monotone_in_distance_and_offset():
    D = np.linspace(0.0, 5.0, 60)[None, :]
    Pi = endorse_prob(np.full(60, 0.7), D)
    assert np.all(np.diff(Pi[0]) < 0)
    ms = np.linspace(-2.0, 2.0, 60)
    Pi2 = endorse_prob(ms, np.full((1, 60), 1.1))
    assert np.all(np.diff(Pi2[0]) > 0)


def test_logit_identity():
    rng = np.random.default_rng(11)
    m = rng.uniform(-2, 2, 5)
    D = rng.uniform(0, 4, (6, 5))
    theta = linear_predictor(m, D)
    Pi = endorse_prob(m, D)
    assert np.allclose(np.log(Pi / (1 - Pi)), theta, atol=1e-12)


def test_per_person_offsets_broadcast_rows():
    m = np.array([1.0, -1.0])
    D = np.zeros((2, 3))
    theta = linear_predictor(m, D, variant="per_person")
    assert np.allclose(theta[0], 1.0)
    assert np.allclose(theta[1], -1.0)


def test_classify_strict_threshold():
    Pi = np.array([[0.51, 0.5, 0.49]])
    assert classify(Pi, 0.5).tolist() == [[1, 0, 0]]


def test_classify_inside_circle_positive():
    # person strictly inside the endorsement disc of radius m
    Pi = endorse_prob(np.array([1.0]), np.array([[0.4]]))
    assert classify(Pi)[0, 0] == 1


def test_classify_threshold_domain():
    with pytest.raises(DataError):
        classify(np.array([[0.5]]), threshold=0.0)


def test_max_regions_published_counts():
    assert max_regions(4, 2, "distance") == 14
    assert max_regions(6, 1, "distance") == 12
    assert max_regions(6, 2, "distance") == 32
    assert max_regions(6, 3, "distance") == 52


def test_max_regions_inner_product():
    # independently: C(6,0)+C(6,1)+C(6,2) = 1+6+15
    assert max_regions(6, 2, "inner_product") == 22


def test_max_regions_big_arguments_exact():
    # integer arithmetic stays exact far beyond float precision
    value = max_regions(200, 8, "distance")
    assert value == math.comb(199, 8) + sum(math.comb(200, s) for s in range(9))


def test_max_regions_validation():
    with pytest.raises(DataError):
        max_regions(0, 1)
    with pytest.raises(DataError):
        max_regions(3, 2, "weird")


@given(st.integers(2, 5), st.integers(0, 10_000))
@settings(max_examples=25, deadline=None)
def test_grid_census_never_exceeds_formula(R, seed):
    """Count distinct hard-classification profiles of a random 2-D map over
    a bounding grid; the combinatorial bound must hold."""
    rng = np.random.default_rng(seed)
    V = rng.uniform(-1, 1, (R, 2))
    m = rng.uniform(0.1, 1.2, R)
    lim = abs(V).max() + m.max() + 0.5
    g = np.linspace(-lim, lim, 80)
    xx, yy = np.meshgrid(g, g)
    pts = np.column_stack([xx.ravel(), yy.ravel()])
    labels = classify(endorse_prob(m, distance_matrix(pts, V)))
    profiles = {tuple(row) for row in labels}
    assert len(profiles) <= max_regions(R, 2, "distance")
