import numpy as np
import pytest
from conftest import random_theta_instance

from logunfold import majorization as mj
from logunfold.geometry import SupervisedUnfoldingMap, UnfoldingMap, distance_matrix
from logunfold.unfolding import (
    a_matrix,
    adjusted_weights,
    base_weights,
    identify,
    smacof_step_supervised,
    smacof_step_unsupervised,
    weighted_stress,
)


def test_adjusted_weights_nonnegative_branch():
    W = adjusted_weights(np.array([[2.0]]), np.array([[1.0]]), np.array([[0.5]]))
    assert W[0, 0] == pytest.approx(2.0)


def test_adjusted_weights_negative_branch():
    # 2 * (1 + |-1|) / 1, plugged into the redefinition
    W = adjusted_weights(np.array([[2.0]]), np.array([[-1.0]]), np.array([[1.0]]))
    assert W[0, 0] == pytest.approx(4.0)


def test_adjusted_weights_zero_distance_branch():
    eps = 1e-6
    W = adjusted_weights(np.array([[1.0]]), np.array([[-1.0]]), np.array([[0.0]]), eps)
    assert W[0, 0] == pytest.approx((eps + 1.0) / eps)


def test_a_matrix_cases():
    W0 = np.array([[1.0, 1.0, 1.0]])
    Delta = np.array([[2.0, 2.0, -2.0]])
    D = np.array([[4.0, 0.0, 4.0]])
    A = a_matrix(W0, Delta, D)
    assert A[0, 0] == pytest.approx(0.5)
    assert A[0, 1] == 0.0  # zero distance
    assert A[0, 2] == 0.0  # negative dissimilarity


def test_weighted_stress_values():
    assert weighted_stress(np.array([[1.0]]), np.array([[3.0]]), np.array([[1.0]])) == 4.0
    D = np.array([[1.0, 2.0]])
    assert weighted_stress(np.ones((1, 2)), D, D) == 0.0


def test_weighted_stress_matches_loop():
    rng = np.random.default_rng(2)
    W = rng.uniform(0.5, 2, (4, 3))
    Delta = rng.standard_normal((4, 3))
    D = rng.uniform(0, 2, (4, 3))
    expected = sum(
        W[i, r] * (Delta[i, r] - D[i, r]) ** 2 for i in range(4) for r in range(3)
    )
    assert weighted_stress(W, Delta, D) == pytest.approx(expected, rel=1e-12)


def test_smacof_fixed_point_at_zero_stress():
    rng = np.random.default_rng(4)
    U = rng.standard_normal((5, 2))
    V = rng.standard_normal((3, 2))
    D = distance_matrix(U, V)
    W = np.ones((5, 3))
    A = a_matrix(W, D, D)  # delta == d: attraction equals the weights
    U2, V2 = smacof_step_unsupervised(U, V, W, A)
    assert np.allclose(U2, U, atol=1e-10)
    assert np.allclose(V2, V, atol=1e-10)


def test_smacof_one_by_one_hand_case():
    # u=0, v=1, w=1, delta=2: a=2, so u+ = a*u - a*v + v = -1
    U = np.array([[0.0]])
    V = np.array([[1.0]])
    W = np.array([[1.0]])
    A = a_matrix(W, np.array([[2.0]]), distance_matrix(U, V))
    U2, _ = smacof_step_unsupervised(U, V, W, A)
    assert U2[0, 0] == pytest.approx(-1.0)
    assert distance_matrix(U2, V)[0, 0] == pytest.approx(2.0)


def test_smacof_zero_distance_cell_collapses_to_target():
    # coincident pair with positive delta: a=0 and the update lands on v
    U = np.array([[1.0]])
    V = np.array([[1.0]])
    W = np.array([[1.0]])
    A = a_matrix(W, np.array([[3.0]]), distance_matrix(U, V))
    assert A[0, 0] == 0.0
    U2, _ = smacof_step_unsupervised(U, V, W, A)
    assert U2[0, 0] == pytest.approx(1.0)


def test_supervised_step_identity_design_matches_unsupervised():
    rng = np.random.default_rng(6)
    I, R, S = 5, 4, 2
    U = rng.standard_normal((I, S))
    V = rng.standard_normal((R, S))
    Delta = rng.uniform(-1, 2, (I, R))
    D = distance_matrix(U, V)
    W0 = np.ones((I, R))
    W = adjusted_weights(W0, Delta, D)
    A = a_matrix(W0, Delta, D)
    U2, V2 = smacof_step_unsupervised(U, V, W, A)
    B2, V2s = smacof_step_supervised(np.eye(I), U.copy(), V.copy(), W, A)
    assert np.allclose(B2, U2, atol=1e-10)
    assert np.allclose(V2s, V2, atol=1e-10)


def test_supervised_step_intercept_only_closed_form():
    # X a column of ones in S=1: all persons share one coordinate; the B
    # update solves a single weighted least-squares equation
    rng = np.random.default_rng(8)
    I, R = 6, 3
    X = np.ones((I, 1))
    B = np.array([[0.3]])
    V = rng.standard_normal((R, 1))
    Delta = rng.uniform(0.1, 2.0, (I, R))
    D = distance_matrix(X @ B, V)
    W0 = np.ones((I, R))
    W = adjusted_weights(W0, Delta, D)
    A = a_matrix(W0, Delta, D)
    B2, _ = smacof_step_supervised(X, B, V, W, A)
    p = A.sum(axis=1)
    UU = p[:, None] * (X @ B) - A @ V
    expected = (UU + W @ V).sum() / W.sum()
    assert B2[0, 0] == pytest.approx(expected, rel=1e-12)


def test_supervised_step_singular_predictors():
    from logunfold.errors import SingularPredictorsError

    X = np.array([[1.0, 2.0], [2.0, 4.0], [3.0, 6.0]])  # collinear
    B = np.zeros((2, 1))
    V = np.array([[1.0], [2.0]])
    W = np.ones((3, 2))
    A = np.zeros((3, 2))
    with pytest.raises(SingularPredictorsError):
        smacof_step_supervised(X, B, V, W, A)


def test_inner_descent_with_readjusted_weights():
    """Stress with base weights never increases across sweeps when the
    weights and attractions are re-adjusted at each sweep."""
    rng = np.random.default_rng(10)
    for _ in range(50):
        I, R, S = 6, 4, 2
        U = rng.standard_normal((I, S))
        V = rng.standard_normal((R, S))
        Delta = rng.uniform(-1.5, 2.5, (I, R))  # mixed signs
        W0 = base_weights(rng.integers(1, 4, I), R)
        stress = weighted_stress(W0, Delta, distance_matrix(U, V))
        for _ in range(6):
            D = distance_matrix(U, V)
            W = adjusted_weights(W0, Delta, D)
            A = a_matrix(W0, Delta, D)
            U, V = smacof_step_unsupervised(U, V, W, A)
            new = weighted_stress(W0, Delta, distance_matrix(U, V))
            assert new <= stress + 1e-9 * (1 + abs(stress))
            stress = new


def test_identify_centers_and_diagonalizes():
    rng = np.random.default_rng(12)
    n = rng.integers(1, 5, 7).astype(float)
    map_ = UnfoldingMap(
        m=rng.uniform(0, 1, 4),
        U=rng.standard_normal((7, 3)) + 2.0,
        V=rng.standard_normal((4, 3)) - 1.0,
    )
    D_before = map_.distances()
    out = identify(map_, n)
    assert np.max(np.abs(out.distances() - D_before)) < 1e-10
    assert np.max(np.abs(n @ out.U)) < 1e-9
    G = out.U.T @ (n[:, None] * out.U)
    off = G - np.diag(np.diag(G))
    assert np.max(np.abs(off)) < 1e-9
    d = np.diag(G)
    assert np.all(np.diff(d) <= 1e-9)


def test_identify_idempotent_up_to_sign():
    rng = np.random.default_rng(13)
    n = np.ones(6)
    map_ = UnfoldingMap(
        m=rng.uniform(0, 1, 3),
        U=rng.standard_normal((6, 2)),
        V=rng.standard_normal((3, 2)),
    )
    once = identify(map_, n)
    twice = identify(once, n)
    assert np.allclose(np.abs(once.U), np.abs(twice.U), atol=1e-9)
    assert np.allclose(once.U, twice.U, atol=1e-9)  # sign rule is stable


def test_identify_supervised_keeps_origin():
    rng = np.random.default_rng(14)
    n = np.ones(9)
    X = rng.standard_normal((9, 3))
    map_ = SupervisedUnfoldingMap(
        m=rng.uniform(0, 1, 4),
        B=rng.standard_normal((3, 2)),
        V=rng.standard_normal((4, 2)) + 3.0,
    )
    D_before = distance_matrix(X @ map_.B, map_.V)
    out = identify(map_, n, X)
    assert np.max(np.abs(distance_matrix(X @ out.B, out.V) - D_before)) < 1e-10
    G = (X @ out.B).T @ (X @ out.B)
    assert np.max(np.abs(G - np.diag(np.diag(G)))) < 1e-8
    # a pure rotation cannot move the item centroid to the origin
    assert not np.allclose(out.V.mean(axis=0), 0.0, atol=1e-6)


def test_smacof_surrogate_majorizes_through_full_state():
    """End-to-end: working state from a real instance, one sweep, stress
    non-increasing even with negative dissimilarities present."""
    rng = np.random.default_rng(15)
    for _ in range(20):
        Y, n, m, U, V = random_theta_instance(rng)
        D = distance_matrix(U, V)
        state = mj.WorkingState.build(Y, n, m, D)
        assert (state.Delta < 0).any() or True  # sign mix allowed either way
        W = adjusted_weights(state.W0, state.Delta, D)
        A = a_matrix(state.W0, state.Delta, D)
        U2, V2 = smacof_step_unsupervised(U, V, W, A)
        s_old = weighted_stress(state.W0, state.Delta, D)
        s_new = weighted_stress(state.W0, state.Delta, distance_matrix(U2, V2))
        assert s_new <= s_old + 1e-9 * (1 + abs(s_old))
