"""Shared generators and independent oracles for the test suite."""

from __future__ import annotations

import math

import numpy as np
from scipy.optimize import minimize

from logunfold.dataset import BinaryDataset, PredictorSet, compress_profiles
from logunfold.geometry import distance_matrix, endorse_prob


def random_unsupervised_instance(rng, I_max=50, R_max=8, S_max=3):
    """Random compressed dataset drawn from a true unfolding model."""
    I = int(rng.integers(4, I_max + 1))
    R = int(rng.integers(2, R_max + 1))
    S = int(rng.integers(1, S_max + 1))
    U = rng.standard_normal((I, S))
    V = rng.standard_normal((R, S))
    m = rng.uniform(-0.5, 1.5, R)
    Pi = endorse_prob(m, distance_matrix(U, V))
    Y = (rng.random((I, R)) < Pi).astype(float)
    keep = Y.sum(axis=1) > 0
    if keep.sum() < 3:
        return random_unsupervised_instance(rng, I_max, R_max, S_max)
    ds = compress_profiles(Y[keep])
    if ds.I < 3:
        return random_unsupervised_instance(rng, I_max, R_max, S_max)
    return ds, S


def random_supervised_instance(rng, n_max=60, R_max=8, P_max=4, S_max=3):
    """Random supervised dataset from a true restricted unfolding model."""
    n = int(rng.integers(10, n_max + 1))
    R = int(rng.integers(2, R_max + 1))
    S = int(rng.integers(1, S_max + 1))
    P = int(rng.integers(S, P_max + 1))
    X = rng.standard_normal((n, P))
    B = rng.standard_normal((P, S))
    V = rng.standard_normal((R, S))
    m = rng.uniform(-0.5, 1.5, R)
    Pi = endorse_prob(m, distance_matrix(X @ B, V))
    Y = (rng.random((n, R)) < Pi).astype(float)
    ds = BinaryDataset(Y=Y, n=np.ones(n, dtype=np.int64))
    ps = PredictorSet(X=X)
    return ds, ps, S


def random_theta_instance(rng, I=6, R=4):
    """Random smooth configuration with all distances bounded away from 0."""
    for _ in range(100):
        S = int(rng.integers(1, 4))
        U = rng.standard_normal((I, S)) * 1.5
        V = rng.standard_normal((R, S)) * 1.5
        if distance_matrix(U, V).min() > 0.1:
            break
    m = rng.uniform(-1.0, 2.0, R)
    n = rng.integers(1, 6, I)
    Y = (rng.random((I, R)) < 0.5).astype(float)
    return Y, n, m, U, V


def oracle_deviance(Y, n, m, U, V):
    """Scalar-loop deviance, independent of the package's matrix code."""
    total = 0.0
    for i in range(Y.shape[0]):
        for r in range(Y.shape[1]):
            d = math.sqrt(sum((U[i, s] - V[r, s]) ** 2 for s in range(U.shape[1])))
            theta = m[r] - d
            q = 2.0 * Y[i, r] - 1.0
            z = -q * theta
            total += n[i] * (max(z, 0.0) + math.log1p(math.exp(-abs(z))))
    return 2.0 * total


def oracle_best_deviance(Y, n, S, X=None, restarts=24, seed=0):
    """Generic-optimizer oracle: direct minimization of the scalar-loop
    deviance over all free parameters from many random starts."""
    I, R = Y.shape
    rows = X.shape[1] if X is not None else I
    k_coord = rows * S + R * S

    def unpack(x):
        m = x[:R]
        C = x[R : R + rows * S].reshape(rows, S)
        V = x[R + rows * S :].reshape(R, S)
        U = C if X is None else X @ C
        return m, U, V

    def f(x):
        m, U, V = unpack(x)
        return oracle_deviance(Y, n, m, U, V)

    rng = np.random.default_rng(seed)
    best = np.inf
    for _ in range(restarts):
        x0 = np.concatenate([rng.uniform(-1, 1, R), rng.standard_normal(k_coord)])
        for method in ("Powell", "Nelder-Mead"):
            opts = {"maxiter": 4000}
            if method == "Nelder-Mead":
                opts.update({"xatol": 1e-8, "fatol": 1e-10})
            res = minimize(f, x0, method=method, options=opts)
            if res.fun < best:
                best = float(res.fun)
    return best


def grid_oracle_two_profiles(lo=-2.0, hi=2.0, step=0.5):
    """Exhaustive grid search for the two-profile {10, 01} instance in one
    dimension; the offset minimization decomposes per item."""
    grid = np.arange(lo, hi + 1e-9, step)
    Y = np.array([[1.0, 0.0], [0.0, 1.0]])
    best = np.inf
    for u1 in grid:
        for u2 in grid:
            for v1 in grid:
                for v2 in grid:
                    d = np.array(
                        [[abs(u1 - v1), abs(u1 - v2)], [abs(u2 - v1), abs(u2 - v2)]]
                    )
                    total = 0.0
                    for r in range(2):
                        theta = grid[:, None] - d[None, :, r]
                        q = 2.0 * Y[:, r] - 1.0
                        cell = np.logaddexp(0.0, -q[None, :] * theta)
                        total += 2.0 * cell.sum(axis=1).min()
                    best = min(best, total)
    return best
