"""Outer-loop majorization of the logistic loss.

The negative log-likelihood of the Bernoulli responses is bounded above by
a quadratic in the log-odds theta with constant curvature n_i/4 per cell.
Completing the square turns the bound into a weighted least-squares target
centred at the working responses lambda = theta + 4*(y - pi), which the
inner unfolding loop then minimizes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .errors import DataError
from .geometry import distance_matrix, linear_predictor


def cell_nll(Y: np.ndarray, n: np.ndarray, Theta: np.ndarray) -> np.ndarray:
    """Per-cell negative log-likelihood n_i * log(1 + exp(-q * theta))."""
    Y = np.asarray(Y, dtype=float)
    Theta = np.asarray(Theta, dtype=float)
    if Y.shape != Theta.shape:
        raise DataError("response and log-odds matrices must have equal shapes")
    Q = 2.0 * Y - 1.0
    return np.asarray(n, dtype=float)[:, None] * np.logaddexp(0.0, -Q * Theta)


def deviance(Y: np.ndarray, n: np.ndarray, Theta: np.ndarray) -> float:
    """Twice the negative log-likelihood."""
    return float(2.0 * cell_nll(Y, n, Theta).sum())


def working_responses(Y: np.ndarray, Pi: np.ndarray, Theta: np.ndarray) -> np.ndarray:
    """Quadratic-majorization targets lambda = theta + 4*(y - pi)."""
    return Theta + 4.0 * (np.asarray(Y, dtype=float) - Pi)


def quadratic_bound(
    Theta: np.ndarray, support: np.ndarray, Y: np.ndarray, n: np.ndarray
) -> np.ndarray:
    """Per-cell majorizer of the negative log-likelihood, anchored at
    ``support``: L(s) + L'(s)(theta - s) + (n/8)(theta - s)^2.

    Touches cell_nll at theta == support and lies above it everywhere.
    """
    Y = np.asarray(Y, dtype=float)
    Q = 2.0 * Y - 1.0
    nw = np.asarray(n, dtype=float)[:, None]
    L0 = cell_nll(Y, n, support)
    xi = Q * expit(-Q * support)
    step = np.asarray(Theta, dtype=float) - support
    return L0 - nw * xi * step + nw / 8.0 * step**2


def update_offsets(T: np.ndarray, W: np.ndarray, variant: str = "per_item"):
    """Weighted means of the offset targets t = lambda + D.

    per_item returns one offset per column; shared returns a single scalar;
    per_person returns one offset per row.
    """
    T = np.asarray(T, dtype=float)
    W = np.asarray(W, dtype=float)
    if variant == "per_item":
        denom = W.sum(axis=0)
        if np.any(denom <= 0):
            raise DataError("zero total weight in an item column")
        return (W * T).sum(axis=0) / denom
    if variant == "shared":
        denom = W.sum()
        if denom <= 0:
            raise DataError("zero total weight")
        return float((W * T).sum() / denom)
    if variant == "per_person":
        denom = W.sum(axis=1)
        if np.any(denom <= 0):
            raise DataError("zero total weight in a person row")
        return (W * T).sum(axis=1) / denom
    raise DataError(f"unknown offset variant: {variant!r}")


def working_dissimilarities(
    Lambda: np.ndarray, m, variant: str = "per_item"
) -> np.ndarray:
    """Target dissimilarities delta = m - lambda; may be negative."""
    Lambda = np.asarray(Lambda, dtype=float)
    if variant == "per_person":
        return np.asarray(m, dtype=float)[:, None] - Lambda
    if variant == "shared":
        return float(m) - Lambda
    return np.asarray(m, dtype=float)[None, :] - Lambda


@dataclass
class WorkingState:
    """All outer-iteration quantities at the current support point."""

    Theta: np.ndarray
    Pi: np.ndarray
    Lambda: np.ndarray
    T: np.ndarray
    Delta: np.ndarray
    W0: np.ndarray

    @classmethod
    def build(cls, Y, n, m, D, variant: str = "per_item") -> "WorkingState":
        """Evaluate the majorization at offsets m and distances D, including
        the offset update baked into Delta."""
        Y = np.asarray(Y, dtype=float)
        n = np.asarray(n, dtype=float)
        Theta = linear_predictor(m, D, variant)
        Pi = expit(Theta)
        Lambda = working_responses(Y, Pi, Theta)
        T = Lambda + D
        W0 = np.broadcast_to(n[:, None], Y.shape).copy()
        m_new = update_offsets(T, W0, variant)
        Delta = working_dissimilarities(Lambda, m_new, variant)
        return cls(Theta=Theta, Pi=Pi, Lambda=Lambda, T=T, Delta=Delta, W0=W0)


def deviance_gradients(Y, n, m, U, V, variant: str = "per_item"):
    """Analytic gradients of the deviance with respect to (m, U, V).

    Valid away from coincident points (all D > 0); the chain rule through
    X @ B gives the supervised gradient as X.T @ g_U.
    """
    Y = np.asarray(Y, dtype=float)
    n = np.asarray(n, dtype=float)
    D = distance_matrix(U, V)
    if np.any(D <= 0):
        raise DataError("gradients undefined at coincident person/item points")
    Theta = linear_predictor(m, D, variant)
    Pi = expit(Theta)
    G = -n[:, None] * (Y - Pi)  # dL/dtheta
    if variant == "per_item":
        g_m = G.sum(axis=0)
    elif variant == "shared":
        g_m = float(G.sum())
    else:
        g_m = G.sum(axis=1)
    # dtheta/du_i = -(u_i - v_r)/D, dtheta/dv_r = (u_i - v_r)/D
    ratio = G / D
    U = np.asarray(U, dtype=float)
    V = np.asarray(V, dtype=float)
    g_U = ratio @ V - ratio.sum(axis=1)[:, None] * U
    g_V = ratio.T @ U - ratio.sum(axis=0)[:, None] * V
    return 2.0 * np.asarray(g_m, dtype=float), 2.0 * g_U, 2.0 * g_V
