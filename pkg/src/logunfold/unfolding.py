"""Inner-loop weighted least-squares unfolding.

Minimizes the raw stress sum w * (delta - d(u, v))^2 over the person and
item coordinates by iterative majorization. Working dissimilarities coming
out of the logistic majorization may be negative; those cells get inflated
weights and a zeroed attraction term, which keeps every sweep a descent
step of the stress.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import NumericalError, SingularPredictorsError
from .geometry import SupervisedUnfoldingMap, UnfoldingMap, distance_matrix


def base_weights(n: np.ndarray, R: int) -> np.ndarray:
    """Profile weights replicated across items: w[i, r] = n[i]."""
    n = np.asarray(n, dtype=float)
    return np.repeat(n[:, None], R, axis=1)


def adjusted_weights(
    W0: np.ndarray, Delta: np.ndarray, D: np.ndarray, epsilon: float = 1e-6
) -> np.ndarray:
    """Weight surcharge for negative dissimilarities.

    Cells with delta >= 0 keep their base weight. Negative cells pay
    w * (d + |delta|) / d, or w * (epsilon + delta^2) / epsilon when the
    distance is exactly zero.
    """
    if epsilon <= 0:
        raise NumericalError("weight regularizer epsilon must be positive")
    W0 = np.asarray(W0, dtype=float)
    Delta = np.asarray(Delta, dtype=float)
    D = np.asarray(D, dtype=float)
    neg = Delta < 0
    W = W0.copy()
    pos_d = neg & (D > 0)
    W[pos_d] = W0[pos_d] * (D[pos_d] + np.abs(Delta[pos_d])) / D[pos_d]
    zero_d = neg & (D == 0)
    W[zero_d] = W0[zero_d] * (epsilon + Delta[zero_d] ** 2) / epsilon
    return W


def a_matrix(W0: np.ndarray, Delta: np.ndarray, D: np.ndarray) -> np.ndarray:
    """Attraction coefficients a = w * delta / d, zeroed where the distance
    vanishes or the dissimilarity is negative. Uses the base weights."""
    W0 = np.asarray(W0, dtype=float)
    Delta = np.asarray(Delta, dtype=float)
    D = np.asarray(D, dtype=float)
    safe = np.where(D > 0, D, 1.0)
    return np.where((Delta >= 0) & (D > 0), W0 * Delta / safe, 0.0)


def weighted_stress(W: np.ndarray, Delta: np.ndarray, D: np.ndarray) -> float:
    """Raw stress sum_{ir} w_ir (delta_ir - d_ir)^2."""
    return float((np.asarray(W) * (np.asarray(Delta) - np.asarray(D)) ** 2).sum())


def _marginals(W: np.ndarray, A: np.ndarray):
    p = A.sum(axis=1)
    q = A.sum(axis=0)
    r = W.sum(axis=1)
    c = W.sum(axis=0)
    if np.any(r <= 0) or np.any(c <= 0):
        raise NumericalError("zero row or column weight sum in unfolding step")
    return p, q, r, c


def smacof_step_unsupervised(U, V, W, A):
    """One coordinate sweep of the quadratic stress surrogate anchored at
    the incoming configuration.

    The preliminary attraction terms P U - A V and Q V - A' U stay anchored
    at the sweep start; the coupling term uses the freshly updated U. Each
    half-step then exactly minimizes the surrogate over its block, so the
    sweep can never increase it.
    """
    U = np.asarray(U, dtype=float)
    V = np.asarray(V, dtype=float)
    p, q, r, c = _marginals(W, A)
    VV = q[:, None] * V - A.T @ U
    U_new = (p[:, None] * U - A @ V + W @ V) / r[:, None]
    V_new = (VV + W.T @ U_new) / c[:, None]
    return U_new, V_new


def smacof_step_supervised(X, B, V, W, A):
    """One restricted sweep: solve for the regression weights B with person
    coordinates U = X @ B, then update V. Attraction terms are anchored at
    the sweep start as in the unsupervised step."""
    X = np.asarray(X, dtype=float)
    B = np.asarray(B, dtype=float)
    V = np.asarray(V, dtype=float)
    U = X @ B
    p, q, r, c = _marginals(W, A)
    UU = p[:, None] * U - A @ V
    VV = q[:, None] * V - A.T @ U
    XtRX = X.T @ (r[:, None] * X)
    rhs = X.T @ UU + X.T @ (W @ V)
    try:
        B_new = np.linalg.solve(XtRX, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularPredictorsError(
            "predictor cross-product is singular; drop collinear predictors"
        ) from exc
    U_new = X @ B_new
    V_new = (VV + W.T @ U_new) / c[:, None]
    return B_new, V_new


@dataclass
class SmacofWork:
    """Matrices of one inner-loop majorization, recomputed per sweep."""

    W: np.ndarray
    A: np.ndarray
    p: np.ndarray
    q: np.ndarray
    r: np.ndarray
    c: np.ndarray

    @classmethod
    def build(cls, W0, Delta, D, epsilon: float = 1e-6) -> "SmacofWork":
        W = adjusted_weights(W0, Delta, D, epsilon)
        A = a_matrix(W0, Delta, D)
        p, q, r, c = _marginals(W, A)
        return cls(W=W, A=A, p=p, q=q, r=r, c=c)


def _principal_rotation(U: np.ndarray, n: np.ndarray) -> np.ndarray:
    """Rotation E putting U into weighted principal coordinates, columns in
    non-increasing eigenvalue order, signed so the largest-magnitude entry
    of each rotated U column is positive."""
    n = np.asarray(n, dtype=float)
    M = U.T @ (n[:, None] * U)
    evals, E = np.linalg.eigh(M)
    order = np.argsort(evals)[::-1]
    E = E[:, order]
    UE = U @ E
    for s in range(UE.shape[1]):
        lead = np.argmax(np.abs(UE[:, s]))
        if UE[lead, s] < 0:
            E[:, s] = -E[:, s]
    return E


def identify(map_, n: np.ndarray, X: np.ndarray | None = None):
    """Remove translational/rotational indeterminacy.

    Unsupervised maps are translated so the weighted mean of U is zero and
    rotated so U is in weighted principal coordinates. Supervised maps keep
    their origin (it is the point x = 0) and only rotate, using X @ B as the
    person configuration. Distances are unchanged.
    """
    n = np.asarray(n, dtype=float)
    if isinstance(map_, SupervisedUnfoldingMap):
        if X is None:
            raise NumericalError("supervised identification needs the predictors X")
        U = np.asarray(X, dtype=float) @ map_.B
        E = _principal_rotation(U, n)
        return replace(map_, B=map_.B @ E, V=map_.V @ E)
    if isinstance(map_, UnfoldingMap):
        shift = (n @ map_.U) / n.sum()
        U = map_.U - shift
        V = map_.V - shift
        E = _principal_rotation(U, n)
        return replace(map_, U=U @ E, V=V @ E)
    raise NumericalError(f"cannot identify object of type {type(map_).__name__}")
