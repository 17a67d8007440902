"""Logistic reduced-rank regression: the inner-product (straight decision
boundary) baseline for the predictive comparison.

Same outer quadratic majorization of the logistic loss as the unfolding
model, but with log-odds m_r + <B'x_i, v_r>. The inner problem is then a
weighted least-squares factor model solved by alternating closed-form
updates of the offsets, the regression weights, and the item loadings.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from . import majorization as mj
from . import selection
from .dataset import BinaryDataset, PredictorSet
from .errors import DataError, NumericalError, SingularPredictorsError
from .estimator import FitOptions, FitReport, init_offsets
from .geometry import max_regions


@dataclass
class ReducedRankMap:
    """Offsets m, regression weights B, and item loadings V with
    log-odds m_r + x_i' B v_r."""

    m: np.ndarray
    B: np.ndarray
    V: np.ndarray
    item_labels: list[str] = field(default_factory=list)
    predictor_labels: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.m = np.asarray(self.m, dtype=float)
        self.B = np.asarray(self.B, dtype=float)
        self.V = np.asarray(self.V, dtype=float)

    @property
    def S(self) -> int:
        return self.V.shape[1]

    @property
    def P(self) -> int:
        return self.B.shape[0]

    def linear_predictor(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.shape[1] != self.P:
            raise DataError(
                f"predictor count mismatch: map expects {self.P}, got {X.shape[1]}"
            )
        return self.m[None, :] + (X @ self.B) @ self.V.T

    def max_profile_regions(self) -> int:
        """Upper bound on distinct 0.5-threshold profiles in the plane."""
        return max_regions(self.V.shape[0], max(self.S, 1), "inner_product")


def _solve(M, rhs, what: str):
    try:
        return np.linalg.solve(M, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularPredictorsError(f"singular normal equations for {what}") from exc


def fit_rrr(
    data: BinaryDataset,
    predictors: PredictorSet,
    S: int,
    opts: FitOptions | None = None,
    init=None,
) -> tuple[ReducedRankMap, FitReport]:
    """Majorization-minimization fit of the reduced-rank logistic model.

    ``S = 0`` fits the intercepts-only model (B and V empty). Starting
    values follow ``opts``: standard-normal B and V with offsets at the
    weighted mean signed response, or a supplied (m, B, V) triple.
    """
    if S < 0:
        raise DataError("rank S must be non-negative")
    opts = opts or FitOptions(S=max(S, 1))
    X = predictors.X
    if X.shape[0] != data.I:
        raise DataError(
            f"predictor rows ({X.shape[0]}) must match response rows ({data.I})"
        )
    Y = data.Y
    n = np.asarray(data.n, dtype=float)
    I, R, P = data.I, data.R, predictors.P
    rng = np.random.default_rng(opts.seed)
    if opts.init == "supplied":
        if init is None:
            raise DataError("init='supplied' but no starting values given")
        m, B, V = (np.array(a, dtype=float) for a in init)
    else:
        m = np.asarray(init_offsets(Y, n, "per_item"), dtype=float)
        B = rng.standard_normal((P, S))
        V = rng.standard_normal((R, S))
    if B.shape != (P, S) or V.shape != (R, S):
        raise DataError("starting values do not match (P, S) and (R, S)")

    nw = n[:, None]
    n_tot = n.sum()
    XtDX = X.T @ (nw * X)

    def theta_of(m, B, V):
        return m[None, :] + (X @ B) @ V.T

    dev = mj.deviance(Y, n, theta_of(m, B, V))
    if not np.isfinite(dev):
        raise NumericalError("non-finite deviance at the starting values")
    trace = [dev]
    converged = False
    for t1 in range(opts.maxouter):
        Theta = theta_of(m, B, V)
        Pi = expit(Theta)
        Z = mj.working_responses(Y, Pi, Theta)
        for _ in range(opts.maxinner):
            UV = (X @ B) @ V.T
            m = (nw * (Z - UV)).sum(axis=0) / n_tot
            if S == 0:
                break
            Zc = Z - m[None, :]
            B = _solve(XtDX, X.T @ (nw * Zc) @ V, "B")
            B = _solve(V.T @ V, B.T, "B").T
            U = X @ B
            V = _solve(U.T @ (nw * U), (Zc.T @ (nw * U)).T, "V").T
        dev_new = mj.deviance(Y, n, theta_of(m, B, V))
        if not np.isfinite(dev_new):
            raise NumericalError(f"non-finite deviance at outer iteration {t1 + 1}")
        trace.append(dev_new)
        if dev - dev_new < opts.eps_outer:
            converged = True
            dev = dev_new
            break
        dev = dev_new

    if S > 0:
        B, V = _orthogonalize(X, B, V)
    map_ = ReducedRankMap(
        m=m,
        B=B,
        V=V,
        item_labels=list(data.item_labels),
        predictor_labels=list(predictors.predictor_labels),
    )
    n_params = R if S == 0 else selection.npar("reduced_rank", P, R, S)
    report = FitReport(
        trace=trace,
        deviance=trace[-1],
        converged=converged,
        iterations=len(trace) - 1,
        npar=n_params,
        aic=selection.aic(trace[-1], n_params),
        seed=opts.seed,
    )
    return map_, report


def _orthogonalize(X, B, V):
    """Gram-Schmidt identification: make the columns of X @ B orthonormal
    with positive leading signs, absorbing the triangular factor into V so
    the fitted log-odds are unchanged."""
    U = X @ B
    Q, Rf = np.linalg.qr(U)
    signs = np.sign(np.diag(Rf))
    signs[signs == 0] = 1.0
    Rf = signs[:, None] * Rf
    try:
        B_new = np.linalg.solve(Rf.T, B.T).T  # B @ Rf^{-1}
    except np.linalg.LinAlgError as exc:
        raise NumericalError("rank-deficient person scores; cannot identify") from exc
    return B_new, V @ Rf.T


def predict_rrr(map_: ReducedRankMap, X_new) -> np.ndarray:
    """Endorsement probabilities logistic(m + <B'x, v>) for new rows."""
    return expit(map_.linear_predictor(X_new))
