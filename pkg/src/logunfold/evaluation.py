"""Configuration-recovery measures and the Brier score."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import pdist

from .errors import DataError


def _check_pair(Z, Zhat):
    Z = np.asarray(Z, dtype=float)
    Zhat = np.asarray(Zhat, dtype=float)
    if Z.shape != Zhat.shape:
        raise DataError(f"configuration shapes differ: {Z.shape} vs {Zhat.shape}")
    if Z.ndim != 2 or Z.shape[0] < 2:
        raise DataError("configurations need at least two points")
    return Z, Zhat


def congruence(Z, Zhat) -> float:
    """Cosine between the vectors of all pairwise distances of two
    configurations. Invariant to rotation, translation, and positive
    dilation of either configuration; 1.0 for identical shapes."""
    Z, Zhat = _check_pair(Z, Zhat)
    d = pdist(Z)
    dhat = pdist(Zhat)
    norm = np.sqrt((d**2).sum()) * np.sqrt((dhat**2).sum())
    if norm == 0:
        raise DataError("congruence undefined for an all-coincident configuration")
    return float((d * dhat).sum() / norm)


def procrustes_rotation(Z, Zhat) -> np.ndarray:
    """Orthogonal T maximizing tr(Z' Zhat T), i.e. the rotation bringing
    Zhat closest to Z in least squares: the polar factor of Zhat' Z."""
    Z, Zhat = _check_pair(Z, Zhat)
    P, _, Qt = np.linalg.svd(Zhat.T @ Z)
    return P @ Qt


def config_correlation(Z, Zhat) -> float:
    """Product-moment correlation between two configurations after
    centering and optimal rotation of the second onto the first."""
    Z, Zhat = _check_pair(Z, Zhat)
    Zc = Z - Z.mean(axis=0)
    Zhc = Zhat - Zhat.mean(axis=0)
    denom = np.sqrt((Zc**2).sum() * (Zhc**2).sum())
    if denom == 0:
        raise DataError("correlation undefined for a zero configuration")
    # tr(Zc' Zhc T) at the optimal rotation is the nuclear norm of Zhc' Zc
    sigma = np.linalg.svd(Zhc.T @ Zc, compute_uv=False)
    return float(sigma.sum() / denom)


@dataclass
class SimilarityTransform:
    """Result of a full Procrustes match: aligned = c * Zhat @ T + t."""

    T: np.ndarray
    dilation: float
    translation: np.ndarray
    aligned: np.ndarray
    residual: float


def procrustes_similarity(Z, Zhat, scale: bool = True) -> SimilarityTransform:
    """Best similarity transform (rotation, translation, and optionally
    dilation) of Zhat onto Z, minimizing the sum of squared differences."""
    Z, Zhat = _check_pair(Z, Zhat)
    mz = Z.mean(axis=0)
    mh = Zhat.mean(axis=0)
    Zc = Z - mz
    Zhc = Zhat - mh
    ss_h = (Zhc**2).sum()
    if ss_h == 0:
        raise DataError("similarity transform undefined for a degenerate configuration")
    P, sigma, Qt = np.linalg.svd(Zhc.T @ Zc)
    T = P @ Qt
    c = float(sigma.sum() / ss_h) if scale else 1.0
    t = mz - c * (mh @ T)
    aligned = c * (Zhat @ T) + t
    residual = float(((Z - aligned) ** 2).sum())
    return SimilarityTransform(T=T, dilation=c, translation=t, aligned=aligned, residual=residual)


def alienation(phi: float) -> float:
    """sqrt(1 - phi^2): spreads high congruence values over a wider range."""
    if not -1e-12 <= phi <= 1 + 1e-12:
        raise DataError("congruence must lie in [0, 1]")
    phi = min(max(phi, 0.0), 1.0)
    return float(np.sqrt(1.0 - phi * phi))


def brier(Y_test, Pi_hat) -> float:
    """Mean squared difference between binary outcomes and predicted
    probabilities over all cells."""
    Y_test = np.asarray(Y_test, dtype=float)
    Pi_hat = np.asarray(Pi_hat, dtype=float)
    if Y_test.shape != Pi_hat.shape:
        raise DataError("outcome and prediction shapes differ")
    return float(((Y_test - Pi_hat) ** 2).mean())
