"""Joint-space geometry: distances, endorsement probabilities, regions.

The model places persons (rows of U) and items (rows of V) in a shared
S-dimensional Euclidean space. Item r carries an offset m_r; the probability
that person i endorses item r is logistic(m_r - d(u_i, v_r)), so each item
with positive offset owns a disc of radius m_r inside which endorsement is
more likely than not.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import cdist
from scipy.special import expit

from .errors import DataError

OFFSET_VARIANTS = ("per_item", "shared", "per_person")


def distance_matrix(U: np.ndarray, V: np.ndarray) -> np.ndarray:
    """Two-mode Euclidean distances D[i, r] = ||u_i - v_r||."""
    U = np.atleast_2d(np.asarray(U, dtype=float))
    V = np.atleast_2d(np.asarray(V, dtype=float))
    if U.shape[1] != V.shape[1]:
        raise DataError(
            f"dimension mismatch: U has {U.shape[1]} columns, V has {V.shape[1]}"
        )
    return cdist(U, V)


def linear_predictor(
    m: np.ndarray, D: np.ndarray, variant: str = "per_item"
) -> np.ndarray:
    """Log-odds theta[i, r] = offset - D[i, r].

    Offsets attach to items (length R, the default and the 'shared' case) or
    to persons (length I, broadcast along rows).
    """
    m = np.asarray(m, dtype=float)
    if variant == "per_person":
        return m[:, None] - D
    return np.atleast_1d(m)[None, :] - D


def endorse_prob(m: np.ndarray, D: np.ndarray, variant: str = "per_item") -> np.ndarray:
    """Endorsement probabilities logistic(m - D), computed overflow-safe."""
    return expit(linear_predictor(m, D, variant))


def classify(Pi: np.ndarray, threshold: float = 0.5) -> np.ndarray:
    """Hard 0/1 classification; strictly greater than the threshold.

    Ties at the threshold go to 0, so an item with offset <= 0 never gets a
    positive prediction.
    """
    if not 0.0 < threshold < 1.0:
        raise DataError("classification threshold must lie strictly in (0, 1)")
    return (np.asarray(Pi) > threshold).astype(np.int64)


def max_regions(R: int, S: int, family: str = "distance") -> int:
    """Maximum number of distinct predicted profiles R items can carve out
    of an S-dimensional space.

    Circular decision boundaries (the 'distance' family) allow
    C(R-1, S) + sum_{s=0}^{S} C(R, s) regions; straight boundaries (the
    'inner_product' family) only sum_{s=0}^{S} C(R, s).
    """
    if R < 1 or S < 1:
        raise DataError("max_regions needs R >= 1 and S >= 1")
    base = sum(math.comb(R, s) for s in range(0, S + 1))
    if family == "inner_product":
        return base
    if family == "distance":
        return math.comb(R - 1, S) + base
    raise DataError(f"unknown region family: {family!r}")


@dataclass
class UnfoldingMap:
    """Fitted unsupervised map: offsets m, person coordinates U, item
    coordinates V."""

    m: np.ndarray
    U: np.ndarray
    V: np.ndarray
    offset_variant: str = "per_item"
    item_labels: list[str] = field(default_factory=list)
    profile_labels: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.m = np.asarray(self.m, dtype=float)
        self.U = np.asarray(self.U, dtype=float)
        self.V = np.asarray(self.V, dtype=float)
        if self.offset_variant not in OFFSET_VARIANTS:
            raise DataError(f"unknown offset variant: {self.offset_variant!r}")

    @property
    def S(self) -> int:
        return self.V.shape[1]

    def distances(self) -> np.ndarray:
        return distance_matrix(self.U, self.V)

    def linear_predictor(self) -> np.ndarray:
        return linear_predictor(self.m, self.distances(), self.offset_variant)

    def probabilities(self) -> np.ndarray:
        return expit(self.linear_predictor())


@dataclass
class SupervisedUnfoldingMap:
    """Fitted supervised map: person coordinates are X @ B."""

    m: np.ndarray
    B: np.ndarray
    V: np.ndarray
    offset_variant: str = "per_item"
    item_labels: list[str] = field(default_factory=list)
    predictor_labels: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.m = np.asarray(self.m, dtype=float)
        self.B = np.asarray(self.B, dtype=float)
        self.V = np.asarray(self.V, dtype=float)
        if self.offset_variant not in OFFSET_VARIANTS:
            raise DataError(f"unknown offset variant: {self.offset_variant!r}")

    @property
    def S(self) -> int:
        return self.V.shape[1]

    @property
    def P(self) -> int:
        return self.B.shape[0]

    def person_coordinates(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.shape[1] != self.P:
            raise DataError(
                f"predictor count mismatch: map expects {self.P}, got {X.shape[1]}"
            )
        return X @ self.B

    def distances(self, X: np.ndarray) -> np.ndarray:
        return distance_matrix(self.person_coordinates(X), self.V)

    def probabilities(self, X: np.ndarray) -> np.ndarray:
        return endorse_prob(self.m, self.distances(X), self.offset_variant)
