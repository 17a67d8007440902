"""AIC and free-parameter counts for dimensionality and predictor selection."""

from __future__ import annotations

from .errors import DataError

KINDS = ("unsupervised", "supervised", "reduced_rank")


def npar(kind: str, size: int, R: int, S: int, convention: str = "default") -> int:
    """Number of free parameters of a fitted map.

    ``size`` is the number of participants carrying information
    (unsupervised; all-zero profiles excluded) or the number of predictors
    (supervised and reduced-rank).

    Two counting conventions exist for the unfolding maps. The default
    matches the counts used in the reference AIC tables for this model
    family. The "strict" convention instead removes exactly one parameter
    per indeterminacy of the solution: S translations plus S(S-1)/2
    rotations in the unsupervised map, and S(S-1)/2 rotations in the
    supervised map. The two differ by S. Reduced-rank maps have S^2
    indeterminacies and a single convention.
    """
    if size < 1 or R < 1 or S < 1:
        raise DataError("npar arguments must be positive")
    rotations = S * (S - 1) // 2
    if kind == "unsupervised":
        if convention == "default":
            return size * S + R * S + R - rotations
        if convention == "strict":
            return (size - 1) * S + R * S + R - rotations
    elif kind == "supervised":
        if convention == "default":
            return size * S + R * S + R - S * (S + 1) // 2
        if convention == "strict":
            return size * S + R * S + R - rotations
    elif kind == "reduced_rank":
        if convention in ("default", "strict"):
            return size * S + R * S + R - S * S
    else:
        raise DataError(f"unknown model kind: {kind!r}")
    raise DataError(f"unknown parameter-count convention: {convention!r}")


def aic(deviance: float, n_parameters: int) -> float:
    """Akaike information criterion: deviance plus twice the parameter
    count. Smaller is better."""
    return float(deviance) + 2.0 * n_parameters
