"""Fitting loop: initialization, outer majorization, inner unfolding sweeps,
multistart, and prediction."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.special import expit, logit

from . import majorization as mj
from . import selection
from .dataset import BinaryDataset, PredictorSet
from .errors import DataError, NumericalError
from .geometry import (
    SupervisedUnfoldingMap,
    UnfoldingMap,
    distance_matrix,
    endorse_prob,
    linear_predictor,
)
from .unfolding import (
    SmacofWork,
    base_weights,
    identify,
    smacof_step_supervised,
    smacof_step_unsupervised,
    weighted_stress,
)


@dataclass
class FitOptions:
    """Knobs of the fitting loop.

    The outer loop stops once the deviance decrease falls below
    ``eps_outer``; each outer iteration runs at most ``maxinner`` unfolding
    sweeps, stopping early when the stress decrease falls below
    ``eps_inner``. The high default outer cap reflects the linear
    convergence rate of the majorization scheme.
    """

    S: int = 2
    maxouter: int = 65536
    maxinner: int = 8
    eps_outer: float = 1e-6
    eps_inner: float = 1e-8
    epsilon_weight: float = 1e-6
    offset_variant: str = "per_item"
    n_starts: int = 1
    seed: int | None = None
    init: str = "random"
    threads: int = 1

    def __post_init__(self):
        if self.S < 1:
            raise DataError("dimensionality S must be at least 1")
        if self.maxouter < 1 or self.maxinner < 1:
            raise DataError("iteration caps must be at least 1")
        if min(self.eps_outer, self.eps_inner, self.epsilon_weight) <= 0:
            raise DataError("tolerances must be positive")
        if self.n_starts < 1:
            raise DataError("n_starts must be at least 1")
        if self.offset_variant not in ("per_item", "shared", "per_person"):
            raise DataError(f"unknown offset variant: {self.offset_variant!r}")
        if self.init not in ("random", "supplied"):
            raise DataError(f"unknown init mode: {self.init!r}")


@dataclass
class FitReport:
    """Outcome of one fit: the deviance path and model-selection numbers."""

    trace: list[float]
    deviance: float
    converged: bool
    iterations: int
    npar: int
    aic: float
    start_index: int = 0
    per_start_deviances: list[float] | None = None
    seed: int | None = None


def init_offsets(Y: np.ndarray, n: np.ndarray, variant: str = "per_item"):
    """Starting offsets: weighted averages of the signed responses q."""
    Q = 2.0 * np.asarray(Y, dtype=float) - 1.0
    n = np.asarray(n, dtype=float)
    if variant == "per_item":
        return (n @ Q) / n.sum()
    if variant == "shared":
        return float((n[:, None] * Q).sum() / (n.sum() * Q.shape[1]))
    return Q.mean(axis=1)


def init_random(n_rows: int, R: int, S: int, Y, n, rng, variant: str = "per_item"):
    """Standard-normal coordinates plus data-driven offsets.

    ``n_rows`` is the number of person rows (unsupervised) or predictors
    (supervised, giving B).
    """
    coords = rng.standard_normal((n_rows, S))
    V = rng.standard_normal((R, S))
    m = init_offsets(Y, n, variant)
    return coords, V, m


def _as_offsets(m, R: int, I: int, variant: str) -> np.ndarray:
    if variant == "shared":
        return np.full(R, float(np.asarray(m).ravel()[0]))
    m = np.asarray(m, dtype=float).ravel()
    want = I if variant == "per_person" else R
    if m.shape != (want,):
        raise DataError(f"offset vector must have length {want} for {variant}")
    return m


def _outer_loop(Y, n, m, coords, V, X, opts: FitOptions):
    """Run the double majorization until the deviance stalls.

    ``coords`` is U when X is None, otherwise B. Returns the final
    parameters, the deviance trace, and the convergence flag.
    """
    Y = np.asarray(Y, dtype=float)
    n_f = np.asarray(n, dtype=float)
    W0 = base_weights(n_f, Y.shape[1])
    total_w = W0.sum()
    variant = opts.offset_variant

    def current_U(coords):
        return coords if X is None else X @ coords

    U = current_U(coords)
    D = distance_matrix(U, V)
    dev = mj.deviance(Y, n_f, linear_predictor(m, D, variant))
    if not np.isfinite(dev):
        raise NumericalError("non-finite deviance at the starting values")
    trace = [dev]
    converged = False

    for t1 in range(opts.maxouter):
        Theta = linear_predictor(m, D, variant)
        Pi = expit(Theta)
        Lambda = mj.working_responses(Y, Pi, Theta)
        T = Lambda + D
        if variant == "per_item":
            m = (W0 * T).sum(axis=0) / W0.sum(axis=0)
        elif variant == "shared":
            m = float((W0 * T).sum() / total_w)
        else:
            m = (W0 * T).sum(axis=1) / W0.sum(axis=1)
        Delta = mj.working_dissimilarities(Lambda, m, variant)

        stress_prev = weighted_stress(W0, Delta, D)
        for _ in range(opts.maxinner):
            work = SmacofWork.build(W0, Delta, D, opts.epsilon_weight)
            if X is None:
                coords_new, V_new = smacof_step_unsupervised(coords, V, work.W, work.A)
            else:
                coords_new, V_new = smacof_step_supervised(X, coords, V, work.W, work.A)
            D_new = distance_matrix(current_U(coords_new), V_new)
            stress_new = weighted_stress(W0, Delta, D_new)
            if stress_new <= stress_prev:
                coords, V, D = coords_new, V_new, D_new
            if stress_prev - stress_new < opts.eps_inner:
                break
            stress_prev = stress_new

        U = current_U(coords)
        D = distance_matrix(U, V)
        dev_new = mj.deviance(Y, n_f, linear_predictor(m, D, variant))
        if not np.isfinite(dev_new):
            raise NumericalError(f"non-finite deviance at outer iteration {t1 + 1}")
        trace.append(dev_new)
        if dev - dev_new < opts.eps_outer:
            converged = True
            dev = dev_new
            break
        dev = dev_new

    return m, coords, V, trace, converged


def _finish_offsets(m, R: int, variant: str) -> np.ndarray:
    if variant == "shared":
        return np.full(R, float(m))
    return np.asarray(m, dtype=float)


def fit_unsupervised(
    data: BinaryDataset, opts: FitOptions, init=None
) -> tuple[UnfoldingMap, FitReport]:
    """Estimate offsets and free person/item coordinates.

    The all-zero profile carries no information here and must have been
    removed beforehand (see ``compress_profiles(drop_all_zero=True)``).
    With ``opts.n_starts > 1`` the best of several random starts is kept.
    ``init`` overrides the starting values as a tuple (m, U, V) when
    ``opts.init == 'supplied'``.
    """
    if data.has_all_zero_profile():
        raise DataError("unsupervised fit requires the all-zero profile removed")
    I, R = data.I, data.R

    def run(rng, start_index: int):
        if opts.init == "supplied":
            if init is None:
                raise DataError("init='supplied' but no starting values given")
            m0, U0, V0 = init
            m0 = _as_offsets(m0, R, I, opts.offset_variant)
            U0 = np.array(U0, dtype=float)
            V0 = np.array(V0, dtype=float)
        else:
            U0, V0, m0 = init_random(I, R, opts.S, data.Y, data.n, rng, opts.offset_variant)
        m, U, V, trace, converged = _outer_loop(data.Y, data.n, m0, U0, V0, None, opts)
        map_ = UnfoldingMap(
            m=_finish_offsets(m, R, opts.offset_variant),
            U=U,
            V=V,
            offset_variant=opts.offset_variant,
            item_labels=list(data.item_labels),
            profile_labels=list(data.profile_labels),
        )
        return map_, trace, converged

    map_, report = _run_starts(run, opts)
    map_ = identify(map_, data.n)
    report.npar = selection.npar("unsupervised", data.total_count, R, opts.S)
    report.aic = selection.aic(report.deviance, report.npar)
    return map_, report


def fit_supervised(
    data: BinaryDataset, predictors: PredictorSet, opts: FitOptions, init=None
) -> tuple[SupervisedUnfoldingMap, FitReport]:
    """Estimate offsets, regression weights, and item coordinates with person
    coordinates restricted to X @ B. All-zero profiles stay in: the
    predictors still carry information about those participants."""
    X = predictors.X
    if X.shape[0] != data.I:
        raise DataError(
            f"predictor rows ({X.shape[0]}) must match response rows ({data.I})"
        )
    predictors.check_columns()
    I, R, P = data.I, data.R, predictors.P

    def run(rng, start_index: int):
        if opts.init == "supplied":
            if init is None:
                raise DataError("init='supplied' but no starting values given")
            m0, B0, V0 = init
            m0 = _as_offsets(m0, R, I, opts.offset_variant)
            B0 = np.array(B0, dtype=float)
            V0 = np.array(V0, dtype=float)
        else:
            B0, V0, m0 = init_random(P, R, opts.S, data.Y, data.n, rng, opts.offset_variant)
        m, B, V, trace, converged = _outer_loop(data.Y, data.n, m0, B0, V0, X, opts)
        map_ = SupervisedUnfoldingMap(
            m=_finish_offsets(m, R, opts.offset_variant),
            B=B,
            V=V,
            offset_variant=opts.offset_variant,
            item_labels=list(data.item_labels),
            predictor_labels=list(predictors.predictor_labels),
        )
        return map_, trace, converged

    map_, report = _run_starts(run, opts)
    map_ = identify(map_, data.n, X)
    report.npar = selection.npar("supervised", P, R, opts.S)
    report.aic = selection.aic(report.deviance, report.npar)
    return map_, report


def _run_starts(run, opts: FitOptions):
    """Execute ``run`` for each start and keep the lowest final deviance."""
    if opts.init == "supplied" or opts.n_starts == 1:
        rng = np.random.default_rng(opts.seed)
        map_, trace, converged = run(rng, 0)
        report = FitReport(
            trace=trace,
            deviance=trace[-1],
            converged=converged,
            iterations=len(trace) - 1,
            npar=0,
            aic=float("nan"),
            start_index=0,
            seed=opts.seed,
        )
        return map_, report

    results = multistart(
        lambda rng, k: run(rng, k), opts.n_starts, opts.seed, threads=opts.threads
    )
    best, per_start, failures = results
    if best is None:
        raise NumericalError(f"all {opts.n_starts} starts failed: {failures[0][1]}")
    k, (map_, trace, converged) = best
    report = FitReport(
        trace=trace,
        deviance=trace[-1],
        converged=converged,
        iterations=len(trace) - 1,
        npar=0,
        aic=float("nan"),
        start_index=k,
        per_start_deviances=per_start,
        seed=opts.seed,
    )
    return map_, report


def multistart(fit_fn, n_starts: int, seed=None, threads: int = 1):
    """Run ``fit_fn(rng, index)`` for ``n_starts`` independent seeded starts.

    Returns ``(best, per_start_deviances, failures)`` where ``best`` is
    ``(index, result)`` for the lowest final deviance (``None`` if every
    start failed), the per-start list carries NaN for failed starts, and
    failures is a list of (index, exception). The result of ``fit_fn`` must
    be a tuple whose second element is the deviance trace.
    """
    if n_starts < 1:
        raise DataError("n_starts must be at least 1")
    streams = np.random.SeedSequence(seed).spawn(n_starts)

    def one(k):
        try:
            return fit_fn(np.random.default_rng(streams[k]), k), None
        except NumericalError as exc:
            return None, exc

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(one, range(n_starts)))
    else:
        outcomes = [one(k) for k in range(n_starts)]

    per_start: list[float] = []
    failures = []
    best = None
    best_dev = np.inf
    for k, (result, err) in enumerate(outcomes):
        if result is None:
            per_start.append(float("nan"))
            failures.append((k, err))
            continue
        dev = result[1][-1]
        per_start.append(dev)
        if dev < best_dev:
            best, best_dev = (k, result), dev
    return best, per_start, failures


def predict(map_: SupervisedUnfoldingMap, X_new: np.ndarray) -> np.ndarray:
    """Endorsement probabilities for new predictor rows (already centered
    the same way as the training predictors)."""
    X_new = np.asarray(X_new, dtype=float)
    U = map_.person_coordinates(X_new)
    return endorse_prob(map_.m, distance_matrix(U, map_.V), map_.offset_variant)


def fit_intercepts_only(data: BinaryDataset) -> tuple[np.ndarray, float]:
    """Closed-form offsets-only baseline: m_r = logit of the weighted
    endorsement rate; returns (m, deviance)."""
    n = np.asarray(data.n, dtype=float)
    rate = (n @ data.Y) / n.sum()
    m = logit(rate)
    Theta = np.broadcast_to(m[None, :], data.Y.shape)
    return m, mj.deviance(data.Y, n, Theta)
