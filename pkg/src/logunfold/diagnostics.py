"""Model assessment: residuals, classification metrics, leave-one-out
influence, and component-plus-residual data."""

from __future__ import annotations

import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import majorization as mj
from .dataset import BinaryDataset, PredictorSet
from .errors import DataError, NumericalError
from .estimator import FitOptions, fit_supervised
from .geometry import SupervisedUnfoldingMap, distance_matrix, linear_predictor

METRIC_NAMES = (
    "proportion_correct",
    "sensitivity",
    "specificity",
    "ppv",
    "npv",
    "f1",
    "auc",
)


def raw_residuals(Y, Pi) -> np.ndarray:
    """e = y - pi_hat; positive exactly for endorsed cells."""
    Y = np.asarray(Y, dtype=float)
    Pi = np.asarray(Pi, dtype=float)
    if Y.shape != Pi.shape:
        raise DataError("response and probability shapes differ")
    return Y - Pi


def deviance_residuals(Y, n, Theta) -> np.ndarray:
    """Signed square roots of the per-cell deviance contributions.

    Their squares sum to the total deviance; the sign follows the raw
    residual (positive for y = 1).
    """
    L = mj.cell_nll(Y, n, Theta)
    sign = np.where(np.asarray(Y) == 1, 1.0, -1.0)
    return sign * np.sqrt(2.0 * L)


@dataclass
class ItemMetrics:
    """Classification quality of one item; None marks a metric whose
    denominator is empty (e.g. no positive predictions)."""

    label: str
    proportion_correct: float | None
    sensitivity: float | None
    specificity: float | None
    ppv: float | None
    npv: float | None
    f1: float | None
    auc: float | None


@dataclass
class MetricsTable:
    threshold: float
    items: list[ItemMetrics]

    def to_csv(self) -> str:
        """CSV with one row per item; undefined cells become '-'."""
        buf = io.StringIO()
        buf.write("item," + ",".join(METRIC_NAMES) + "\n")
        for it in self.items:
            cells = [it.label]
            for name in METRIC_NAMES:
                value = getattr(it, name)
                cells.append("-" if value is None else f"{value:.6f}")
            buf.write(",".join(cells) + "\n")
        return buf.getvalue()


def _ratio(num: float, den: float) -> float | None:
    return None if den == 0 else num / den


def _weighted_auc(y, score, w) -> float | None:
    """Rank-statistic AUC with midranks for ties, observation weights w."""
    w_pos = float(w[y == 1].sum())
    w_neg = float(w[y == 0].sum())
    if w_pos == 0 or w_neg == 0:
        return None
    order = np.argsort(score, kind="stable")
    y, score, w = y[order], score[order], w[order]
    total = 0.0
    cum_neg = 0.0
    i = 0
    while i < len(score):
        j = i
        while j < len(score) and score[j] == score[i]:
            j += 1
        grp_pos = float(w[i:j][y[i:j] == 1].sum())
        grp_neg = float(w[i:j][y[i:j] == 0].sum())
        total += grp_pos * (cum_neg + 0.5 * grp_neg)
        cum_neg += grp_neg
        i = j
    return total / (w_pos * w_neg)


def classification_metrics(
    Y, Pi, n=None, threshold: float = 0.5, item_labels=None
) -> MetricsTable:
    """Per-item confusion-matrix statistics and AUC at the given threshold.

    Profile weights ``n`` expand each row to its observation count.
    Prediction is strict: pi > threshold.
    """
    Y = np.asarray(Y, dtype=float)
    Pi = np.asarray(Pi, dtype=float)
    if Y.shape != Pi.shape:
        raise DataError("response and probability shapes differ")
    I, R = Y.shape
    w = np.ones(I) if n is None else np.asarray(n, dtype=float)
    labels = item_labels or [f"item{r + 1}" for r in range(R)]
    pred = Pi > threshold
    items = []
    for r in range(R):
        y = Y[:, r]
        p = pred[:, r]
        tp = float(w[(y == 1) & p].sum())
        tn = float(w[(y == 0) & ~p].sum())
        fp = float(w[(y == 0) & p].sum())
        fn = float(w[(y == 1) & ~p].sum())
        items.append(
            ItemMetrics(
                label=labels[r],
                proportion_correct=_ratio(tp + tn, tp + tn + fp + fn),
                sensitivity=_ratio(tp, tp + fn),
                specificity=_ratio(tn, tn + fp),
                ppv=_ratio(tp, tp + fp),
                npv=_ratio(tn, tn + fn),
                f1=_ratio(2 * tp, 2 * tp + fp + fn),
                auc=_weighted_auc(y, Pi[:, r], w),
            )
        )
    return MetricsTable(threshold=threshold, items=items)


@dataclass
class InfluenceRecord:
    """Effect of deleting one observation and refitting."""

    index: int
    delta_deviance: float
    delta_B: float
    delta_V: float
    failed: bool = False


def _joint_rotation(B_from, V_from, B_to, V_to) -> np.ndarray:
    """Single orthogonal rotation aligning (B_from, V_from) with
    (B_to, V_to); both blocks share the rotational indeterminacy."""
    M = B_from.T @ B_to + V_from.T @ V_to
    P, _, Qt = np.linalg.svd(M)
    return P @ Qt


def influence(
    data: BinaryDataset,
    predictors: PredictorSet,
    opts: FitOptions,
    fitted: SupervisedUnfoldingMap,
    threads: int = 1,
) -> list[InfluenceRecord]:
    """Exact leave-one-out influence for a supervised fit.

    Each refit is warm-started at the full-sample solution, then evaluated
    on the complete sample: delta_deviance is the full-sample deviance at
    the full fit minus that at the leave-one-out fit (non-positive when the
    full fit is the optimum). Parameter changes are squared Frobenius norms
    after rotating the leave-one-out estimates onto the full fit.
    """
    X = predictors.X
    n = np.asarray(data.n, dtype=float)
    Theta_full = linear_predictor(
        fitted.m, distance_matrix(X @ fitted.B, fitted.V), fitted.offset_variant
    )
    dev_full = mj.deviance(data.Y, n, Theta_full)
    warm_opts = replace(opts, init="supplied", n_starts=1)
    init = (fitted.m, fitted.B, fitted.V)

    def one(i: int) -> InfluenceRecord:
        keep = np.arange(data.I) != i
        sub = BinaryDataset(
            Y=data.Y[keep],
            n=data.n[keep],
            item_labels=list(data.item_labels),
            profile_labels=[data.profile_labels[j] for j in np.flatnonzero(keep)],
        )
        sub_X = replace(predictors, X=X[keep])
        try:
            loo, _ = fit_supervised(sub, sub_X, warm_opts, init=init)
        except NumericalError:
            return InfluenceRecord(i, float("nan"), float("nan"), float("nan"), True)
        Theta_loo = linear_predictor(
            loo.m, distance_matrix(X @ loo.B, loo.V), loo.offset_variant
        )
        dev_loo = mj.deviance(data.Y, n, Theta_loo)
        T = _joint_rotation(loo.B, loo.V, fitted.B, fitted.V)
        dB = float(((fitted.B - loo.B @ T) ** 2).sum())
        dV = float(((fitted.V - loo.V @ T) ** 2).sum())
        return InfluenceRecord(i, dev_full - dev_loo, dB, dV)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(one, range(data.I)))
    return [one(i) for i in range(data.I)]


def influence_csv(records: list[InfluenceRecord]) -> str:
    buf = io.StringIO()
    buf.write("index,delta_deviance,delta_B,delta_V,failed\n")
    for rec in records:
        buf.write(
            f"{rec.index},{rec.delta_deviance:.8g},{rec.delta_B:.8g},"
            f"{rec.delta_V:.8g},{int(rec.failed)}\n"
        )
    return buf.getvalue()


def tricube_smoother(x, y, grid, span: float = 0.75) -> np.ndarray:
    """Local linear fit with tricube weights over a span fraction of the
    points, evaluated at the grid."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.max() == x.min():
        raise DataError("smoother undefined for a constant predictor")
    k = max(2, int(np.ceil(span * len(x))))
    out = np.empty(len(grid))
    for g, x0 in enumerate(grid):
        dist = np.abs(x - x0)
        h = np.sort(dist)[k - 1]
        if h == 0:
            h = max(dist.max(), 1e-12)
        u = np.minimum(dist / h, 1.0)
        w = (1.0 - u**3) ** 3
        sw = w.sum()
        xm = (w * x).sum() / sw
        ym = (w * y).sum() / sw
        sxx = (w * (x - xm) ** 2).sum()
        slope = 0.0 if sxx == 0 else (w * (x - xm) * (y - ym)).sum() / sxx
        out[g] = ym + slope * (x0 - xm)
    return out


@dataclass
class CprData:
    """Scatter and reference curves of one component-plus-residual panel."""

    predictor: str
    item: str
    x: np.ndarray
    scatter: np.ndarray
    grid: np.ndarray
    assumed: np.ndarray
    smooth: np.ndarray

    def to_rows(self):
        for xv, sv in zip(self.x, self.scatter):
            yield (self.predictor, self.item, "point", float(xv), float(sv))
        for gv, av, mv in zip(self.grid, self.assumed, self.smooth):
            yield (self.predictor, self.item, "assumed", float(gv), float(av))
            yield (self.predictor, self.item, "smooth", float(gv), float(mv))


def component_residual_data(
    fitted: SupervisedUnfoldingMap,
    predictors: PredictorSet,
    Y,
    predictor: int,
    item: int,
    span: float = 0.75,
    grid_size: int = 100,
) -> CprData:
    """Partial fit of one predictor for one item plus scaled raw residuals.

    The vertical values are m_r - d(x_p * b_p, v_r) + 4 * (y - pi); the
    assumed-form curve evaluates the same partial fit over the observed
    predictor range, and the smoother tracks the scatter. Strong
    disagreement between the two curves signals misspecification.
    """
    X = predictors.X
    Y = np.asarray(Y, dtype=float)
    p, r = predictor, item
    x = X[:, p]
    if x.max() == x.min():
        raise DataError("component-plus-residual plot needs a varying predictor")
    b_p = fitted.B[p]
    v_r = fitted.V[r]
    m_r = float(fitted.m[r] if fitted.m.ndim else fitted.m)

    def partial_fit(values):
        pts = np.outer(values, b_p)
        return m_r - np.sqrt(((pts - v_r) ** 2).sum(axis=1))

    Pi = fitted.probabilities(X)
    e = Y[:, r] - Pi[:, r]
    scatter = partial_fit(x) + 4.0 * e
    grid = np.linspace(x.min(), x.max(), grid_size)
    return CprData(
        predictor=predictors.predictor_labels[p],
        item=fitted.item_labels[r] if fitted.item_labels else f"item{r + 1}",
        x=x,
        scatter=scatter,
        grid=grid,
        assumed=partial_fit(grid),
        smooth=tricube_smoother(x, scatter, grid, span=span),
    )
