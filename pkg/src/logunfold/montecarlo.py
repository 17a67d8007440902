"""Simulation studies: parameter recovery and out-of-sample prediction.

Both studies draw every random quantity from per-replication streams spawned
off a single master seed, so a rerun of a design is bitwise reproducible.
"""

from __future__ import annotations

import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from importlib import resources

import numpy as np
from scipy.special import expit

from . import estimator, evaluation, reduced_rank
from .dataset import BinaryDataset, PredictorSet, compress_profiles
from .errors import DataError, NumericalError
from .estimator import FitOptions
from .geometry import distance_matrix, endorse_prob

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

# Fixed generator truth of the predictive study: three predictors feeding a
# two-dimensional space, and thirteen items on a coarse grid.
PREDICTIVE_B = np.array([[1.0, 0.0], [0.0, 1.0], [math.sqrt(2.0), math.sqrt(2.0)]])
PREDICTIVE_V = np.array(
    [
        [1.0, 0.0],
        [0.5, 0.5],
        [0.5, 0.0],
        [0.5, -0.5],
        [0.0, 1.0],
        [0.0, 0.5],
        [0.0, 0.0],
        [0.0, -0.5],
        [0.0, -1.0],
        [-0.5, 0.5],
        [-0.5, 0.0],
        [-0.5, -0.5],
        [-1.0, 0.0],
    ]
)


def _default_fit() -> FitOptions:
    return FitOptions(S=2, eps_outer=1e-5, maxouter=20000)


@dataclass
class RecoveryDesign:
    """Parameter-recovery study: fit subsamples of a large synthetic
    population and measure how well the configuration is recovered."""

    mode: str
    m: np.ndarray
    V: np.ndarray
    mean_u: np.ndarray | None = None
    cov_u: np.ndarray | None = None
    B: np.ndarray | None = None
    cov_x: np.ndarray | None = None
    population_size: int = 100_000
    sample_sizes: tuple = (100, 200, 500, 1000)
    replications: int = 100
    seed: int | None = 0
    start: str = "auto"  # population | random | auto
    fit: FitOptions = field(default_factory=_default_fit)

    def __post_init__(self):
        self.m = np.asarray(self.m, dtype=float)
        self.V = np.asarray(self.V, dtype=float)
        if self.mode not in ("unsupervised", "supervised"):
            raise DataError(f"unknown recovery mode: {self.mode!r}")
        if self.mode == "supervised":
            if self.B is None or self.cov_x is None:
                raise DataError("supervised recovery needs B and cov_x")
            self.B = np.asarray(self.B, dtype=float)
            self.cov_x = np.asarray(self.cov_x, dtype=float)
        else:
            if self.mean_u is None or self.cov_u is None:
                raise DataError("unsupervised recovery needs mean_u and cov_u")
            self.mean_u = np.asarray(self.mean_u, dtype=float)
            self.cov_u = np.asarray(self.cov_u, dtype=float)
        if self.population_size < max(self.sample_sizes):
            raise DataError("population must be at least as large as the samples")
        if self.start == "auto":
            self.start = "population" if self.mode == "supervised" else "random"
        if self.fit.S != self.V.shape[1]:
            self.fit = replace(self.fit, S=self.V.shape[1])


@dataclass
class PredictiveDesign:
    """Predictive comparison of the distance map against the inner-product
    baseline on held-out test data."""

    family: str = "distance"
    offset_range: tuple = (0.0, 1.0)
    train_sizes: tuple = (200, 500, 1000)
    test_size: int = 1000
    replications: int = 100
    seed: int | None = 0
    B: np.ndarray = field(default_factory=lambda: PREDICTIVE_B.copy())
    V: np.ndarray = field(default_factory=lambda: PREDICTIVE_V.copy())
    random_starts: int = 25
    triage_maxouter: int = 300
    fit: FitOptions = field(default_factory=_default_fit)

    def __post_init__(self):
        if self.family not in ("distance", "inner_product"):
            raise DataError(f"unknown generator family: {self.family!r}")
        self.B = np.asarray(self.B, dtype=float)
        self.V = np.asarray(self.V, dtype=float)
        lo, hi = self.offset_range
        if not lo < hi:
            raise DataError("offset range must be an increasing pair")
        if self.fit.S != self.V.shape[1]:
            self.fit = replace(self.fit, S=self.V.shape[1])


@dataclass
class Population:
    """Latent positions and endorsement probabilities of a synthetic
    population; X is present in supervised mode."""

    U: np.ndarray
    X: np.ndarray | None
    Pi: np.ndarray


def _mvn_draws(mean, cov, size, rng) -> np.ndarray:
    """Multivariate normal draws through an eigen factor, accepting
    positive semidefinite covariances (including zero)."""
    mean = np.asarray(mean, dtype=float)
    cov = np.asarray(cov, dtype=float)
    evals, evecs = np.linalg.eigh(cov)
    if evals.min() < -1e-8 * max(1.0, abs(evals.max())):
        raise DataError("covariance matrix is not positive semidefinite")
    factor = evecs * np.sqrt(np.clip(evals, 0.0, None))
    return mean + rng.standard_normal((size, len(mean))) @ factor.T


def gen_population(design: RecoveryDesign, rng=None) -> Population:
    """Draw the study population and its endorsement probabilities."""
    if rng is None:
        rng = np.random.default_rng(np.random.SeedSequence(design.seed).spawn(1)[0])
    if design.mode == "supervised":
        X = _mvn_draws(
            np.zeros(design.B.shape[0]), design.cov_x, design.population_size, rng
        )
        U = X @ design.B
    else:
        X = None
        U = _mvn_draws(design.mean_u, design.cov_u, design.population_size, rng)
    Pi = endorse_prob(design.m, distance_matrix(U, design.V))
    return Population(U=U, X=X, Pi=Pi)


def sample_responses(Pi, rng) -> np.ndarray:
    """Independent Bernoulli draws, one per probability cell."""
    Pi = np.asarray(Pi, dtype=float)
    return (rng.random(Pi.shape) < Pi).astype(float)


@dataclass
class StudyResult:
    """Per-replication records plus failures; summaries group by the
    design cells."""

    kind: str
    group_fields: tuple
    records: list[dict]
    failures: list[dict]

    def summary(self) -> list[dict]:
        groups: dict[tuple, list[dict]] = {}
        for rec in self.records:
            key = tuple(rec[g] for g in self.group_fields)
            groups.setdefault(key, []).append(rec)
        out = []
        for key in sorted(groups):
            rows = groups[key]
            entry = dict(zip(self.group_fields, key))
            entry["n_replications"] = len(rows)
            numeric = [
                k
                for k, v in rows[0].items()
                if k not in self.group_fields
                and k != "replication"
                and isinstance(v, (int, float))
            ]
            for k in numeric:
                vals = np.asarray([r[k] for r in rows], dtype=float)
                entry[f"{k}_mean"] = float(vals.mean())
                entry[f"{k}_std"] = float(vals.std(ddof=1)) if len(vals) > 1 else 0.0
            out.append(entry)
        return out

    def to_csv(self) -> str:
        if not self.records:
            return ""
        cols = list(self.records[0].keys())
        buf = io.StringIO()
        buf.write(",".join(cols) + "\n")
        for rec in self.records:
            cells = []
            for c in cols:
                v = rec[c]
                cells.append(f"{v:.8g}" if isinstance(v, float) else str(v))
            buf.write(",".join(cells) + "\n")
        return buf.getvalue()

    def summary_json(self) -> str:
        return json.dumps(
            {
                "kind": self.kind,
                "n_records": len(self.records),
                "n_failures": len(self.failures),
                "summary": self.summary(),
            },
            indent=2,
            sort_keys=True,
        )


def _seed_int(stream: np.random.SeedSequence) -> int:
    return int(stream.generate_state(1, np.uint64)[0])


def _recovery_replication(design, pop, sample_size, rep, stream):
    rng = np.random.default_rng(stream)
    fit_seed = _seed_int(stream.spawn(1)[0])
    idx = rng.choice(design.population_size, size=sample_size, replace=False)
    Y = sample_responses(pop.Pi[idx], rng)
    opts = replace(design.fit, seed=fit_seed)
    if design.mode == "unsupervised":
        keep = Y.sum(axis=1) > 0
        if keep.sum() < 3:
            raise NumericalError("too few informative profiles in the sample")
        Yk = Y[keep]
        U_true = pop.U[idx][keep]
        ds, inverse = compress_profiles(Yk, return_inverse=True)
        map_, report = estimator.fit_unsupervised(ds, opts)
        U_hat = map_.U[inverse]
        V_hat = map_.V
    else:
        X_s = pop.X[idx]
        ds = BinaryDataset(Y=Y, n=np.ones(sample_size, dtype=np.int64))
        ps = PredictorSet(X=X_s)
        U_true = X_s @ design.B
        if design.start == "population":
            opts = replace(opts, init="supplied")
            map_, report = estimator.fit_supervised(
                ds, ps, opts, init=(design.m, design.B, design.V)
            )
        else:
            map_, report = estimator.fit_supervised(ds, ps, opts)
        U_hat = X_s @ map_.B
        V_hat = map_.V
    Z = np.vstack([U_true, design.V])
    Zhat = np.vstack([U_hat, V_hat])
    return {
        "sample_size": sample_size,
        "replication": rep,
        "phi_uv": evaluation.congruence(Z, Zhat),
        "phi_v": evaluation.congruence(design.V, V_hat),
        "r_uv": evaluation.config_correlation(Z, Zhat),
        "r_v": evaluation.config_correlation(design.V, V_hat),
        "deviance": report.deviance,
        "converged": int(report.converged),
    }


def run_recovery(design: RecoveryDesign, threads: int = 1) -> StudyResult:
    """Run the full recovery study over all sample sizes and replications."""
    master = np.random.SeedSequence(design.seed)
    n_cells = len(design.sample_sizes) * design.replications
    streams = master.spawn(1 + n_cells)
    pop = gen_population(design, np.random.default_rng(streams[0]))

    tasks = []
    k = 1
    for sample_size in design.sample_sizes:
        for rep in range(design.replications):
            tasks.append((sample_size, rep, streams[k]))
            k += 1

    def one(task):
        sample_size, rep, stream = task
        try:
            return _recovery_replication(design, pop, sample_size, rep, stream), None
        except (NumericalError, DataError) as exc:
            return None, {
                "sample_size": sample_size,
                "replication": rep,
                "error": str(exc),
            }

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(one, tasks))
    else:
        outcomes = [one(t) for t in tasks]
    records = [rec for rec, _ in outcomes if rec is not None]
    failures = [fail for _, fail in outcomes if fail is not None]
    return StudyResult(
        kind="recovery",
        group_fields=("sample_size",),
        records=records,
        failures=failures,
    )


@dataclass
class PredictiveData:
    """One replication of the predictive study: train/test split plus the
    generating parameters."""

    X_train: np.ndarray
    Y_train: np.ndarray
    X_test: np.ndarray
    Y_test: np.ndarray
    m: np.ndarray
    B: np.ndarray
    V: np.ndarray


def gen_predictive_data(
    design: PredictiveDesign, train_size: int, rng
) -> PredictiveData:
    """Standard-normal predictors, per-replication uniform offsets, and
    Bernoulli responses from the chosen generator family."""
    P = design.B.shape[0]
    lo, hi = design.offset_range
    m = rng.uniform(lo, hi, size=design.V.shape[0])

    def probs(X):
        U = X @ design.B
        if design.family == "distance":
            return endorse_prob(m, distance_matrix(U, design.V))
        return expit(m[None, :] + U @ design.V.T)

    X_train = rng.standard_normal((train_size, P))
    Y_train = sample_responses(probs(X_train), rng)
    X_test = rng.standard_normal((design.test_size, P))
    Y_test = sample_responses(probs(X_test), rng)
    return PredictiveData(X_train, Y_train, X_test, Y_test, m, design.B, design.V)


def _fit_distance_model(design, data, stream):
    """Population-start fit; for inner-product generated data also triage a
    batch of random starts and polish the best candidate."""
    ds = BinaryDataset(Y=data.Y_train, n=np.ones(data.Y_train.shape[0], dtype=np.int64))
    ps = PredictorSet(X=data.X_train)
    pop_opts = replace(design.fit, init="supplied", n_starts=1, seed=_seed_int(stream))
    best_map, best_report = estimator.fit_supervised(
        ds, ps, pop_opts, init=(data.m, data.B, data.V)
    )
    if design.family == "inner_product" and design.random_starts > 0:
        triage = replace(
            design.fit,
            maxouter=design.triage_maxouter,
            n_starts=design.random_starts,
            seed=_seed_int(stream.spawn(1)[0]),
        )
        cand_map, cand_report = estimator.fit_supervised(ds, ps, triage)
        polish = replace(design.fit, init="supplied", n_starts=1, seed=None)
        cand_map, cand_report = estimator.fit_supervised(
            ds, ps, polish, init=(cand_map.m, cand_map.B, cand_map.V)
        )
        if cand_report.deviance < best_report.deviance:
            best_map, best_report = cand_map, cand_report
    return best_map, best_report


def run_predictive(design: PredictiveDesign, threads: int = 1) -> StudyResult:
    """Fit both models per replication and score them on the test set."""
    master = np.random.SeedSequence(design.seed)
    tasks = []
    streams = master.spawn(len(design.train_sizes) * design.replications)
    k = 0
    for train_size in design.train_sizes:
        for rep in range(design.replications):
            tasks.append((train_size, rep, streams[k]))
            k += 1

    def one(task):
        train_size, rep, stream = task
        try:
            rng = np.random.default_rng(stream)
            data = gen_predictive_data(design, train_size, rng)
            fit_stream = stream.spawn(2)
            dist_map, dist_report = _fit_distance_model(design, data, fit_stream[0])
            ds = BinaryDataset(
                Y=data.Y_train, n=np.ones(train_size, dtype=np.int64)
            )
            ps = PredictorSet(X=data.X_train)
            rrr_opts = replace(design.fit, seed=_seed_int(fit_stream[1]))
            rrr_map, rrr_report = reduced_rank.fit_rrr(
                ds, ps, design.V.shape[1], rrr_opts
            )
            rec = {
                "family": design.family,
                "train_size": train_size,
                "replication": rep,
                "brier_distance": evaluation.brier(
                    data.Y_test, estimator.predict(dist_map, data.X_test)
                ),
                "brier_rrr": evaluation.brier(
                    data.Y_test, reduced_rank.predict_rrr(rrr_map, data.X_test)
                ),
                "deviance_distance": dist_report.deviance,
                "deviance_rrr": rrr_report.deviance,
            }
            return rec, None
        except (NumericalError, DataError) as exc:
            return None, {
                "family": design.family,
                "train_size": train_size,
                "replication": rep,
                "error": str(exc),
            }

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(one, tasks))
    else:
        outcomes = [one(t) for t in tasks]
    records = [rec for rec, _ in outcomes if rec is not None]
    failures = [fail for _, fail in outcomes if fail is not None]
    return StudyResult(
        kind="predictive",
        group_fields=("family", "train_size"),
        records=records,
        failures=failures,
    )


def load_fixture(name: str) -> dict:
    """Bundled population parameters for recovery designs."""
    ref = resources.files("logunfold").joinpath(f"fixtures/{name}.json")
    try:
        return json.loads(ref.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise DataError(f"unknown fixture {name!r}") from None


_FIT_KEYS = (
    "S",
    "maxouter",
    "maxinner",
    "eps_outer",
    "eps_inner",
    "epsilon_weight",
    "offset_variant",
    "n_starts",
    "seed",
    "threads",
)


def _fit_options_from(d: dict) -> FitOptions:
    kwargs = {k: d[k] for k in _FIT_KEYS if k in d}
    base = _default_fit()
    return replace(base, **kwargs)


def recovery_design_from_dict(d: dict) -> RecoveryDesign:
    d = dict(d)
    if "fixture" in d:
        params = load_fixture(d.pop("fixture"))
        for k, v in params.items():
            d.setdefault(k, v)
    fit = _fit_options_from(d.pop("fit", {}))
    kwargs = {}
    for key in (
        "mode",
        "m",
        "V",
        "mean_u",
        "cov_u",
        "B",
        "cov_x",
        "population_size",
        "replications",
        "seed",
        "start",
    ):
        if key in d:
            kwargs[key] = d[key]
    if "sample_sizes" in d:
        kwargs["sample_sizes"] = tuple(d["sample_sizes"])
    try:
        return RecoveryDesign(fit=fit, **kwargs)
    except TypeError as exc:
        raise DataError(f"invalid recovery design: {exc}") from exc


def predictive_design_from_dict(d: dict) -> PredictiveDesign:
    d = dict(d)
    fit = _fit_options_from(d.pop("fit", {}))
    kwargs = {}
    for key in (
        "family",
        "test_size",
        "replications",
        "seed",
        "B",
        "V",
        "random_starts",
        "triage_maxouter",
    ):
        if key in d:
            kwargs[key] = d[key]
    if "offset_range" in d:
        kwargs["offset_range"] = tuple(d["offset_range"])
    if "train_sizes" in d:
        kwargs["train_sizes"] = tuple(d["train_sizes"])
    try:
        return PredictiveDesign(fit=fit, **kwargs)
    except TypeError as exc:
        raise DataError(f"invalid predictive design: {exc}") from exc


def load_design(path, kind: str | None = None):
    """Read a TOML design file; ``kind`` (recovery | predictive) may come
    from the file or the caller, the caller winning on conflict."""
    try:
        with open(path, "rb") as fh:
            doc = tomllib.load(fh)
    except OSError as exc:
        raise DataError(f"cannot read design {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise DataError(f"malformed design {path}: {exc}") from exc
    file_kind = doc.pop("kind", None)
    kind = kind or file_kind
    if kind not in ("recovery", "predictive"):
        raise DataError(f"design kind must be recovery or predictive, got {kind!r}")
    if kind == "recovery":
        return recovery_design_from_dict(doc)
    return predictive_design_from_dict(doc)
