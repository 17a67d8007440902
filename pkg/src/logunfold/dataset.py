"""Binary response data: ingestion, validation, profile compression."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DataError

FREQUENCY_COLUMN = "n"


@dataclass
class BinaryDataset:
    """Binary response profiles with occurrence weights.

    Y is an I x R matrix with entries in {0, 1}; row i is a response profile
    observed n[i] times. Uncompressed data carry n[i] = 1 for every row.
    """

    Y: np.ndarray
    n: np.ndarray
    item_labels: list[str] = field(default_factory=list)
    profile_labels: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.Y = np.asarray(self.Y, dtype=float)
        if self.Y.ndim != 2 or self.Y.size == 0:
            raise DataError("response matrix must be a non-empty 2-d array")
        if not np.isin(self.Y, (0.0, 1.0)).all():
            bad = np.argwhere(~np.isin(self.Y, (0.0, 1.0)))[0]
            raise DataError(
                f"non-binary response value at row {bad[0] + 1}, column {bad[1] + 1}"
            )
        self.n = np.asarray(self.n)
        if self.n.shape != (self.Y.shape[0],):
            raise DataError("weight vector length must equal the number of rows")
        if not np.all(self.n == np.floor(self.n)) or np.any(self.n < 1):
            raise DataError("profile weights must be positive integers")
        self.n = self.n.astype(np.int64)
        if not self.item_labels:
            self.item_labels = [f"item{r + 1}" for r in range(self.R)]
        if not self.profile_labels:
            self.profile_labels = [profile_label(row) for row in self.Y]
        if len(self.item_labels) != self.R or len(self.profile_labels) != self.I:
            raise DataError("label lists do not match the data shape")

    @property
    def I(self) -> int:
        return self.Y.shape[0]

    @property
    def R(self) -> int:
        return self.Y.shape[1]

    @property
    def q(self) -> np.ndarray:
        """Signed responses 2*Y - 1 with entries in {-1, +1}."""
        return 2.0 * self.Y - 1.0

    @property
    def total_count(self) -> int:
        """Number of underlying observations, sum of the weights."""
        return int(self.n.sum())

    def has_all_zero_profile(self) -> bool:
        return bool((self.Y.sum(axis=1) == 0).any())

    def expand(self) -> np.ndarray:
        """Undo weighting: repeat each profile row n[i] times."""
        return np.repeat(self.Y, self.n, axis=0)

    def to_json(self) -> str:
        return json.dumps(
            {
                "Y": self.Y.astype(int).tolist(),
                "n": self.n.tolist(),
                "item_labels": self.item_labels,
                "profile_labels": self.profile_labels,
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "BinaryDataset":
        try:
            obj = json.loads(text)
            return cls(
                Y=np.asarray(obj["Y"], dtype=float),
                n=np.asarray(obj["n"]),
                item_labels=list(obj["item_labels"]),
                profile_labels=list(obj["profile_labels"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise DataError(f"malformed dataset JSON: {exc}") from exc


@dataclass
class PredictorSet:
    """Real-valued predictor matrix, one row per (uncompressed) observation.

    ``centering`` records the constants already subtracted from each column,
    so that new data can be shifted onto the same scale before prediction.
    """

    X: np.ndarray
    predictor_labels: list[str] = field(default_factory=list)
    centering: np.ndarray = None

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float)
        if self.X.ndim != 2 or self.X.size == 0:
            raise DataError("predictor matrix must be a non-empty 2-d array")
        if not np.isfinite(self.X).all():
            bad = np.argwhere(~np.isfinite(self.X))[0]
            raise DataError(
                f"non-finite predictor value at row {bad[0] + 1}, column {bad[1] + 1}"
            )
        if not self.predictor_labels:
            self.predictor_labels = [f"x{p + 1}" for p in range(self.P)]
        if len(self.predictor_labels) != self.P:
            raise DataError("predictor labels do not match the number of columns")
        if self.centering is None:
            self.centering = np.zeros(self.P)
        self.centering = np.asarray(self.centering, dtype=float)
        if self.centering.shape != (self.P,):
            raise DataError("centering vector length must equal the number of columns")

    @property
    def n_obs(self) -> int:
        return self.X.shape[0]

    @property
    def P(self) -> int:
        return self.X.shape[1]

    def center(self, constants) -> "PredictorSet":
        """Return a copy with ``constants`` subtracted column-wise."""
        constants = np.asarray(constants, dtype=float)
        if constants.shape != (self.P,):
            raise DataError("need one centering constant per predictor column")
        return replace(
            self,
            X=self.X - constants,
            centering=self.centering + constants,
        )

    def check_columns(self, allow_constant: bool = False) -> None:
        """Reject all-constant (zero-variance) columns unless allowed."""
        if allow_constant:
            return
        spread = self.X.max(axis=0) - self.X.min(axis=0)
        for p, s in enumerate(spread):
            if s == 0.0:
                raise DataError(
                    f"predictor column '{self.predictor_labels[p]}' is constant"
                )


def profile_label(row) -> str:
    """Bit-string label for a 0/1 profile, e.g. '110010'."""
    return "".join(str(int(v)) for v in row)


def compress_profiles(
    Y_raw,
    drop_all_zero: bool = False,
    item_labels: list[str] | None = None,
    return_inverse: bool = False,
):
    """Collapse identical rows into weighted unique profiles.

    Rows are counted; the unique profiles become the dataset rows with
    weights equal to their frequency of occurrence. With ``drop_all_zero``
    the uninformative all-zero profile is removed. When ``return_inverse``
    is set, also return the profile index of each input row (-1 for rows
    dropped as all-zero).
    """
    Y_raw = np.asarray(Y_raw, dtype=float)
    if Y_raw.ndim != 2 or Y_raw.shape[0] == 0:
        raise DataError("compress_profiles needs at least one row")
    if not np.isin(Y_raw, (0.0, 1.0)).all():
        raise DataError("compress_profiles input must be 0/1 valued")
    uniq, inverse, counts = np.unique(
        Y_raw, axis=0, return_inverse=True, return_counts=True
    )
    inverse = inverse.ravel()
    if drop_all_zero:
        keep = uniq.sum(axis=1) > 0
        if not keep.any():
            raise DataError("all rows are all-zero; nothing left after dropping")
        remap = np.full(uniq.shape[0], -1, dtype=np.int64)
        remap[keep] = np.arange(int(keep.sum()))
        uniq, counts = uniq[keep], counts[keep]
        inverse = remap[inverse]
    ds = BinaryDataset(
        Y=uniq,
        n=counts,
        item_labels=list(item_labels) if item_labels else [],
        profile_labels=[profile_label(row) for row in uniq],
    )
    if return_inverse:
        return ds, inverse
    return ds


def load_csv(path, mode: str):
    """Read a CSV file with a header row.

    ``mode='responses'`` returns a :class:`BinaryDataset`; a column named
    ``n`` is treated as a frequency column. ``mode='predictors'`` returns a
    :class:`PredictorSet` with zero centering. Row order is preserved.
    """
    if mode not in ("responses", "predictors"):
        raise DataError(f"unknown load mode: {mode!r}")
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise DataError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    body = rows[1:]
    if not body:
        raise DataError(f"{path}: no data rows")
    for i, row in enumerate(body):
        if len(row) != len(header):
            raise DataError(f"{path}: ragged row {i + 2} ({len(row)} cells, expected {len(header)})")

    if mode == "predictors":
        data = np.empty((len(body), len(header)))
        for i, row in enumerate(body):
            for j, cell in enumerate(row):
                try:
                    data[i, j] = float(cell)
                except ValueError:
                    raise DataError(
                        f"{path}: row {i + 2}, column '{header[j]}': not a number: {cell!r}"
                    ) from None
        return PredictorSet(X=data, predictor_labels=header)

    freq_col = header.index(FREQUENCY_COLUMN) if FREQUENCY_COLUMN in header else None
    item_cols = [j for j in range(len(header)) if j != freq_col]
    Y = np.empty((len(body), len(item_cols)))
    n = np.ones(len(body), dtype=np.int64)
    for i, row in enumerate(body):
        for k, j in enumerate(item_cols):
            cell = row[j].strip()
            if cell not in ("0", "1"):
                raise DataError(
                    f"{path}: row {i + 2}, column '{header[j]}': expected 0 or 1, got {cell!r}"
                )
            Y[i, k] = float(cell)
        if freq_col is not None:
            cell = row[freq_col].strip()
            try:
                n[i] = int(cell)
            except ValueError:
                raise DataError(
                    f"{path}: row {i + 2}, column 'n': not an integer: {cell!r}"
                ) from None
            if n[i] < 0:
                raise DataError(f"{path}: row {i + 2}: negative frequency")
    if freq_col is not None and (n == 0).any():
        keep = n > 0
        Y, n = Y[keep], n[keep]
        if Y.shape[0] == 0:
            raise DataError(f"{path}: all frequencies are zero")
    return BinaryDataset(Y=Y, n=n, item_labels=[header[j] for j in item_cols])
