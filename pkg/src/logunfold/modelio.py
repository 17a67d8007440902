"""Versioned JSON serialization of fitted maps."""

from __future__ import annotations

import json
from dataclasses import asdict

import numpy as np

from .dataset import PredictorSet
from .errors import DataError
from .estimator import FitOptions, FitReport
from .geometry import SupervisedUnfoldingMap, UnfoldingMap
from .reduced_rank import ReducedRankMap

SCHEMA_MAJOR = 1
SCHEMA = f"{SCHEMA_MAJOR}.0"

_TYPES = {
    UnfoldingMap: "unfolding",
    SupervisedUnfoldingMap: "supervised_unfolding",
    ReducedRankMap: "reduced_rank",
}


def model_to_json(
    map_,
    report: FitReport | None = None,
    options: FitOptions | None = None,
    centering=None,
) -> str:
    """Serialize a fitted map plus fit metadata to a JSON string."""
    type_tag = _TYPES.get(type(map_))
    if type_tag is None:
        raise DataError(f"cannot serialize object of type {type(map_).__name__}")
    doc = {
        "schema": SCHEMA,
        "type": type_tag,
        "S": int(map_.S),
        "m": np.asarray(map_.m).tolist(),
        "V": np.asarray(map_.V).tolist(),
        "item_labels": list(map_.item_labels),
    }
    if isinstance(map_, UnfoldingMap):
        doc["U"] = map_.U.tolist()
        doc["offset_variant"] = map_.offset_variant
        doc["profile_labels"] = list(map_.profile_labels)
    else:
        doc["B"] = map_.B.tolist()
        doc["predictor_labels"] = list(map_.predictor_labels)
        if isinstance(map_, SupervisedUnfoldingMap):
            doc["offset_variant"] = map_.offset_variant
    if centering is not None:
        doc["centering"] = np.asarray(centering, dtype=float).tolist()
    if report is not None:
        doc["deviance"] = report.deviance
        doc["aic"] = report.aic
        doc["npar"] = report.npar
        doc["converged"] = report.converged
        doc["iterations"] = report.iterations
        doc["start_index"] = report.start_index
        doc["seed"] = report.seed
    if options is not None:
        doc["options"] = asdict(options)
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def save_model(path, map_, report=None, options=None, centering=None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(model_to_json(map_, report, options, centering))


def model_from_json(text: str):
    """Rebuild a fitted map from its JSON form.

    Returns ``(map, meta)`` where meta holds deviance/AIC/options/centering
    when present. Unknown major schema versions are refused.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DataError(f"malformed model JSON: {exc}") from exc
    schema = str(doc.get("schema", ""))
    major = schema.split(".", 1)[0]
    if major != str(SCHEMA_MAJOR):
        raise DataError(f"unsupported model schema {schema!r}; expected major {SCHEMA_MAJOR}")
    try:
        type_tag = doc["type"]
        m = np.asarray(doc["m"], dtype=float)
        V = np.asarray(doc["V"], dtype=float)
        labels = list(doc["item_labels"])
        if type_tag == "unfolding":
            map_ = UnfoldingMap(
                m=m,
                U=np.asarray(doc["U"], dtype=float),
                V=V,
                offset_variant=doc.get("offset_variant", "per_item"),
                item_labels=labels,
                profile_labels=list(doc.get("profile_labels", [])),
            )
        elif type_tag == "supervised_unfolding":
            map_ = SupervisedUnfoldingMap(
                m=m,
                B=np.asarray(doc["B"], dtype=float),
                V=V,
                offset_variant=doc.get("offset_variant", "per_item"),
                item_labels=labels,
                predictor_labels=list(doc.get("predictor_labels", [])),
            )
        elif type_tag == "reduced_rank":
            map_ = ReducedRankMap(
                m=m,
                B=np.asarray(doc["B"], dtype=float),
                V=V,
                item_labels=labels,
                predictor_labels=list(doc.get("predictor_labels", [])),
            )
        else:
            raise DataError(f"unknown model type {type_tag!r}")
    except KeyError as exc:
        raise DataError(f"model JSON missing field {exc}") from exc
    meta = {
        key: doc.get(key)
        for key in ("deviance", "aic", "npar", "converged", "iterations", "seed", "options")
    }
    meta["centering"] = (
        np.asarray(doc["centering"], dtype=float) if "centering" in doc else None
    )
    return map_, meta


def load_model(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return model_from_json(fh.read())
    except OSError as exc:
        raise DataError(f"cannot read model {path}: {exc}") from exc


def apply_centering(predictors: PredictorSet, centering) -> PredictorSet:
    """Shift new predictors onto the training scale recorded in a model."""
    if centering is None:
        return predictors
    already = np.asarray(predictors.centering, dtype=float)
    target = np.asarray(centering, dtype=float)
    return predictors.center(target - already)
