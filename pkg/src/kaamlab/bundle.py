"""Single-file persistence for trained models.

A bundle is one versioned JSON document holding the model parameters (knots
via their basis descriptions, every coefficient and weight in full
round-trip precision), the fitted preprocessor, the raw training and test
rows (interpretability tools and offline evaluation need them), class
labels, and the optional distilled formula. Loading reproduces predictions
bitwise; writing the same trained state twice produces identical bytes.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass

import numpy as np

from .additive import KAAM
from .data import Dataset, Preprocessor, RawTable, FeatureSpec
from .errors import BundleFormatError, BundleVersionError
from .network import KANLayer, LogisticKAN, ModelConfig
from .splines import BSplineBasis
from .symbolic import SymbolicFormula, formula_from_dict, formula_to_dict
from .training import LRBaseline

FORMAT_VERSION = 1


def _basis_to_dict(basis: BSplineBasis) -> dict:
    return {
        "degree": basis.degree,
        "interval_count": basis.interval_count,
        "domain_min": basis.domain_min,
        "domain_max": basis.domain_max,
    }


def _basis_from_dict(d: dict) -> BSplineBasis:
    return BSplineBasis(d["degree"], d["interval_count"], d["domain_min"],
                        d["domain_max"])


def _layer_to_dict(layer: KANLayer) -> dict:
    return {
        "bases": [_basis_to_dict(b) for b in layer.bases],
        "coefficients": layer.coefficients.tolist(),
        "base_weight": layer.base_weight.tolist(),
        "spline_weight": layer.spline_weight.tolist(),
    }


def _layer_from_dict(d: dict) -> KANLayer:
    return KANLayer(
        [_basis_from_dict(b) for b in d["bases"]],
        np.array(d["coefficients"], dtype=float),
        np.array(d["base_weight"], dtype=float),
        np.array(d["spline_weight"], dtype=float),
    )


def _model_to_dict(kind: str, model) -> dict:
    if kind == "lr":
        return {"beta": model.beta.tolist(), "class_balanced": model.class_balanced}
    common = {
        "feature_names": list(model.feature_names),
        "class_labels": [str(c) for c in model.class_labels],
        "config": model.config.to_dict(),
        "feature_ranges": (
            model.feature_ranges.tolist() if model.feature_ranges is not None else None
        ),
    }
    if kind == "kaam":
        return {"layer": _layer_to_dict(model.layer), "bias": model.bias.tolist(),
                **common}
    if kind == "logistic-kan":
        return {"layers": [_layer_to_dict(l) for l in model.layers], **common}
    raise BundleFormatError(f"unknown model kind {kind!r}")


def _model_from_dict(kind: str, d: dict):
    if kind == "lr":
        return LRBaseline(np.array(d["beta"], dtype=float), d["class_balanced"])
    config = ModelConfig.from_dict(d["config"])
    ranges = np.array(d["feature_ranges"]) if d["feature_ranges"] is not None else None
    if kind == "kaam":
        return KAAM(_layer_from_dict(d["layer"]), np.array(d["bias"], dtype=float),
                    d["feature_names"], d["class_labels"], config,
                    feature_ranges=ranges)
    if kind == "logistic-kan":
        return LogisticKAN([_layer_from_dict(l) for l in d["layers"]],
                           d["feature_names"], d["class_labels"], config,
                           feature_ranges=ranges)
    raise BundleFormatError(f"unknown model kind {kind!r}")


def _table_to_dict(table: RawTable) -> dict:
    return {
        "records": table.records,
        "labels": table.labels.tolist(),
        "row_ids": list(table.row_ids),
        "specs": [{"name": s.name, "kind": s.kind} for s in table.specs],
        "class_labels": list(table.class_labels),
        "target_name": table.target_name,
    }


def _table_from_dict(d: dict) -> RawTable:
    return RawTable(
        records=d["records"],
        labels=np.array(d["labels"], dtype=int),
        row_ids=list(d["row_ids"]),
        specs=[FeatureSpec(s["name"], s["kind"]) for s in d["specs"]],
        class_labels=list(d["class_labels"]),
        target_name=d["target_name"],
    )


@dataclass
class ModelBundle:
    """A trained model plus everything needed to serve and explain it."""

    kind: str
    model: object
    preprocessor: Preprocessor
    train_table: RawTable
    test_table: RawTable
    formula: SymbolicFormula | None = None
    metadata: dict = None

    def __post_init__(self):
        self.metadata = dict(self.metadata or {})

    def train_dataset(self) -> Dataset:
        return self.preprocessor.encode_dataset(self.train_table)

    def test_dataset(self) -> Dataset:
        return self.preprocessor.encode_dataset(self.test_table)

    @property
    def class_labels(self) -> list:
        return list(self.train_table.class_labels)


def save_model(bundle: ModelBundle, path) -> str:
    """Write the bundle as deterministic JSON; returns its sha256 hash."""
    doc = {
        "format_version": FORMAT_VERSION,
        "kind": bundle.kind,
        "model": _model_to_dict(bundle.kind, bundle.model),
        "preprocessor": bundle.preprocessor.to_dict(),
        "train_table": _table_to_dict(bundle.train_table),
        "test_table": _table_to_dict(bundle.test_table),
        "formula": formula_to_dict(bundle.formula) if bundle.formula else None,
        "metadata": bundle.metadata,
    }
    payload = json.dumps(doc, sort_keys=True, indent=1)
    with open(path, "w") as fh:
        fh.write(payload)
    return hashlib.sha256(payload.encode()).hexdigest()


def load_model(path) -> tuple:
    """Read a bundle; returns (ModelBundle, sha256 hash).

    Corrupt or truncated files raise BundleFormatError without producing a
    partial model; unknown format versions raise BundleVersionError.
    """
    try:
        with open(path) as fh:
            payload = fh.read()
        doc = json.loads(payload)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise BundleFormatError(f"{path}: corrupt bundle ({exc})") from exc
    if not isinstance(doc, dict) or "format_version" not in doc:
        raise BundleFormatError(f"{path}: not a model bundle")
    if doc["format_version"] != FORMAT_VERSION:
        raise BundleVersionError(
            f"{path}: format version {doc['format_version']} "
            f"(this build reads {FORMAT_VERSION})"
        )
    try:
        bundle = ModelBundle(
            kind=doc["kind"],
            model=_model_from_dict(doc["kind"], doc["model"]),
            preprocessor=Preprocessor.from_dict(doc["preprocessor"]),
            train_table=_table_from_dict(doc["train_table"]),
            test_table=_table_from_dict(doc["test_table"]),
            formula=formula_from_dict(doc["formula"]) if doc["formula"] else None,
            metadata=doc.get("metadata", {}),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise BundleFormatError(f"{path}: malformed bundle ({exc})") from exc
    return bundle, hashlib.sha256(payload.encode()).hexdigest()
