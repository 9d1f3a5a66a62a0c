"""CSV ingestion, schema typing, encoding, splits, and subsampling.

Raw tables keep untyped records around (neighbor tables display original
covariates); the preprocessor owns every statistic learned from training rows
and is the only component allowed to turn raw records into model matrices.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .errors import InvalidInputError, ShapeError, StratificationError

FEATURE_KINDS = ("binary", "categorical", "integer", "continuous")
MISSING_CATEGORY = "__missing__"


@dataclass
class FeatureSpec:
    name: str
    kind: str
    categories: list | None = None

    def __post_init__(self):
        if self.kind not in FEATURE_KINDS:
            raise InvalidInputError(f"unknown feature kind {self.kind!r}")
        if self.kind == "categorical" and self.categories is not None:
            if not self.categories:
                raise InvalidInputError(f"{self.name}: empty category vocabulary")

    @property
    def numeric(self) -> bool:
        return self.kind in ("binary", "integer", "continuous")


@dataclass
class SchemaConfig:
    """Parsed schema file: feature kinds, the target column, and (for binary
    tasks) which label is the positive class."""

    target: str
    features: dict  # name -> kind, in column order where specified
    positive_label: str | None = None

    @classmethod
    def from_json(cls, path) -> "SchemaConfig":
        with open(path) as fh:
            raw = json.load(fh)
        if "target" not in raw:
            raise InvalidInputError("schema config must name a target column")
        return cls(
            target=raw["target"],
            features=dict(raw.get("features", {})),
            positive_label=raw.get("positive_label"),
        )

    def to_dict(self) -> dict:
        return {"target": self.target, "features": dict(self.features),
                "positive_label": self.positive_label}


@dataclass
class RawTable:
    """Typed-but-unencoded rows plus integer class labels."""

    records: list           # list of dicts, feature name -> float | str | None
    labels: np.ndarray      # (N,) class indices
    row_ids: list
    specs: list             # list of FeatureSpec in column order
    class_labels: list      # class index -> original label string
    target_name: str
    missing_cells: int = 0
    dropped_rows: int = 0

    @property
    def num_rows(self) -> int:
        return len(self.records)

    def take(self, indices) -> "RawTable":
        indices = np.asarray(indices, dtype=int)
        return RawTable(
            records=[self.records[i] for i in indices],
            labels=self.labels[indices],
            row_ids=[self.row_ids[i] for i in indices],
            specs=self.specs,
            class_labels=self.class_labels,
            target_name=self.target_name,
        )


@dataclass
class Dataset:
    """Encoded matrix plus everything needed to show original records."""

    X: np.ndarray
    y: np.ndarray
    row_ids: list
    records: list
    feature_names: list   # encoded column names
    class_labels: list

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float)
        self.y = np.asarray(self.y, dtype=int)
        if self.X.shape[0] != self.y.shape[0] or len(self.row_ids) != self.y.shape[0]:
            raise ShapeError("X, y, and row_ids must align")
        if self.X.shape[1] != len(self.feature_names):
            raise ShapeError("feature_names must match X columns")
        if self.y.size and (self.y.min() < 0 or self.y.max() >= len(self.class_labels)):
            raise InvalidInputError("labels out of range")

    @property
    def labels(self) -> np.ndarray:
        return self.y

    @property
    def num_rows(self) -> int:
        return self.y.size

    def take(self, indices) -> "Dataset":
        indices = np.asarray(indices, dtype=int)
        return Dataset(
            X=self.X[indices],
            y=self.y[indices],
            row_ids=[self.row_ids[i] for i in indices],
            records=[self.records[i] for i in indices],
            feature_names=self.feature_names,
            class_labels=self.class_labels,
        )


def _parse_numeric(value) -> float:
    if value is None:
        return np.nan
    s = str(value).strip()
    if s == "" or s.lower() in ("na", "nan", "null", "none"):
        return np.nan
    try:
        return float(s)
    except ValueError:
        return np.nan


def load_csv(path, schema: SchemaConfig) -> RawTable:
    """Read a headered CSV into typed records.

    Columns absent from the schema get a numeric/non-numeric heuristic kind.
    Rows whose target is missing or unknown are dropped and counted; missing
    feature cells stay missing here (the preprocessor imputes them) but are
    counted.
    """
    frame = pd.read_csv(path, dtype=str, keep_default_na=False)
    if frame.shape[0] == 0:
        raise InvalidInputError(f"{path}: no data rows")
    if schema.target not in frame.columns:
        raise InvalidInputError(f"{path}: target column {schema.target!r} not found")

    specs = []
    for col in frame.columns:
        if col == schema.target:
            continue
        if col in schema.features:
            kind = schema.features[col]
            specs.append(FeatureSpec(col, kind if isinstance(kind, str) else kind["kind"]))
        else:
            values = [v for v in frame[col] if str(v).strip() != ""]
            numeric = all(not np.isnan(_parse_numeric(v)) for v in values)
            specs.append(FeatureSpec(col, "continuous" if numeric else "categorical"))

    target_raw = [str(v).strip() for v in frame[schema.target]]
    label_set = sorted({t for t in target_raw if t != ""})
    if schema.positive_label is not None:
        pos = str(schema.positive_label)
        if pos not in label_set:
            raise InvalidInputError(f"positive label {pos!r} not present in target")
        rest = [l for l in label_set if l != pos]
        label_set = rest + [pos]
    label_index = {l: i for i, l in enumerate(label_set)}

    records, labels, row_ids = [], [], []
    missing_cells = 0
    dropped = 0
    for i, (_, row) in enumerate(frame.iterrows()):
        t = str(row[schema.target]).strip()
        if t not in label_index:
            dropped += 1
            continue
        rec = {}
        for spec in specs:
            raw = str(row[spec.name]).strip()
            if spec.numeric:
                v = _parse_numeric(raw)
                if np.isnan(v):
                    missing_cells += 1
                    rec[spec.name] = None
                else:
                    rec[spec.name] = v
            else:
                if raw == "":
                    missing_cells += 1
                    rec[spec.name] = None
                else:
                    rec[spec.name] = raw
        records.append(rec)
        labels.append(label_index[t])
        row_ids.append(i)
    if not records:
        raise InvalidInputError(f"{path}: every row had an unusable target")
    return RawTable(records, np.array(labels, dtype=int), row_ids, specs,
                    label_set, schema.target, missing_cells, dropped)


class Preprocessor:
    """One-hot encoding and standardization fitted on training rows only.

    Continuous and integer features are standardized with the population
    deviation; binary features pass through as 0/1; categorical features
    expand to indicator columns (unseen categories encode as all zeros).
    Missing numerics impute to the training mean, missing categoricals to a
    dedicated category when training rows had any.
    """

    def __init__(self, specs):
        self.specs = list(specs)
        self.fitted = False
        self.stats = {}        # numeric name -> (mean, std, scaled: bool)
        self.vocabularies = {} # categorical name -> list of categories
        self.raw_ranges = {}   # numeric name -> (min, max)
        self.warnings = []

    def fit(self, records) -> "Preprocessor":
        if not records:
            raise InvalidInputError("cannot fit a preprocessor on zero rows")
        for spec in self.specs:
            values = [r[spec.name] for r in records]
            if spec.numeric:
                present = np.array([v for v in values if v is not None], dtype=float)
                if present.size == 0:
                    raise InvalidInputError(f"{spec.name}: no observed values")
                mean = float(present.mean())
                std = float(present.std())
                scaled = spec.kind in ("integer", "continuous")
                if scaled and std == 0.0:
                    scaled = False
                    self.warnings.append(
                        f"{spec.name}: zero variance, passed through unscaled"
                    )
                self.stats[spec.name] = (mean, std, scaled)
                self.raw_ranges[spec.name] = (float(present.min()), float(present.max()))
            else:
                seen = sorted({v for v in values if v is not None})
                if any(v is None for v in values):
                    seen.append(MISSING_CATEGORY)
                if not seen:
                    raise InvalidInputError(f"{spec.name}: no observed categories")
                if len(seen) == 1:
                    self.warnings.append(
                        f"{spec.name}: single category, column is constant"
                    )
                self.vocabularies[spec.name] = seen
        self.fitted = True
        return self

    @property
    def column_names(self) -> list:
        self._require_fitted()
        names = []
        for spec in self.specs:
            if spec.numeric:
                names.append(spec.name)
            else:
                names.extend(f"{spec.name}={c}" for c in self.vocabularies[spec.name])
        return names

    def _require_fitted(self):
        if not self.fitted:
            raise InvalidInputError("preprocessor has not been fitted")

    def transform_record(self, record: dict) -> np.ndarray:
        self._require_fitted()
        out = []
        for spec in self.specs:
            value = record.get(spec.name)
            if spec.numeric:
                mean, std, scaled = self.stats[spec.name]
                v = mean if value is None else float(value)
                out.append((v - mean) / std if scaled else v)
            else:
                vocab = self.vocabularies[spec.name]
                cat = MISSING_CATEGORY if value is None else str(value)
                # unseen categories (and missing without a training precedent)
                # encode as all zeros
                out.extend(1.0 if cat == c else 0.0 for c in vocab)
        return np.array(out, dtype=float)

    def transform(self, records) -> np.ndarray:
        return np.array([self.transform_record(r) for r in records], dtype=float)

    def encode_dataset(self, table: RawTable) -> Dataset:
        return Dataset(
            X=self.transform(table.records),
            y=table.labels,
            row_ids=list(table.row_ids),
            records=list(table.records),
            feature_names=self.column_names,
            class_labels=list(table.class_labels),
        )

    def validate_covariates(self, covariates: dict):
        """Raise InvalidInputError describing any schema mismatch."""
        self._require_fitted()
        known = {s.name for s in self.specs}
        unknown = sorted(set(covariates) - known)
        missing = sorted(known - set(covariates))
        problems = []
        if unknown:
            problems.append(f"unknown features: {unknown}")
        if missing:
            problems.append(f"missing features: {missing}")
        for spec in self.specs:
            if spec.name in covariates and spec.numeric:
                try:
                    float(covariates[spec.name])
                except (TypeError, ValueError):
                    problems.append(f"{spec.name}: expected a number")
        if problems:
            raise InvalidInputError("; ".join(problems))

    def record_from_covariates(self, covariates: dict) -> dict:
        self.validate_covariates(covariates)
        rec = {}
        for spec in self.specs:
            v = covariates[spec.name]
            rec[spec.name] = float(v) if spec.numeric else str(v)
        return rec

    def feature_summary(self) -> list:
        """Form-building metadata: name, kind, observed range or vocabulary."""
        self._require_fitted()
        out = []
        for spec in self.specs:
            entry = {"name": spec.name, "kind": spec.kind}
            if spec.numeric:
                lo, hi = self.raw_ranges[spec.name]
                entry["min"] = lo
                entry["max"] = hi
            else:
                entry["categories"] = list(self.vocabularies[spec.name])
            out.append(entry)
        return out

    def to_dict(self) -> dict:
        self._require_fitted()
        return {
            "specs": [
                {"name": s.name, "kind": s.kind} for s in self.specs
            ],
            "stats": {k: list(v) for k, v in self.stats.items()},
            "vocabularies": self.vocabularies,
            "raw_ranges": {k: list(v) for k, v in self.raw_ranges.items()},
            "warnings": self.warnings,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Preprocessor":
        pre = cls([FeatureSpec(s["name"], s["kind"]) for s in d["specs"]])
        pre.stats = {k: (v[0], v[1], bool(v[2])) for k, v in d["stats"].items()}
        pre.vocabularies = {k: list(v) for k, v in d["vocabularies"].items()}
        pre.raw_ranges = {k: (v[0], v[1]) for k, v in d["raw_ranges"].items()}
        pre.warnings = list(d.get("warnings", []))
        pre.fitted = True
        return pre


def fit_preprocessor(table: RawTable) -> Preprocessor:
    """Fit encoding state from training rows only."""
    return Preprocessor(table.specs).fit(table.records)


def _largest_remainder_counts(counts, fraction):
    """Per-class test counts summing as close to fraction*N as rounding allows."""
    exact = counts * fraction
    base = np.floor(exact).astype(int)
    total = int(round(counts.sum() * fraction))
    remainder_order = np.argsort(-(exact - base), kind="mergesort")
    short = total - base.sum()
    for i in remainder_order[:max(short, 0)]:
        base[i] += 1
    return base


def split(data, test_fraction: float, seed: int = 0, stratify: bool = True):
    """Seeded disjoint-exhaustive split of a RawTable or Dataset."""
    if not 0 < test_fraction < 1:
        raise InvalidInputError("test_fraction must lie in (0, 1)")
    y = np.asarray(data.labels, dtype=int)
    n = y.size
    rng = np.random.default_rng(seed)
    if stratify:
        counts = np.bincount(y)
        if np.any(counts[np.unique(y)] < 2):
            raise StratificationError("every class needs at least 2 rows to stratify")
        test_counts = _largest_remainder_counts(counts.astype(float), test_fraction)
        test_idx = []
        for cls in range(counts.size):
            idx = np.flatnonzero(y == cls)
            if idx.size == 0:
                continue
            take = min(int(test_counts[cls]), idx.size - 1)
            idx = idx[rng.permutation(idx.size)]
            test_idx.extend(idx[:take])
        test_idx = np.sort(np.array(test_idx, dtype=int))
    else:
        order = rng.permutation(n)
        n_test = int(round(test_fraction * n))
        n_test = min(max(n_test, 1), n - 1)
        test_idx = np.sort(order[:n_test])
    mask = np.zeros(n, dtype=bool)
    mask[test_idx] = True
    train_idx = np.flatnonzero(~mask)
    return data.take(train_idx), data.take(test_idx)


def subsample(data, n: int, seed: int = 0):
    """Seeded uniform sample without replacement; row ids are preserved."""
    total = data.num_rows
    if not 1 <= n <= total:
        raise InvalidInputError(f"subsample size must be in [1, {total}], got {n}")
    rng = np.random.default_rng(seed)
    idx = rng.choice(total, size=n, replace=False)
    return data.take(np.sort(idx))
