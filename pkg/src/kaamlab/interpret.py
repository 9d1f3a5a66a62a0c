"""Patient- and cohort-level interpretability tools over additive models.

Everything here is a pure function of (model, logit matrices, patient row):
feature importance from logit-column variances, exact per-feature dependence
curves, radar axes that swap one average-patient contribution for the
patient's own, nearest-patient retrieval in logit space, and the sorted
probability-bar series with confusion counts at a threshold.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .additive import (
    KAAM,
    AverageContribution,
    LogitMatrix,
    patient_logit_row,
)
from .errors import ArityError, InvalidInputError, ShapeError
from .splines import sigmoid
from .symbolic import shape_samples


@dataclass
class ImportanceVector:
    """Population variance of each logit-matrix feature column.

    The bias column is constant by construction, so its variance is reported
    separately as exactly zero and excluded from the ranking shares.
    """

    scores: np.ndarray
    shares: np.ndarray
    feature_names: list
    class_index: int | None
    bias_score: float = 0.0

    def ranking(self) -> list:
        order = np.argsort(-self.scores, kind="mergesort")
        return [(self.feature_names[i], float(self.scores[i])) for i in order]

    def to_dict(self) -> dict:
        return {
            "class_index": self.class_index,
            "features": list(self.feature_names),
            "scores": [float(v) for v in self.scores],
            "shares": [float(v) for v in self.shares],
            "bias_score": self.bias_score,
        }


def feature_importance(matrix: LogitMatrix) -> ImportanceVector:
    """Column variances (1/N convention) of a logit matrix."""
    if matrix.num_rows < 2:
        raise InvalidInputError("importance needs at least two rows")
    scores = matrix.values[:, :-1].var(axis=0)
    total = scores.sum()
    shares = scores / total if total > 0 else np.zeros_like(scores)
    return ImportanceVector(scores, shares, list(matrix.feature_names),
                            matrix.class_index)


@dataclass
class PDPCurve:
    """One shape function sampled on a uniform grid, with overlay markers.

    Under additivity the curve is the exact per-feature logit contribution;
    no marginalization is involved.
    """

    feature_index: int
    feature_name: str
    class_index: int | None
    grid: np.ndarray
    values: np.ndarray
    patient: tuple | None = None          # (x, g(x))
    cohort: list = field(default_factory=list)
    neighbors: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "feature_index": self.feature_index,
            "feature": self.feature_name,
            "class_index": self.class_index,
            "grid": [float(v) for v in self.grid],
            "values": [float(v) for v in self.values],
            "patient": list(map(float, self.patient)) if self.patient else None,
            "cohort": [[float(a), float(b)] for a, b in self.cohort],
            "neighbors": [[float(a), float(b)] for a, b in self.neighbors],
        }


def pdp(model: KAAM, j: int, class_index: int | None = None, grid_size: int = 101,
        patient=None, cohort=None, neighbors=None) -> PDPCurve:
    """Dependence curve of feature j over its observed training range.

    ``class_index=None`` on a binary model returns the differential curve
    g_j_1 - g_j_0, the feature's additive contribution to the decision logit.
    """
    if not 0 <= j < model.feature_count:
        raise IndexError(f"feature index {j} out of range")
    if grid_size < 2:
        raise InvalidInputError("grid_size must be >= 2")
    if class_index is None and model.class_count != 2:
        raise ArityError("the differential curve needs a binary model")
    if model.feature_ranges is None:
        raise InvalidInputError("model carries no observed feature ranges")
    lo, hi = model.feature_ranges[j]
    if lo == hi:
        lo, hi = lo - 0.5, hi + 0.5
    grid = np.linspace(lo, hi, grid_size)
    values = shape_samples(model, j, grid, class_index)

    def points(xs):
        xs = np.asarray(xs, dtype=float)
        ys = shape_samples(model, j, xs, class_index)
        return [(float(a), float(b)) for a, b in zip(xs, ys)]

    patient_marker = (points([np.asarray(patient, dtype=float)[j]])[0]
                      if patient is not None else None)
    cohort_markers = (points(np.asarray(cohort, dtype=float)[:, j])
                      if cohort is not None else [])
    neighbor_markers = (points(np.asarray(neighbors, dtype=float)[:, j])
                        if neighbors is not None else [])
    return PDPCurve(j, model.feature_names[j], class_index, grid, values,
                    patient_marker, cohort_markers, neighbor_markers)


@dataclass
class RadarData:
    """Per-feature axis probabilities against the average-patient baseline."""

    feature_names: list
    axes: np.ndarray
    baseline: float
    patient_probability: float
    class_index: int | None
    neighbor_axes: np.ndarray | None = None

    def to_dict(self) -> dict:
        return {
            "features": list(self.feature_names),
            "axes": [float(v) for v in self.axes],
            "baseline": self.baseline,
            "patient_probability": self.patient_probability,
            "class_index": self.class_index,
            "neighbor_axes": (
                [float(v) for v in self.neighbor_axes]
                if self.neighbor_axes is not None else None
            ),
        }


def radar(model: KAAM, delta: AverageContribution, x,
          class_index: int | None = None) -> RadarData:
    """Axis j = sigmoid(bias + sum_{k != j} delta_k + g_j(x_j)).

    Binary models (class_index None) use differential quantities; multiclass
    models apply the sigmoid to the single class logit, exactly as the
    substitution formula is written.
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (model.feature_count,):
        raise ShapeError(f"expected a length-{model.feature_count} patient vector")
    if delta.class_index != class_index:
        raise InvalidInputError("average contribution was built for another class")
    if class_index is None and model.class_count != 2:
        raise ArityError("differential radar needs a binary model")
    row = patient_logit_row(model, x, class_index)
    d = delta.delta
    total_mean = float(d.sum())  # bias plus every mean feature contribution
    axes = sigmoid(total_mean - d[:-1] + row[:-1])
    baseline = float(sigmoid(total_mean))
    patient_probability = float(sigmoid(row.sum()))
    return RadarData(list(model.feature_names), axes, baseline,
                     patient_probability, class_index)


@dataclass
class NeighborResult:
    """Closest training patients to a query row in logit space."""

    query_row: np.ndarray
    ids: list
    distances: np.ndarray
    probabilities: np.ndarray
    true_labels: list
    records: list

    def to_dict(self) -> dict:
        return {
            "query_row": [float(v) for v in self.query_row],
            "neighbors": [
                {
                    "id": rid,
                    "distance": float(dist),
                    "probability": float(prob),
                    "true_label": label,
                    "covariates": rec,
                }
                for rid, dist, prob, label, rec in zip(
                    self.ids, self.distances, self.probabilities,
                    self.true_labels, self.records)
            ],
        }


def nearest_patients(matrix: LogitMatrix, query_row, k: int = 5,
                     true_labels=None, records=None) -> NeighborResult:
    """k nearest rows of the training logit matrix, by Euclidean distance over
    all M+1 columns; ties break toward the lower row index."""
    query_row = np.asarray(query_row, dtype=float)
    if query_row.shape != (matrix.values.shape[1],):
        raise ShapeError("query row must match the matrix width")
    if not 1 <= k <= matrix.num_rows:
        raise InvalidInputError(
            f"k must be in [1, {matrix.num_rows}], got {k}"
        )
    dists = np.sqrt(((matrix.values - query_row[None, :]) ** 2).sum(axis=1))
    order = np.argsort(dists, kind="stable")[:k]
    probs = sigmoid(matrix.values[order].sum(axis=1))
    return NeighborResult(
        query_row=query_row,
        ids=[matrix.row_ids[i] for i in order],
        distances=dists[order],
        probabilities=probs,
        true_labels=[None] * k if true_labels is None
        else [true_labels[i] for i in order],
        records=[None] * k if records is None else [records[i] for i in order],
    )


@dataclass
class PredictionBars:
    """Test patients sorted by predicted probability, with confusion counts
    at the rendering threshold."""

    probabilities: np.ndarray
    true_labels: np.ndarray
    threshold: float
    false_positives: int
    false_negatives: int

    def to_dict(self) -> dict:
        return {
            "probabilities": [float(v) for v in self.probabilities],
            "true_labels": [int(v) for v in self.true_labels],
            "threshold": self.threshold,
            "false_positives": self.false_positives,
            "false_negatives": self.false_negatives,
        }


def prediction_bars(model, X_test, y_test, threshold: float = 0.5) -> PredictionBars:
    """Ascending positive-class probabilities for a binary model's test set."""
    if model.class_count != 2:
        raise ArityError("prediction bars need a binary model")
    probs = np.atleast_1d(model.predict_binary(np.atleast_2d(X_test)))
    y = np.asarray(y_test, dtype=int)
    if probs.shape != y.shape:
        raise ShapeError("X_test and y_test must align")
    order = np.argsort(probs, kind="stable")
    sorted_probs = probs[order]
    sorted_labels = y[order]
    predicted = sorted_probs >= threshold
    fp = int(np.sum(predicted & (sorted_labels == 0)))
    fn = int(np.sum(~predicted & (sorted_labels == 1)))
    return PredictionBars(sorted_probs, sorted_labels, threshold, fp, fn)
