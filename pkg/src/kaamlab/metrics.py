"""Classification metrics, bootstrap confidence intervals, and reciprocal-rank
aggregation across tasks."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError, ShapeError, UndefinedMetricError


def _average_ranks(x: np.ndarray) -> np.ndarray:
    """1-based ranks with tied values sharing the mean of their ranks."""
    order = np.argsort(x, kind="mergesort")
    sx = x[order]
    boundaries = np.flatnonzero(np.diff(sx) != 0) + 1
    starts = np.concatenate([[0], boundaries])
    ends = np.concatenate([boundaries, [x.size]])
    ranks = np.empty(x.size)
    for s, e in zip(starts, ends):
        ranks[order[s:e]] = 0.5 * (s + 1 + e)
    return ranks


def confusion_metrics(pred, true, num_classes: int):
    """(accuracy, precision, recall, f1).

    Binary: positive-class scores. Multiclass: support-weighted averages.
    Zero denominators score 0.
    """
    pred = np.asarray(pred, dtype=int)
    true = np.asarray(true, dtype=int)
    if pred.shape != true.shape or pred.ndim != 1:
        raise ShapeError("pred and true must be equal-length vectors")
    if pred.size == 0:
        raise InvalidInputError("cannot score an empty prediction set")
    if min(pred.min(), true.min()) < 0 or max(pred.max(), true.max()) >= num_classes:
        raise IndexError("label out of range")

    accuracy = float(np.mean(pred == true))

    def _prf(cls):
        tp = float(np.sum((pred == cls) & (true == cls)))
        fp = float(np.sum((pred == cls) & (true != cls)))
        fn = float(np.sum((pred != cls) & (true == cls)))
        prec = tp / (tp + fp) if tp + fp > 0 else 0.0
        rec = tp / (tp + fn) if tp + fn > 0 else 0.0
        f1 = 2 * prec * rec / (prec + rec) if prec + rec > 0 else 0.0
        return prec, rec, f1

    if num_classes == 2:
        precision, recall, f1 = _prf(1)
    else:
        support = np.array([np.sum(true == c) for c in range(num_classes)], dtype=float)
        per_class = np.array([_prf(c) for c in range(num_classes)])
        weights = support / support.sum()
        precision, recall, f1 = (per_class * weights[:, None]).sum(axis=0)
    return accuracy, float(precision), float(recall), float(f1)


def roc_auc(scores, true, num_classes: int = 2) -> float:
    """Area under the ROC curve.

    Binary: Mann-Whitney statistic from a 1-D score vector, ties earning half
    credit. Multiclass: one-vs-rest per class on the N x P probability rows,
    support-weighted.
    """
    true = np.asarray(true, dtype=int)
    scores = np.asarray(scores, dtype=float)
    if num_classes == 2 and scores.ndim == 1:
        if scores.shape != true.shape:
            raise ShapeError("scores and labels must align")
        n_pos = int(np.sum(true == 1))
        n_neg = int(np.sum(true == 0))
        if n_pos == 0 or n_neg == 0:
            raise UndefinedMetricError("AUC needs both classes in the truth")
        ranks = _average_ranks(scores)
        pos_rank_sum = float(ranks[true == 1].sum())
        return (pos_rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)
    if scores.ndim != 2 or scores.shape != (true.size, num_classes):
        raise ShapeError("multiclass AUC needs N x P probability rows")
    present = [c for c in range(num_classes) if np.any(true == c)]
    if len(present) < 2:
        raise UndefinedMetricError("AUC needs at least two classes in the truth")
    aucs, supports = [], []
    for c in present:
        aucs.append(roc_auc(scores[:, c], (true == c).astype(int), 2))
    supports = np.array([np.sum(true == c) for c in present], dtype=float)
    return float(np.average(aucs, weights=supports))


@dataclass
class BootstrapInterval:
    point: float
    ci_low: float
    ci_high: float
    skipped_resamples: int = 0

    def as_tuple(self):
        return (self.point, self.ci_low, self.ci_high)


def bootstrap_ci(metric_fn, rows, labels, num_resamples: int = 1000,
                 seed: int = 0) -> BootstrapInterval:
    """Percentile CI (2.5/97.5) of ``metric_fn(rows, labels)`` over seeded
    resamples of the test rows.

    Resamples on which the metric is undefined are skipped and counted.
    """
    rows = np.asarray(rows)
    labels = np.asarray(labels)
    if num_resamples < 100:
        raise InvalidInputError("need at least 100 bootstrap resamples")
    n = labels.shape[0]
    point = float(metric_fn(rows, labels))
    rng = np.random.default_rng(seed)
    values = []
    skipped = 0
    for _ in range(num_resamples):
        idx = rng.integers(0, n, size=n)
        try:
            values.append(float(metric_fn(rows[idx], labels[idx])))
        except UndefinedMetricError:
            skipped += 1
    if not values:
        raise UndefinedMetricError("metric undefined on every bootstrap resample")
    low, high = np.percentile(values, [2.5, 97.5])
    return BootstrapInterval(point, float(low), float(high), skipped)


@dataclass
class MetricReport:
    """Point estimates with bootstrap intervals for the five standard metrics."""

    accuracy: BootstrapInterval
    roc_auc: BootstrapInterval
    f1: BootstrapInterval
    precision: BootstrapInterval
    recall: BootstrapInterval

    def to_dict(self) -> dict:
        out = {}
        for name in ("accuracy", "roc_auc", "f1", "precision", "recall"):
            iv = getattr(self, name)
            out[name] = {"point": iv.point, "ci_low": iv.ci_low, "ci_high": iv.ci_high}
        return out

    def to_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["metric", "point", "ci_low", "ci_high"])
            for name, vals in self.to_dict().items():
                writer.writerow([name, repr(vals["point"]), repr(vals["ci_low"]),
                                 repr(vals["ci_high"])])


def metric_report(scores, labels, num_classes: int, num_resamples: int = 1000,
                  seed: int = 0) -> MetricReport:
    """Score probability rows against labels, with one shared resampling pass
    so all five intervals come from the same seeded bootstrap."""
    scores = np.atleast_2d(np.asarray(scores, dtype=float))
    labels = np.asarray(labels, dtype=int)
    if scores.shape != (labels.size, num_classes):
        raise ShapeError("scores must be N x num_classes probability rows")

    def compute(s, t):
        preds = s.argmax(axis=1)
        acc, prec, rec, f1 = confusion_metrics(preds, t, num_classes)
        try:
            auc = roc_auc(s[:, 1] if num_classes == 2 else s, t, num_classes)
        except UndefinedMetricError:
            auc = None
        return acc, auc, f1, prec, rec

    point = compute(scores, labels)
    if point[1] is None:
        raise UndefinedMetricError("AUC undefined on the full test set")
    rng = np.random.default_rng(seed)
    samples = [[] for _ in range(5)]
    skipped = 0
    n = labels.size
    for _ in range(num_resamples):
        idx = rng.integers(0, n, size=n)
        vals = compute(scores[idx], labels[idx])
        if vals[1] is None:
            skipped += 1
            continue
        for store, v in zip(samples, vals):
            store.append(v)
    if not samples[0]:
        raise UndefinedMetricError("metrics undefined on every bootstrap resample")
    intervals = []
    for p, vals in zip(point, samples):
        low, high = np.percentile(vals, [2.5, 97.5])
        intervals.append(BootstrapInterval(float(p), float(low), float(high), skipped))
    acc, auc, f1, prec, rec = intervals
    return MetricReport(accuracy=acc, roc_auc=auc, f1=f1, precision=prec, recall=rec)


@dataclass
class RankTable:
    """Tasks x models matrix of metric values; NaN marks an absent model."""

    values: np.ndarray
    model_names: list
    task_names: list
    higher_is_better: bool = True

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (len(self.task_names), len(self.model_names)):
            raise ShapeError("values must be tasks x models")
        if self.values.shape[0] == 0:
            raise InvalidInputError("rank table needs at least one task")
        if not np.all(np.any(np.isfinite(self.values), axis=1)):
            raise InvalidInputError("every task row needs at least one finite entry")

    @classmethod
    def from_csv(cls, path, higher_is_better: bool = True) -> "RankTable":
        with open(path, newline="") as fh:
            reader = list(csv.reader(fh))
        header = reader[0][1:]
        task_names, rows = [], []
        for row in reader[1:]:
            task_names.append(row[0])
            rows.append([float(v) if v not in ("", "nan") else np.nan for v in row[1:]])
        return cls(np.array(rows), header, task_names, higher_is_better)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["task", *self.model_names])
            for name, row in zip(self.task_names, self.values):
                writer.writerow([name, *("" if np.isnan(v) else repr(float(v)) for v in row)])


def mrr(table: RankTable) -> dict:
    """Mean reciprocal rank per model.

    Within each task, present models are ranked (best first, ties share the
    mean of their ranks); a model absent from a task is excluded from that
    task's ranking and the task from its average.
    """
    sums = np.zeros(len(table.model_names))
    counts = np.zeros(len(table.model_names), dtype=int)
    for row in table.values:
        present = np.isfinite(row)
        vals = row[present]
        ranks = _average_ranks(-vals if table.higher_is_better else vals)
        sums[present] += 1.0 / ranks
        counts[present] += 1
    absent = np.flatnonzero(counts == 0)
    if absent.size:
        names = [table.model_names[i] for i in absent]
        raise UndefinedMetricError(f"models absent from every task: {names}")
    return {name: float(s / c) for name, s, c in
            zip(table.model_names, sums, counts)}
