"""Published benchmark summary values reused by the metric tests."""

import numpy as np

MODELS = ["MLP", "LR", "RF", "NAM", "Logistic-KAN", "KAAM"]

_nan = float("nan")

# mean metric per (dataset, metric, model); NaN marks a model that does not
# run on that task (the additive baseline is binary-only)
BENCHMARK_MEANS = {
    "heart": {
        "accuracy": [0.90, 0.79, 0.90, 0.90, 0.84, 0.82],
        "auc": [0.38, 0.89, 0.90, 0.38, 0.91, 0.90],
        "f1": [0.00, 0.44, 0.54, 0.00, 0.56, 0.49],
        "precision": [0.00, 0.31, 0.52, 0.00, 0.40, 0.35],
        "recall": [0.00, 0.81, 0.57, 0.00, 0.95, 0.86],
    },
    "diabetes_h": {
        "accuracy": [0.81, 0.80, 0.85, _nan, 0.82, 0.82],
        "auc": [0.58, 0.70, 0.66, _nan, 0.68, 0.68],
        "f1": [0.75, 0.81, 0.82, _nan, 0.75, 0.75],
        "precision": [0.71, 0.81, 0.81, _nan, 0.73, 0.73],
        "recall": [0.81, 0.80, 0.85, _nan, 0.82, 0.82],
    },
    "diabetes_130": {
        "accuracy": [0.52, 0.55, 0.52, _nan, 0.51, 0.55],
        "auc": [0.53, 0.53, 0.53, _nan, 0.49, 0.53],
        "f1": [0.45, 0.50, 0.51, _nan, 0.46, 0.51],
        "precision": [0.44, 0.51, 0.51, _nan, 0.46, 0.55],
        "recall": [0.52, 0.55, 0.52, _nan, 0.51, 0.55],
    },
    "obesity": {
        "accuracy": [0.56, 0.70, 0.91, _nan, 0.98, 0.95],
        "auc": [0.88, 0.92, 1.00, _nan, 1.00, 1.00],
        "f1": [0.55, 0.68, 0.91, _nan, 0.98, 0.95],
        "precision": [0.56, 0.68, 0.92, _nan, 0.98, 0.95],
        "recall": [0.56, 0.70, 0.91, _nan, 0.98, 0.95],
    },
    "obesity_bin": {
        "accuracy": [0.86, 1.00, 0.99, 0.50, 1.00, 1.00],
        "auc": [0.93, 1.00, 1.00, 0.89, 1.00, 1.00],
        "f1": [0.86, 1.00, 0.99, 0.00, 1.00, 1.00],
        "precision": [0.88, 0.99, 0.99, 0.00, 1.00, 1.00],
        "recall": [0.83, 1.00, 0.99, 0.00, 1.00, 1.00],
    },
    "breast_cancer": {
        "accuracy": [0.94, 0.96, 0.95, 0.92, 0.97, 0.96],
        "auc": [0.98, 1.00, 1.00, 0.98, 0.99, 1.00],
        "f1": [0.95, 0.96, 0.96, 0.93, 0.98, 0.97],
        "precision": [0.92, 0.97, 0.97, 0.91, 0.97, 0.97],
        "recall": [0.98, 0.96, 0.95, 0.96, 0.99, 0.97],
    },
}


def benchmark_rank_table():
    from kaamlab import RankTable

    rows, names = [], []
    for dataset, metrics in BENCHMARK_MEANS.items():
        for metric, values in metrics.items():
            rows.append(values)
            names.append(f"{dataset}/{metric}")
    return RankTable(np.array(rows), list(MODELS), names)
