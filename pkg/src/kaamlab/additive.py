"""The additive variant: one shape function per (feature, class) plus a bias.

The class-p logit decomposes exactly as alpha_p + sum_j g_j_p(x_j), which
makes per-patient, per-feature logit contributions a first-class object: the
N x (M+1) logit matrix whose row sums are the model logits. Every
interpretability tool downstream works on these matrices.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import ArityError, InvalidInputError, InvalidModelError, ShapeError
from .network import (
    KANLayer,
    LogisticKAN,
    ModelConfig,
    NetworkGradients,
    _HeadMixin,
    build_logistic_kan,
)
from .splines import LearnableFunction, basis_matrix, sigmoid, silu


class KAAM(_HeadMixin):
    """Additive classifier: per-class bias plus one shape function per feature."""

    def __init__(self, layer: KANLayer, bias, feature_names, class_labels,
                 config: ModelConfig, feature_ranges=None):
        if config.hidden_sizes:
            raise InvalidModelError("the additive model has no hidden layers")
        self.layer = layer
        self.bias = np.asarray(bias, dtype=float)
        self.feature_names = list(feature_names)
        self.class_labels = list(class_labels)
        if layer.in_dim != len(self.feature_names):
            raise InvalidModelError("feature_names must match layer in_dim")
        if self.bias.shape != (layer.out_dim,):
            raise InvalidModelError("bias must have one entry per class")
        if layer.out_dim != len(self.class_labels) or layer.out_dim < 2:
            raise InvalidModelError("class_labels must match layer out_dim (>= 2)")
        self.config = config
        self.feature_ranges = (
            np.asarray(feature_ranges, dtype=float)
            if feature_ranges is not None
            else None
        )

    @property
    def class_count(self) -> int:
        return len(self.class_labels)

    @property
    def feature_count(self) -> int:
        return len(self.feature_names)

    @property
    def num_params(self) -> int:
        return self.layer.num_params + self.bias.size

    def shape_function(self, j: int, p: int) -> LearnableFunction:
        """g_j_p, the contribution of feature j to the class-p logit."""
        return self.layer.function(j, p)

    def forward_logits(self, x):
        return self.layer.forward(x) + self.bias

    def backward(self, x, upstream) -> NetworkGradients:
        grads, d_input = self.layer.backward(x, upstream)
        U = np.atleast_2d(np.asarray(upstream, dtype=float))
        return NetworkGradients(layers=[grads], d_input=d_input,
                                d_bias=U.sum(axis=0))

    def parameter_arrays(self):
        return [self.layer.coefficients, self.layer.base_weight,
                self.layer.spline_weight, self.bias]

    def gradient_arrays(self, grads: NetworkGradients):
        g = grads.layers[0]
        return [g.d_coefficients, g.d_base_weight, g.d_spline_weight, grads.d_bias]

    def spline_coefficient_arrays(self):
        return [self.layer.coefficients]


def kaam_logit(model: KAAM, x, p: int) -> float:
    """Class-p logit alpha_p + sum_j g_j_p(x_j) for a single patient."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.shape[0] != model.feature_count:
        raise ShapeError(f"expected a length-{model.feature_count} vector")
    if not 0 <= p < model.class_count:
        raise IndexError(f"class index {p} out of range")
    return float(model.forward_logits(x)[p])


def build_kaam(X_train, feature_names, class_labels, config: ModelConfig,
               seed: int = 0, margin_fraction: float = 0.05) -> KAAM:
    """Seeded additive model whose basis domains cover the training columns."""
    net = build_logistic_kan(X_train, feature_names, class_labels, config, seed,
                             margin_fraction)
    bias = np.zeros(len(class_labels))
    return KAAM(net.layers[0], bias, feature_names, class_labels, config,
                feature_ranges=net.feature_ranges)


def as_single_layer_network(model: KAAM) -> LogisticKAN:
    """An equivalent stacked model with the bias folded into spline coefficients.

    Partition of unity makes a constant shift exact on the (clamped) domain,
    so folding alpha_p / w_s into the first feature's coefficients reproduces
    the additive logits everywhere. Requires a nonzero spline weight on that
    feature for every class.
    """
    ws = model.layer.spline_weight[0]
    if np.any(ws == 0.0):
        raise InvalidModelError("cannot fold the bias through a zero spline weight")
    coeffs = model.layer.coefficients.copy()
    coeffs[0] += (model.bias / ws)[:, None]
    layer = KANLayer(model.layer.bases, coeffs, model.layer.base_weight.copy(),
                     model.layer.spline_weight.copy())
    return LogisticKAN([layer], model.feature_names, model.class_labels,
                       model.config, feature_ranges=model.feature_ranges)


@dataclass
class LogitMatrix:
    """Per-patient, per-feature logit contributions plus a trailing bias column.

    ``class_index`` is the class whose logit the rows decompose, or None for
    the binary differential form (class 1 minus class 0), in which case the
    sigmoid of each row sum is the positive-class probability.
    """

    values: np.ndarray            # (N, M+1)
    feature_names: list
    class_index: int | None
    row_ids: list

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2 or self.values.shape[1] != len(self.feature_names) + 1:
            raise ShapeError("values must be (N, num_features + 1)")
        if len(self.row_ids) != self.values.shape[0]:
            raise ShapeError("row_ids must match the number of rows")

    @property
    def is_differential(self) -> bool:
        return self.class_index is None

    @property
    def num_rows(self) -> int:
        return self.values.shape[0]

    def row_sums(self) -> np.ndarray:
        return self.values.sum(axis=1)

    def to_csv(self, path):
        """Audit export: id column, one column per feature, trailing bias."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["id", *self.feature_names, "bias"])
            for rid, row in zip(self.row_ids, self.values):
                writer.writerow([rid, *(repr(float(v)) for v in row)])


@dataclass
class AverageContribution:
    """Column means of a logit matrix: the average-patient baseline."""

    delta: np.ndarray  # (M+1,)
    feature_names: list
    class_index: int | None


def feature_contribution(model: KAAM, j: int, xs, p: int) -> np.ndarray:
    """g_j_p evaluated at the given scalar inputs."""
    layer = model.layer
    xs = np.asarray(xs, dtype=float).ravel()
    b = basis_matrix(layer.bases[j], xs)
    return (layer.base_weight[j, p] * silu(xs)
            + layer.spline_weight[j, p] * (b @ layer.coefficients[j, p]))


def _contribution_columns(model: KAAM, X: np.ndarray, p: int) -> np.ndarray:
    cols = np.empty((X.shape[0], model.feature_count))
    for j in range(model.feature_count):
        cols[:, j] = feature_contribution(model, j, X[:, j], p)
    return cols


def _check_row_sums(matrix: LogitMatrix, expected: np.ndarray):
    err = np.abs(matrix.row_sums() - expected).max() if matrix.num_rows else 0.0
    assert err < 1e-10, f"logit-matrix row sums drifted from model logits ({err})"


def build_logit_matrix(model: KAAM, X, p: int, row_ids=None) -> LogitMatrix:
    """Decompose the class-p logit of every row of X into feature columns."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != model.feature_count:
        raise ShapeError(f"expected {model.feature_count} columns, got {X.shape[1]}")
    if not 0 <= p < model.class_count:
        raise IndexError(f"class index {p} out of range")
    if row_ids is None:
        row_ids = list(range(X.shape[0]))
    cols = _contribution_columns(model, X, p)
    bias_col = np.full((X.shape[0], 1), model.bias[p])
    matrix = LogitMatrix(np.hstack([cols, bias_col]), model.feature_names, p,
                         list(row_ids))
    _check_row_sums(matrix, model.forward_logits(X)[:, p])
    return matrix


def build_differential_logit_matrix(model: KAAM, X, row_ids=None) -> LogitMatrix:
    """Binary-only decomposition of the decision margin f1 - f0 per patient."""
    if model.class_count != 2:
        raise ArityError("the differential logit matrix is defined for 2 classes")
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != model.feature_count:
        raise ShapeError(f"expected {model.feature_count} columns, got {X.shape[1]}")
    if row_ids is None:
        row_ids = list(range(X.shape[0]))
    cols = _contribution_columns(model, X, 1) - _contribution_columns(model, X, 0)
    bias_col = np.full((X.shape[0], 1), model.bias[1] - model.bias[0])
    matrix = LogitMatrix(np.hstack([cols, bias_col]), model.feature_names, None,
                         list(row_ids))
    logits = model.forward_logits(X)
    _check_row_sums(matrix, logits[:, 1] - logits[:, 0])
    return matrix


def average_contribution(matrix: LogitMatrix) -> AverageContribution:
    """Column means; defines the average patient used by the radar tool."""
    if matrix.num_rows < 1:
        raise InvalidInputError("cannot average an empty logit matrix")
    return AverageContribution(matrix.values.mean(axis=0),
                               list(matrix.feature_names), matrix.class_index)


def patient_logit_row(model: KAAM, x, class_index: int | None = None) -> np.ndarray:
    """The logit-matrix row a single patient would have.

    ``class_index=None`` requests the binary differential row.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.shape[0] != model.feature_count:
        raise ShapeError(f"expected a length-{model.feature_count} vector")
    X = x[None, :]
    if class_index is None:
        return build_differential_logit_matrix(model, X).values[0]
    return build_logit_matrix(model, X, class_index).values[0]


def matrix_probabilities(matrix: LogitMatrix) -> np.ndarray:
    """sigmoid of the row sums: positive-class probability for differential
    matrices, the literal single-logit sigmoid for per-class matrices."""
    return sigmoid(matrix.row_sums())
