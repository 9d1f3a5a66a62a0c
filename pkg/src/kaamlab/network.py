"""Stacked spline-function layers and the classification heads.

A layer holds an in_dim x out_dim grid of learnable univariate functions; the
q-th output is the sum of phi[p][q](v_p) over inputs p. Stacking layers and
feeding the final logits to a softmax (or, for two classes, a sigmoid of the
logit difference) gives the full classifier.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ArityError, InvalidInputError, InvalidModelError, ShapeError
from .splines import (
    BSplineBasis,
    LearnableFunction,
    basis_derivative_matrix,
    basis_matrix,
    fit_basis_from_data,
    sigmoid,
    silu,
    silu_grad,
)


@dataclass
class ModelConfig:
    """Architecture and regularization knobs.

    ``hidden_sizes`` empty means a single input->classes layer (the additive
    shape). ``init_mode`` "dense" starts from small random spline coefficients
    with the base activation on; "sparse" starts all-spline-zero with the base
    activation off.
    """

    hidden_sizes: tuple = ()
    grid_points: int = 5
    degree: int = 3
    l1_lambda: float = 0.0
    class_balanced: bool = False
    init_mode: str = "dense"

    def __post_init__(self):
        self.hidden_sizes = tuple(int(h) for h in self.hidden_sizes)
        if any(h < 1 for h in self.hidden_sizes):
            raise InvalidInputError("hidden sizes must be >= 1")
        if self.grid_points < 1:
            raise InvalidInputError("grid_points must be >= 1")
        if self.degree < 0:
            raise InvalidInputError("degree must be >= 0")
        if self.l1_lambda < 0:
            raise InvalidInputError("l1_lambda must be >= 0")
        if self.init_mode not in ("sparse", "dense"):
            raise InvalidInputError(f"unknown init_mode {self.init_mode!r}")

    def to_dict(self) -> dict:
        return {
            "hidden_sizes": list(self.hidden_sizes),
            "grid_points": self.grid_points,
            "degree": self.degree,
            "l1_lambda": self.l1_lambda,
            "class_balanced": self.class_balanced,
            "init_mode": self.init_mode,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        return cls(
            hidden_sizes=tuple(d["hidden_sizes"]),
            grid_points=d["grid_points"],
            degree=d["degree"],
            l1_lambda=d["l1_lambda"],
            class_balanced=d["class_balanced"],
            init_mode=d["init_mode"],
        )


@dataclass
class LayerGradients:
    """Parameter gradients of one layer, shaped like the layer's arrays."""

    d_coefficients: np.ndarray  # (in_dim, out_dim, num_basis)
    d_base_weight: np.ndarray   # (in_dim, out_dim)
    d_spline_weight: np.ndarray # (in_dim, out_dim)


class KANLayer:
    """A fully populated grid of learnable univariate functions.

    All functions in the layer share degree and interval count; each input
    column p has its own basis domain. Parameters are stored as dense arrays:
    ``coefficients`` (in_dim, out_dim, num_basis), ``base_weight`` and
    ``spline_weight`` (in_dim, out_dim).
    """

    def __init__(self, bases, coefficients, base_weight, spline_weight):
        self.bases = list(bases)
        self.coefficients = np.asarray(coefficients, dtype=float)
        self.base_weight = np.asarray(base_weight, dtype=float)
        self.spline_weight = np.asarray(spline_weight, dtype=float)
        in_dim = len(self.bases)
        if in_dim == 0:
            raise InvalidModelError("layer needs at least one input")
        nb = self.bases[0].num_basis
        deg = self.bases[0].degree
        if any(b.num_basis != nb or b.degree != deg for b in self.bases):
            raise InvalidModelError("all functions in a layer must share degree and grid")
        out_dim = self.coefficients.shape[1] if self.coefficients.ndim == 3 else -1
        if self.coefficients.shape != (in_dim, out_dim, nb):
            raise InvalidModelError(
                f"coefficients must be (in_dim, out_dim, {nb}), "
                f"got {self.coefficients.shape}"
            )
        if self.base_weight.shape != (in_dim, out_dim) or self.spline_weight.shape != (
            in_dim,
            out_dim,
        ):
            raise InvalidModelError("weight arrays must be (in_dim, out_dim)")

    @property
    def in_dim(self) -> int:
        return len(self.bases)

    @property
    def out_dim(self) -> int:
        return self.coefficients.shape[1]

    @property
    def num_params(self) -> int:
        return self.coefficients.size + self.base_weight.size + self.spline_weight.size

    @classmethod
    def initialize(cls, bases, out_dim: int, init_mode: str, rng: np.random.Generator):
        """Seeded parameter initialization for a layer over the given bases."""
        in_dim = len(bases)
        nb = bases[0].num_basis
        if init_mode == "dense":
            coeffs = rng.normal(0.0, 0.1 / np.sqrt(nb), size=(in_dim, out_dim, nb))
            base_w = np.ones((in_dim, out_dim))
        elif init_mode == "sparse":
            coeffs = np.zeros((in_dim, out_dim, nb))
            base_w = np.zeros((in_dim, out_dim))
        else:
            raise InvalidInputError(f"unknown init_mode {init_mode!r}")
        spline_w = np.ones((in_dim, out_dim))
        return cls(bases, coeffs, base_w, spline_w)

    def function(self, p: int, q: int) -> LearnableFunction:
        """The (input p -> output q) function; coefficient storage is shared."""
        return LearnableFunction(
            basis=self.bases[p],
            coefficients=self.coefficients[p, q],
            base_weight=float(self.base_weight[p, q]),
            spline_weight=float(self.spline_weight[p, q]),
        )

    def _check_input(self, X: np.ndarray):
        if X.shape[-1] != self.in_dim:
            raise ShapeError(f"expected {self.in_dim} inputs, got {X.shape[-1]}")
        if not np.all(np.isfinite(X)):
            raise InvalidInputError("layer input must be finite")

    def forward(self, X):
        """Apply the layer: out[:, q] = sum_p phi[p][q](X[:, p])."""
        X = np.asarray(X, dtype=float)
        single = X.ndim == 1
        X2 = np.atleast_2d(X)
        self._check_input(X2)
        out = np.zeros((X2.shape[0], self.out_dim))
        for p in range(self.in_dim):
            col = X2[:, p]
            b = basis_matrix(self.bases[p], col)
            out += (b @ self.coefficients[p].T) * self.spline_weight[p][None, :]
            out += silu(col)[:, None] * self.base_weight[p][None, :]
        return out[0] if single else out

    def backward(self, X, upstream):
        """Gradients of sum(upstream * forward(X)) w.r.t. parameters and X.

        Returns (LayerGradients, d_input) with gradients summed over rows.
        """
        X = np.asarray(X, dtype=float)
        single = X.ndim == 1
        X2 = np.atleast_2d(X)
        self._check_input(X2)
        U = np.atleast_2d(np.asarray(upstream, dtype=float))
        if U.shape != (X2.shape[0], self.out_dim):
            raise ShapeError(
                f"upstream must be (n, {self.out_dim}), got {U.shape}"
            )
        d_coeffs = np.zeros_like(self.coefficients)
        d_base_w = np.zeros_like(self.base_weight)
        d_spline_w = np.zeros_like(self.spline_weight)
        d_input = np.zeros_like(X2)
        for p in range(self.in_dim):
            col = X2[:, p]
            basis = self.bases[p]
            b = basis_matrix(basis, col)
            s = b @ self.coefficients[p].T  # (n, out_dim) raw spline sums
            u_ws = U * self.spline_weight[p][None, :]
            d_coeffs[p] = u_ws.T @ b
            d_spline_w[p] = (U * s).sum(axis=0)
            d_base_w[p] = (U * silu(col)[:, None]).sum(axis=0)
            d_input[:, p] = silu_grad(col) * (U @ self.base_weight[p])
            if basis.degree >= 1:
                inside = (col >= basis.domain_min) & (col <= basis.domain_max)
                db = basis_derivative_matrix(basis, col)
                ds = db @ self.coefficients[p].T
                d_input[:, p] += inside * (u_ws * ds).sum(axis=1)
        grads = LayerGradients(d_coeffs, d_base_w, d_spline_w)
        return grads, (d_input[0] if single else d_input)


@dataclass
class NetworkGradients:
    """Gradients for a whole network: one LayerGradients per layer."""

    layers: list
    d_input: np.ndarray
    d_bias: np.ndarray = None  # used by the additive variant


class _HeadMixin:
    """Probability heads shared by the stacked and additive models."""

    def predict_proba(self, x):
        """Softmax of the logits with max subtraction for stability."""
        z = self.forward_logits(x)
        z2 = np.atleast_2d(z)
        shifted = z2 - z2.max(axis=1, keepdims=True)
        e = np.exp(shifted)
        probs = e / e.sum(axis=1, keepdims=True)
        return probs[0] if np.ndim(z) == 1 else probs

    def predict_binary(self, x):
        """sigmoid(f1 - f0); only defined for two-class models."""
        if self.class_count != 2:
            raise ArityError(
                f"binary prediction needs exactly 2 classes, model has {self.class_count}"
            )
        z = self.forward_logits(x)
        z2 = np.atleast_2d(z)
        out = sigmoid(z2[:, 1] - z2[:, 0])
        return float(out[0]) if np.ndim(z) == 1 else out

    def predict_class(self, x):
        z = np.atleast_2d(self.forward_logits(x))
        out = z.argmax(axis=1)
        return int(out[0]) if np.ndim(x) == 1 else out


class LogisticKAN(_HeadMixin):
    """Stacked layers producing one logit per class."""

    def __init__(self, layers, feature_names, class_labels, config: ModelConfig,
                 feature_ranges=None):
        self.layers = list(layers)
        if not self.layers:
            raise InvalidModelError("need at least one layer")
        for a, b in zip(self.layers, self.layers[1:]):
            if a.out_dim != b.in_dim:
                raise InvalidModelError(
                    f"layer dims do not chain: {a.out_dim} -> {b.in_dim}"
                )
        self.feature_names = list(feature_names)
        self.class_labels = list(class_labels)
        if len(self.feature_names) != self.layers[0].in_dim:
            raise InvalidModelError("feature_names must match first layer in_dim")
        if len(self.class_labels) != self.layers[-1].out_dim:
            raise InvalidModelError("class_labels must match last layer out_dim")
        if len(self.class_labels) < 2:
            raise InvalidModelError("need at least two classes")
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
    def num_params(self) -> int:
        return sum(layer.num_params for layer in self.layers)

    def forward_logits(self, x):
        out = np.asarray(x, dtype=float)
        for layer in self.layers:
            out = layer.forward(out)
        return out

    def backward(self, x, upstream) -> NetworkGradients:
        """Chain-rule gradients of sum(upstream * logits) through all layers."""
        X = np.atleast_2d(np.asarray(x, dtype=float))
        activations = [X]
        for layer in self.layers:
            activations.append(layer.forward(activations[-1]))
        U = np.atleast_2d(np.asarray(upstream, dtype=float))
        if U.shape != activations[-1].shape:
            raise ShapeError(
                f"upstream shape {U.shape} does not match logits "
                f"{activations[-1].shape}"
            )
        layer_grads = [None] * len(self.layers)
        for i in range(len(self.layers) - 1, -1, -1):
            layer_grads[i], U = self.layers[i].backward(activations[i], U)
        d_input = U if np.ndim(x) > 1 else U[0]
        return NetworkGradients(layers=layer_grads, d_input=d_input)

    def parameter_arrays(self):
        """Flat list of the mutable parameter arrays, in a fixed order."""
        out = []
        for layer in self.layers:
            out.extend([layer.coefficients, layer.base_weight, layer.spline_weight])
        return out

    def gradient_arrays(self, grads: NetworkGradients):
        """Gradient arrays aligned with parameter_arrays()."""
        out = []
        for g in grads.layers:
            out.extend([g.d_coefficients, g.d_base_weight, g.d_spline_weight])
        return out

    def spline_coefficient_arrays(self):
        return [layer.coefficients for layer in self.layers]


def layer_forward(layer: KANLayer, v):
    """Functional form of KANLayer.forward."""
    return layer.forward(v)


def build_logistic_kan(
    X_train,
    feature_names,
    class_labels,
    config: ModelConfig,
    seed: int = 0,
    margin_fraction: float = 0.05,
) -> LogisticKAN:
    """Construct a seeded network whose layer grids cover the training data.

    The first layer's basis domains are fit from the feature columns; each
    hidden layer's domains are fit from the activations the initialized
    earlier layers produce on the training data, then stay fixed.
    """
    X = np.atleast_2d(np.asarray(X_train, dtype=float))
    if X.shape[1] != len(feature_names):
        raise ShapeError("feature_names must match the number of columns")
    rng = np.random.default_rng(seed)
    dims = [X.shape[1], *config.hidden_sizes, len(class_labels)]
    layers = []
    acts = X
    for out_dim in dims[1:]:
        bases = [
            fit_basis_from_data(acts[:, p], config.grid_points, config.degree,
                                margin_fraction)
            for p in range(acts.shape[1])
        ]
        layer = KANLayer.initialize(bases, out_dim, config.init_mode, rng)
        layers.append(layer)
        acts = layer.forward(acts)
    ranges = np.stack([X.min(axis=0), X.max(axis=0)], axis=1)
    return LogisticKAN(layers, feature_names, class_labels, config,
                       feature_ranges=ranges)
