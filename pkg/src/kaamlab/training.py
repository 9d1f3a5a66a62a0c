"""Losses, the gradient-descent training loop, the logistic-regression
baseline, and exhaustive grid search with stratified cross-validation."""

from __future__ import annotations

import csv
import itertools
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .additive import KAAM, build_kaam
from .errors import (
    InvalidInputError,
    ShapeError,
    StratificationError,
    TrainingDivergedError,
)
from .metrics import confusion_metrics
from .network import LogisticKAN, ModelConfig, build_logistic_kan
from .splines import sigmoid

PROB_FLOOR = 1e-12


@dataclass
class TrainConfig:
    """Knobs for one training run. ``batch_size`` 0 means full batch."""

    epochs: int = 500
    learning_rate: float = 1e-2
    batch_size: int = 0
    l1_lambda: float = 0.0
    class_balanced: bool = False
    seed: int = 0
    early_stop_patience: int = 50

    def __post_init__(self):
        if self.epochs < 0:
            raise InvalidInputError("epochs must be >= 0")
        if self.learning_rate <= 0:
            raise InvalidInputError("learning_rate must be > 0")
        if self.batch_size < 0:
            raise InvalidInputError("batch_size must be >= 0")
        if self.l1_lambda < 0:
            raise InvalidInputError("l1_lambda must be >= 0")


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    val_loss: float


@dataclass
class TrainResult:
    model: object
    history: list
    best_epoch: int
    stopped_early: bool


def cross_entropy(probs, labels, weights=None) -> float:
    """Mean weighted negative log-likelihood of the true classes.

    Probabilities are floored at 1e-12 before the log.
    """
    probs = np.atleast_2d(np.asarray(probs, dtype=float))
    labels = np.asarray(labels, dtype=int)
    n, p = probs.shape
    if labels.shape != (n,):
        raise ShapeError("labels must have one entry per probability row")
    if labels.min(initial=0) < 0 or labels.max(initial=0) >= p:
        raise IndexError("label out of range")
    if weights is None:
        weights = np.ones(p)
    weights = np.asarray(weights, dtype=float)
    if weights.shape != (p,) or np.any(weights <= 0):
        raise InvalidInputError("need one positive weight per class")
    picked = np.maximum(probs[np.arange(n), labels], PROB_FLOOR)
    return float(np.mean(weights[labels] * -np.log(picked)))


def class_weights(labels, num_classes: int | None = None) -> np.ndarray:
    """Inverse-frequency weights w_p = N / (P * count_p).

    Every class must be present at least once.
    """
    labels = np.asarray(labels, dtype=int)
    if labels.size == 0:
        raise InvalidInputError("labels must be nonempty")
    p = int(labels.max()) + 1 if num_classes is None else num_classes
    counts = np.bincount(labels, minlength=p)
    if np.any(counts == 0):
        missing = np.flatnonzero(counts == 0).tolist()
        raise InvalidInputError(f"classes {missing} have no samples")
    return labels.size / (p * counts.astype(float))


def l1_penalty(model) -> float:
    """Mean absolute value of all spline coefficients in the model."""
    arrays = model.spline_coefficient_arrays()
    total = sum(a.size for a in arrays)
    if total == 0:
        return 0.0
    return float(sum(np.abs(a).sum() for a in arrays) / total)


def training_objective(model, X, y, weights=None, l1_lambda: float = 0.0) -> float:
    """cross_entropy + l1_lambda * l1_penalty, as minimized by train()."""
    probs = model.predict_proba(X)
    return cross_entropy(probs, y, weights) + l1_lambda * l1_penalty(model)


class _Adam:
    """Adaptive-moment optimizer over a list of parameter arrays."""

    def __init__(self, params, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = params
        self.lr = lr
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, grads):
        self.t += 1
        b1c = 1.0 - self.beta1 ** self.t
        b2c = 1.0 - self.beta2 ** self.t
        for p, g, m, v in zip(self.params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= self.lr * (m / b1c) / (np.sqrt(v / b2c) + self.eps)


def _stratified_holdout(y, fraction, rng):
    """Index split keeping class proportions; returns (fit_idx, val_idx)."""
    fit_idx, val_idx = [], []
    for cls in np.unique(y):
        idx = np.flatnonzero(y == cls)
        idx = idx[rng.permutation(idx.size)]
        n_val = int(np.floor(fraction * idx.size))
        val_idx.extend(idx[:n_val])
        fit_idx.extend(idx[n_val:])
    return np.sort(np.array(fit_idx, dtype=int)), np.sort(np.array(val_idx, dtype=int))


def _loss_and_upstream(model, X, y, weights):
    probs = np.atleast_2d(model.predict_proba(X))
    n = probs.shape[0]
    picked = np.maximum(probs[np.arange(n), y], PROB_FLOOR)
    loss = float(np.mean(weights[y] * -np.log(picked)))
    upstream = probs.copy()
    upstream[np.arange(n), y] -= 1.0
    upstream *= (weights[y] / n)[:, None]
    return loss, upstream


def _snapshot(model):
    return [p.copy() for p in model.parameter_arrays()]


def _restore(model, snap):
    for p, s in zip(model.parameter_arrays(), snap):
        p[...] = s


def train(model, X, y, config: TrainConfig) -> TrainResult:
    """Minimize cross-entropy (+ optional L1 on spline coefficients) with Adam.

    Deterministic given the seed. With ``early_stop_patience`` > 0 a 10%
    stratified holdout of the training rows monitors validation loss; the
    best-validation parameters are restored at the end. Raises
    TrainingDivergedError (carrying the last finite state) if the loss leaves
    the finite range.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=int)
    if X.shape[0] != y.shape[0] or X.shape[0] == 0:
        raise ShapeError("X and y must be nonempty and aligned")
    if X.shape[1] != len(model.feature_names):
        raise ShapeError("feature count does not match the model")
    if config.epochs == 0:
        return TrainResult(model, [], best_epoch=-1, stopped_early=False)

    rng = np.random.default_rng(config.seed)
    weights = (
        class_weights(y, model.class_count)
        if config.class_balanced
        else np.ones(model.class_count)
    )

    use_holdout = config.early_stop_patience > 0 and np.all(np.bincount(y) >= 10)
    if use_holdout:
        fit_idx, val_idx = _stratified_holdout(y, 0.1, rng)
        X_fit, y_fit = X[fit_idx], y[fit_idx]
        X_val, y_val = X[val_idx], y[val_idx]
    else:
        X_fit, y_fit = X, y
        X_val = y_val = None

    params = model.parameter_arrays()
    opt = _Adam(params, config.learning_rate)
    coeff_count = sum(a.size for a in model.spline_coefficient_arrays())

    history = []
    best_val = np.inf
    best_epoch = -1
    best_snap = None
    since_best = 0
    stopped_early = False
    n_fit = X_fit.shape[0]
    batch = n_fit if config.batch_size == 0 else min(config.batch_size, n_fit)

    for epoch in range(config.epochs):
        order = rng.permutation(n_fit) if batch < n_fit else np.arange(n_fit)
        epoch_losses = []
        for start in range(0, n_fit, batch):
            rows = order[start : start + batch]
            loss, upstream = _loss_and_upstream(model, X_fit[rows], y_fit[rows], weights)
            if config.l1_lambda > 0:
                loss += config.l1_lambda * l1_penalty(model)
            if not np.isfinite(loss):
                raise TrainingDivergedError(
                    f"non-finite loss at epoch {epoch}",
                    last_state=best_snap if best_snap is not None else _snapshot(model),
                    history=history,
                )
            grads = model.backward(X_fit[rows], upstream)
            grad_arrays = model.gradient_arrays(grads)
            if config.l1_lambda > 0:
                scale = config.l1_lambda / coeff_count
                coeff_ids = {id(a) for a in model.spline_coefficient_arrays()}
                for garr, parr in zip(grad_arrays, params):
                    if id(parr) in coeff_ids:
                        garr += scale * np.sign(parr)
            opt.step(grad_arrays)
            epoch_losses.append(loss)

        train_loss = float(np.mean(epoch_losses))
        if X_val is not None:
            val_loss = cross_entropy(model.predict_proba(X_val), y_val, weights)
            if not np.isfinite(val_loss):
                raise TrainingDivergedError(
                    f"non-finite validation loss at epoch {epoch}",
                    last_state=best_snap, history=history,
                )
            if val_loss < best_val - 1e-12:
                best_val, best_epoch, since_best = val_loss, epoch, 0
                best_snap = _snapshot(model)
            else:
                since_best += 1
        else:
            val_loss = float("nan")
            best_epoch = epoch
        history.append(EpochRecord(epoch, train_loss, val_loss))
        if X_val is not None and since_best >= config.early_stop_patience:
            stopped_early = True
            break

    if best_snap is not None:
        _restore(model, best_snap)
    return TrainResult(model, history, best_epoch, stopped_early)


def save_history_csv(history, path):
    """Write the per-epoch loss trajectory as epoch,train_loss,val_loss."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "train_loss", "val_loss"])
        for rec in history:
            writer.writerow([rec.epoch, repr(float(rec.train_loss)), repr(float(rec.val_loss))])


# ---------------------------------------------------------------------------
# Logistic-regression baseline
# ---------------------------------------------------------------------------


@dataclass
class LRBaseline:
    """Plain logistic regression; beta's last entry is the intercept."""

    beta: np.ndarray
    class_balanced: bool = False

    @property
    def feature_count(self) -> int:
        return self.beta.size - 1

    def _design(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.hstack([X, np.ones((X.shape[0], 1))])

    def predict_proba_positive(self, X) -> np.ndarray:
        return sigmoid(self._design(X) @ self.beta)

    def predict_proba(self, X) -> np.ndarray:
        p1 = np.atleast_1d(self.predict_proba_positive(X))
        return np.stack([1.0 - p1, p1], axis=1)


def lr_gradient(beta, X, y, sample_weights=None) -> np.ndarray:
    """Analytic gradient sum_i w_i (sigmoid(beta.x_i) - y_i) x_i of the
    Bernoulli negative log-likelihood. X is used exactly as given."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    beta = np.asarray(beta, dtype=float)
    y = np.asarray(y, dtype=float)
    if beta.shape != (X.shape[1],) or y.shape != (X.shape[0],):
        raise ShapeError("beta/X/y shapes are inconsistent")
    if set(np.unique(y)) - {0.0, 1.0}:
        raise InvalidInputError("labels must be binary")
    resid = sigmoid(X @ beta) - y
    if sample_weights is not None:
        resid = resid * np.asarray(sample_weights, dtype=float)
    return X.T @ resid


def fit_lr_baseline(X, y, class_balanced=False, learning_rate=0.1,
                    max_epochs=5000, tol=1e-6) -> LRBaseline:
    """Gradient-descent fit (adaptive-moment steps) until the gradient norm
    falls below ``tol`` or the epoch budget runs out."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=int)
    design = np.hstack([X, np.ones((X.shape[0], 1))])
    beta = np.zeros(design.shape[1])
    if class_balanced:
        w = class_weights(y, 2)
        sample_w = w[y]
    else:
        sample_w = None
    opt = _Adam([beta], learning_rate)
    for _ in range(max_epochs):
        grad = lr_gradient(beta, design, y, sample_w)
        if np.linalg.norm(grad) < tol:
            break
        opt.step([grad])
    return LRBaseline(beta=beta, class_balanced=class_balanced)


# ---------------------------------------------------------------------------
# Grid search
# ---------------------------------------------------------------------------


HIDDEN_SIZE_GRID = [(), (5,), (5, 5)]
GRID_POINT_GRID = [1, 3, 5]
DEGREE_GRID = [1, 3, 5]
L1_GRID = [1e-1, 1e-2, 1e-3]
BALANCE_GRID = [True, False]
INIT_GRID = ["sparse", "dense"]


@dataclass
class GridSearchSpace:
    """Cartesian hyperparameter space; defaults are the full search lists."""

    hidden_sizes: list = field(default_factory=lambda: list(HIDDEN_SIZE_GRID))
    grid_points: list = field(default_factory=lambda: list(GRID_POINT_GRID))
    degree: list = field(default_factory=lambda: list(DEGREE_GRID))
    l1_lambda: list = field(default_factory=lambda: list(L1_GRID))
    class_balanced: list = field(default_factory=lambda: list(BALANCE_GRID))
    init_mode: list = field(default_factory=lambda: list(INIT_GRID))

    def __post_init__(self):
        for name in ("hidden_sizes", "grid_points", "degree", "l1_lambda",
                     "class_balanced", "init_mode"):
            if not getattr(self, name):
                raise InvalidInputError(f"{name} list must be nonempty")

    @classmethod
    def for_additive(cls) -> "GridSearchSpace":
        """Same space but restricted to no hidden layers."""
        return cls(hidden_sizes=[()])

    def configs(self):
        """Enumerate ModelConfig objects in lexicographic field order."""
        combos = itertools.product(self.hidden_sizes, self.grid_points, self.degree,
                                   self.l1_lambda, self.class_balanced, self.init_mode)
        return [
            ModelConfig(hidden_sizes=h, grid_points=g, degree=k, l1_lambda=l,
                        class_balanced=b, init_mode=i)
            for h, g, k, l, b, i in combos
        ]


def stratified_folds(y, folds: int, seed: int):
    """Round-robin per-class assignment after a seeded shuffle."""
    y = np.asarray(y, dtype=int)
    if folds < 2:
        raise InvalidInputError("folds must be >= 2")
    rng = np.random.default_rng(seed)
    assignment = np.empty(y.size, dtype=int)
    for cls in np.unique(y):
        idx = np.flatnonzero(y == cls)
        if idx.size < folds:
            raise StratificationError(
                f"class {cls} has {idx.size} rows, fewer than {folds} folds"
            )
        idx = idx[rng.permutation(idx.size)]
        assignment[idx] = np.arange(idx.size) % folds
    return [np.flatnonzero(assignment == f) for f in range(folds)]


def _count_params(config: ModelConfig, n_features: int, n_classes: int) -> int:
    dims = [n_features, *config.hidden_sizes, n_classes]
    nb = config.grid_points + config.degree
    total = sum(a * b * (nb + 2) for a, b in zip(dims, dims[1:]))
    if not config.hidden_sizes:
        total += n_classes  # additive bias
    return total


def build_model(kind: str, X, feature_names, class_labels, config: ModelConfig,
                seed: int = 0):
    """Construct an untrained model of the requested kind."""
    if kind == "kaam":
        return build_kaam(X, feature_names, class_labels, config, seed)
    if kind == "logistic-kan":
        return build_logistic_kan(X, feature_names, class_labels, config, seed)
    raise InvalidInputError(f"unknown model kind {kind!r}")


def _evaluate_config(args):
    (index, config, kind, X, y, feature_names, class_labels, fold_indices,
     base) = args
    scores = []
    for f, val_idx in enumerate(fold_indices):
        fit_idx = np.setdiff1d(np.arange(y.size), val_idx)
        model = build_model(kind, X[fit_idx], feature_names, class_labels, config,
                            seed=base.seed)
        cfg = TrainConfig(
            epochs=base.epochs, learning_rate=base.learning_rate,
            batch_size=base.batch_size, l1_lambda=config.l1_lambda,
            class_balanced=config.class_balanced, seed=base.seed,
            early_stop_patience=base.early_stop_patience,
        )
        train(model, X[fit_idx], y[fit_idx], cfg)
        preds = np.atleast_2d(model.predict_proba(X[val_idx])).argmax(axis=1)
        _, _, _, f1 = confusion_metrics(preds, y[val_idx], len(class_labels))
        scores.append(f1)
    return index, scores


@dataclass
class GridSearchResult:
    best_config: ModelConfig
    best_score: float
    records: list  # (config, per-fold scores, mean score)


def grid_search(space: GridSearchSpace, X, y, feature_names, class_labels,
                model_kind: str = "kaam", folds: int = 3,
                base_config: TrainConfig | None = None,
                n_jobs: int | None = None) -> GridSearchResult:
    """Exhaustive search over the space, scored by mean validation weighted F1.

    Ties prefer the config with fewer parameters, then the earlier config in
    enumeration order. ``KAAMLAB_THREADS`` caps worker processes.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=int)
    if y.size < folds:
        raise InvalidInputError("need at least one row per fold")
    base = base_config or TrainConfig(epochs=150, early_stop_patience=0)
    fold_indices = stratified_folds(y, folds, base.seed)
    configs = space.configs()
    if model_kind == "kaam" and any(c.hidden_sizes for c in configs):
        raise InvalidInputError("the additive model admits no hidden layers")

    jobs = [
        (i, cfg, model_kind, X, y, list(feature_names), list(class_labels),
         fold_indices, base)
        for i, cfg in enumerate(configs)
    ]
    cap = int(os.environ.get("KAAMLAB_THREADS", "1"))
    workers = max(1, min(cap, len(jobs)) if n_jobs is None else min(n_jobs, cap))
    results = [None] * len(jobs)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for index, scores in pool.map(_evaluate_config, jobs):
                results[index] = scores
    else:
        for job in jobs:
            index, scores = _evaluate_config(job)
            results[index] = scores

    records = []
    for cfg, scores in zip(configs, results):
        records.append((cfg, scores, float(np.mean(scores))))
    n_feat, n_cls = X.shape[1], len(class_labels)
    order = sorted(
        range(len(records)),
        key=lambda i: (-records[i][2], _count_params(configs[i], n_feat, n_cls), i),
    )
    best = order[0]
    return GridSearchResult(best_config=configs[best], best_score=records[best][2],
                            records=records)
