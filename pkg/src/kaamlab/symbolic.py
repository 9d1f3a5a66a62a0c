"""Closed-form distillation of learned shape functions.

Each retained shape function is approximated by one term c1*f(a*x + b) + c2
from a primitive library, searched over an affine grid and scored by R^2.
Terms whose best fit stays under the fidelity bar are kept as tabulated
curves instead of silently misfitting. Per-class formulas fold all constants
(c2 terms plus the model bias) into a single trailing constant.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace

import numpy as np

from .additive import KAAM, build_differential_logit_matrix, build_logit_matrix
from .errors import ArityError, InvalidInputError, ShapeError
from .splines import sigmoid

_POLE_MARGIN = 0.05
_EPS = 1e-9


@dataclass(frozen=True)
class SymbolicPrimitive:
    """A scalar function with an admissible-argument predicate."""

    name: str
    fn: object
    admissible: object  # (args array) -> bool
    clamp_arg: object   # (args array) -> safe args, used on domain violations


def _always(z):
    return np.ones(z.shape[:-1], dtype=bool)


def _positive(z):
    return (z > _EPS).all(axis=-1)


def _nonnegative(z):
    return (z >= 0.0).all(axis=-1)


def _away_from_zero(z):
    return (z > _EPS).all(axis=-1) | (z < -_EPS).all(axis=-1)


def _bounded_exponent(z):
    return (np.abs(z) < 50.0).all(axis=-1)


def _single_tan_branch(z):
    branch = np.floor((z + np.pi / 2) / np.pi)
    same = branch.min(axis=-1) == branch.max(axis=-1)
    left = branch * np.pi - np.pi / 2
    right = branch * np.pi + np.pi / 2
    clear = ((z - left > _POLE_MARGIN) & (right - z > _POLE_MARGIN)).all(axis=-1)
    return same & clear


def _clamp_positive(z):
    return np.maximum(z, _EPS)


def _clamp_nonnegative(z):
    return np.maximum(z, 0.0)


def _clamp_away_from_zero(z):
    sign = np.where(z >= 0, 1.0, -1.0)
    return sign * np.maximum(np.abs(z), _EPS)


def _clamp_exponent(z):
    return np.clip(z, -50.0, 50.0)


def _clamp_tan(z):
    branch = np.floor((np.median(z) + np.pi / 2) / np.pi)
    left = branch * np.pi - np.pi / 2 + _POLE_MARGIN
    right = branch * np.pi + np.pi / 2 - _POLE_MARGIN
    return np.clip(z, left, right)


PRIMITIVE_LIBRARY = [
    SymbolicPrimitive("identity", lambda z: z, _always, lambda z: z),
    SymbolicPrimitive("square", lambda z: z ** 2, _always, lambda z: z),
    SymbolicPrimitive("cube", lambda z: z ** 3, _always, lambda z: z),
    SymbolicPrimitive("pow4", lambda z: z ** 4, _always, lambda z: z),
    SymbolicPrimitive("abs", np.abs, _always, lambda z: z),
    SymbolicPrimitive("sqrt", np.sqrt, _nonnegative, _clamp_nonnegative),
    SymbolicPrimitive("rsqrt", lambda z: 1.0 / np.sqrt(z), _positive, _clamp_positive),
    SymbolicPrimitive("recip", lambda z: 1.0 / z, _away_from_zero, _clamp_away_from_zero),
    SymbolicPrimitive("exp", np.exp, _bounded_exponent, _clamp_exponent),
    SymbolicPrimitive("negexp", lambda z: np.exp(-z), _bounded_exponent, _clamp_exponent),
    SymbolicPrimitive("log", np.log, _positive, _clamp_positive),
    SymbolicPrimitive("sin", np.sin, _always, lambda z: z),
    SymbolicPrimitive("cos", np.cos, _always, lambda z: z),
    SymbolicPrimitive("tan", np.tan, _single_tan_branch, _clamp_tan),
    SymbolicPrimitive("tanh", np.tanh, _always, lambda z: z),
    SymbolicPrimitive("sigmoid", sigmoid, _always, lambda z: z),
]

_PRIMITIVES_BY_NAME = {p.name: p for p in PRIMITIVE_LIBRARY}


@dataclass
class SymbolicTerm:
    """One distilled term c1 * f(a * x_j + b) + c2."""

    primitive: str
    a: float
    b: float
    c1: float
    c2: float
    feature_index: int = -1
    class_index: int | None = None
    fit_r2: float = 1.0
    arg_range: tuple | None = None  # (lo, hi) of a*x+b over the fit samples

    def evaluate(self, x):
        """Term value at x; returns (value, clamped_flag)."""
        prim = _PRIMITIVES_BY_NAME[self.primitive]
        z = np.asarray(self.a * np.asarray(x, dtype=float) + self.b)
        clamped = False
        if not bool(np.all(prim.admissible(np.atleast_1d(z)))):
            if self.arg_range is not None:
                z = np.clip(z, self.arg_range[0], self.arg_range[1])
            z = prim.clamp_arg(np.atleast_1d(z))
            if np.ndim(x) == 0:
                z = z[0]
            clamped = True
        return self.c1 * prim.fn(z) + self.c2, clamped


@dataclass
class TabulatedTerm:
    """Fallback when no primitive reaches the fidelity bar: the sampled shape
    function itself, evaluated by linear interpolation."""

    xs: np.ndarray
    ys: np.ndarray
    feature_index: int = -1
    class_index: int | None = None
    fit_r2: float = 0.0

    def evaluate(self, x):
        return np.interp(x, self.xs, self.ys), False


@dataclass
class ClassFormula:
    """Terms plus a single folded constant for one class logit (or, for
    binary models, the differential logit)."""

    class_index: int | None
    constant: float
    terms: list


@dataclass
class SymbolicFormula:
    feature_names: list
    class_labels: list
    mode: str                 # "binary-differential" or "per-class"
    classes: list
    decimals: int | None = None
    low_fidelity: list = field(default_factory=list)  # (feature, class) pairs

    @property
    def has_tabulated_terms(self) -> bool:
        return any(isinstance(t, TabulatedTerm) for cf in self.classes
                   for t in cf.terms)


@dataclass
class FormulaEvaluation:
    logits: np.ndarray
    clamped: bool


# ---------------------------------------------------------------------------
# Fitting
# ---------------------------------------------------------------------------


def _affine_least_squares(Z, y):
    """Rowwise closed-form (c1, c2) minimizing ||c1*Z + c2 - y||^2."""
    zm = Z.mean(axis=1, keepdims=True)
    ym = y.mean()
    var_z = ((Z - zm) ** 2).mean(axis=1)
    cov = ((Z - zm) * (y - ym)).mean(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        c1 = np.where(var_z > 1e-300, cov / var_z, 0.0)
    c2 = ym - c1 * zm[:, 0]
    return c1, c2


def _score_stage(prim, x, y, a_vals, b_grids, ss_tot):
    """Best (r2, a, b, c1, c2) over a full (slope, shift) grid.

    ``b_grids`` has one row of shifts per slope; the whole product evaluates
    as one (na, nb, n) block.
    """
    args = a_vals[:, None, None] * x[None, None, :] + b_grids[:, :, None]
    with np.errstate(all="ignore"):
        Z = prim.fn(args)
    valid = prim.admissible(args) & np.isfinite(Z).all(axis=-1)
    if not valid.any():
        return None
    n = x.size
    ym = y.mean()
    zm = Z.mean(axis=-1)
    zc = Z - zm[..., None]
    var_z = (zc ** 2).mean(axis=-1)
    cov = (zc @ (y - ym)) / n
    with np.errstate(divide="ignore", invalid="ignore"):
        c1 = np.where(var_z > 1e-300, cov / var_z, 0.0)
    c2 = ym - c1 * zm
    # simple-regression identity: ss_res = ss_tot - n * cov^2 / var_z
    explained = np.where(var_z > 1e-300, n * cov * cov / np.maximum(var_z, 1e-300),
                         0.0)
    r2 = np.where(valid, np.minimum(explained / ss_tot, 1.0), -np.inf)
    i, j = np.unravel_index(int(np.argmax(r2)), r2.shape)
    return (float(r2[i, j]), float(a_vals[i]), float(b_grids[i, j]),
            float(c1[i, j]), float(c2[i, j]))


def _fit_identity(x, y):
    """Exact least-squares line; the identity primitive needs no grid."""
    xm, ym = x.mean(), y.mean()
    var_x = ((x - xm) ** 2).mean()
    if var_x < 1e-300:
        return None
    c1 = float(((x - xm) * (y - ym)).mean() / var_x)
    c2 = float(ym - c1 * xm)
    resid = c1 * x + c2 - y
    ss_tot = ((y - ym) ** 2).sum()
    r2 = float(1.0 - (resid ** 2).sum() / ss_tot)
    return SymbolicTerm("identity", 1.0, 0.0, c1, c2, fit_r2=r2,
                        arg_range=(float(x.min()), float(x.max())))


def fit_symbolic(x, y, library=None, min_samples: int = 10) -> SymbolicTerm:
    """Best single term over the library for samples of one shape function.

    Coarse-to-fine search: signed log-spaced slopes, shifts spanning the
    slope-scaled sample range plus one period, two refinements around the
    best cell. Ties prefer the earlier primitive in library order.
    """
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if x.size != y.size:
        raise ShapeError("x and y must align")
    if x.size < min_samples:
        raise InvalidInputError(f"need at least {min_samples} samples")
    if float(np.ptp(y)) < 1e-14:
        return SymbolicTerm("identity", 1.0, 0.0, 0.0, float(y.mean()),
                            fit_r2=1.0, arg_range=(float(x.min()), float(x.max())))
    library = PRIMITIVE_LIBRARY if library is None else library

    ss_tot = float(((y - y.mean()) ** 2).sum())
    x_range = float(x.max() - x.min())
    a_step_log = 3.0 / 40.0  # spacing of logspace(-2, 1, 41)

    best_term = None
    best_key = (-np.inf, 0)
    for order, prim in enumerate(library):
        if prim.name == "identity":
            term = _fit_identity(x, y)
            if term is None:
                continue
            cand = (term.fit_r2, term.a, term.b, term.c1, term.c2)
        else:
            mags = np.logspace(-2, 1, 41)
            a_vals = np.concatenate([-mags[::-1], mags])
            spans = np.abs(a_vals) * x_range + np.pi
            b_grids = np.linspace(-spans, spans, 41).T
            cand = _score_stage(prim, x, y, a_vals, b_grids, ss_tot)
            if cand is not None:
                step = a_step_log
                db = None
                for _ in range(2):
                    _, a0, b0, _, _ = cand
                    if db is None:
                        db = (abs(a0) * x_range + np.pi) / 40.0
                    a_local = a0 * np.logspace(-step, step, 41)
                    b_local = np.tile(np.linspace(b0 - db, b0 + db, 41), (41, 1))
                    refined = _score_stage(prim, x, y, a_local, b_local, ss_tot)
                    if refined is not None and refined[0] > cand[0]:
                        cand = refined
                    step /= 20.0
                    db /= 20.0
        if cand is None:
            continue
        r2, a0, b0, c1, c2 = cand
        key = (round(r2, 12), -order)
        if key > best_key:
            best_key = key
            args = a0 * x + b0
            best_term = SymbolicTerm(prim.name, a0, b0, c1, c2, fit_r2=float(r2),
                                     arg_range=(float(args.min()), float(args.max())))
        if best_key[0] >= 1.0 - 1e-12:
            break
    if best_term is None:
        # every primitive was inadmissible everywhere; fall back to a constant
        return SymbolicTerm("identity", 1.0, 0.0, 0.0, float(y.mean()), fit_r2=0.0,
                            arg_range=(float(x.min()), float(x.max())))
    return best_term


# ---------------------------------------------------------------------------
# Distillation
# ---------------------------------------------------------------------------


def _sample_grid(column: np.ndarray, points: int) -> np.ndarray:
    """Sampling grid over a feature's observed range.

    Features with few distinct values (binaries, one-hot columns, small
    integer scales) are sampled on their support only, so the fit reflects
    what the model can actually see.
    """
    lo, hi = float(column.min()), float(column.max())
    if lo == hi:
        return np.full(points, lo)
    grid = np.linspace(lo, hi, points)
    distinct = np.unique(column)
    if distinct.size <= 32:
        nearest = np.abs(grid[:, None] - distinct[None, :]).argmin(axis=1)
        grid = distinct[nearest]
    return grid


def shape_samples(model: KAAM, j: int, xs, class_index: int | None):
    """Values of g_j (or the binary differential g1-g0) on the given grid."""
    from .additive import feature_contribution

    if class_index is None:
        if model.class_count != 2:
            raise ArityError("differential sampling needs a binary model")
        return (feature_contribution(model, j, xs, 1)
                - feature_contribution(model, j, xs, 0))
    return feature_contribution(model, j, xs, class_index)


def distill(model: KAAM, X_train, prune_threshold: float = 0.01,
            grid_size: int = 256, fidelity_r2: float = 0.9,
            library=None) -> SymbolicFormula:
    """Per-class closed-form approximation of a trained additive model.

    Features whose logit-matrix column variance falls under
    ``prune_threshold`` times the largest column variance are dropped. Fits
    under the fidelity bar are kept as tabulated curves and flagged.
    """
    X = np.atleast_2d(np.asarray(X_train, dtype=float))
    if X.shape[1] != model.feature_count:
        raise ShapeError("training matrix does not match the model")
    binary = model.class_count == 2
    class_indices = [None] if binary else list(range(model.class_count))
    class_formulas = []
    low_fidelity = []
    for p in class_indices:
        if p is None:
            matrix = build_differential_logit_matrix(model, X)
            bias = float(model.bias[1] - model.bias[0])
        else:
            matrix = build_logit_matrix(model, X, p)
            bias = float(model.bias[p])
        variances = matrix.values[:, :-1].var(axis=0)
        vmax = variances.max() if variances.size else 0.0
        constant = bias
        terms = []
        for j in range(model.feature_count):
            if vmax > 0 and variances[j] < prune_threshold * vmax:
                continue
            xs = _sample_grid(X[:, j], grid_size)
            ys = shape_samples(model, j, xs, p)
            term = fit_symbolic(xs, ys, library=library)
            if term.fit_r2 < fidelity_r2:
                low_fidelity.append((j, p))
                terms.append(TabulatedTerm(np.unique(xs),
                                           shape_samples(model, j, np.unique(xs), p),
                                           feature_index=j, class_index=p))
                continue
            constant += term.c2
            if term.c1 != 0.0:
                terms.append(replace(term, c2=0.0, feature_index=j, class_index=p))
        class_formulas.append(ClassFormula(p, constant, terms))
    return SymbolicFormula(
        feature_names=list(model.feature_names),
        class_labels=list(model.class_labels),
        mode="binary-differential" if binary else "per-class",
        classes=class_formulas,
        low_fidelity=low_fidelity,
    )


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------


def eval_formula(formula: SymbolicFormula, x) -> FormulaEvaluation:
    """Logit(s) of the formula at a single covariate vector.

    Binary-differential formulas yield one margin value; per-class formulas
    one logit per class. Domain violations evaluate through the clamped
    argument and set the flag.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size != len(formula.feature_names):
        raise ShapeError(f"expected a length-{len(formula.feature_names)} vector")
    logits = []
    clamped = False
    for cf in formula.classes:
        total = cf.constant
        for term in cf.terms:
            value, was_clamped = term.evaluate(x[term.feature_index])
            total += float(value)
            clamped = clamped or was_clamped
        logits.append(total)
    return FormulaEvaluation(np.array(logits), clamped)


def formula_probabilities(formula: SymbolicFormula, X) -> np.ndarray:
    """N x P probabilities: sigmoid of the margin for binary-differential
    formulas, softmax across class logits otherwise."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    raw = np.array([eval_formula(formula, row).logits for row in X])
    if formula.mode == "binary-differential":
        p1 = sigmoid(raw[:, 0])
        return np.stack([1.0 - p1, p1], axis=1)
    shifted = raw - raw.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def round_formula(formula: SymbolicFormula, decimals: int) -> SymbolicFormula:
    """Round every coefficient half-to-even to the given decimals."""
    if decimals < 0:
        raise InvalidInputError("decimals must be >= 0")
    classes = []
    for cf in formula.classes:
        terms = []
        for t in cf.terms:
            if isinstance(t, TabulatedTerm):
                terms.append(TabulatedTerm(t.xs, np.round(t.ys, decimals),
                                           t.feature_index, t.class_index, t.fit_r2))
                continue
            rounded = replace(t, a=round(t.a, decimals), b=round(t.b, decimals),
                              c1=round(t.c1, decimals), c2=round(t.c2, decimals))
            if rounded.c1 == 0.0 and rounded.c2 == 0.0:
                continue  # the term rounded away entirely
            terms.append(rounded)
        classes.append(ClassFormula(cf.class_index, round(cf.constant, decimals), terms))
    return SymbolicFormula(formula.feature_names, formula.class_labels, formula.mode,
                           classes, decimals, list(formula.low_fidelity))


# ---------------------------------------------------------------------------
# Rendering and parsing
# ---------------------------------------------------------------------------

_NAME_SAFE = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")


def _fmt(v: float) -> str:
    return repr(float(v))


def _fmt_name(name: str) -> str:
    return name if _NAME_SAFE.match(name) else f"`{name}`"


def _render_inner(a: float, b: float, name: str) -> str:
    name = _fmt_name(name)
    piece = name if a == 1.0 else f"{_fmt(a)} * {name}"
    if b == 0.0:
        return piece
    return f"{piece} + {_fmt(b)}" if b > 0 else f"{piece} - {_fmt(-b)}"


def _render_term(term, feature_names) -> tuple:
    """(sign, magnitude_text) for joining."""
    name = feature_names[term.feature_index]
    if isinstance(term, TabulatedTerm):
        return 1.0, f"tabulated({_fmt_name(name)})"
    mag = abs(term.c1)
    sign = 1.0 if term.c1 >= 0 else -1.0
    if term.primitive == "identity" and term.a == 1.0 and term.b == 0.0:
        return sign, f"{_fmt(mag)} * {_fmt_name(name)}"
    inner = _render_inner(term.a, term.b, name)
    return sign, f"{_fmt(mag)} * {term.primitive}({inner})"


def _render_class(cf: ClassFormula, feature_names) -> str:
    symbolic = [t for t in cf.terms if isinstance(t, SymbolicTerm)]
    tabulated = [t for t in cf.terms if isinstance(t, TabulatedTerm)]
    symbolic.sort(key=lambda t: (-abs(t.c1), t.feature_index))
    tabulated.sort(key=lambda t: t.feature_index)
    pieces = [_render_term(t, feature_names) for t in symbolic + tabulated]
    pieces.append((1.0 if cf.constant >= 0 else -1.0, _fmt(abs(cf.constant))))
    out = []
    for i, (sign, text) in enumerate(pieces):
        if i == 0:
            out.append(("-" if sign < 0 else "") + text)
        else:
            out.append(("- " if sign < 0 else "+ ") + text)
    return " ".join(out)


def render_formula(formula: SymbolicFormula) -> str:
    """Deterministic text: terms by descending |c1|, constant last.

    Binary-differential formulas render as a single logit expression;
    multiclass formulas one line per class.
    """
    if formula.mode == "binary-differential":
        return _render_class(formula.classes[0], formula.feature_names)
    lines = []
    for cf in formula.classes:
        label = formula.class_labels[cf.class_index]
        lines.append(f"logit[{label}] = "
                     f"{_render_class(cf, formula.feature_names)}")
    return "\n".join(lines)


_NUM = r"-?\d+(?:\.\d+)?(?:[eE][+-]?\d+)?"
_TERM_RE = re.compile(
    rf"^(?P<c1>{_NUM}) \* (?:(?P<prim>[a-z0-9]+)\((?P<inner>.+)\)|(?P<bare>.+))$"
)
_INNER_RE = re.compile(
    rf"^(?:(?P<a>{_NUM}) \* )?(?P<name>`[^`]+`|[A-Za-z_][A-Za-z0-9_]*)"
    rf"(?: (?P<op>[+-]) (?P<b>{_NUM}))?$"
)


def _split_terms(text: str):
    """Top-level split on ' + ' / ' - ', respecting backticked names."""
    chunks = []
    sign = 1.0
    depth = 0
    in_name = False
    start = 0
    i = 0
    first_sign = 1.0
    stripped = text.strip()
    if stripped.startswith("-"):
        first_sign = -1.0
        stripped = stripped[1:]
    while i < len(stripped):
        ch = stripped[i]
        if ch == "`":
            in_name = not in_name
        elif not in_name and ch == "(":
            depth += 1
        elif not in_name and ch == ")":
            depth -= 1
        elif not in_name and depth == 0 and stripped[i : i + 3] in (" + ", " - "):
            chunks.append((sign if chunks else first_sign, stripped[start:i].strip()))
            sign = 1.0 if stripped[i + 1] == "+" else -1.0
            start = i + 3
            i += 3
            continue
        i += 1
    chunks.append((sign if chunks else first_sign, stripped[start:].strip()))
    return chunks


def _parse_name(token: str) -> str:
    return token[1:-1] if token.startswith("`") else token


def parse_formula(text: str, feature_names, class_labels=None) -> SymbolicFormula:
    """Inverse of render_formula for symbolic-only formulas.

    Tabulated terms only live in the structured export and raise here.
    """
    if "tabulated(" in text:
        raise InvalidInputError(
            "tabulated terms are not textual; use the structured formula file"
        )
    feature_names = list(feature_names)
    index = {n: j for j, n in enumerate(feature_names)}
    lines = [l for l in text.strip().splitlines() if l.strip()]
    multi = any(l.startswith("logit[") for l in lines)
    classes = []
    labels = list(class_labels) if class_labels is not None else None
    for ci, line in enumerate(lines):
        class_index = None
        if multi:
            m = re.match(r"^logit\[(?P<label>.*)\] = (?P<body>.*)$", line)
            if not m:
                raise InvalidInputError(f"unparseable class line: {line!r}")
            body = m.group("body")
            if labels is not None:
                class_index = labels.index(m.group("label"))
            else:
                class_index = ci
        else:
            body = line
        constant = 0.0
        terms = []
        for sign, chunk in _split_terms(body):
            try:
                constant += sign * float(chunk)
                continue
            except ValueError:
                pass
            m = _TERM_RE.match(chunk)
            if not m:
                raise InvalidInputError(f"unparseable term: {chunk!r}")
            c1 = sign * float(m.group("c1"))
            if m.group("bare") is not None:
                name = _parse_name(m.group("bare").strip())
                if name not in index:
                    raise InvalidInputError(f"unknown feature {name!r}")
                terms.append(SymbolicTerm("identity", 1.0, 0.0, c1, 0.0,
                                          feature_index=index[name],
                                          class_index=class_index))
                continue
            prim = m.group("prim")
            if prim not in _PRIMITIVES_BY_NAME:
                raise InvalidInputError(f"unknown primitive {prim!r}")
            mi = _INNER_RE.match(m.group("inner").strip())
            if not mi:
                raise InvalidInputError(f"unparseable inner term: {m.group('inner')!r}")
            a = float(mi.group("a")) if mi.group("a") else 1.0
            b = float(mi.group("b") or 0.0)
            if mi.group("op") == "-":
                b = -b
            name = _parse_name(mi.group("name"))
            if name not in index:
                raise InvalidInputError(f"unknown feature {name!r}")
            terms.append(SymbolicTerm(prim, a, b, c1, 0.0,
                                      feature_index=index[name],
                                      class_index=class_index))
        classes.append(ClassFormula(class_index, constant, terms))
    if multi and labels is None:
        labels = [re.match(r"^logit\[(.*)\] = ", l).group(1) for l in lines]
    if not multi and labels is None:
        labels = ["0", "1"]
    return SymbolicFormula(feature_names, labels,
                           "per-class" if multi else "binary-differential", classes)


# ---------------------------------------------------------------------------
# Structured (lossless) serialization
# ---------------------------------------------------------------------------


def formula_to_dict(formula: SymbolicFormula) -> dict:
    classes = []
    for cf in formula.classes:
        terms = []
        for t in cf.terms:
            if isinstance(t, TabulatedTerm):
                terms.append({
                    "kind": "tabulated", "feature_index": t.feature_index,
                    "class_index": t.class_index, "xs": t.xs.tolist(),
                    "ys": t.ys.tolist(), "fit_r2": t.fit_r2,
                })
            else:
                terms.append({
                    "kind": "symbolic", "primitive": t.primitive, "a": t.a,
                    "b": t.b, "c1": t.c1, "c2": t.c2,
                    "feature_index": t.feature_index, "class_index": t.class_index,
                    "fit_r2": t.fit_r2,
                    "arg_range": list(t.arg_range) if t.arg_range else None,
                })
        classes.append({"class_index": cf.class_index, "constant": cf.constant,
                        "terms": terms})
    return {
        "feature_names": list(formula.feature_names),
        "class_labels": list(formula.class_labels),
        "mode": formula.mode,
        "classes": classes,
        "decimals": formula.decimals,
        "low_fidelity": [list(p) for p in formula.low_fidelity],
    }


def formula_from_dict(d: dict) -> SymbolicFormula:
    classes = []
    for cd in d["classes"]:
        terms = []
        for td in cd["terms"]:
            if td["kind"] == "tabulated":
                terms.append(TabulatedTerm(np.array(td["xs"]), np.array(td["ys"]),
                                           td["feature_index"], td["class_index"],
                                           td["fit_r2"]))
            else:
                terms.append(SymbolicTerm(
                    td["primitive"], td["a"], td["b"], td["c1"], td["c2"],
                    td["feature_index"], td["class_index"], td["fit_r2"],
                    tuple(td["arg_range"]) if td["arg_range"] else None,
                ))
        classes.append(ClassFormula(cd["class_index"], cd["constant"], terms))
    return SymbolicFormula(d["feature_names"], d["class_labels"], d["mode"], classes,
                           d.get("decimals"),
                           [tuple(p) for p in d.get("low_fidelity", [])])
