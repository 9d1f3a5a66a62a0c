"""B-spline bases and the learnable univariate functions built on them.

A basis lives on a fixed interval with uniform interior knots and ``degree``
extra knots extended uniformly past each boundary, so partition of unity
holds on the whole domain. A learnable function combines a smooth base
activation x*sigmoid(x) with a spline term; inputs are clamped to the basis
domain for the spline term only, so evaluation stays bounded on unseen
covariate values while the base term still carries out-of-range signal.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError, InvalidModelError, UnsupportedDegreeError


def sigmoid(x):
    """Numerically stable logistic function, elementwise."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out if out.ndim else float(out)


def silu(x):
    """Base activation x * sigmoid(x)."""
    x = np.asarray(x, dtype=float)
    out = x * sigmoid(x)
    return out if out.ndim else float(out)


def silu_grad(x):
    """Derivative of x * sigmoid(x): s(x) * (1 + x * (1 - s(x)))."""
    x = np.asarray(x, dtype=float)
    s = sigmoid(x)
    out = s * (1.0 + x * (1.0 - s))
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class BSplineBasis:
    """Uniform B-spline basis of a given degree on [domain_min, domain_max].

    ``interval_count`` interior intervals plus ``degree`` padding knots beyond
    each boundary give ``interval_count + degree`` basis functions.
    """

    degree: int
    interval_count: int
    domain_min: float
    domain_max: float
    knots: np.ndarray = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.degree < 0:
            raise InvalidInputError(f"degree must be >= 0, got {self.degree}")
        if self.interval_count < 1:
            raise InvalidInputError(
                f"interval_count must be >= 1, got {self.interval_count}"
            )
        if not (
            np.isfinite(self.domain_min)
            and np.isfinite(self.domain_max)
            and self.domain_min < self.domain_max
        ):
            raise InvalidInputError(
                f"need finite domain_min < domain_max, got "
                f"[{self.domain_min}, {self.domain_max}]"
            )
        if self.knots is None:
            k, g = self.degree, self.interval_count
            h = (self.domain_max - self.domain_min) / g
            idx = np.arange(-k, g + k + 1, dtype=float)
            knots = self.domain_min + idx * h
            object.__setattr__(self, "knots", knots)
        else:
            object.__setattr__(self, "knots", np.asarray(self.knots, dtype=float))
        expected = self.interval_count + 2 * self.degree + 1
        if self.knots.shape != (expected,):
            raise InvalidInputError(
                f"knot vector must have length {expected}, got {self.knots.shape}"
            )
        if np.any(np.diff(self.knots) <= 0):
            raise InvalidInputError("knots must be strictly increasing")

    @property
    def num_basis(self) -> int:
        return self.interval_count + self.degree

    def clamp(self, x):
        return np.clip(x, self.domain_min, self.domain_max)


def fit_basis_from_data(
    samples, grid_points: int, degree: int, margin_fraction: float = 0.05
) -> BSplineBasis:
    """Build a basis whose domain covers the observed samples plus a margin.

    A degenerate (constant) sample set gets the unit-width domain centered on
    the constant.
    """
    samples = np.asarray(samples, dtype=float).ravel()
    if samples.size == 0:
        raise InvalidInputError("cannot fit a basis from an empty sample set")
    if not np.all(np.isfinite(samples)):
        raise InvalidInputError("samples must be finite")
    if margin_fraction < 0:
        raise InvalidInputError("margin_fraction must be >= 0")
    lo, hi = float(samples.min()), float(samples.max())
    if hi == lo:
        lo, hi = lo - 0.5, lo + 0.5
    else:
        m = margin_fraction * (hi - lo)
        lo, hi = lo - m, hi + m
    return BSplineBasis(degree=degree, interval_count=grid_points,
                        domain_min=lo, domain_max=hi)


def _degree_ladder(basis: BSplineBasis, x: np.ndarray, stop_degree: int) -> np.ndarray:
    """Cox-de Boor ladder from interval indicators up to ``stop_degree``.

    ``x`` must already be clamped to the domain. Returns shape
    (len(x), interval_count + 2*degree - stop_degree).
    """
    t = basis.knots
    n_intervals = len(t) - 1
    # Seed span via the stored knots; the domain maximum belongs to the last
    # interior interval so partition of unity holds at the right boundary.
    span = np.searchsorted(t, x, side="right") - 1
    span = np.clip(span, basis.degree, basis.degree + basis.interval_count - 1)
    b = np.zeros((x.shape[0], n_intervals))
    b[np.arange(x.shape[0]), span] = 1.0
    for d in range(1, stop_degree + 1):
        width = n_intervals - d
        left = (x[:, None] - t[None, :width]) / (t[None, d : d + width] - t[None, :width])
        right = (t[None, d + 1 : d + 1 + width] - x[:, None]) / (
            t[None, d + 1 : d + 1 + width] - t[None, 1 : 1 + width]
        )
        b = left * b[:, :width] + right * b[:, 1 : 1 + width]
    return b


def basis_matrix(basis: BSplineBasis, x) -> np.ndarray:
    """All basis values at each point of ``x`` (clamped), shape (n, num_basis)."""
    x = np.asarray(x, dtype=float).ravel()
    if not np.all(np.isfinite(x)):
        raise InvalidInputError("basis evaluation requires finite inputs")
    return _degree_ladder(basis, basis.clamp(x), basis.degree)


def basis_eval(basis: BSplineBasis, x: float) -> np.ndarray:
    """Basis values at a single point; nonnegative and summing to one."""
    return basis_matrix(basis, [x])[0]


def basis_derivative_matrix(basis: BSplineBasis, x) -> np.ndarray:
    """d/dx of every basis function at each point of ``x`` (clamped)."""
    k = basis.degree
    if k < 1:
        raise UnsupportedDegreeError("derivative requires degree >= 1")
    x = np.asarray(x, dtype=float).ravel()
    if not np.all(np.isfinite(x)):
        raise InvalidInputError("basis evaluation requires finite inputs")
    lower = _degree_ladder(basis, basis.clamp(x), k - 1)
    t = basis.knots
    nb = basis.num_basis
    # B'_{m,k} = k * (B_{m,k-1}/(t_{m+k}-t_m) - B_{m+1,k-1}/(t_{m+k+1}-t_{m+1}))
    d_left = lower[:, :nb] / (t[k : k + nb] - t[:nb])[None, :]
    d_right = lower[:, 1 : nb + 1] / (t[k + 1 : k + 1 + nb] - t[1 : 1 + nb])[None, :]
    return k * (d_left - d_right)


def basis_derivative(basis: BSplineBasis, x: float) -> np.ndarray:
    """Derivatives of all basis functions at a single point."""
    return basis_derivative_matrix(basis, [x])[0]


@dataclass
class LearnableFunction:
    """One univariate function phi(x) = w_b * silu(x) + w_s * c . B(x)."""

    basis: BSplineBasis
    coefficients: np.ndarray
    base_weight: float = 1.0
    spline_weight: float = 1.0

    def __post_init__(self):
        self.coefficients = np.asarray(self.coefficients, dtype=float)
        if self.coefficients.shape != (self.basis.num_basis,):
            raise InvalidModelError(
                f"expected {self.basis.num_basis} coefficients, "
                f"got shape {self.coefficients.shape}"
            )

    def _check_finite(self):
        if not (
            np.all(np.isfinite(self.coefficients))
            and np.isfinite(self.base_weight)
            and np.isfinite(self.spline_weight)
        ):
            raise InvalidModelError("function parameters must be finite")


@dataclass
class FunctionGradient:
    """Partials of phi(x) with respect to the input and every parameter."""

    d_input: float
    d_coefficients: np.ndarray
    d_base_weight: float
    d_spline_weight: float


def func_eval(f: LearnableFunction, x: float) -> float:
    """Evaluate phi at x. The spline term sees the clamped x, the base term raw x."""
    if not np.isfinite(x):
        raise InvalidInputError(f"input must be finite, got {x}")
    f._check_finite()
    spline = float(basis_eval(f.basis, x) @ f.coefficients)
    return f.base_weight * silu(x) + f.spline_weight * spline


def func_grad(f: LearnableFunction, x: float) -> FunctionGradient:
    """Gradient of phi at x w.r.t. the input, coefficients, and both weights.

    The spline contribution to d_input vanishes outside the clamped domain.
    """
    if not np.isfinite(x):
        raise InvalidInputError(f"input must be finite, got {x}")
    f._check_finite()
    b = basis_eval(f.basis, x)
    inside = f.basis.domain_min <= x <= f.basis.domain_max
    if f.basis.degree >= 1:
        db = basis_derivative(f.basis, x) if inside else np.zeros_like(b)
    else:
        db = np.zeros_like(b)
    d_input = f.base_weight * silu_grad(x) + f.spline_weight * float(db @ f.coefficients)
    return FunctionGradient(
        d_input=float(d_input),
        d_coefficients=f.spline_weight * b,
        d_base_weight=silu(x),
        d_spline_weight=float(b @ f.coefficients),
    )
