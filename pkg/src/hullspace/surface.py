"""Global polynomial response surfaces over the active variables.

Monomials are enumerated in graded-lexicographic order; the active inputs
arrive normalized to O(1), so the raw monomial basis stays well conditioned
through the degrees used here (<= 4).
"""

import csv
import itertools
import warnings
from dataclasses import dataclass
from math import comb

import numpy as np

from .errors import ValidationError
from .subspace import (
    GradientSet,
    covariance,
    eigendecompose,
    local_linear_gradients,
    normalize,
    partition,
)


def exponent_table(active_dim, degree):
    """All exponent tuples of total degree <= degree, graded-lex order:
    ascending total degree, lexicographically descending within a block
    ((2,0) before (1,1) before (0,2))."""
    exps = [
        e
        for e in itertools.product(range(degree + 1), repeat=active_dim)
        if sum(e) <= degree
    ]
    return sorted(exps, key=lambda e: (sum(e), tuple(-x for x in e)))


@dataclass(frozen=True, eq=False)
class PolySurface:
    """Multivariate polynomial over the active variables."""

    active_dim: int
    degree: int
    coefficients: np.ndarray

    def __post_init__(self):
        expected = comb(self.active_dim + self.degree, self.degree)
        coefs = np.asarray(self.coefficients, dtype=float).reshape(-1)
        if len(coefs) != expected:
            raise ValidationError(
                f"degree-{self.degree} surface in {self.active_dim} variables "
                f"needs {expected} coefficients, got {len(coefs)}"
            )
        if not np.all(np.isfinite(coefs)):
            raise ValidationError("surface coefficients contain non-finite values")
        coefs.flags.writeable = False
        object.__setattr__(self, "coefficients", coefs)

    @property
    def exponents(self):
        return exponent_table(self.active_dim, self.degree)


def _design_matrix(points, exponents):
    cols = [np.prod(points**np.asarray(e, dtype=float), axis=1) for e in exponents]
    return np.column_stack(cols)


def fit(active_inputs, outputs, degree):
    """Least-squares polynomial fit of the outputs over active inputs.

    Solved by SVD-based least squares; under-determined systems fall back
    to the minimum-norm solution with a warning.
    """
    x = np.asarray(active_inputs, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    y = np.asarray(outputs, dtype=float).reshape(-1)
    if len(x) != len(y):
        raise ValidationError("inputs and outputs must have equal length")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise ValidationError("non-finite values in regression data")
    if degree < 0:
        raise ValidationError("degree must be non-negative")
    exps = exponent_table(x.shape[1], degree)
    if len(y) < len(exps):
        warnings.warn(
            f"{len(y)} samples for {len(exps)} coefficients; using minimum-norm fit",
            stacklevel=2,
        )
    design = _design_matrix(x, exps)
    coefs, *_ = np.linalg.lstsq(design, y, rcond=None)
    return PolySurface(x.shape[1], degree, coefs)


def predict(surface, x):
    """Evaluate the surface at one M-vector or an (n, M) batch."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        x = x.reshape(1)
    single = x.ndim == 1
    pts = x[None, :] if single else x
    if pts.ndim != 2 or pts.shape[1] != surface.active_dim:
        raise ValidationError(
            f"surface expects {surface.active_dim}-vectors, got shape {x.shape}"
        )
    values = _design_matrix(pts, surface.exponents) @ surface.coefficients
    return float(values[0]) if single else values


def relative_rmse(surface, test_active, test_outputs):
    """Root-mean-square prediction error scaled by the output range."""
    y = np.asarray(test_outputs, dtype=float).reshape(-1)
    if len(y) < 2:
        raise ValidationError("need at least two test points")
    spread = float(y.max() - y.min())
    if spread <= 0.0:
        raise ValidationError("test outputs have zero range; relative error undefined")
    pred = predict(surface, np.asarray(test_active, dtype=float))
    return float(np.sqrt(np.mean((pred - y) ** 2))) / spread


@dataclass(frozen=True, eq=False)
class ErrorMatrix:
    """Mean relative test errors over (active dimension, degree) cells."""

    dims: tuple
    degrees: tuple
    values: np.ndarray
    repetitions: int

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != (len(self.dims), len(self.degrees)):
            raise ValidationError("error matrix shape must be (len(dims), len(degrees))")
        if not np.all(np.isfinite(values)) or np.any(values < 0.0):
            raise ValidationError("error matrix entries must be finite and non-negative")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        object.__setattr__(self, "degrees", tuple(int(d) for d in self.degrees))

    def cell(self, dim, degree):
        return float(self.values[self.dims.index(dim), self.degrees.index(degree)])


def error_matrix(
    samples,
    dims=(1, 2, 3),
    degrees=(1, 2, 3, 4),
    repetitions=20,
    split=0.8,
    seed=0,
    k_neighbors=14,
    gradient_fn=None,
):
    """Cross-validated surrogate error per (dimension, degree) cell.

    Each repetition reshuffles the train/test split, re-estimates the
    subspace from the training gradients (local linear models, or
    gradient_fn(normalized_inputs) when analytic gradients are available),
    projects, fits, and scores on the held-out rows; cells are averaged
    over the repetitions.
    """
    if samples.outputs is None:
        raise ValidationError("error_matrix needs evaluated samples")
    if not 0.0 < split < 1.0:
        raise ValidationError("split fraction must be in (0, 1)")
    if repetitions < 1:
        raise ValidationError("need at least one repetition")
    dims = tuple(int(d) for d in dims)
    degrees = tuple(int(d) for d in degrees)
    if max(dims) >= samples.dim:
        raise ValidationError("active dimension must stay below the input dimension")

    norm = normalize(samples)
    n = norm.n_samples
    n_train = int(round(split * n))
    if n_train < 2 or n - n_train < 2:
        raise ValidationError("split leaves too few rows for training or testing")
    largest = comb(max(dims) + max(degrees), max(degrees))
    if n_train < largest:
        raise ValidationError(
            f"{n_train} training rows cannot determine {largest} coefficients"
        )

    totals = np.zeros((len(dims), len(degrees)))
    for rep in range(repetitions):
        rng = np.random.default_rng((seed, rep))
        order = rng.permutation(n)
        train, test = order[:n_train], order[n_train:]
        train_set = norm.subset(train)
        if gradient_fn is not None:
            grads_matrix = np.asarray(gradient_fn(train_set.inputs), dtype=float)
            grads = GradientSet(grads_matrix, train)
        else:
            grads = local_linear_gradients(train_set, k=k_neighbors)
        sub = eigendecompose(covariance(grads))
        for i, dim in enumerate(dims):
            w1 = partition(sub, dim).W1
            x_train = train_set.inputs @ w1
            x_test = norm.inputs[test] @ w1
            for j, degree in enumerate(degrees):
                model = fit(x_train, train_set.outputs, degree)
                totals[i, j] += relative_rmse(model, x_test, norm.outputs[test])
    return ErrorMatrix(dims, degrees, totals / repetitions, repetitions)


def save_error_matrix(matrix, path, long_path=None):
    """Wide CSV (rows = dims, cols = degrees) plus optional long form."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["dim"] + [f"degree_{d}" for d in matrix.degrees])
        for i, dim in enumerate(matrix.dims):
            writer.writerow([dim] + [f"{v:.17g}" for v in matrix.values[i]])
    if long_path is not None:
        with open(long_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["dim", "degree", "error"])
            for i, dim in enumerate(matrix.dims):
                for j, degree in enumerate(matrix.degrees):
                    writer.writerow([dim, degree, f"{matrix.values[i, j]:.17g}"])


def sufficient_summary(subspace, samples):
    """Plot-ready (active coordinates, f) table for a partitioned subspace;
    samples must be normalized."""
    if samples.outputs is None:
        raise ValidationError("sufficient summary needs evaluated samples")
    active = samples.inputs @ subspace.W1
    return np.column_stack([active, samples.outputs])


def save_sufficient_summary(table, path):
    """CSV with one active_i column per active variable plus f."""
    table = np.asarray(table, dtype=float)
    n_active = table.shape[1] - 1
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"active_{j + 1}" for j in range(n_active)] + ["f"])
        for row in table:
            writer.writerow([f"{v:.17g}" for v in row])
