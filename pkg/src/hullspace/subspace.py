"""Active-subspace estimation from input/output samples.

The workflow: normalize samples to [-1, 1]^m, approximate gradients with
local linear models over nearest neighbors, average the gradient outer
products into an uncentered covariance matrix, eigendecompose it, and read
the dominant directions off the leading eigenvectors. Bootstrap resampling
of the gradient rows quantifies the spread of the eigenvalues.

All gradient-based quantities live in the normalized coordinates: the raw
parameters mix units (lengths, kilograms, meters per second), so gradients
taken there would not be comparable across components.
"""

import csv
import json
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError


@dataclass(frozen=True, eq=False)
class SampleSet:
    """Paired parameter rows and scalar outputs over a box domain.

    inputs: (n, m) rows in physical units.
    box: (m, 2) lower/upper bounds; every row must lie inside.
    outputs: (n,) values, or None while the oracle has not run yet.
    """

    inputs: np.ndarray
    box: np.ndarray
    outputs: np.ndarray = None

    def __post_init__(self):
        inputs = np.asarray(self.inputs, dtype=float)
        if inputs.ndim != 2 or inputs.shape[0] < 1:
            raise ValidationError("inputs must be a non-empty (n, m) matrix")
        box = np.asarray(self.box, dtype=float).reshape(-1, 2)
        if box.shape[0] != inputs.shape[1]:
            raise ValidationError("box must provide one (lower, upper) pair per column")
        if not np.all(box[:, 0] < box[:, 1]):
            bad = int(np.nonzero(~(box[:, 0] < box[:, 1]))[0][0])
            raise ValidationError(f"degenerate bounds for coordinate {bad}")
        if np.any(inputs < box[:, 0]) or np.any(inputs > box[:, 1]):
            raise ValidationError("sample rows fall outside the box bounds")
        outputs = self.outputs
        if outputs is not None:
            outputs = np.asarray(outputs, dtype=float).reshape(-1)
            if len(outputs) != len(inputs):
                raise ValidationError("outputs length must match input rows")
            if not np.all(np.isfinite(outputs)):
                raise ValidationError("outputs contain non-finite values")
            outputs.flags.writeable = False
        if not np.all(np.isfinite(inputs)):
            raise ValidationError("inputs contain non-finite values")
        inputs.flags.writeable = False
        box.flags.writeable = False
        object.__setattr__(self, "inputs", inputs)
        object.__setattr__(self, "box", box)
        object.__setattr__(self, "outputs", outputs)

    @property
    def n_samples(self):
        return self.inputs.shape[0]

    @property
    def dim(self):
        return self.inputs.shape[1]

    def is_normalized(self):
        return bool(np.all(self.box[:, 0] == -1.0) and np.all(self.box[:, 1] == 1.0))

    def subset(self, indices):
        out = None if self.outputs is None else self.outputs[indices]
        return SampleSet(self.inputs[indices], self.box, out)

    def with_outputs(self, outputs):
        return SampleSet(self.inputs, self.box, outputs)


def normalize(samples):
    """Affine map of each coordinate onto [-1, 1]; outputs unchanged."""
    lower, upper = samples.box[:, 0], samples.box[:, 1]
    scaled = 2.0 * (samples.inputs - lower) / (upper - lower) - 1.0
    box = np.repeat([[-1.0, 1.0]], samples.dim, axis=0)
    return SampleSet(scaled, box, samples.outputs)


def denormalize(samples, box):
    """Undo normalize() against the original box."""
    box = np.asarray(box, dtype=float).reshape(-1, 2)
    lower, upper = box[:, 0], box[:, 1]
    raw = lower + 0.5 * (samples.inputs + 1.0) * (upper - lower)
    return SampleSet(raw, box, samples.outputs)


@dataclass(frozen=True, eq=False)
class GradientSet:
    """Gradient rows (normalized coordinates) and the sample index each
    row was evaluated at."""

    gradients: np.ndarray
    source_indices: np.ndarray

    def __post_init__(self):
        grads = np.asarray(self.gradients, dtype=float)
        if grads.ndim != 2:
            raise ValidationError("gradients must be a (n, m) matrix")
        if not np.all(np.isfinite(grads)):
            raise ValidationError("gradients contain non-finite entries")
        src = np.asarray(self.source_indices, dtype=np.int64).reshape(-1)
        if len(src) != len(grads):
            raise ValidationError("one source index per gradient row required")
        grads.flags.writeable = False
        src.flags.writeable = False
        object.__setattr__(self, "gradients", grads)
        object.__setattr__(self, "source_indices", src)

    @property
    def n_rows(self):
        return self.gradients.shape[0]

    @property
    def dim(self):
        return self.gradients.shape[1]


def local_linear_gradients(samples, k=14, eval_indices=None):
    """Approximate gradients by least-squares linear fits, one per
    evaluation point, over the point itself plus its k nearest neighbors
    (k+1 fit points, hence the N >= k+1 requirement).

    Ties in the neighbor distances break toward smaller sample index.
    Rank-deficient neighborhoods are solved in the minimum-norm sense;
    neighborhoods with fewer than m+1 distinct positions are dropped with
    a warning.
    """
    if samples.outputs is None:
        raise ValidationError("samples need outputs before gradients can be estimated")
    if not samples.is_normalized():
        warnings.warn("estimating gradients on un-normalized samples", stacklevel=2)
    n, m = samples.n_samples, samples.dim
    if k < 2:
        raise ValidationError("need at least 2 neighbors")
    if n < k + 1:
        raise ValidationError(f"need at least k+1={k + 1} samples, got {n}")
    if k < m + 1:
        warnings.warn(
            f"k={k} below dimension+1={m + 1}; gradients will be rank-deficient",
            stacklevel=2,
        )
    if eval_indices is None:
        eval_indices = np.arange(n)

    x = samples.inputs
    f = samples.outputs
    rows, sources = [], []
    for i in eval_indices:
        d2 = np.sum((x - x[i]) ** 2, axis=1)
        neighbors = np.argsort(d2, kind="stable")[: k + 1]
        pts = x[neighbors]
        # Coincident samples can starve the fit of information; a merely
        # small k still proceeds via the minimum-norm solution.
        if len(np.unique(pts, axis=0)) < min(k + 1, m + 1):
            warnings.warn(
                f"sample {i}: fewer than {min(k + 1, m + 1)} distinct neighbor "
                "positions; skipped",
                stacklevel=2,
            )
            continue
        design = np.column_stack([np.ones(len(neighbors)), pts])
        coef, *_ = np.linalg.lstsq(design, f[neighbors], rcond=None)
        rows.append(coef[1:])
        sources.append(i)
    if not rows:
        raise ValidationError("no usable gradient rows; all neighborhoods degenerate")
    return GradientSet(np.asarray(rows), np.asarray(sources))


def covariance(grads):
    """Uncentered covariance of the gradients: mean of outer products."""
    if grads.n_rows == 0:
        raise ValidationError("empty gradient set")
    g = grads.gradients
    return (g.T @ g) / grads.n_rows


@dataclass(frozen=True, eq=False)
class ActiveSubspace:
    """Eigendecomposition of the gradient covariance.

    eigenvalues: descending, non-negative.
    eigenvectors: orthonormal columns; the largest-magnitude component of
        each column is made positive so results are reproducible.
    active_dim: set by partition(); W1/W2 are the column split there.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    active_dim: int = None

    def __post_init__(self):
        lam = np.asarray(self.eigenvalues, dtype=float).reshape(-1)
        vec = np.asarray(self.eigenvectors, dtype=float)
        m = len(lam)
        if vec.shape != (m, m):
            raise ValidationError("eigenvector matrix must be m x m")
        if np.any(np.diff(lam) > 0.0):
            raise ValidationError("eigenvalues must be sorted descending")
        if np.any(lam < 0.0):
            raise ValidationError("eigenvalues must be non-negative (clip tiny negatives)")
        if np.max(np.abs(vec.T @ vec - np.eye(m))) > 1e-10:
            raise ValidationError("eigenvectors are not orthonormal")
        if self.active_dim is not None and not 1 <= self.active_dim < m:
            raise ValidationError(f"active_dim must be in [1, {m - 1}]")
        lam.flags.writeable = False
        vec.flags.writeable = False
        object.__setattr__(self, "eigenvalues", lam)
        object.__setattr__(self, "eigenvectors", vec)

    @property
    def dim(self):
        return len(self.eigenvalues)

    @property
    def W1(self):
        if self.active_dim is None:
            raise ValidationError("partition the subspace before using W1")
        return self.eigenvectors[:, : self.active_dim]

    @property
    def W2(self):
        if self.active_dim is None:
            raise ValidationError("partition the subspace before using W2")
        return self.eigenvectors[:, self.active_dim :]


def _sign_convention(vectors):
    """Flip columns so each one's largest-magnitude entry is positive."""
    out = np.array(vectors)
    for j in range(out.shape[1]):
        k = int(np.argmax(np.abs(out[:, j])))
        if out[k, j] < 0.0:
            out[:, j] = -out[:, j]
    return out


def eigendecompose(sigma):
    """Spectral decomposition of a symmetric PSD matrix, descending order.

    Symmetrizes by averaging if the input is asymmetric beyond 1e-10.
    Eigenvalues within round-off below zero are clipped to zero.
    """
    sigma = np.asarray(sigma, dtype=float)
    if not np.all(np.isfinite(sigma)):
        raise ValidationError("covariance contains non-finite entries")
    if sigma.ndim != 2 or sigma.shape[0] != sigma.shape[1]:
        raise ValidationError("covariance must be square")
    if np.max(np.abs(sigma - sigma.T)) > 1e-10 * max(1.0, np.max(np.abs(sigma))):
        warnings.warn("covariance asymmetric beyond tolerance; symmetrizing", stacklevel=2)
    sym = 0.5 * (sigma + sigma.T)
    lam, vec = np.linalg.eigh(sym)
    order = np.argsort(-lam, kind="stable")  # stable: ties keep eigh's order
    lam, vec = lam[order], vec[:, order]
    floor = -1e-12 * max(1.0, float(lam[0]) if lam.size else 1.0)
    if np.any(lam < floor):
        raise ValidationError("matrix has a significantly negative eigenvalue; not PSD")
    lam = np.clip(lam, 0.0, None)
    return ActiveSubspace(lam, _sign_convention(vec))


def partition(subspace, active_dim):
    """Split the eigenvector columns into W1 (first M) and W2 (rest)."""
    if not 1 <= active_dim < subspace.dim:
        raise ValidationError(
            f"active dimension must be in [1, {subspace.dim - 1}], got {active_dim}"
        )
    return ActiveSubspace(subspace.eigenvalues, subspace.eigenvectors, int(active_dim))


def suggest_dim(eigenvalues):
    """Dimension with the largest gap ratio lambda_M / lambda_{M+1}.

    Ties break toward the smaller dimension. Zero trailing eigenvalues
    count as an infinite gap at the last positive index.
    """
    lam = np.clip(np.asarray(eigenvalues, dtype=float).reshape(-1), 0.0, None)
    if len(lam) < 2:
        raise ValidationError("need at least two eigenvalues")
    if lam[0] <= 0.0:
        raise ValidationError("all eigenvalues are zero; no active direction")
    head, tail = lam[:-1], lam[1:]
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(tail > 0.0, head / tail, np.where(head > 0.0, np.inf, 0.0))
    return int(np.argmax(ratios)) + 1


def project(subspace, mu):
    """Coordinates (W1^T mu, W2^T mu) of points in the eigenvector basis.

    Accepts a single m-vector or an (n, m) batch.
    """
    mu = np.asarray(mu, dtype=float)
    single = mu.ndim == 1
    pts = mu.reshape(-1, subspace.dim) if not single else mu.reshape(1, -1)
    if pts.shape[1] != subspace.dim:
        raise ValidationError(f"points must have {subspace.dim} components")
    active = pts @ subspace.W1
    inactive = pts @ subspace.W2
    if single:
        return active[0], inactive[0]
    return active, inactive


@dataclass(frozen=True, eq=False)
class BootstrapSummary:
    """Eigenvalue interval bounds across bootstrap replicates."""

    replicates: int
    lower: np.ndarray
    upper: np.ndarray
    method: str = "minmax"
    subspace_distances: np.ndarray = None

    def __post_init__(self):
        lower = np.asarray(self.lower, dtype=float).reshape(-1)
        upper = np.asarray(self.upper, dtype=float).reshape(-1)
        if len(lower) != len(upper) or np.any(lower > upper):
            raise ValidationError("interval bounds must satisfy lower <= upper")
        lower.flags.writeable = False
        upper.flags.writeable = False
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        if self.subspace_distances is not None:
            dist = np.asarray(self.subspace_distances, dtype=float).reshape(-1)
            dist.flags.writeable = False
            object.__setattr__(self, "subspace_distances", dist)


def bootstrap_eigenvalues(grads, replicates=1000, seed=0, method="minmax"):
    """Resample gradient rows with replacement and track the eigenvalue
    spread; intervals are min/max by default, 2.5/97.5 percentiles with
    method="percentile".

    Replicate r draws from its own generator seeded by (seed, r), so the
    result is independent of evaluation order.
    """
    if method not in ("minmax", "percentile"):
        raise ValidationError(f"unknown interval method {method!r}")
    if grads.n_rows < 2:
        raise ValidationError("bootstrap needs at least two gradient rows")
    if replicates < 1:
        raise ValidationError("need at least one replicate")
    point = eigendecompose(covariance(grads))
    n, m = grads.n_rows, grads.dim
    lam_reps = np.empty((replicates, m))
    dist_sums = np.zeros(m - 1)
    for r in range(replicates):
        rng = np.random.default_rng((seed, r))
        rows = grads.gradients[rng.integers(0, n, n)]
        rep = eigendecompose((rows.T @ rows) / n)
        lam_reps[r] = rep.eigenvalues
        for dim in range(1, m):
            w1, w1_rep = point.eigenvectors[:, :dim], rep.eigenvectors[:, :dim]
            dist_sums[dim - 1] += np.linalg.norm(w1 @ w1.T - w1_rep @ w1_rep.T, ord=2)
    if method == "minmax":
        lower, upper = lam_reps.min(axis=0), lam_reps.max(axis=0)
    else:
        lower = np.percentile(lam_reps, 2.5, axis=0)
        upper = np.percentile(lam_reps, 97.5, axis=0)
    return BootstrapSummary(
        replicates=replicates,
        lower=lower,
        upper=upper,
        method=method,
        subspace_distances=dist_sums / replicates,
    )


# ---------------------------------------------------------------------------
# persistence

def save_samples(samples, path):
    """Dataset CSV with header mu_1..mu_m,f plus a JSON bounds sidecar."""
    m = samples.dim
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"mu_{j + 1}" for j in range(m)] + ["f"])
        for i in range(samples.n_samples):
            row = [f"{v:.17g}" for v in samples.inputs[i]]
            row.append("" if samples.outputs is None else f"{samples.outputs[i]:.17g}")
            writer.writerow(row)
    meta = {
        "lower": [float(v) for v in samples.box[:, 0]],
        "upper": [float(v) for v in samples.box[:, 1]],
    }
    with open(_sidecar_path(path), "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_samples(path):
    """Inverse of save_samples."""
    with open(_sidecar_path(path), "r", encoding="utf-8") as fh:
        meta = json.load(fh)
    box = np.column_stack([meta["lower"], meta["upper"]])
    inputs, outputs, has_outputs = [], [], False
    with open(path, "r", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ValidationError(f"{path}: empty dataset")
        m = len(header) - 1
        for row in reader:
            if not row:
                continue
            if len(row) != m + 1:
                raise ValidationError(f"{path}: row with {len(row)} fields, expected {m + 1}")
            inputs.append([float(v) for v in row[:m]])
            if row[m] != "":
                has_outputs = True
                outputs.append(float(row[m]))
    return SampleSet(np.asarray(inputs), box, np.asarray(outputs) if has_outputs else None)


def _sidecar_path(path):
    return f"{path}.meta.json"


def save_subspace(subspace, path):
    """JSON export: eigenvalues, eigenvector columns, chosen dimension."""
    payload = {
        "eigenvalues": [float(v) for v in subspace.eigenvalues],
        "eigenvectors": [
            [float(v) for v in subspace.eigenvectors[:, j]] for j in range(subspace.dim)
        ],
        "active_dim": subspace.active_dim,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_subspace(path):
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    vectors = np.asarray(payload["eigenvectors"], dtype=float).T
    return ActiveSubspace(
        np.asarray(payload["eigenvalues"], dtype=float), vectors, payload.get("active_dim")
    )
