"""End-to-end orchestration: sample the design space, evaluate an oracle,
estimate the active subspace, fit response surfaces, export plot-ready
artifacts.

The expensive flow solver is replaced by pluggable oracles: analytic test
functions (with exact gradients available), a hydrostatics+friction
surrogate on a deformable hull mesh, or a lookup table produced by an
external solver. Every artifact a study writes is deterministic under a
fixed seed.
"""

import csv
import json
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import ffd
from .errors import HullspaceError, ValidationError
from .geometry import FlowConstants, froude, hydrostatic_equilibrium, viscous_drag
from .subspace import (
    GradientSet,
    SampleSet,
    bootstrap_eigenvalues,
    covariance,
    eigendecompose,
    load_samples,
    local_linear_gradients,
    normalize,
    partition,
    save_samples,
    save_subspace,
    suggest_dim,
)
from .surface import (
    error_matrix,
    save_error_matrix,
    save_sufficient_summary,
    sufficient_summary,
)

log = logging.getLogger(__name__)

#: Default wave-term coefficient of the hydro surrogate. The Fr^4 term is a
#: smooth, physically plausible stand-in, not a validated resistance model.
DEFAULT_K_WAVE = 0.05

_SPLIT_STREAM = 104729  # sub-stream tag for the train/test shuffle


@dataclass(frozen=True, eq=False)
class DesignSpace:
    """Named, bounded parameters; a mask marks the ones that deform the
    hull geometry."""

    names: tuple
    bounds: np.ndarray
    geometric_mask: tuple = None

    def __post_init__(self):
        bounds = np.asarray(self.bounds, dtype=float).reshape(-1, 2)
        names = tuple(str(n) for n in self.names)
        if len(names) != len(bounds):
            raise ValidationError("one name per bounds pair required")
        if not np.all(bounds[:, 0] < bounds[:, 1]):
            raise ValidationError("every lower bound must be below its upper bound")
        mask = self.geometric_mask
        if mask is None:
            mask = tuple(range(min(6, len(names))))
        mask = tuple(int(i) for i in mask)
        if any(i < 0 or i >= len(names) for i in mask):
            raise ValidationError("geometric mask index out of range")
        bounds.flags.writeable = False
        object.__setattr__(self, "names", names)
        object.__setattr__(self, "bounds", bounds)
        object.__setattr__(self, "geometric_mask", mask)

    @property
    def dim(self):
        return len(self.names)


def default_design_space():
    """The eight-parameter hull space: six lattice displacements, the hull
    weight in kg, and the cruise speed in m/s."""
    profile = ffd.default_profile()
    names = list(profile.parameter_names) + ["weight", "velocity"]
    bounds = [[b.lower, b.upper] for b in profile.bindings]
    bounds += [[500.0, 800.0], [1.87, 2.70]]
    return DesignSpace(tuple(names), np.asarray(bounds), tuple(range(len(profile.bindings))))


def save_design_space(space, path):
    payload = {
        "names": list(space.names),
        "bounds": [[float(lo), float(hi)] for lo, hi in space.bounds],
        "geometric_mask": list(space.geometric_mask),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_design_space(path):
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    try:
        return DesignSpace(
            tuple(payload["names"]),
            np.asarray(payload["bounds"], dtype=float),
            tuple(payload["geometric_mask"]) if "geometric_mask" in payload else None,
        )
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"malformed design space file: {exc!r}") from exc


def sample_designs(space, n, seed=0):
    """n rows, i.i.d. uniform per coordinate, deterministic under seed."""
    if n < 1:
        raise ValidationError("need at least one design")
    rng = np.random.default_rng(seed)
    rows = rng.uniform(space.bounds[:, 0], space.bounds[:, 1], size=(n, space.dim))
    return SampleSet(rows, space.bounds)


@dataclass(frozen=True, eq=False)
class OracleSpec:
    """Which stand-in produces f for a design row.

    kinds:
      analytic-ridge      f = h(a . mu_norm), h a univariate polynomial
                          given by `coefficients` (constant term first)
      analytic-quadratic  f = sum w_i (a_i . mu_norm)^2 over `terms`
      hydro-surrogate     deform hull, settle it, friction + wave term
      external-table      outputs looked up from a dataset CSV

    Analytic oracles act on normalized coordinates and expose exact
    gradients there. For the hydro surrogate, geo_indices select the
    lattice parameters and weight_index / speed_index the physical ones.
    """

    kind: str
    direction: np.ndarray = None
    coefficients: tuple = (0.0, 1.0, 0.0, 1.0)
    terms: tuple = None
    k_wave: float = DEFAULT_K_WAVE
    constants: FlowConstants = field(default_factory=FlowConstants)
    table_path: str = None
    geo_indices: tuple = (0, 1, 2, 3, 4, 5)
    weight_index: int = 6
    speed_index: int = 7

    def __post_init__(self):
        if self.kind not in (
            "analytic-ridge",
            "analytic-quadratic",
            "hydro-surrogate",
            "external-table",
        ):
            raise ValidationError(f"unknown oracle kind {self.kind!r}")
        if self.kind == "analytic-ridge":
            if self.direction is None:
                raise ValidationError("analytic-ridge needs a direction vector")
            direction = np.asarray(self.direction, dtype=float).reshape(-1)
            if np.linalg.norm(direction) == 0.0:
                raise ValidationError("ridge direction must be non-zero")
            direction.flags.writeable = False
            object.__setattr__(self, "direction", direction)
            object.__setattr__(self, "coefficients", tuple(float(c) for c in self.coefficients))
        if self.kind == "analytic-quadratic":
            if not self.terms:
                raise ValidationError("analytic-quadratic needs (weight, direction) terms")
            terms = []
            for w, d in self.terms:
                d = np.asarray(d, dtype=float).reshape(-1)
                if np.linalg.norm(d) == 0.0:
                    raise ValidationError("quadratic term direction must be non-zero")
                d.flags.writeable = False
                terms.append((float(w), d))
            object.__setattr__(self, "terms", tuple(terms))
        if self.kind == "external-table" and not self.table_path:
            raise ValidationError("external-table needs a table path")


def save_oracle_spec(spec, path):
    payload = {"kind": spec.kind}
    if spec.kind == "analytic-ridge":
        payload["direction"] = [float(v) for v in spec.direction]
        payload["coefficients"] = list(spec.coefficients)
    elif spec.kind == "analytic-quadratic":
        payload["terms"] = [
            {"weight": w, "direction": [float(v) for v in d]} for w, d in spec.terms
        ]
    elif spec.kind == "hydro-surrogate":
        payload["k_wave"] = spec.k_wave
        payload["constants"] = {
            "rho": spec.constants.rho,
            "g": spec.constants.g,
            "nu": spec.constants.nu,
            "Lref": spec.constants.Lref,
        }
        payload["geo_indices"] = list(spec.geo_indices)
        payload["weight_index"] = spec.weight_index
        payload["speed_index"] = spec.speed_index
    elif spec.kind == "external-table":
        payload["table_path"] = spec.table_path
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_oracle_spec(path):
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    kind = payload.get("kind")
    try:
        if kind == "analytic-ridge":
            return OracleSpec(
                kind,
                direction=np.asarray(payload["direction"], dtype=float),
                coefficients=tuple(payload.get("coefficients", (0.0, 1.0, 0.0, 1.0))),
            )
        if kind == "analytic-quadratic":
            terms = tuple(
                (t["weight"], np.asarray(t["direction"], dtype=float))
                for t in payload["terms"]
            )
            return OracleSpec(kind, terms=terms)
        if kind == "hydro-surrogate":
            consts = payload.get("constants", {})
            return OracleSpec(
                kind,
                k_wave=payload.get("k_wave", DEFAULT_K_WAVE),
                constants=FlowConstants(**consts),
                geo_indices=tuple(payload.get("geo_indices", (0, 1, 2, 3, 4, 5))),
                weight_index=payload.get("weight_index", 6),
                speed_index=payload.get("speed_index", 7),
            )
        if kind == "external-table":
            return OracleSpec(kind, table_path=payload["table_path"])
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"malformed oracle file: {exc!r}") from exc
    raise ValidationError(f"unknown oracle kind {kind!r}")


def _ridge_eval(spec, z):
    s = z @ spec.direction
    f = np.zeros_like(s)
    for power, coef in enumerate(spec.coefficients):
        if coef:
            f += coef * s**power
    return f


def _ridge_gradient(spec, z):
    s = z @ spec.direction
    ds = np.zeros_like(s)
    for power, coef in enumerate(spec.coefficients):
        if power >= 1 and coef:
            ds += power * coef * s ** (power - 1)
    return ds[:, None] * spec.direction


def _quadratic_eval(spec, z):
    f = np.zeros(len(z))
    for w, d in spec.terms:
        f += w * (z @ d) ** 2
    return f


def _quadratic_gradient(spec, z):
    g = np.zeros_like(z)
    for w, d in spec.terms:
        g += 2.0 * w * (z @ d)[:, None] * d
    return g


def oracle_gradient_fn(spec):
    """Exact gradient (normalized coordinates) for analytic oracles, else
    None."""
    if spec.kind == "analytic-ridge":
        return lambda z: _ridge_gradient(spec, np.asarray(z, dtype=float))
    if spec.kind == "analytic-quadratic":
        return lambda z: _quadratic_gradient(spec, np.asarray(z, dtype=float))
    return None


def hydro_resistance(design, spec, mesh, profile):
    """Hydro-surrogate resistance for one design row (physical units).

    Deform the hull with the lattice parameters, settle it at the given
    weight, then R = friction(ITTC-57 on the wetted skin) plus the
    k_wave * rho * g * V_sub * Fr^4 wave term.
    """
    geo = [design[i] for i in spec.geo_indices]
    weight = float(design[spec.weight_index])
    speed = float(design[spec.speed_index])
    lattice = ffd.hull_lattice(ffd.GeoParams(tuple(geo), profile))
    deformed = ffd.deform_mesh(lattice, mesh)
    state = hydrostatic_equilibrium(deformed, weight, spec.constants)
    friction = viscous_drag(speed, state.wetted_area, spec.constants)
    wave = (
        spec.k_wave
        * spec.constants.rho
        * spec.constants.g
        * state.submerged_volume
        * froude(speed, spec.constants) ** 4
    )
    return friction + wave


def _table_outputs(spec, designs):
    table = load_samples(spec.table_path)
    if table.outputs is None:
        raise ValidationError(f"{spec.table_path}: table has no output column")
    lookup = {tuple(row): i for i, row in enumerate(table.inputs)}
    outputs = np.empty(designs.n_samples)
    missing = []
    for i, row in enumerate(designs.inputs):
        j = lookup.get(tuple(row))
        if j is None:
            missing.append(i)
        else:
            outputs[i] = table.outputs[j]
    if missing:
        shown = ", ".join(str(i) for i in missing[:10])
        raise ValidationError(
            f"external table misses {len(missing)} design rows (indices {shown}"
            + (", ..." if len(missing) > 10 else ")")
        )
    return outputs


def evaluate_oracle(spec, designs, mesh=None, profile=None):
    """Fill outputs for every design row.

    Returns (samples, failures): rows whose evaluation raised are dropped
    from the sample set and reported as (row index, message) pairs; the
    run keeps going.
    """
    failures = []
    if spec.kind in ("analytic-ridge", "analytic-quadratic"):
        z = normalize(designs).inputs
        if spec.kind == "analytic-ridge":
            outputs = _ridge_eval(spec, z)
        else:
            outputs = _quadratic_eval(spec, z)
        return designs.with_outputs(outputs), failures
    if spec.kind == "external-table":
        return designs.with_outputs(_table_outputs(spec, designs)), failures
    # hydro-surrogate
    if mesh is None:
        raise ValidationError("hydro-surrogate oracle needs a hull mesh")
    if profile is None:
        profile = ffd.default_profile()
    outputs = np.empty(designs.n_samples)
    ok = np.ones(designs.n_samples, dtype=bool)
    for i, row in enumerate(designs.inputs):
        try:
            outputs[i] = hydro_resistance(row, spec, mesh, profile)
        except HullspaceError as exc:
            ok[i] = False
            failures.append((i, str(exc)))
            log.warning("design row %d failed: %s", i, exc)
    kept = designs.subset(np.nonzero(ok)[0]).with_outputs(outputs[ok])
    return kept, failures


@dataclass(frozen=True)
class StudyConfig:
    """Knobs of a full study; defaults follow the reference procedure
    (130 samples, 80/20 split, 14 neighbors, 1000 bootstrap replicates,
    20 error-matrix repetitions over dimensions 1..3, degrees 1..4)."""

    seed: int = 0
    sample_count: int = 130
    split: float = 0.8
    k_neighbors: int = 14
    bootstrap_replicates: int = 1000
    dims: tuple = (1, 2, 3)
    degrees: tuple = (1, 2, 3, 4)
    repetitions: int = 20
    gradients: str = "local-linear"  # or "exact" for analytic oracles
    interval: str = "minmax"  # or "percentile"

    def __post_init__(self):
        if self.sample_count < 2:
            raise ValidationError("sample_count must be at least 2")
        if not 0.0 < self.split < 1.0:
            raise ValidationError("split must lie in (0, 1)")
        for name in ("k_neighbors", "bootstrap_replicates", "repetitions"):
            if getattr(self, name) < 1:
                raise ValidationError(f"{name} must be positive")
        if self.gradients not in ("local-linear", "exact"):
            raise ValidationError("gradients must be 'local-linear' or 'exact'")
        if self.interval not in ("minmax", "percentile"):
            raise ValidationError("interval must be 'minmax' or 'percentile'")
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        object.__setattr__(self, "degrees", tuple(int(d) for d in self.degrees))


def load_study_config(path):
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    try:
        return StudyConfig(**payload)
    except TypeError as exc:
        raise ValidationError(f"malformed study config: {exc}") from exc


@dataclass(frozen=True, eq=False)
class StudyReport:
    """In-memory summary mirror of the files a study writes."""

    eigenvalues: np.ndarray
    gaps: np.ndarray
    suggested_dim: int
    bootstrap_lower: np.ndarray
    bootstrap_upper: np.ndarray
    error_matrix: object
    n_samples: int
    n_failures: int
    oracle_seconds_per_row: float


def run_study(config, space, oracle, out_dir, mesh=None, profile=None):
    """Full pipeline run; writes all artifacts into out_dir.

    Artifacts: dataset.csv (+ .meta.json sidecar), subspace.json,
    bootstrap.csv, ssp_1d.csv, ssp_2d.csv, error_matrix.csv,
    error_matrix_long.csv, report.json and report.txt, plus failures.csv
    when oracle rows failed. All CSV/JSON content is byte-deterministic
    under a fixed seed; wall-clock latency appears only in report.txt.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    if config.sample_count < config.k_neighbors + 1:
        raise ValidationError("sample_count must exceed k_neighbors")
    gradient_fn = oracle_gradient_fn(oracle)
    if config.gradients == "exact" and gradient_fn is None:
        raise ValidationError(f"oracle kind {oracle.kind!r} has no exact gradients")

    designs = sample_designs(space, config.sample_count, config.seed)
    t0 = time.perf_counter()
    dataset, failures = evaluate_oracle(oracle, designs, mesh=mesh, profile=profile)
    per_row = (time.perf_counter() - t0) / max(1, designs.n_samples)
    save_samples(dataset, out / "dataset.csv")
    if failures:
        with open(out / "failures.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["row", "message"])
            writer.writerows(failures)

    norm = normalize(dataset)
    n = norm.n_samples
    n_train = int(round(config.split * n))
    order = np.random.default_rng((config.seed, _SPLIT_STREAM)).permutation(n)
    train = norm.subset(order[:n_train])

    if config.gradients == "exact":
        grads = GradientSet(gradient_fn(train.inputs), order[:n_train])
    else:
        grads = local_linear_gradients(train, k=config.k_neighbors)
    sub = eigendecompose(covariance(grads))
    suggested = suggest_dim(sub.eigenvalues)
    save_subspace(partition(sub, suggested), out / "subspace.json")

    summary = bootstrap_eigenvalues(
        grads,
        replicates=config.bootstrap_replicates,
        seed=config.seed,
        method=config.interval,
    )
    with open(out / "bootstrap.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "lower", "estimate", "upper"])
        for i in range(sub.dim):
            writer.writerow(
                [
                    i + 1,
                    f"{summary.lower[i]:.17g}",
                    f"{sub.eigenvalues[i]:.17g}",
                    f"{summary.upper[i]:.17g}",
                ]
            )

    for dim, name in ((1, "ssp_1d.csv"), (2, "ssp_2d.csv")):
        if dim < norm.dim:
            table = sufficient_summary(partition(sub, dim), train)
            save_sufficient_summary(table, out / name)

    matrix = error_matrix(
        dataset,
        dims=config.dims,
        degrees=config.degrees,
        repetitions=config.repetitions,
        split=config.split,
        seed=config.seed,
        k_neighbors=config.k_neighbors,
        gradient_fn=gradient_fn if config.gradients == "exact" else None,
    )
    save_error_matrix(matrix, out / "error_matrix.csv", out / "error_matrix_long.csv")

    lam = sub.eigenvalues
    gaps = lam[:-1] / np.where(lam[1:] > 0.0, lam[1:], np.nan)
    report = StudyReport(
        eigenvalues=lam,
        gaps=gaps,
        suggested_dim=suggested,
        bootstrap_lower=summary.lower,
        bootstrap_upper=summary.upper,
        error_matrix=matrix,
        n_samples=dataset.n_samples,
        n_failures=len(failures),
        oracle_seconds_per_row=per_row,
    )
    _write_reports(report, config, out)
    return report


def _write_reports(report, config, out):
    payload = {
        "eigenvalues": [float(v) for v in report.eigenvalues],
        "gap_ratios": [None if np.isnan(v) else float(v) for v in report.gaps],
        "suggested_dim": report.suggested_dim,
        "bootstrap_lower": [float(v) for v in report.bootstrap_lower],
        "bootstrap_upper": [float(v) for v in report.bootstrap_upper],
        "error_matrix": {
            "dims": list(report.error_matrix.dims),
            "degrees": list(report.error_matrix.degrees),
            "values": [[float(v) for v in row] for row in report.error_matrix.values],
            "repetitions": report.error_matrix.repetitions,
        },
        "n_samples": report.n_samples,
        "n_failures": report.n_failures,
        "seed": config.seed,
    }
    with open(out / "report.json", "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")

    lines = ["study report", "============", ""]
    lines.append(f"samples: {report.n_samples} (failures: {report.n_failures})")
    lines.append(f"seed: {config.seed}")
    lines.append("")
    lines.append("eigenvalues (descending) and gap to the next:")
    for i, lam in enumerate(report.eigenvalues):
        if i < len(report.gaps) and np.isfinite(report.gaps[i]):
            lines.append(f"  lambda_{i + 1} = {lam:.6e}   gap x{report.gaps[i]:.3g}")
        else:
            lines.append(f"  lambda_{i + 1} = {lam:.6e}")
    lines.append("")
    lines.append(f"suggested active dimension: {report.suggested_dim}")
    lines.append("")
    lines.append("bootstrap eigenvalue intervals:")
    for i in range(len(report.eigenvalues)):
        lines.append(
            f"  lambda_{i + 1} in [{report.bootstrap_lower[i]:.6e}, "
            f"{report.bootstrap_upper[i]:.6e}]"
        )
    lines.append("")
    lines.append("mean relative test error (rows = active dim, cols = degree):")
    header = "  dim \\ deg " + "".join(f"{d:>12d}" for d in report.error_matrix.degrees)
    lines.append(header)
    for i, dim in enumerate(report.error_matrix.dims):
        row = "".join(f"{v:>12.4e}" for v in report.error_matrix.values[i])
        lines.append(f"  {dim:>9d} {row}")
    lines.append("")
    # Timing stays out of the CSV/JSON artifacts so they remain
    # byte-identical across runs.
    lines.append(f"oracle latency: {report.oracle_seconds_per_row * 1e3:.3f} ms/row")
    with open(out / "report.txt", "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
