"""Command-line front end.

Subcommands mirror the pipeline stages; the dataset CSV is the interchange
format between them, so an external solver can replace any stage. Exit
codes: 0 success, 1 validation/usage error, 2 numerical failure.
"""

import argparse
import csv
import dataclasses
import json
import sys

import numpy as np

from . import ffd
from .errors import NumericalError, ValidationError
from .extrapolate import extrapolate_series, load_series, save_result
from .geometry import read_stl, write_stl
from .pipeline import (
    OracleSpec,
    StudyConfig,
    default_design_space,
    evaluate_oracle,
    load_design_space,
    load_oracle_spec,
    load_study_config,
    run_study,
    sample_designs,
)
from .subspace import (
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
    fit,
    relative_rmse,
    save_error_matrix,
    save_sufficient_summary,
    sufficient_summary,
)


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems as ValidationError (exit 1)."""

    def error(self, message):
        raise ValidationError(f"{message}\n{self.format_usage()}")


def _build_parser():
    parser = _Parser(prog="hullspace", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("deform", help="morph an STL hull")
    p.add_argument("--mesh", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--profile", help="lattice profile JSON (default: shipped profile)")
    p.add_argument(
        "--param",
        action="append",
        default=[],
        metavar="NAME=VALUE",
        help="set one geometric parameter; unset parameters stay 0",
    )
    p.add_argument("--ascii", action="store_true", help="write ASCII STL")

    p = sub.add_parser("sample", help="draw uniform designs")
    p.add_argument("--out", required=True)
    p.add_argument("--space", help="design space JSON (default: hull space)")
    p.add_argument("--count", type=int, default=130)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("evaluate", help="run an oracle on designs")
    p.add_argument("--designs", required=True)
    p.add_argument("--oracle", required=True, help="oracle spec JSON")
    p.add_argument("--out", required=True)
    p.add_argument("--mesh", help="hull STL (hydro-surrogate only)")
    p.add_argument("--profile")

    p = sub.add_parser(
        "fit-resistance", help="steady value of a series CSV"
    )
    p.add_argument("--series", required=True)
    p.add_argument("--window", type=int, default=5)
    p.add_argument("--out", help="write JSON with envelopes and steady value")

    p = sub.add_parser("subspace", help="estimate the active subspace")
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--k", type=int, default=14)
    p.add_argument("--dim", type=int, help="active dimension (default: suggested)")
    p.add_argument("--replicates", type=int, default=1000)
    p.add_argument("--interval", choices=("minmax", "percentile"), default="minmax")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--bootstrap-out", help="write interval CSV")

    p = sub.add_parser("surface", help="fit one response surface")
    p.add_argument("--dataset", required=True)
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--degree", type=int, required=True)
    p.add_argument("--split", type=float, default=0.8)
    p.add_argument("--k", type=int, default=14)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="write surface JSON")

    p = sub.add_parser("heatmap", help="dimension x degree error matrix")
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--long-out")
    p.add_argument("--dims", default="1,2,3")
    p.add_argument("--degrees", default="1,2,3,4")
    p.add_argument("--repetitions", type=int, default=20)
    p.add_argument("--split", type=float, default=0.8)
    p.add_argument("--k", type=int, default=14)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("ssp", help="sufficient summary CSVs")
    p.add_argument("--dataset", required=True)
    p.add_argument("--out-prefix", required=True)
    p.add_argument("--k", type=int, default=14)

    p = sub.add_parser("study", help="full pipeline run")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--config", help="study config JSON")
    p.add_argument("--space", help="design space JSON")
    p.add_argument("--oracle", help="oracle spec JSON (default: hydro surrogate)")
    p.add_argument("--mesh", help="hull STL")
    p.add_argument("--profile")
    p.add_argument("--seed", type=int, help="override the config seed")

    return parser


def _parse_params(pairs, profile):
    values = {b.name: 0.0 for b in profile.bindings}
    for pair in pairs:
        name, eq, text = pair.partition("=")
        if not eq:
            raise ValidationError(f"--param needs NAME=VALUE, got {pair!r}")
        if name not in values:
            raise ValidationError(
                f"unknown parameter {name!r}; profile defines {sorted(values)}"
            )
        values[name] = float(text)
    return tuple(values[b.name] for b in profile.bindings)


def _cmd_deform(args):
    profile = ffd.load_profile(args.profile) if args.profile else ffd.default_profile()
    params = ffd.GeoParams(_parse_params(args.param, profile), profile)
    mesh = read_stl(args.mesh)
    deformed = ffd.deform_mesh(ffd.hull_lattice(params), mesh)
    write_stl(deformed, args.out, binary=not args.ascii)
    print(f"wrote {args.out} ({deformed.n_triangles} facets)")


def _cmd_sample(args):
    space = load_design_space(args.space) if args.space else default_design_space()
    save_samples(sample_designs(space, args.count, args.seed), args.out)
    print(f"wrote {args.count} designs to {args.out}")


def _cmd_evaluate(args):
    spec = load_oracle_spec(args.oracle)
    designs = load_samples(args.designs)
    mesh = read_stl(args.mesh) if args.mesh else None
    profile = ffd.load_profile(args.profile) if args.profile else None
    samples, failures = evaluate_oracle(spec, designs, mesh=mesh, profile=profile)
    save_samples(samples, args.out)
    print(f"evaluated {samples.n_samples} rows ({len(failures)} failures) -> {args.out}")


def _cmd_fit_resistance(args):
    result = extrapolate_series(load_series(args.series), window=args.window)
    if args.out:
        save_result(result, args.out)
    print(f"steady value: {result.value:.10g}")
    for label, fitted in (("maxima", result.maxima_fit), ("minima", result.minima_fit)):
        if fitted is not None:
            print(
                f"{label} envelope: a={fitted.a:.6g} b={fitted.b:.6g} c={fitted.c:.6g} "
                f"(rms {fitted.residual_rms:.3g})"
            )


def _subspace_from_dataset(dataset_path, k):
    samples = load_samples(dataset_path)
    grads = local_linear_gradients(normalize(samples), k=k)
    return samples, grads, eigendecompose(covariance(grads))


def _cmd_subspace(args):
    _, grads, sub = _subspace_from_dataset(args.dataset, args.k)
    dim = args.dim if args.dim is not None else suggest_dim(sub.eigenvalues)
    save_subspace(partition(sub, dim), args.out)
    print("eigenvalues:", " ".join(f"{v:.6e}" for v in sub.eigenvalues))
    print(f"active dimension: {dim}")
    if args.replicates > 0:
        summary = bootstrap_eigenvalues(
            grads, replicates=args.replicates, seed=args.seed, method=args.interval
        )
        for i in range(sub.dim):
            print(
                f"lambda_{i + 1} in [{summary.lower[i]:.6e}, {summary.upper[i]:.6e}]"
            )
        if args.bootstrap_out:
            with open(args.bootstrap_out, "w", newline="") as fh:
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


def _cmd_surface(args):
    samples, _, sub = _subspace_from_dataset(args.dataset, args.k)
    norm = normalize(samples)
    n_train = int(round(args.split * norm.n_samples))
    order = np.random.default_rng(args.seed).permutation(norm.n_samples)
    w1 = partition(sub, args.dim).W1
    train, test = order[:n_train], order[n_train:]
    model = fit(norm.inputs[train] @ w1, norm.outputs[train], args.degree)
    err = relative_rmse(model, norm.inputs[test] @ w1, norm.outputs[test])
    print(f"relative test RMSE: {err:.6g}")
    if args.out:
        payload = {
            "active_dim": model.active_dim,
            "degree": model.degree,
            "coefficients": [float(c) for c in model.coefficients],
            "relative_test_rmse": err,
        }
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")


def _cmd_heatmap(args):
    samples = load_samples(args.dataset)
    matrix = error_matrix(
        samples,
        dims=tuple(int(v) for v in args.dims.split(",")),
        degrees=tuple(int(v) for v in args.degrees.split(",")),
        repetitions=args.repetitions,
        split=args.split,
        seed=args.seed,
        k_neighbors=args.k,
    )
    save_error_matrix(matrix, args.out, args.long_out)
    print(f"wrote {args.out}")


def _cmd_ssp(args):
    samples, _, sub = _subspace_from_dataset(args.dataset, args.k)
    norm = normalize(samples)
    for dim in (1, 2):
        if dim < norm.dim:
            path = f"{args.out_prefix}_{dim}d.csv"
            save_sufficient_summary(sufficient_summary(partition(sub, dim), norm), path)
            print(f"wrote {path}")


def _cmd_study(args):
    config = load_study_config(args.config) if args.config else StudyConfig()
    if args.seed is not None:
        config = dataclasses.replace(config, seed=args.seed)
    space = load_design_space(args.space) if args.space else default_design_space()
    oracle = load_oracle_spec(args.oracle) if args.oracle else OracleSpec("hydro-surrogate")
    mesh = read_stl(args.mesh) if args.mesh else None
    profile = ffd.load_profile(args.profile) if args.profile else None
    report = run_study(config, space, oracle, args.out_dir, mesh=mesh, profile=profile)
    print(f"study written to {args.out_dir}")
    print("eigenvalues:", " ".join(f"{v:.6e}" for v in report.eigenvalues))
    print(f"suggested active dimension: {report.suggested_dim}")


_COMMANDS = {
    "deform": _cmd_deform,
    "sample": _cmd_sample,
    "evaluate": _cmd_evaluate,
    "fit-resistance": _cmd_fit_resistance,
    "subspace": _cmd_subspace,
    "surface": _cmd_surface,
    "heatmap": _cmd_heatmap,
    "ssp": _cmd_ssp,
    "study": _cmd_study,
}


def cli(argv=None):
    """Run the CLI; returns the process exit code."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        _COMMANDS[args.command](args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # argparse -h
        return int(exc.code or 0)
    return 0


def main():
    sys.exit(cli())


if __name__ == "__main__":
    main()
