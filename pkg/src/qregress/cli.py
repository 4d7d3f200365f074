"""Command line harness.

Subcommands mirror the pipeline stages: ``decompose`` (spectrum and
eigenvalue pmf of an operator/state pair), ``sample`` (emit a dataset),
``fit`` (estimate the slope from a dataset), ``constants`` (moment
constants for a loss/error pair), ``mc`` (full Monte Carlo experiment)
and ``report`` (re-render a saved report). Exit codes: 0 success,
2 config validation failure, 3 numeric failure, 4 I/O failure.
"""

from __future__ import annotations

import argparse
import io
import json
import sys

from .asymptotics import estimate_constants
from .exceptions import IoFailure, NumericError, ValidationError
from .experiment import (
    ExperimentConfig,
    MonteCarloReport,
    report_to_csv_text,
    report_to_json_text,
    run_experiment,
)
from .losses import loss_from_spec
from .operators import (
    QuantumState,
    SymmetricOperator,
    commutator_norm,
    eigen_pmf,
    spectral_decompose,
)
from .rng import RngSeed, replication_streams
from .sampling import (
    apply_error,
    build_true_pair,
    error_model_from_spec,
    read_samples_csv,
    sample_eigen_pairs,
    samples_from_json,
    samples_to_csv_text,
    samples_to_json,
    samples_to_arrays,
)
from .solvers import RegressionData, estimate
from .version import __version__


def _read_text(path: str) -> str:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            return handle.read()
    except OSError as exc:
        raise IoFailure(f"could not read {path!r}: {exc}") from exc


def _read_json(path: str) -> dict:
    text = _read_text(path)
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path!r} is not valid JSON: {exc}") from exc


def _write_output(text: str, path: str | None) -> None:
    if path is None:
        sys.stdout.write(text)
        return
    try:
        with open(path, "w", encoding="utf-8") as handle:
            handle.write(text)
    except OSError as exc:
        raise IoFailure(f"could not write {path!r}: {exc}") from exc


def _json_text(doc) -> str:
    return json.dumps(doc, indent=2) + "\n"


def _cmd_decompose(args) -> None:
    operator = SymmetricOperator.from_json_dict(_read_json(args.operator))
    decomp = spectral_decompose(operator, args.cluster_tol)
    doc = decomp.to_json_dict()
    if args.state:
        state = QuantumState.from_json_dict(_read_json(args.state))
        pmf = eigen_pmf(state, decomp)
        doc["pmf"] = {"support": pmf.support.tolist(), "masses": pmf.masses.tolist()}
        doc["commutator_norm"] = commutator_norm(state, operator)
    _write_output(_json_text(doc), args.out)


def _cmd_sample(args) -> None:
    operator = SymmetricOperator.from_json_dict(_read_json(args.operator))
    state = QuantumState.from_json_dict(_read_json(args.state))
    pair = build_true_pair(operator, args.beta0)
    pmf = eigen_pmf(state, pair.decomposition)
    eigen_seed, error_seed = replication_streams(args.seed, args.rep)
    samples = sample_eigen_pairs(pmf, pair, args.n, eigen_seed)
    if args.error_model is not None:
        model = error_model_from_spec(args.error_model)
        samples = apply_error(samples, model, args.beta0, error_seed)
    if args.format == "csv":
        _write_output(samples_to_csv_text(samples), args.out)
    else:
        _write_output(_json_text(samples_to_json(samples)), args.out)


def _load_samples(path: str, fmt: str | None):
    if fmt is None:
        fmt = "json" if path.endswith(".json") else "csv"
    if fmt == "json":
        return samples_from_json(_read_json(path))
    return read_samples_csv(io.StringIO(_read_text(path)))


def _cmd_fit(args) -> None:
    samples = _load_samples(args.data, args.data_format)
    loss = loss_from_spec(args.loss)
    data = RegressionData(*samples_to_arrays(samples))
    result = estimate(loss, data, tol=args.tol, max_iter=args.max_iter)
    _write_output(_json_text(result.to_json_dict()), args.out)


def _cmd_constants(args) -> None:
    loss = loss_from_spec(args.loss)
    model = error_model_from_spec(args.error_model)
    constants = estimate_constants(
        loss, model, h=args.h, draws=args.draws, seed=RngSeed(args.seed)
    )
    _write_output(_json_text(constants.to_json_dict()), args.out)


def _config_with_overrides(args) -> ExperimentConfig:
    doc = _read_json(args.config)
    if not isinstance(doc, dict):
        raise ValidationError("experiment config must be a JSON object")
    if args.beta0 is not None:
        doc["beta0"] = args.beta0
    if args.loss is not None:
        doc["loss"] = args.loss
    if args.n is not None:
        try:
            doc["n_values"] = [int(part) for part in args.n.split(",") if part.strip()]
        except ValueError as exc:
            raise ValidationError(f"--n must be comma-separated integers: {exc}") from exc
    if args.reps is not None:
        doc["replications"] = args.reps
    if args.seed is not None:
        doc["base_seed"] = args.seed
    if args.out is not None:
        doc["output_path"] = args.out
    return ExperimentConfig.from_dict(doc)


def _cmd_mc(args) -> None:
    config = _config_with_overrides(args)
    report = run_experiment(config)
    text = report_to_csv_text(report) if args.format == "csv" else report_to_json_text(report)
    _write_output(text, config.output_path)


def _cmd_report(args) -> None:
    report = MonteCarloReport.from_json_dict(_read_json(args.report))
    text = report_to_csv_text(report) if args.format == "csv" else report_to_json_text(report)
    _write_output(text, args.out)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qregress",
        description="Monte Carlo laboratory for robust slope estimation "
        "on observable eigenvalue pairs.",
    )
    parser.add_argument("--version", action="version", version=f"qregress {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("decompose", help="spectrum and eigenvalue pmf of an operator")
    p.add_argument("--operator", required=True, help="operator JSON file {dim, entries}")
    p.add_argument("--state", help="state JSON file {dim, entries}")
    p.add_argument("--cluster-tol", type=float, default=None, dest="cluster_tol")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_decompose)

    p = sub.add_parser("sample", help="draw eigenvalue pairs, optionally with noise")
    p.add_argument("--operator", required=True)
    p.add_argument("--state", required=True)
    p.add_argument("--beta0", type=float, required=True)
    p.add_argument("--error-model", dest="error_model",
                   help="e.g. gaussian:1, laplace:2, student_t:5:1, "
                        "contaminated:1:10:0.1; omit for noiseless data")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0, help="base seed")
    p.add_argument("--rep", type=int, default=0, help="replication stream index")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_sample)

    p = sub.add_parser("fit", help="estimate the slope from a dataset")
    p.add_argument("--data", required=True, help="CSV or JSON sample file")
    p.add_argument("--data-format", choices=("csv", "json"), dest="data_format")
    p.add_argument("--loss", default="square",
                   help="square | absolute | huber[:c] | lq:q | quantile:alpha")
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--max-iter", type=int, default=200, dest="max_iter")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("constants", help="moment constants for a loss/error pair")
    p.add_argument("--loss", required=True)
    p.add_argument("--error-model", dest="error_model", required=True)
    p.add_argument("--draws", type=int, default=10**6)
    p.add_argument("--h", type=float, default=1e-3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_constants)

    p = sub.add_parser("mc", help="run a full Monte Carlo experiment")
    p.add_argument("--config", required=True, help="experiment config JSON file")
    p.add_argument("--beta0", type=float)
    p.add_argument("--loss")
    p.add_argument("--n", help="comma-separated sample sizes, e.g. 50,200,800")
    p.add_argument("--reps", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.set_defaults(func=_cmd_mc)

    p = sub.add_parser("report", help="re-render a saved report")
    p.add_argument("--report", required=True, help="report JSON file")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except ValidationError as exc:
        print(f"qregress: config error: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"qregress: numeric error: {exc}", file=sys.stderr)
        return 3
    except (IoFailure, OSError) as exc:
        print(f"qregress: i/o error: {exc}", file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
