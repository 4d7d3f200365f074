"""Configuration-driven Monte Carlo experiments.

One experiment fixes an observable/state pair, a true slope, a loss,
and an error law, then for each requested sample size runs seeded
replications of the full pipeline: draw eigenvalue pairs, add noise,
fit the slope, and record the absolute error together with the
normalized statistic. Replication ``r`` always draws from the stream
pair ``(2r, 2r + 1)``, so results are bit-identical whether the
replications run serially or fanned out over worker processes; the env
var ``QREGRESS_THREADS`` caps the worker count (0 means auto).
"""

from __future__ import annotations

import csv
import io
import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .asymptotics import (
    design_stats,
    estimate_constants,
    ks_test,
    normalized_statistic,
)
from .exceptions import IoFailure, QRegressError, ValidationError
from .losses import LossFunction, loss_from_spec
from .operators import (
    QuantumState,
    SymmetricOperator,
    commutator_norm,
    diagonal_operator,
    eigen_pmf,
    gibbs_state,
    maximally_mixed,
    random_symmetric,
)
from .rng import CONSTANTS_STREAM_BASE, RngSeed, replication_streams
from .sampling import (
    ErrorModel,
    apply_error,
    build_true_pair,
    error_model_from_spec,
    sample_eigen_pairs,
    samples_to_arrays,
)
from .solvers import RegressionData, estimate
from .version import __version__

REPORT_CSV_HEADER = ("n", "rep", "beta_hat", "abs_error", "z")
MIN_NORMALITY_REPLICATIONS = 20

_CONFIG_KEYS = {
    "operator",
    "state",
    "beta0",
    "loss",
    "error_model",
    "n_values",
    "replications",
    "base_seed",
    "delta_consistency",
    "output_path",
}


def _as_int(value, what: str) -> int:
    if isinstance(value, bool):
        raise ValidationError(f"{what} must be an integer, got {value!r}")
    if isinstance(value, float):
        if not value.is_integer():
            raise ValidationError(f"{what} must be an integer, got {value!r}")
        value = int(value)
    if not isinstance(value, int):
        raise ValidationError(f"{what} must be an integer, got {value!r}")
    return value


def _as_float(value, what: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValidationError(f"{what} must be a number, got {value!r}")
    return float(value)


def _build_operator(spec) -> SymmetricOperator:
    if isinstance(spec, SymmetricOperator):
        return spec
    if not isinstance(spec, dict):
        raise ValidationError(f"operator spec must be a dict, got {spec!r}")
    doc = dict(spec)
    kind = doc.pop("kind", "dense" if "entries" in doc else None)
    if kind == "diagonal":
        values = doc.pop("values", None)
        if values is None or doc:
            raise ValidationError("diagonal operator spec takes exactly 'values'")
        return diagonal_operator(values)
    if kind == "random_symmetric":
        dim, seed = doc.pop("dim", None), doc.pop("seed", None)
        if dim is None or seed is None or doc:
            raise ValidationError("random_symmetric operator spec takes 'dim' and 'seed'")
        return random_symmetric(_as_int(dim, "operator dim"), RngSeed(_as_int(seed, "operator seed")))
    if kind == "dense":
        dim, entries = doc.pop("dim", None), doc.pop("entries", None)
        if dim is None or entries is None or doc:
            raise ValidationError("dense operator spec takes 'dim' and 'entries'")
        return SymmetricOperator(_as_int(dim, "operator dim"), entries)
    raise ValidationError(f"unknown operator kind {kind!r}")


def _build_state(spec, operator: SymmetricOperator) -> QuantumState:
    if isinstance(spec, QuantumState):
        return spec
    if spec == "maximally_mixed":
        return maximally_mixed(operator.dim)
    if not isinstance(spec, dict):
        raise ValidationError(f"state spec must be a dict, got {spec!r}")
    doc = dict(spec)
    kind = doc.pop("kind", "dense" if "entries" in doc else None)
    if kind == "maximally_mixed":
        if doc:
            raise ValidationError("maximally_mixed state spec takes no parameters")
        return maximally_mixed(operator.dim)
    if kind == "gibbs":
        temperature = doc.pop("temperature", None)
        if temperature is None or doc:
            raise ValidationError("gibbs state spec takes exactly 'temperature'")
        return gibbs_state(operator, _as_float(temperature, "temperature"))
    if kind == "dense":
        dim, entries = doc.pop("dim", None), doc.pop("entries", None)
        if dim is None or entries is None or doc:
            raise ValidationError("dense state spec takes 'dim' and 'entries'")
        return QuantumState(_as_int(dim, "state dim"), entries)
    raise ValidationError(f"unknown state kind {kind!r}")


@dataclass(frozen=True)
class ExperimentConfig:
    """Fully resolved and validated experiment description."""

    operator: SymmetricOperator
    state: QuantumState
    beta0: float
    loss: LossFunction
    error_model: ErrorModel
    n_values: tuple[int, ...]
    replications: int
    base_seed: int
    delta_consistency: float = 0.1
    output_path: str | None = None

    def __post_init__(self):
        if self.operator.dim != self.state.dim:
            raise ValidationError(
                f"operator dim {self.operator.dim} does not match state dim {self.state.dim}"
            )
        if self.beta0 == 0.0 or not np.isfinite(self.beta0):
            raise ValidationError("beta0 must be finite and nonzero")
        if not self.n_values:
            raise ValidationError("n_values must be nonempty")
        for n in self.n_values:
            if not isinstance(n, int) or n < 1:
                raise ValidationError("n_values must be positive integers")
        if list(self.n_values) != sorted(set(self.n_values)):
            raise ValidationError("n_values must be strictly ascending")
        if not isinstance(self.replications, int) or self.replications < 1:
            raise ValidationError("replications must be a positive integer")
        RngSeed(self.base_seed)
        if not self.delta_consistency > 0:
            raise ValidationError("delta_consistency must be positive")

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        unknown = set(doc) - _CONFIG_KEYS
        if unknown:
            raise ValidationError(f"unknown config keys: {sorted(unknown)}")
        missing = {"operator", "state", "beta0", "loss", "error_model", "n_values",
                   "replications", "base_seed"} - set(doc)
        if missing:
            raise ValidationError(f"config is missing keys: {sorted(missing)}")
        operator = _build_operator(doc["operator"])
        if not isinstance(doc["n_values"], (list, tuple)):
            raise ValidationError("n_values must be a list of integers")
        output_path = doc.get("output_path")
        if output_path is not None and not isinstance(output_path, str):
            raise ValidationError("output_path must be a string")
        return cls(
            operator=operator,
            state=_build_state(doc["state"], operator),
            beta0=_as_float(doc["beta0"], "beta0"),
            loss=loss_from_spec(doc["loss"]),
            error_model=error_model_from_spec(doc["error_model"]),
            n_values=tuple(_as_int(n, "sample size") for n in doc["n_values"]),
            replications=_as_int(doc["replications"], "replications"),
            base_seed=_as_int(doc["base_seed"], "base_seed"),
            delta_consistency=_as_float(doc.get("delta_consistency", 0.1), "delta_consistency"),
            output_path=output_path,
        )

    def to_json_dict(self) -> dict:
        """Canonical re-runnable echo: generator shorthands are expanded."""
        return {
            "operator": {"kind": "dense", **self.operator.to_json_dict()},
            "state": {"kind": "dense", **self.state.to_json_dict()},
            "beta0": self.beta0,
            "loss": self.loss.to_json_dict(),
            "error_model": self.error_model.to_json_dict(),
            "n_values": list(self.n_values),
            "replications": self.replications,
            "base_seed": self.base_seed,
            "delta_consistency": self.delta_consistency,
            "output_path": self.output_path,
        }


class ReplicationRow(NamedTuple):
    n: int
    rep: int
    beta_hat: float
    abs_error: float
    z: float
    s_n: float
    d_n_sq: float


@dataclass(frozen=True)
class PerNSummary:
    n: int
    mean_beta_hat: float
    sd_beta_hat: float
    exceedance: float
    rows: tuple[ReplicationRow, ...]

    def to_json_dict(self) -> dict:
        return {
            "n": self.n,
            "mean_beta_hat": self.mean_beta_hat,
            "sd_beta_hat": self.sd_beta_hat,
            "exceedance": self.exceedance,
            "replications": [list(row) for row in self.rows],
        }


@dataclass(frozen=True)
class MonteCarloReport:
    """Everything one experiment produced, replication by replication."""

    config: dict
    version: str
    constants: dict
    diagnostics: dict
    per_n: tuple[PerNSummary, ...]
    normality: dict | None
    wall_time_seconds: float
    replications: int

    def __post_init__(self):
        for summary in self.per_n:
            if len(summary.rows) != self.replications:
                raise ValidationError(
                    f"summary for n={summary.n} aggregates {len(summary.rows)} "
                    f"rows, expected {self.replications}"
                )

    def to_json_dict(self) -> dict:
        return {
            "version": self.version,
            "config": self.config,
            "constants": self.constants,
            "diagnostics": self.diagnostics,
            "per_n": [summary.to_json_dict() for summary in self.per_n],
            "normality": self.normality,
            "replications": self.replications,
            "wall_time_seconds": self.wall_time_seconds,
        }

    @classmethod
    def from_json_dict(cls, doc: dict) -> "MonteCarloReport":
        per_n = []
        for block in doc["per_n"]:
            rows = tuple(
                ReplicationRow(int(r[0]), int(r[1]), *map(float, r[2:]))
                for r in block["replications"]
            )
            per_n.append(
                PerNSummary(
                    int(block["n"]),
                    float(block["mean_beta_hat"]),
                    float(block["sd_beta_hat"]),
                    float(block["exceedance"]),
                    rows,
                )
            )
        return cls(
            config=doc["config"],
            version=doc["version"],
            constants=doc["constants"],
            diagnostics=doc["diagnostics"],
            per_n=tuple(per_n),
            normality=doc.get("normality"),
            wall_time_seconds=float(doc["wall_time_seconds"]),
            replications=int(doc["replications"]),
        )


def resolve_worker_count() -> int:
    """Worker cap from QREGRESS_THREADS: unset means serial, 0 means auto."""
    raw = os.environ.get("QREGRESS_THREADS", "").strip()
    if not raw:
        return 1
    try:
        value = int(raw)
    except ValueError as exc:
        raise ValidationError(f"QREGRESS_THREADS must be an integer, got {raw!r}") from exc
    if value < 0:
        raise ValidationError("QREGRESS_THREADS must be nonnegative")
    if value == 0:
        return os.cpu_count() or 1
    return value


def _replicate(task) -> ReplicationRow:
    """One (n, replication) cell; pure function of the task tuple."""
    n, rep, pmf, pair, loss, model, base_seed, slope, second_moment = task
    try:
        eigen_seed, error_seed = replication_streams(base_seed, rep)
        noiseless = sample_eigen_pairs(pmf, pair, n, eigen_seed)
        noisy = apply_error(noiseless, model, pair.beta0, error_seed)
        data = RegressionData(*samples_to_arrays(noisy))
        result = estimate(loss, data)
        stats = design_stats(data.lambdas)
        z = normalized_statistic(result.beta_hat, pair.beta0, slope, second_moment, stats.s_n)
    except QRegressError as exc:
        raise type(exc)(f"(n={n}, rep={rep}) {exc}") from exc
    return ReplicationRow(
        n, rep, result.beta_hat, abs(result.beta_hat - pair.beta0), z,
        stats.s_n, stats.d_n_sq,
    )


def run_experiment(config: ExperimentConfig) -> MonteCarloReport:
    """Run every (n, replication) cell and aggregate the report."""
    start = time.perf_counter()
    pair = build_true_pair(config.operator, config.beta0)
    pmf = eigen_pmf(config.state, pair.decomposition)
    constants = estimate_constants(
        config.loss,
        config.error_model,
        seed=RngSeed(config.base_seed, CONSTANTS_STREAM_BASE),
    )

    tasks = [
        (n, rep, pmf, pair, config.loss, config.error_model, config.base_seed,
         constants.score_slope, constants.score_second_moment)
        for n in config.n_values
        for rep in range(config.replications)
    ]
    workers = resolve_worker_count()
    if workers > 1:
        chunk = max(1, len(tasks) // (workers * 8))
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_replicate, tasks, chunksize=chunk))
    else:
        rows = [_replicate(task) for task in tasks]

    per_n = []
    for n in config.n_values:
        block = tuple(row for row in rows if row.n == n)
        betas = np.array([row.beta_hat for row in block])
        sd = float(np.std(betas, ddof=1)) if betas.size > 1 else 0.0
        exceedance = float(
            np.mean([row.abs_error > config.delta_consistency for row in block])
        )
        per_n.append(PerNSummary(n, float(np.mean(betas)), sd, exceedance, block))

    largest = per_n[-1]
    normality: dict | None = None
    if config.replications >= MIN_NORMALITY_REPLICATIONS:
        report = ks_test([row.z for row in largest.rows])
        normality = {"n": largest.n, **report.to_json_dict()}

    diagnostics = {
        "commutator_norm": commutator_norm(config.state, config.operator),
        "pmf": {"support": pmf.support.tolist(), "masses": pmf.masses.tolist()},
        "s_n": float(np.mean([row.s_n for row in largest.rows])),
        "d_n_sq": float(np.mean([row.d_n_sq for row in largest.rows])),
        "a": constants.score_slope,
        "D": constants.score_second_moment,
        "ks_statistic": None if normality is None else normality["ks_statistic"],
        "ks_p_value": None if normality is None else normality["ks_p_value"],
        "exceedance": {str(summary.n): summary.exceedance for summary in per_n},
    }

    return MonteCarloReport(
        config=config.to_json_dict(),
        version=__version__,
        constants=constants.to_json_dict(),
        diagnostics=diagnostics,
        per_n=tuple(per_n),
        normality=normality,
        wall_time_seconds=time.perf_counter() - start,
        replications=config.replications,
    )


def report_to_json_text(report: MonteCarloReport) -> str:
    return json.dumps(report.to_json_dict(), indent=2) + "\n"


def report_to_csv_text(report: MonteCarloReport) -> str:
    """Flat per-replication rows: ``n,rep,beta_hat,abs_error,z``."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(REPORT_CSV_HEADER)
    for summary in report.per_n:
        for row in summary.rows:
            writer.writerow(
                [row.n, row.rep, repr(row.beta_hat), repr(row.abs_error), repr(row.z)]
            )
    return buffer.getvalue()


def emit_report(report: MonteCarloReport, fmt: str, path: str) -> None:
    """Write the report as nested JSON or flat CSV."""
    if fmt == "json":
        text = report_to_json_text(report)
    elif fmt == "csv":
        text = report_to_csv_text(report)
    else:
        raise ValidationError(f"unknown report format {fmt!r}")
    try:
        with open(path, "w", encoding="utf-8") as handle:
            handle.write(text)
    except OSError as exc:
        raise IoFailure(f"could not write report to {path!r}: {exc}") from exc
