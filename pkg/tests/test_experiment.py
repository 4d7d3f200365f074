import copy
import json
import os

import numpy as np
import pytest

from qregress import (
    ExperimentConfig,
    IoFailure,
    MonteCarloReport,
    ValidationError,
    emit_report,
    run_experiment,
)
from qregress.experiment import (
    PerNSummary,
    ReplicationRow,
    report_to_csv_text,
    report_to_json_text,
    resolve_worker_count,
)

BASE_CONFIG = {
    "operator": {"kind": "diagonal", "values": [1.0, 2.0, 3.0]},
    "state": {"kind": "maximally_mixed"},
    "beta0": 2.0,
    "loss": "square",
    "error_model": "gaussian:1",
    "n_values": [20, 40],
    "replications": 25,
    "base_seed": 20240601,
    "delta_consistency": 0.1,
}


def config_dict(**overrides):
    doc = copy.deepcopy(BASE_CONFIG)
    doc.update(overrides)
    return doc


def stripped(report: MonteCarloReport) -> dict:
    doc = report.to_json_dict()
    doc.pop("wall_time_seconds")
    return doc


class TestConfigValidation:
    def test_happy_path(self):
        config = ExperimentConfig.from_dict(config_dict())
        assert config.operator.dim == 3
        assert config.n_values == (20, 40)

    def test_missing_keys(self):
        with pytest.raises(ValidationError, match="missing"):
            ExperimentConfig.from_dict({"beta0": 2.0})

    def test_unknown_keys(self):
        with pytest.raises(ValidationError, match="unknown"):
            ExperimentConfig.from_dict(config_dict(typo=1))

    def test_dim_mismatch(self):
        bad = config_dict(state={"kind": "dense", "dim": 2,
                                 "entries": [[0.5, 0.0], [0.0, 0.5]]})
        with pytest.raises(ValidationError):
            ExperimentConfig.from_dict(bad)

    def test_zero_beta(self):
        with pytest.raises(ValidationError):
            ExperimentConfig.from_dict(config_dict(beta0=0.0))

    @pytest.mark.parametrize("loss", ["quantile:1.5", "lq:2.5", "lq:0.5"])
    def test_loss_parameter_ranges(self, loss):
        with pytest.raises(ValidationError):
            ExperimentConfig.from_dict(config_dict(loss=loss))

    def test_non_psd_state_rejected(self):
        bad = config_dict(
            operator={"kind": "diagonal", "values": [1.0, 2.0]},
            state={"kind": "dense", "dim": 2, "entries": [[1.5, 0.0], [0.0, -0.5]]},
        )
        with pytest.raises(ValidationError):
            ExperimentConfig.from_dict(bad)

    @pytest.mark.parametrize("n_values", [[], [40, 20], [20, 20], [0, 10], [10.5], "20"])
    def test_bad_n_values(self, n_values):
        with pytest.raises(ValidationError):
            ExperimentConfig.from_dict(config_dict(n_values=n_values))

    def test_non_numeric_fields_rejected(self):
        with pytest.raises(ValidationError):
            ExperimentConfig.from_dict(config_dict(replications="many"))
        with pytest.raises(ValidationError):
            ExperimentConfig.from_dict(config_dict(beta0="two"))
        with pytest.raises(ValidationError):
            ExperimentConfig.from_dict(config_dict(output_path=5))

    def test_bad_replications(self):
        with pytest.raises(ValidationError):
            ExperimentConfig.from_dict(config_dict(replications=0))

    def test_gibbs_state_spec(self):
        config = ExperimentConfig.from_dict(
            config_dict(state={"kind": "gibbs", "temperature": 1.0})
        )
        assert config.state.dim == 3

    def test_random_symmetric_spec(self):
        config = ExperimentConfig.from_dict(
            config_dict(
                operator={"kind": "random_symmetric", "dim": 4, "seed": 3},
                state={"kind": "maximally_mixed"},
            )
        )
        assert config.operator.dim == 4

    def test_echo_is_re_runnable(self):
        config = ExperimentConfig.from_dict(config_dict())
        echoed = ExperimentConfig.from_dict(
            {k: v for k, v in config.to_json_dict().items() if v is not None}
        )
        assert echoed.beta0 == config.beta0
        assert np.array_equal(echoed.operator.entries, config.operator.entries)


class TestRunExperiment:
    def test_noiseless_equivalent_recovers_beta(self):
        config = ExperimentConfig.from_dict(
            config_dict(error_model="gaussian:1e-12", replications=1, n_values=[50])
        )
        report = run_experiment(config)
        assert abs(report.per_n[0].mean_beta_hat - 2.0) <= 1e-9
        assert report.normality is None  # too few replications for a KS test

    def test_report_shape(self):
        report = run_experiment(ExperimentConfig.from_dict(config_dict()))
        assert report.replications == 25
        assert [s.n for s in report.per_n] == [20, 40]
        for summary in report.per_n:
            assert len(summary.rows) == 25
            reps = [row.rep for row in summary.rows]
            assert reps == sorted(reps)
        assert report.normality is not None
        assert report.diagnostics["commutator_norm"] == 0.0
        assert set(report.diagnostics["exceedance"]) == {"20", "40"}

    def test_determinism_same_seed(self):
        config = ExperimentConfig.from_dict(config_dict())
        assert stripped(run_experiment(config)) == stripped(run_experiment(config))

    def test_different_seed_differs(self):
        a = run_experiment(ExperimentConfig.from_dict(config_dict()))
        b = run_experiment(ExperimentConfig.from_dict(config_dict(base_seed=7)))
        assert stripped(a) != stripped(b)

    def test_parallel_matches_serial(self, monkeypatch):
        config = ExperimentConfig.from_dict(config_dict(replications=12))
        monkeypatch.delenv("QREGRESS_THREADS", raising=False)
        serial = run_experiment(config)
        monkeypatch.setenv("QREGRESS_THREADS", "2")
        parallel = run_experiment(config)
        assert stripped(serial) == stripped(parallel)

    def test_replication_errors_carry_coordinates(self):
        # Mass 1 on the zero eigenvalue: every replication draws an
        # all-zero design and the slope is unidentifiable.
        from qregress import DegenerateDesign

        config = ExperimentConfig.from_dict(config_dict(
            operator={"kind": "diagonal", "values": [0.0, 1.0]},
            state={"kind": "dense", "dim": 2, "entries": [[1.0, 0.0], [0.0, 0.0]]},
            n_values=[5],
            replications=2,
        ))
        with pytest.raises(DegenerateDesign, match=r"\(n=5, rep=0\)"):
            run_experiment(config)


class TestWorkerCount:
    def test_default_is_serial(self, monkeypatch):
        monkeypatch.delenv("QREGRESS_THREADS", raising=False)
        assert resolve_worker_count() == 1

    def test_zero_means_auto(self, monkeypatch):
        monkeypatch.setenv("QREGRESS_THREADS", "0")
        assert resolve_worker_count() == (os.cpu_count() or 1)

    def test_explicit_cap(self, monkeypatch):
        monkeypatch.setenv("QREGRESS_THREADS", "3")
        assert resolve_worker_count() == 3

    @pytest.mark.parametrize("raw", ["x", "-2", "1.5"])
    def test_bad_values_rejected(self, monkeypatch, raw):
        monkeypatch.setenv("QREGRESS_THREADS", raw)
        with pytest.raises(ValidationError):
            resolve_worker_count()


@pytest.fixture(scope="module")
def report():
    return run_experiment(ExperimentConfig.from_dict(config_dict()))


class TestReportSerialization:

    def test_json_round_trip(self, report):
        doc = json.loads(report_to_json_text(report))
        back = MonteCarloReport.from_json_dict(doc)
        assert stripped(back) == stripped(report)

    def test_csv_shape(self, report):
        lines = report_to_csv_text(report).splitlines()
        assert lines[0] == "n,rep,beta_hat,abs_error,z"
        assert len(lines) - 1 == 25 * 2

    def test_csv_round_trips_floats(self, report):
        line = report_to_csv_text(report).splitlines()[1].split(",")
        row = report.per_n[0].rows[0]
        assert float(line[2]) == row.beta_hat
        assert float(line[4]) == row.z

    def test_emit_json_and_csv(self, report, tmp_path):
        json_path = tmp_path / "report.json"
        csv_path = tmp_path / "report.csv"
        emit_report(report, "json", str(json_path))
        emit_report(report, "csv", str(csv_path))
        assert json.loads(json_path.read_text())["replications"] == 25
        assert len(csv_path.read_text().splitlines()) == 51

    def test_emit_unknown_format(self, report, tmp_path):
        with pytest.raises(ValidationError):
            emit_report(report, "yaml", str(tmp_path / "x"))

    def test_emit_to_unwritable_path(self, report, tmp_path):
        with pytest.raises(IoFailure):
            emit_report(report, "json", str(tmp_path / "missing" / "deep" / "x.json"))

    def test_row_count_invariant_enforced(self, report):
        short = PerNSummary(20, 2.0, 0.1, 0.0, (ReplicationRow(20, 0, 2.0, 0.0, 0.0, 1.0, 0.5),))
        with pytest.raises(ValidationError):
            MonteCarloReport(
                config=report.config,
                version=report.version,
                constants=report.constants,
                diagnostics=report.diagnostics,
                per_n=(short,),
                normality=None,
                wall_time_seconds=0.0,
                replications=25,
            )
