"""Config parsing, orchestration determinism, sweeps, and the CLI surface."""

import json
import math
from pathlib import Path

import pytest

from agdsmooth import ConfigurationError, RunConfig, execute
from agdsmooth.cli import main
from agdsmooth.config import (
    config_from_dict,
    load_config,
    parse_overrides,
    run_sweep,
    sweep_from_dict,
)


@pytest.fixture(autouse=True)
def out_dir(tmp_path, monkeypatch):
    monkeypatch.setenv("AGDSMOOTH_OUTPUT_DIR", str(tmp_path))
    return tmp_path


class TestConfigParsing:
    def test_flat_dotted_keys(self):
        cfg = config_from_dict({
            "algorithm": "agd2",
            "problem": "exp-experiment",
            "problem_params.mu": 0.001,
            "epsilon": 1e-6,
        })
        assert cfg.problem_params == {"mu": 0.001}

    def test_nested_keys_also_accepted(self):
        cfg = config_from_dict({"problem_params": {"L": 2.0, "d": 3}})
        assert cfg.problem_params == {"L": 2.0, "d": 3}

    def test_unknown_field_is_configuration_error(self):
        with pytest.raises(ConfigurationError) as err:
            config_from_dict({"algorithmm": "agd2"})
        assert "algorithmm" in str(err.value)

    def test_field_validation_messages_name_the_field(self):
        with pytest.raises(ConfigurationError) as err:
            config_from_dict({"epsilon": -1.0})
        assert "epsilon" in str(err.value)
        with pytest.raises(ConfigurationError):
            config_from_dict({"budget": 0})
        with pytest.raises(ConfigurationError):
            config_from_dict({"algorithm": "sgd"})
        with pytest.raises(ConfigurationError):
            config_from_dict({"problem": "nope"})

    def test_overrides(self):
        got = parse_overrides(["epsilon=1e-8", "problem=exp-1d", "x0=[1.5]"])
        assert got == {"epsilon": 1e-8, "problem": "exp-1d", "x0": [1.5]}

    def test_load_config_with_overrides(self, tmp_path):
        path = tmp_path / "c.json"
        path.write_text(json.dumps({"algorithm": "agd2", "problem": "exp-1d",
                                    "x0": [2.0], "r_bar": 4.0, "gamma_cap0": 4.0}))
        cfg = load_config(path, ["epsilon=0.001"])
        assert cfg.epsilon == 0.001 and cfg.problem == "exp-1d"


class TestExecute:
    def base(self, tmp_path, **kw):
        merged = {
            "algorithm": "agd2", "problem": "exp-1d", "x0": [2.0],
            "r_bar": 4.0, "gamma_cap0": 4.0, "epsilon": 1e-6, "budget": 5000,
            "trace_path": str(tmp_path / "t.csv"),
            "summary_path": str(tmp_path / "s.json"),
        }
        merged.update(kw)
        return config_from_dict(merged)

    def test_writes_trace_and_summary(self, tmp_path):
        result, summary = execute(self.base(tmp_path))
        assert result.converged
        trace = Path(tmp_path / "t.csv").read_text().splitlines()
        assert trace[0].startswith("k,phase,f_gap")
        assert len(trace) == 1 + result.gd_iters + result.agd_iters
        stored = json.loads(Path(tmp_path / "s.json").read_text())
        assert stored["termination"] == "converged"
        assert stored["config"]["epsilon"] == 1e-6

    def test_byte_identical_reruns(self, tmp_path):
        execute(self.base(tmp_path))
        first = Path(tmp_path / "t.csv").read_bytes()
        execute(self.base(tmp_path))
        assert Path(tmp_path / "t.csv").read_bytes() == first

    def test_oracle_accounting_matches_trace(self, tmp_path):
        result, _ = execute(self.base(tmp_path, algorithm="agd1"))
        gd = sum(1 for r in result.trace if r.phase == "gd")
        agd = sum(1 for r in result.trace if r.phase == "agd")
        assert result.oracle_calls == gd + agd + 1

    def test_plain_gd_algorithm(self, tmp_path):
        result, _ = execute(self.base(tmp_path, algorithm="gd", epsilon=1e-4))
        assert result.converged and result.agd_iters == 0 and result.gd_iters > 0

    def test_defaults_materialized_in_summary(self, tmp_path):
        cfg = config_from_dict({
            "algorithm": "agd1", "problem": "exp-experiment",
            "trace_path": str(tmp_path / "t2.csv"),
            "summary_path": str(tmp_path / "s2.json"),
        })
        result, summary = execute(cfg)
        assert summary["config"]["delta"] is not None
        assert summary["config"]["r_bar"] > 0
        assert summary["config"]["x0"] == [-6.0, -5.0]
        assert any("delta selected by policy" in n for n in summary["notes"])

    def test_trace_disabled_by_empty_path(self, tmp_path):
        result, summary = execute(self.base(tmp_path, trace_path=""))
        assert result.converged and result.trace == []
        assert "trace_path" not in summary

    def test_agd2_on_superquadratic_is_config_error(self, tmp_path):
        cfg = self.base(tmp_path, ell={"kind": "power", "rho": 3, "L0": 1, "L1": 1})
        with pytest.raises(ConfigurationError):
            execute(cfg)

    def test_agd1_inadmissible_delta_precondition_failed(self, tmp_path):
        cfg = self.base(tmp_path, algorithm="agd1", delta=1e6)
        result, _ = execute(cfg)
        assert result.termination == "precondition-failed"
        assert result.agd_iters == 0


class TestSweeps:
    def test_epsilon_quartering_ratniios(self):
        spec = sweep_from_dict({
            "axis": "epsilon-quartering",
            "levels": 3,
            "base": {
                "algorithm": "agd2", "problem": "quadratic",
                "problem_params": {"L": 1.0, "d": 10, "known_optimum": False},
                "x0": [0.1] * 10, "r_bar": math.sqrt(10) * 0.1,
                "gamma_cap0": 1.0, "epsilon": 1e-4, "budget": 10**6,
                "check_invariants": False, "trace_path": "",
            },
        })
        report = run_sweep(spec, write_files=False)
        assert len(report["points"]) == 3
        assert all(p["error"] is None for p in report["points"])
        for ratio in report["ratios"]:
            assert 1.6 <= ratio <= 2.4

    def test_delta_grid_gd_iters_non_increasing(self):
        deltas = [0.01, 0.02, 0.05]
        spec = sweep_from_dict({
            "axis": "delta-grid",
            "values": deltas,
            "base": {
                "algorithm": "agd1", "problem": "exp-experiment",
                "x0": [-6.0, -5.0], "r_bar": 100.0, "epsilon": 1e-5,
                "budget": 10**5, "trace_path": "",
            },
        })
        report = run_sweep(spec, write_files=False)
        gd_iters = [p["gd_iters"] for p in report["points"]]
        assert all(p["error"] is None for p in report["points"])
        assert all(b <= a for a, b in zip(gd_iters, gd_iters[1:]))

    def test_empty_grid_is_configuration_error(self):
        with pytest.raises(ConfigurationError):
            sweep_from_dict({"axis": "delta-grid", "values": [], "base": {}})
        with pytest.raises(ConfigurationError):
            sweep_from_dict({"axis": "epsilon-quartering", "levels": 1, "base": {}})

    def test_child_error_recorded_and_sweep_continues(self):
        spec = sweep_from_dict({
            "axis": "gamma_cap0-grid",
            "values": [4.0, -1.0],
            "base": {
                "algorithm": "agd2", "problem": "exp-1d", "x0": [2.0],
                "r_bar": 4.0, "epsilon": 1e-4, "budget": 10**5, "trace_path": "",
            },
        })
        report = run_sweep(spec, write_files=False)
        assert report["points"][0]["error"] is None
        assert "ConfigurationError" in report["points"][1]["error"]

    def test_unknown_axis(self):
        with pytest.raises(ConfigurationError):
            sweep_from_dict({"axis": "lr-grid", "values": [1], "base": {}})


class TestCli:
    def write_cfg(self, tmp_path, **kw):
        payload = {"algorithm": "agd2", "problem": "exp-1d", "x0": [2.0],
                   "r_bar": 4.0, "gamma_cap0": 4.0, "epsilon": 1e-6,
                   "budget": 5000}
        payload.update(kw)
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(payload))
        return str(path)

    def test_run_converged_exit_zero(self, tmp_path, capsys):
        assert main(["run", self.write_cfg(tmp_path)]) == 0
        out = capsys.readouterr().out
        assert json.loads(out)["termination"] == "converged"

    def test_run_budget_exit_two(self, tmp_path):
        assert main(["run", self.write_cfg(tmp_path, budget=5)]) == 2

    def test_run_precondition_exit_three(self, tmp_path):
        cfg = self.write_cfg(tmp_path, algorithm="agd1", delta=1e9)
        assert main(["run", cfg]) == 3

    def test_configuration_error_exit_four(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"algorithm": "nope"}))
        assert main(["run", str(path)]) == 4

    def test_set_overrides(self, tmp_path, capsys):
        code = main(["run", self.write_cfg(tmp_path), "--set", "epsilon=1e-3"])
        assert code == 0
        assert json.loads(capsys.readouterr().out)["config"]["epsilon"] == 1e-3

    def test_catalog_list(self, capsys):
        assert main(["catalog", "list"]) == 0
        out = capsys.readouterr().out
        assert "exp-experiment" in out and "quadratic" in out

    def test_verify_subcommand(self, tmp_path, capsys):
        code = main(["verify", "exp-1d", "claimed", "--trials", "50",
                     "--out", str(tmp_path / "rep.json")])
        assert code == 0
        report = json.loads((tmp_path / "rep.json").read_text())
        assert all(entry["violations"] == 0 for entry in report)
        assert {e["name"] for e in report} >= {"convexity-smoothness", "gradient-transfer"}

    def test_verify_with_explicit_model(self, tmp_path):
        model = json.dumps({"kind": "affine", "L0": 2.5, "L1": 1.0})
        code = main(["verify", "exp-1d", model, "--trials", "30",
                     "--out", str(tmp_path / "rep2.json")])
        assert code == 0

    def test_sweep_subcommand(self, tmp_path, capsys):
        spec = {
            "axis": "gamma_cap0-grid", "values": [4.0],
            "base": {"algorithm": "agd2", "problem": "exp-1d", "x0": [2.0],
                     "r_bar": 4.0, "epsilon": 1e-4, "budget": 10**5,
                     "trace_path": ""},
        }
        path = tmp_path / "spec.json"
        path.write_text(json.dumps(spec))
        assert main(["sweep", str(path)]) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["points"][0]["termination"] == "converged"

    def test_output_dir_env(self, tmp_path, capsys):
        assert main(["run", self.write_cfg(tmp_path)]) == 0
        assert (tmp_path / "exp-1d-agd2-trace.csv").exists()
        assert (tmp_path / "exp-1d-agd2-summary.json").exists()

    def test_strict_violation_exit_five(self, tmp_path):
        # claim a curvature bound that the objective plainly violates; the
        # oversized GD step breaks distance monotonicity under strict checks
        cfg = self.write_cfg(
            tmp_path, algorithm="agd1",
            ell={"kind": "constant", "L": 0.5}, strict_checks=True,
        )
        assert main(["run", cfg]) == 5


class TestAdaptiveRunExample:
    def test_exponential_problem_converges_nonmonotonically(self, tmp_path):
        cfg = config_from_dict({
            "algorithm": "agd2", "problem": "exp-experiment",
            "problem_params": {"mu": 0.001}, "x0": [-6.0, -5.0],
            "r_bar": 100.0, "gamma_cap0": 100.0, "epsilon": 1e-6,
            "budget": 10000,
        })
        result, _ = execute(cfg, write_files=False)
        assert result.converged and result.achieved_gap <= 1e-6
        gaps = [r.f_gap for r in result.trace if r.phase == "agd"]
        assert any(b > a for a, b in zip(gaps, gaps[1:]))


class TestCertificateUnderflow:
    def test_tiny_start_level_saturates(self):
        import numpy as np
        from agdsmooth import algorithm2_run, catalog

        # withhold the optimum so the start-level precondition cannot reject
        # the degenerate certificate level before the underflow guard sees it
        p = catalog("exp-1d", {"known_optimum": False})
        res = algorithm2_run(p, p.ell_model, np.array([2.0]), 1e-302, 4.0,
                             5e-310, 10)
        assert res.converged
        assert "underflow" in res.message
