import json

import numpy as np
import pytest

from specrd import checks as checks_mod
from specrd.checks import REGISTRY, CheckResult, check_names
from specrd.cli import main
from specrd.ergodic import InvariantEnsemble
from specrd.sde import ConfigError
from specrd.suite import (
    SuiteConfig,
    load_suite_config,
    render_csv,
    run_suite,
    sim_config_from_dict,
    validate_config,
)

GOOD = """\
version: 1
sim:
  n: 1
  kmax: 8
  gamma: 0.0
  alpha: 0.1
  dt: 0.01
  horizon: 0.5
  seed: 99
  reaction: [0.0, 0.0, 0.0, -1.0]
checks: [interpolation]
output:
  dir: "{out}"
  format: both
"""


@pytest.fixture
def good_config(tmp_path):
    path = tmp_path / "cfg.yaml"
    path.write_text(GOOD.format(out=tmp_path / "out"))
    return path


def write_config(tmp_path, text):
    path = tmp_path / "cfg.yaml"
    path.write_text(text)
    return path


class TestConfigValidation:
    def test_good_config(self, good_config):
        cfg = validate_config(good_config)
        assert cfg.kmax == 8
        assert cfg.poly is not None

    def test_noise_exponent_window(self, tmp_path):
        bad = GOOD.format(out=tmp_path).replace("  n: 1", "  n: 3").replace(
            "gamma: 0.0", "gamma: 0.4"
        )
        with pytest.raises(ConfigError, match=r"gamma must lie in \(n/2-1, 1\)"):
            validate_config(write_config(tmp_path, bad))

    def test_even_reaction_degree(self, tmp_path):
        bad = GOOD.format(out=tmp_path).replace("[0.0, 0.0, 0.0, -1.0]",
                                                "[0.0, 0.0, -1.0]")
        with pytest.raises(ConfigError, match="odd"):
            validate_config(write_config(tmp_path, bad))

    def test_nonnegative_leading_coefficient(self, tmp_path):
        bad = GOOD.format(out=tmp_path).replace("[0.0, 0.0, 0.0, -1.0]",
                                                "[0.0, 0.0, 0.0, 1.0]")
        with pytest.raises(ConfigError, match="leading"):
            validate_config(write_config(tmp_path, bad))

    def test_stability_cap(self, tmp_path):
        bad = GOOD.format(out=tmp_path).replace("alpha: 0.1", "alpha: 0.01")
        with pytest.raises(ConfigError, match="stability cap"):
            validate_config(write_config(tmp_path, bad))

    def test_missing_version(self, tmp_path):
        bad = GOOD.format(out=tmp_path).replace("version: 1\n", "")
        with pytest.raises(ConfigError, match="version"):
            validate_config(write_config(tmp_path, bad))

    def test_unknown_check_name(self, tmp_path):
        bad = GOOD.format(out=tmp_path).replace("[interpolation]", "[no_such_check]")
        with pytest.raises(ConfigError, match="unknown check"):
            load_suite_config(write_config(tmp_path, bad))

    def test_unknown_sim_field(self, tmp_path):
        bad = GOOD.format(out=tmp_path).replace("seed: 99", "seed: 99\n  fancy: 2")
        with pytest.raises(ConfigError, match="unknown sim fields"):
            validate_config(write_config(tmp_path, bad))

    def test_nonpositive_budget(self, good_config):
        suite = load_suite_config(good_config)
        with pytest.raises(ConfigError, match="positive"):
            SuiteConfig(sim=suite.sim, budgets={"interpolation": {"fields": 0}})

    def test_reaction_optional(self, tmp_path):
        text = GOOD.format(out=tmp_path).replace("  reaction: [0.0, 0.0, 0.0, -1.0]\n", "")
        cfg = validate_config(write_config(tmp_path, text))
        assert cfg.poly is None

    def test_sim_config_from_dict_type_error(self):
        with pytest.raises(ConfigError):
            sim_config_from_dict({"kmax": "many"})


class TestRunSuite:
    def test_empty_check_list(self, good_config):
        suite = load_suite_config(good_config)
        suite.checks = []
        results, code = run_suite(suite, write=False)
        assert results == [] and code == 0

    def test_registry_complete(self):
        assert len(check_names()) == 12

    def test_results_carry_statements(self, good_config):
        suite = load_suite_config(good_config)
        suite.checks = ["interpolation", "covariance_bound"]
        results, code = run_suite(suite, write=False)
        assert code == 0
        for r in results:
            assert r.statement
            assert r.regime
            assert r.seconds >= 0

    def test_crashing_check_is_contained(self, good_config, monkeypatch):
        def boom(cfg, budget, stream):
            raise RuntimeError("synthetic failure")

        monkeypatch.setitem(REGISTRY, "interpolation", boom)
        suite = load_suite_config(good_config)
        suite.checks = ["interpolation", "covariance_bound"]
        results, code = run_suite(suite, write=False)
        assert code == 1
        assert results[0].status == "fail"
        assert "synthetic failure" in results[0].detail
        assert results[1].status == "pass"

    def test_warn_does_not_fail_suite(self, good_config, monkeypatch):
        def warny(cfg, budget, stream):
            return CheckResult(name="interpolation", status="warn", regime="x",
                               statement="s", metric="m", value=0.0, bound=1.0,
                               stderr=None)

        monkeypatch.setitem(REGISTRY, "interpolation", warny)
        suite = load_suite_config(good_config)
        results, code = run_suite(suite, write=False)
        assert code == 0
        assert results[0].status == "warn"

    def test_workers_do_not_change_results(self, good_config):
        suite = load_suite_config(good_config)
        suite.checks = ["interpolation", "covariance_bound", "noise_moment"]
        suite.budgets = {"noise_moment": {"samples": 500}}
        seq, _ = run_suite(suite, write=False)
        suite.workers = 3
        par, _ = run_suite(suite, write=False)
        for a, b in zip(seq, par):
            assert a.as_dict() | {"seconds": 0} == b.as_dict() | {"seconds": 0}

    def test_reports_deterministic_modulo_timing(self, good_config, tmp_path):
        suite = load_suite_config(good_config)
        suite.checks = ["interpolation", "covariance_bound"]

        def strip(report):
            data = json.loads(report)
            for r in data["results"]:
                r.pop("seconds")
            data["summary"].pop("total_seconds")
            return data

        run_suite(suite, write=True)
        first = (suite.out_dir / "report.json").read_text()
        run_suite(suite, write=True)
        second = (suite.out_dir / "report.json").read_text()
        assert strip(first) == strip(second)
        assert json.dumps(strip(first), sort_keys=True) == json.dumps(
            strip(second), sort_keys=True
        )

    def test_csv_report_columns(self, good_config):
        suite = load_suite_config(good_config)
        results, _ = run_suite(suite, write=True)
        csv_text = (suite.out_dir / "report.csv").read_text()
        header = csv_text.splitlines()[0].split(",")
        assert header[:4] == ["name", "status", "regime", "metric"]
        assert len(csv_text.splitlines()) == len(results) + 1


class TestCli:
    def test_simulate_trace(self, good_config, tmp_path, capsys):
        out = tmp_path / "trace.csv"
        code = main(["simulate", "--config", str(good_config), "--out", str(out),
                     "--with-noise"])
        assert code == 0
        lines = out.read_text().splitlines()
        assert lines[0].startswith("# specrd trace v1")
        header = lines[1].split(",")
        assert header[0] == "time"
        assert len(lines) == 2 + 50 + 1  # comment, header, steps+1 rows

    def test_sample_invariant_roundtrip(self, good_config, tmp_path, capsys):
        out = tmp_path / "ens.npz"
        code = main(["sample-invariant", "--config", str(good_config),
                     "--out", str(out), "--snapshots", "150"])
        assert code == 0
        ens = InvariantEnsemble.load(out)
        assert ens.size == 150

    def test_verify_and_report(self, good_config, tmp_path, capsys):
        out_dir = tmp_path / "reports"
        code = main(["verify", "--config", str(good_config), "--out", str(out_dir),
                     "--format", "both"])
        assert code == 0
        captured = capsys.readouterr().out
        assert "PASS" in captured
        report = out_dir / "report.json"
        assert report.exists()
        code = main(["report", "--results", str(report),
                     "--out", str(tmp_path / "again.csv")])
        assert code == 0
        assert (tmp_path / "again.csv").read_text() == (out_dir / "report.csv").read_text()

    def test_seed_override_changes_report(self, good_config, tmp_path):
        out_dir = tmp_path / "r1"
        main(["verify", "--config", str(good_config), "--out", str(out_dir),
              "--checks", "covariance_bound", "--seed", "123"])
        data = json.loads((out_dir / "report.json").read_text())
        assert data["config"]["sim"]["seed"] == 123

    def test_config_error_exit_code(self, tmp_path, capsys):
        bad = tmp_path / "bad.yaml"
        bad.write_text("version: 2\nsim: {}\n")
        assert main(["verify", "--config", str(bad)]) == 2
        assert "config error" in capsys.readouterr().err

    def test_render_csv_roundtrip_values(self):
        row = {"name": "x", "status": "pass", "regime": "r", "metric": "m",
               "value": 1.0 / 3.0, "bound": 3.0, "stderr": None, "seconds": 0.1}
        text = render_csv([row])
        assert f"{1.0 / 3.0:.17g}" in text


def test_stream_bases_are_stable():
    bases = [checks_mod.stream_base(name) for name in check_names()]
    assert bases == sorted(bases)
    assert len(set(bases)) == len(bases)
