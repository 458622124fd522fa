"""End-to-end command-line runs against temporary output directories."""

import json
import subprocess
import sys

import numpy as np
import pytest

import zeronoise as zn
from zeronoise.cli import main, validate_config

FLUX_K_STANDARD = -1.7436760399248967


def _run(tmp_path, *argv):
    out = tmp_path / "run"
    rc = main([*argv, "--out-dir", str(out)])
    return rc, out


def _summary(out, name):
    return json.loads((out / name).read_text())


class TestConfigValidation:
    def test_unknown_keys_rejected(self):
        with pytest.raises(zn.ValidationError, match="unknown config key"):
            validate_config("solve", {"epz": 0.1})
        with pytest.raises(zn.ValidationError, match="sde.dtt"):
            validate_config("simulate", {"sde": {"dtt": 0.1}})

    def test_unknown_subcommand(self):
        with pytest.raises(zn.ValidationError, match="subcommand"):
            validate_config("relax", {})

    def test_value_checks(self):
        with pytest.raises(zn.ValidationError):
            validate_config("solve", {"eps": -0.1})
        with pytest.raises(zn.ValidationError):
            validate_config("solve", {"solver": "spectral"})
        with pytest.raises(zn.ValidationError):
            validate_config("converge", {"eps_values": []})
        with pytest.raises(zn.ValidationError):
            validate_config("gradflow", {"delta": "wide"})
        with pytest.raises(zn.ValidationError):
            validate_config("torus", {"gamma_matrix": [1.0, 0.0]})
        with pytest.raises(zn.ValidationError):
            validate_config("solve", {"plots": "yes"})

    def test_stream_and_constant_conflict(self):
        with pytest.raises(zn.ValidationError, match="not both"):
            validate_config(
                "torus",
                {"constant": [1.0, 1.5], "stream": {"name": "product_sine", "params": {}}},
            )

    def test_defaults_round_out_partial_config(self):
        config = validate_config("solve", {"eps": 0.05})
        assert config.values["eps"] == 0.05
        assert config.values["solver"] == "quadrature"
        assert config.values["n"] == 512


class TestSolveCommand:
    def test_quadrature_run(self, tmp_path):
        rc, out = _run(tmp_path, "solve", "--n", "256")
        assert rc == 0
        summary = _summary(out, "solve_summary.json")
        assert summary["flux_constant"] == pytest.approx(FLUX_K_STANDARD, rel=1e-12)
        assert summary["solver"] == "quadrature"
        names = {p.name for p in out.iterdir()}
        assert {"solve.csv", "solve_summary.json", "density.png",
                "residual.png", "manifest.json"} <= names
        header, first = (out / "solve.csv").read_text().splitlines()[:2]
        assert header == "x,rho0,rho_eps,r_eps"
        assert len(first.split(",")) == 4

    def test_finite_difference_run(self, tmp_path):
        rc, out = _run(tmp_path, "solve", "--n", "128", "--solver", "finite_difference")
        assert rc == 0
        summary = _summary(out, "solve_summary.json")
        assert summary["solver"] == "finite_difference"
        assert summary["flux_constant"] == pytest.approx(FLUX_K_STANDARD, abs=5e-4)

    def test_no_plots(self, tmp_path):
        rc, out = _run(tmp_path, "solve", "--n", "128", "--no-plots")
        assert rc == 0
        assert not list(out.glob("*.png"))
        manifest = _summary(out, "manifest.json")
        assert all(not e["name"].endswith(".png") for e in manifest["artifacts"])

    def test_custom_rules(self, tmp_path):
        rc, out = _run(
            tmp_path, "solve", "--n", "128", "--eps", "0.05",
            "--drift", "offset_sin:offset=2.5,amplitude=0.5,harmonic=2",
            "--gamma", "offset_cos:offset=1.0,amplitude=0.25,harmonic=1",
        )
        assert rc == 0
        assert _summary(out, "solve_summary.json")["epsilon"] == 0.05


class TestConvergeCommand:
    def test_standard_sweep(self, tmp_path):
        rc, out = _run(tmp_path, "converge", "--n", "256", "--eps", "0.2,0.1,0.05")
        assert rc == 0
        summary = _summary(out, "converge_summary.json")
        assert summary["alpha"] == pytest.approx(1.0)
        assert summary["poincare_ok"] == [True, True, True]
        assert summary["fits"]["l2"]["slope"] > 0.8
        rows = (out / "converge.csv").read_text().splitlines()
        assert rows[0] == "eps,l2,deriv_l2,sup,l2_bound,h1_bound"
        assert len(rows) == 4

    def test_exact_family_reports_null_fits(self, tmp_path):
        rc, out = _run(
            tmp_path, "converge", "--n", "128", "--eps", "0.2,0.1,0.05",
            "--drift", "constant:value=1",
        )
        assert rc == 0
        summary = _summary(out, "converge_summary.json")
        assert summary["exact"] is True
        assert all(f is None for f in summary["fits"].values())

    def test_increasing_eps_rejected(self, tmp_path):
        rc, _ = _run(tmp_path, "converge", "--eps", "0.05,0.1,0.2")
        assert rc == 2


class TestSimulateCommand:
    def test_small_ensemble(self, tmp_path):
        rc, out = _run(
            tmp_path, "simulate", "--n", "128", "--steps", "20000", "--burn-in", "2000",
            "--trajectories", "2", "--bins", "16", "--seed", "7",
        )
        assert rc == 0
        summary = _summary(out, "simulate_summary.json")
        assert summary["samples"] == 18000 * 2
        assert len(summary["weak_gaps"]) == 16
        assert summary["l1_distance"] < 0.5
        rows = (out / "simulate.csv").read_text().splitlines()
        assert rows[0] == "bin_center,mass,reference_density"
        assert len(rows) == 17

    def test_same_seed_reproduces_bytes(self, tmp_path):
        args = ["simulate", "--n", "128", "--steps", "20000", "--burn-in", "2000",
                "--trajectories", "2", "--bins", "16", "--seed", "7"]
        rc1 = main([*args, "--out-dir", str(tmp_path / "a")])
        rc2 = main([*args, "--out-dir", str(tmp_path / "b")])
        assert rc1 == rc2 == 0
        for name in ("simulate.csv", "simulate_summary.json", "histogram.png"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_scheme_flag(self, tmp_path):
        rc, out = _run(
            tmp_path, "simulate", "--n", "128", "--steps", "20000", "--burn-in", "2000",
            "--trajectories", "2", "--bins", "16", "--scheme", "euler_ito",
        )
        assert rc == 0
        assert _summary(out, "simulate_summary.json")["scheme"] == "euler_ito"


class TestGradflowCommand:
    def test_default_family_passes(self, tmp_path):
        rc, out = _run(tmp_path, "gradflow")
        assert rc == 0
        summary = _summary(out, "gradflow_summary.json")
        assert summary["rate_ok"] is True and summary["monotone"] is True
        assert summary["barrier"] == pytest.approx(1.0, abs=1e-10)
        assert len(summary["density_files"]) == 4
        rows = (out / "concentration.csv").read_text().splitlines()
        assert rows[0] == "eps,outside_mass,eps_times_log_mass"
        assert len(rows) == 5

    def test_single_wide_eps_fails_rate_check(self, tmp_path, capsys):
        rc, out = _run(tmp_path, "gradflow", "--eps", "0.4")
        assert rc == 1
        assert "[FAIL] rate_within_20pct" in capsys.readouterr().out
        # artifacts still land; the manifest records the failure
        assert _summary(out, "manifest.json")["passed"] is False

    def test_flat_potential_is_a_noop(self, tmp_path):
        rc, out = _run(tmp_path, "gradflow", "--potential", "constant:value=1", "--eps", "0.2,0.1")
        assert rc == 0
        assert _summary(out, "manifest.json")["checks"] == {"flat_barrier_noop": True}


class TestTorusCommand:
    def test_cellular_default(self, tmp_path):
        rc, out = _run(tmp_path, "torus", "--n", "32", "--eps", "0.1")
        assert rc == 0
        summary = _summary(out, "torus_summary.json")
        assert summary["divergence_sup"] <= 1e-8
        per = summary["per_eps"][0]
        assert per["uniform_sup_deviation"] <= 1e-8
        assert per["rigidity"]["passed"] is True
        assert (out / "torus_density_00.csv").exists()

    def test_constant_field_with_anisotropic_gamma(self, tmp_path):
        rc, out = _run(
            tmp_path, "torus", "--n", "32", "--eps", "0.1",
            "--constant", "1,1.4142135623730951",
            "--gamma-matrix", "1,0,0,2",
        )
        assert rc == 0
        summary = _summary(out, "torus_summary.json")
        assert summary["field"] == {"constant": [1.0, 1.4142135623730951]}
        assert summary["gamma_matrix"] == [[1.0, 0.0], [0.0, 2.0]]


class TestConfigFileHandling:
    def test_config_file_run_with_flag_override(self, tmp_path):
        cfg = tmp_path / "solve.json"
        cfg.write_text(json.dumps({"subcommand": "solve", "n": 128, "eps": 0.2}))
        out = tmp_path / "out"
        rc = main(["solve", "--config", str(cfg), "--eps", "0.1", "--out-dir", str(out)])
        assert rc == 0
        assert _summary(out, "solve_summary.json")["epsilon"] == 0.1

    def test_subcommand_mismatch(self, tmp_path, capsys):
        cfg = tmp_path / "solve.json"
        cfg.write_text(json.dumps({"subcommand": "torus"}))
        assert main(["solve", "--config", str(cfg)]) == 2
        assert "subcommand" in capsys.readouterr().err

    def test_validation_failure_leaves_no_artifacts(self, tmp_path, capsys):
        out = tmp_path / "out"
        rc = main(["solve", "--eps", "-1", "--out-dir", str(out)])
        assert rc == 2
        assert "error:" in capsys.readouterr().err
        assert not out.exists()

    def test_solver_failure_leaves_no_artifacts(self, tmp_path, capsys):
        # eps below the quadrature resolution threshold fails during
        # compute, after validation; still nothing may be written
        out = tmp_path / "out"
        rc = main(["solve", "--n", "64", "--eps", "1e-9", "--out-dir", str(out)])
        assert rc == 2
        assert "eps" in capsys.readouterr().err
        assert not out.exists()


def test_module_entry_point(tmp_path):
    out = tmp_path / "out"
    proc = subprocess.run(
        [sys.executable, "-m", "zeronoise.cli", "solve", "--n", "128",
         "--no-plots", "--out-dir", str(out)],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert "[ok] flux_constancy" in proc.stdout
    assert (out / "manifest.json").exists()
