import json

import numpy as np
import pytest

from spinboson import harness
from spinboson.bath import BathSpec, QubitSpec
from spinboson.cli import main


def _small(tmp_path, **kw):
    base = dict(tmax=5.0, dt=0.5, fock=(6, 3, 3), heom_cutoff=6, rc_cutoff=8, out=str(tmp_path))
    base.update(kw)
    return harness.ExperimentConfig(**base)


def test_config_validation():
    with pytest.raises(ValueError):
        harness.ExperimentConfig(experiment="fig9")
    with pytest.raises(ValueError):
        harness.ExperimentConfig(solvers=("heom", "tempo"))


def test_time_grid():
    t = harness.time_grid(100.0, 0.1)
    assert t.size == 1001 and t[-1] == pytest.approx(100.0)
    with pytest.raises(ValueError):
        harness.time_grid(0.0, 0.1)


def test_artifacts_are_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        s = harness.run_experiment(_small(d))
        assert s["failures"] == []
    for f in sorted(a.glob("*.csv")):
        assert f.read_bytes() == (b / f.name).read_bytes()
    hdr = json.loads((a / "custom_heom_mats.json").read_text())
    assert hdr["seed"] == 0 and hdr["rng"] == harness.RNG_NAME
    assert len(hdr["decomposition"]) == 4


def test_csv_columns(tmp_path):
    harness.run_experiment(_small(tmp_path))
    data, _ = harness.read_artifact(tmp_path / "custom_pseudomode_mats.csv")
    for k in harness.BASE_COLUMNS + ["mode1_occ", "mode3_occ", "trace_dev", "top_fock_pop"]:
        assert k in data
    data, _ = harness.read_artifact(tmp_path / "custom_rc_mats.csv")
    assert "emission_rate" in data


def test_zero_coupling_all_solvers_agree(tmp_path):
    cfg = _small(tmp_path, lam=0.0, gamma=0.3, omega_q=0.4)
    s = harness.run_experiment(cfg)
    assert s["failures"] == []
    paths = sorted(tmp_path.glob("custom_*_nomats.csv")) + sorted(tmp_path.glob("custom_*_mats.csv"))
    rep = harness.compare_runs(paths)
    assert max(p["max_trace_distance"] for p in rep["pairs"]) < 1e-8


def test_compare_identical_and_mismatch(tmp_path):
    harness.run_experiment(_small(tmp_path, solvers=("heom",), matsubara=(False,)))
    p = tmp_path / "custom_heom_nomats.csv"
    rep = harness.compare_runs([p, p])
    assert rep["pairs"][0]["max_trace_distance"] == 0
    assert all(v == 0 for v in rep["pairs"][0]["max_abs_diff"].values())
    other = tmp_path / "other"
    harness.run_experiment(_small(other, solvers=("heom",), matsubara=(False,), dt=0.25))
    with pytest.raises(ValueError):
        harness.compare_runs([p, other / "custom_heom_nomats.csv"])


def test_failure_recorded_per_solver(tmp_path):
    cfg = _small(tmp_path, solvers=("heom", "rc"), matsubara=(False,), heom_cutoff=0)
    s = harness.run_experiment(cfg)
    assert [f["solver"] for f in s["failures"]] == ["heom"]
    assert (tmp_path / "custom_rc_nomats.csv").exists()


def test_sensitivity_zero_delta(fits):
    rep = harness.sensitivity_mc(fits[(0.4, 0.4)], BathSpec(0.4, 0.4), QubitSpec(), 0.0, 4, seed=1,
                                 heom_cutoff=4)
    assert rep.cv == 0 and rep.std == 0


def test_sensitivity_validation_and_determinism(fits):
    fit, b, q = fits[(0.4, 0.4)], BathSpec(0.4, 0.4), QubitSpec()
    with pytest.raises(ValueError):
        harness.sensitivity_mc(fit, b, q, 0.1, 1)
    with pytest.raises(ValueError):
        harness.sensitivity_mc(fit, b, q, -0.1, 4)
    r1 = harness.sensitivity_mc(fit, b, q, 0.05, 6, seed=7, heom_cutoff=4)
    r2 = harness.sensitivity_mc(fit, b, q, 0.05, 6, seed=7, heom_cutoff=4)
    np.testing.assert_array_equal(r1.populations, r2.populations)
    assert r1.std >= 0


def test_sensitivity_linear_in_delta(fits):
    fit, b, q = fits[(0.4, 0.4)], BathSpec(0.4, 0.4), QubitSpec()
    big = harness.sensitivity_mc(fit, b, q, 0.02, 60, seed=2, heom_cutoff=6)
    small = harness.sensitivity_mc(fit, b, q, 0.01, 60, seed=2, heom_cutoff=6)
    assert 1.0 < big.cv / small.cv < 4.0


def test_shared_delta_switch(fits):
    rep = harness.sensitivity_mc(fits[(0.4, 0.4)], BathSpec(0.4, 0.4), QubitSpec(), 0.05, 5,
                                 seed=0, heom_cutoff=4, shared_delta=True)
    assert rep.shared_delta and rep.n_failed == 0


def test_sweep_validation(tmp_path):
    cfg = _small(tmp_path, gamma=1.0, solvers=("heom",))
    with pytest.raises(ValueError):
        harness.steady_state_sweep([0.2, 0.1], cfg)
    with pytest.raises(ValueError):
        harness.steady_state_sweep([0.0, 0.1], cfg)
    t = harness.steady_state_sweep([1e-5, 0.1], cfg)
    assert len(t["lam"]) == 4 and not any(t["errors"])


def test_cli_runs_and_exit_codes(tmp_path, capsys):
    out = str(tmp_path)
    assert main(["fit", "--lambda", "0.4", "--gamma", "0.4", "--out", out]) == 0
    assert main(["heom", "--tmax", "2", "--dt", "0.5", "--cutoff", "4", "--out", out]) == 0
    assert main(["rc", "--no-matsubara", "--tmax", "2", "--dt", "0.5", "--cutoff", "6", "--out", out]) == 0
    assert main(["pseudomode", "--no-matsubara", "--fock", "6", "--tmax", "2", "--dt", "0.5",
                 "--out", out]) == 0
    assert main(["dephasing", "--lambda", "0.4", "--gamma", "0.4", "--delta", "0", "--tmax", "2",
                 "--dt", "0.5", "--out", out]) == 0
    assert main(["compare", str(tmp_path / "custom_heom_mats.csv"),
                 str(tmp_path / "custom_heom_mats.csv")]) == 0
    assert main(["heom", "--cutoff", "0", "--tmax", "2", "--out", out]) == 1
    assert main(["heom", "--gamma", "3.0", "--out", out]) == 2
    capsys.readouterr()


def test_cli_sensitivity_and_sweep(tmp_path, capsys):
    out = str(tmp_path)
    assert main(["sensitivity", "--lambda", "0.4", "--gamma", "0.4", "--cutoff", "4", "--runs", "3",
                 "--delta-max", "0.05,0.01", "--out", out]) == 0
    assert main(["sweep", "--gamma", "1.0", "--cutoff", "4", "--lambdas", "1e-5,0.1",
                 "--solvers", "heom,rc", "--out", out]) == 0
    data, _ = harness.read_artifact(tmp_path / "sweep.csv")
    assert data["lam"].size == 8
    capsys.readouterr()


def test_figure1_recipe(tmp_path):
    s = harness.run_experiment(harness.ExperimentConfig(experiment="fig1", out=str(tmp_path), tmax=4.0))
    assert s["failures"] == []
    data, hdr = harness.read_artifact(tmp_path / "fig1_correlation.csv")
    np.testing.assert_allclose(data["c_fit_im"], data["c_exact_im"], atol=1e-10)
    assert hdr["fit"]["seed"] == 0
