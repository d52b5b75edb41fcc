import json

import numpy as np
import pytest

from qndspin.cli import main
from qndspin.config import ConfigError, load_and_validate
from qndspin.scenarios import (
    noise_budget_from_config,
    run_scenario,
    scenario_params_report,
)


@pytest.fixture(scope="module")
def cfg():
    return load_and_validate()


class TestConfig:
    def test_defaults_resolve_to_reference_parameters(self, cfg):
        assert cfg.couplings.antinode_cooperativity == pytest.approx(0.203, abs=0.007)
        assert cfg.n0 == pytest.approx(3.3e4, rel=0.02)
        assert cfg.probe.quantum_efficiency == 0.43
        assert cfg.pulses.composite_pi_infidelity == 0.02

    def test_missing_kappa_named(self, tmp_path):
        # absent keys fall back to defaults; an explicitly removed value
        # (null) is a violation that names the key
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"resonator": {"linewidth_mhz": None}}))
        with pytest.raises(ConfigError) as err:
            load_and_validate(path)
        assert any("linewidth_mhz" in v for v in err.value.violations)

    def test_negative_trials_rejected(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"n_trials": -5}))
        with pytest.raises(ConfigError) as err:
            load_and_validate(path)
        assert any("n_trials" in v for v in err.value.violations)

    def test_all_violations_collected(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"n_trials": -5, "master_seed": -1}))
        with pytest.raises(ConfigError) as err:
            load_and_validate(path)
        assert len(err.value.violations) >= 2

    def test_partial_override_merges(self, tmp_path):
        path = tmp_path / "override.json"
        path.write_text(json.dumps({"probe": {"photons_per_measurement": 3e5}}))
        cfg = load_and_validate(path)
        assert cfg.probe.photons_per_measurement == 3e5
        assert cfg.probe.quantum_efficiency == 0.43  # default kept

    def test_b1_target_applied(self, cfg):
        from qndspin.scattering import raman_noise_coefficient

        assert raman_noise_coefficient(cfg.rates, 1.0) == pytest.approx(
            4.7e-8, rel=1e-9
        )


class TestParamsReport:
    def test_report_keys_match_chain(self, cfg):
        rep = scenario_params_report(cfg)
        assert rep["antinode_cooperativity_probe"] == pytest.approx(0.203, abs=0.007)
        assert rep["domega_dn_kappa"] == pytest.approx(4.5e-5, abs=0.2e-5)
        assert rep["phase_per_photon_max_urad"] == pytest.approx(253.0, abs=8.0)
        assert rep["p_total_to_raman"] == pytest.approx(3.0, abs=0.4)

    def test_budget_formula(self, cfg):
        budget = noise_budget_from_config(cfg)
        dn_du = 1.0 / (2 * cfg.couplings.domega_dn)
        assert budget.b_minus1 == pytest.approx(
            2 * (1.9 / 0.43) * dn_du**2, rel=1e-12
        )
        assert budget.b_minus2 == 6e13


class TestScenarioArtifacts:
    def test_limits_byte_identical_rerun(self, cfg, tmp_path):
        a, _ = run_scenario("limits", cfg, tmp_path / "a")
        b, _ = run_scenario("limits", cfg, tmp_path / "b")
        assert a.read_bytes() == b.read_bytes()

    def test_fig3_schema_and_determinism(self, cfg, tmp_path):
        path1, man1 = run_scenario("fig3", cfg, tmp_path / "a", n_trials=24, seed=5)
        path2, man2 = run_scenario("fig3", cfg, tmp_path / "b", n_trials=24, seed=5)
        header = path1.read_text().splitlines()[0]
        assert header == (
            "p,sigma2,sigma2_err,sigma2_db,C,zeta_m_db,zeta_e_db,"
            "sigma2_model,sigma2_model_db,zeta_m_model_db,zeta_e_model_db"
        )
        assert path1.read_bytes() == path2.read_bytes()
        m1 = json.loads(man1.read_text())
        m2 = json.loads(man2.read_text())
        assert m1["outputs"]["fig3.csv"] == m2["outputs"]["fig3.csv"]

    def test_fig2_schema(self, cfg, tmp_path):
        path, _ = run_scenario("fig2", cfg, tmp_path, n_trials=24, seed=3)
        header = path.read_text().splitlines()[0]
        assert header == "N0,y1,y1_err,y2,y2_err,meas2,meas2_err,css_line"
        sidecar = json.loads((tmp_path / "fig2_fits.json").read_text())
        assert "y1" in sidecar and "a1_fixed" in sidecar["y1"]

    def test_rotation_and_ramsey_schemas(self, cfg, tmp_path):
        path, _ = run_scenario("rotation", cfg, tmp_path / "rot",
                               n_trials=24, seed=3)
        assert path.read_text().splitlines()[0] == (
            "alpha_rad,var_alpha,var_alpha_err,model"
        )
        path, _ = run_scenario("ramsey", cfg, tmp_path / "ram",
                               n_trials=64, seed=3)
        lines = path.read_text().splitlines()
        assert lines[0] == "sequence,sigma2,sigma2_db"
        assert lines[1].startswith("squeeze-readout")

    def test_unknown_scenario(self, cfg, tmp_path):
        with pytest.raises(ValueError):
            run_scenario("fig7", cfg, tmp_path)

    def test_fig2_scaling_property(self, tmp_path):
        # y1 grows ~ N0 while 2 Var(M1-M2) stays below the CSS line with
        # slope vs N0 given by the Raman b1 term alone (technical noise
        # and microwave errors disabled so the other terms are flat).
        import json as _json

        from qndspin.scattering import raman_noise_coefficient

        override = tmp_path / "cfg.json"
        override.write_text(_json.dumps({
            "noise": {"technical": False, "microwave": False},
            "preparation": {"prep_noise_factor": 1.0,
                            "quadratic_noise_a2": 0.0,
                            "impurity_fraction": 0.0},
            "scenarios": {"fig2": {
                "atom_grid": [6e3, 1.4e4, 2.4e4, 3.6e4, 5e4],
                "preparation": {"prep_noise_factor": 1.0,
                                "quadratic_noise_a2": 0.0,
                                "impurity_fraction": 0.0},
            }},
        }))
        cfg2 = load_and_validate(override)
        path, _ = run_scenario("fig2", cfg2, tmp_path / "out",
                               n_trials=4000, seed=31)
        data = np.genfromtxt(path, delimiter=",", names=True)
        n0 = data["N0"]
        # projection noise: y1 grows as N0 on top of the flat detector
        # noise, with the small flip-induced slope reduction
        p = cfg2.probe.photons_per_measurement
        budget = noise_budget_from_config(cfg2, 1.0)
        flip_slope = (
            2.0 / 3.0 * cfg2.rates.p_delta_f
            + 0.5 * cfg2.rates.p_delta_mf
            + 2.0 / 3.0 * cfg2.rates.p_delta_f_delta_mf
        ) * p
        y1_model = (
            budget.b_minus2 / p**2 + budget.b_minus1 / p
            + (1.0 - flip_slope) * n0
        )
        assert np.all(np.abs(data["y1"] - y1_model) <= 4 * data["y1_err"])
        # measurement variance sits below the CSS line at large N0
        assert np.all(data["meas2"][2:] < n0[2:])
        # and its N0 slope matches the b1-induced term
        p = cfg2.probe.photons_per_measurement
        b1_per_atom = raman_noise_coefficient(cfg2.rates, 1.0)
        w = 1.0 / data["meas2_err"] ** 2
        xm = np.average(n0, weights=w)
        ym = np.average(data["meas2"], weights=w)
        slope = np.sum(w * (n0 - xm) * (data["meas2"] - ym)) / np.sum(
            w * (n0 - xm) ** 2
        )
        slope_se = 1.0 / np.sqrt(np.sum(w * (n0 - xm) ** 2))
        assert abs(slope - b1_per_atom * p) <= 3 * slope_se


class TestCli:
    def test_run_limits_exit_zero(self, tmp_path, capsys):
        rc = main(["run", "--scenario", "limits", "--out", str(tmp_path)])
        assert rc == 0
        assert (tmp_path / "limits.json").exists()
        assert (tmp_path / "limits_manifest.json").exists()
        assert (tmp_path / "resolved_config.json").exists()

    def test_bad_config_exit_two(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"n_trials": 1}))
        rc = main([
            "run", "--scenario", "limits", "--config", str(bad),
            "--out", str(tmp_path / "o"),
        ])
        assert rc == 2
        assert "n_trials" in capsys.readouterr().err

    def test_missing_config_file_exit_two(self, tmp_path):
        rc = main([
            "run", "--scenario", "limits",
            "--config", str(tmp_path / "nope.json"),
            "--out", str(tmp_path / "o"),
        ])
        assert rc == 2

    def test_verify_roundtrip_and_mismatch(self, tmp_path, capsys):
        out = tmp_path / "run"
        rc = main([
            "run", "--scenario", "ramsey", "--trials", "32", "--seed", "11",
            "--out", str(out),
        ])
        assert rc == 0
        manifest = out / "ramsey_manifest.json"
        rc = main([
            "run", "--scenario", "ramsey",
            "--verify", str(manifest),
        ])
        assert rc == 0
        # tamper with the recorded hash -> exit 4
        data = json.loads(manifest.read_text())
        data["outputs"]["ramsey.csv"] = "0" * 64
        manifest.write_text(json.dumps(data))
        rc = main(["run", "--scenario", "ramsey", "--verify", str(manifest)])
        assert rc == 4

    def test_runtime_error_exit_three(self, tmp_path, capsys):
        # photon number far outside the first-order flip regime trips the
        # engine's validity guard at runtime
        bad = tmp_path / "hot.json"
        bad.write_text(json.dumps(
            {"probe": {"photons_per_measurement": 5e6}}
        ))
        rc = main([
            "run", "--scenario", "ramsey", "--config", str(bad),
            "--trials", "8", "--out", str(tmp_path / "o"),
        ])
        assert rc == 3
        assert "P_Ram" in capsys.readouterr().err

    def test_thread_count_does_not_change_results(self, tmp_path):
        out1, out2 = tmp_path / "t1", tmp_path / "t4"
        for out, threads in ((out1, "1"), (out2, "4")):
            rc = main([
                "run", "--scenario", "fig3", "--trials", "24", "--seed", "9",
                "--out", str(out), "--threads", threads,
            ])
            assert rc == 0
        assert (out1 / "fig3.csv").read_bytes() == (out2 / "fig3.csv").read_bytes()
