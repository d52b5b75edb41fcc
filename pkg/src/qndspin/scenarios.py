"""Named desk-scale experiment scenarios and their file artifacts.

Each scenario runs deterministic physics plus (where relevant) Monte
Carlo trials, writes plot-ready CSV/JSON artifacts, and records a run
manifest (seed, config hash, scenario, code version, output hashes) so
that reruns are byte-identical and verifiable.
"""

from __future__ import annotations

import hashlib
import json
import math
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (
    NoiseBudget,
    conditional_variance,
    contrast_model,
    fit_quadratic_scaling,
    squeezing_parameters,
    to_db,
    variance_stats,
)
from .config import RunConfig
from .limits import LimitInputs, limits_report
from .measurement import SequencePlan, run_trials
from .scattering import raman_noise_coefficient
from .spinstate import PreparationModel, prepare_css
from dataclasses import replace

SCENARIO_NAMES = (
    "params-report", "fig2", "fig3", "rotation", "ramsey", "limits",
)


def noise_budget_from_config(cfg: RunConfig, n0: float | None = None) -> NoiseBudget:
    """Analytic four-term budget implied by the configuration."""
    n0 = cfg.n0 if n0 is None else n0
    dn_du = 1.0 / (2.0 * cfg.couplings.domega_dn)
    b_minus1 = 2.0 * (cfg.probe.apd_excess_factor / cfg.probe.quantum_efficiency) * dn_du**2
    return NoiseBudget(
        b_minus2=cfg.probe.electronic_noise_b2,
        b_minus1=b_minus1,
        b0_tech=cfg.probe.technical_noise_fraction * n0,
        b0_mu=cfg.pulses.mu_total * n0,
        b1=raman_noise_coefficient(cfg.rates, n0),
        provenance={k: "fixed" for k in
                    ("b_minus2", "b_minus1", "b0_tech", "b0_mu", "b1")},
    )


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(
                repr(float(v)) if isinstance(v, (int, float, np.floating)) else str(v)
                for v in row
            ) + "\n")


def _write_json(path: Path, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, sort_keys=True, indent=1)
        fh.write("\n")


def _file_hash(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _emit_manifest(out_dir: Path, scenario: str, cfg: RunConfig,
                   n_trials: int, seed: int, files: list[Path]) -> Path:
    manifest = {
        "scenario": scenario,
        "seed": int(seed),
        "n_trials": int(n_trials),
        "config_hash": cfg.config_hash(),
        "version": __version__,
        "outputs": {f.name: _file_hash(f) for f in files},
    }
    path = out_dir / f"{scenario}_manifest.json"
    _write_json(path, manifest)
    return path


def _echo_config(out_dir: Path, cfg: RunConfig) -> Path:
    path = out_dir / "resolved_config.json"
    _write_json(path, cfg.raw)
    return path


def scenario_params_report(cfg: RunConfig) -> dict:
    """Deterministic physics report: the full coupling/scattering chain."""
    c = cfg.couplings
    budget = noise_budget_from_config(cfg)
    kappa = cfg.resonator.linewidth
    return {
        "constants_version": cfg.constants.version,
        "antinode_cooperativity_probe": c.antinode_cooperativity,
        "effective_cooperativity": c.effective_cooperativity,
        "eta_ratio": c.effective_cooperativity / c.antinode_cooperativity,
        "effective_atom_number": c.effective_atom_number,
        "collective_cooperativity": c.effective_atom_number
        * c.effective_cooperativity,
        "shift_per_atom_f1_kappa": c.shift_per_atom_f1,
        "shift_per_atom_f2_kappa": c.shift_per_atom_f2,
        "shift_per_atom_f1_comp_kappa": c.shift_per_atom_f1_comp,
        "shift_per_atom_f2_comp_kappa": c.shift_per_atom_f2_comp,
        "domega_dn_kappa": c.domega_dn,
        "delta_prime_mhz": c.delta_prime / (2e6 * math.pi),
        "phase_per_photon_max_urad": c.phase_per_photon_max * 1e6,
        "phase_per_photon_eff_urad": c.phase_per_photon_eff * 1e6,
        "kappa_mhz": kappa / (2e6 * math.pi),
        "p_raman": cfg.rates.p_raman_total,
        "p_total": cfg.rates.p_total,
        "p_total_to_raman": cfg.rates.p_total / cfg.rates.p_raman_total,
        "p_delta_f": cfg.rates.p_delta_f,
        "p_delta_mf": cfg.rates.p_delta_mf,
        "p_delta_f_delta_mf": cfg.rates.p_delta_f_delta_mf,
        "p_rayleigh_f1": cfg.rates.p_rayleigh_f1,
        "p_rayleigh_f2": cfg.rates.p_rayleigh_f2,
        "b1_per_photon": budget.b1,
        "b_minus1": budget.b_minus1,
    }


def _run(cfg: RunConfig, plan, n_trials, seed, state, threads=1, probe=None):
    return run_trials(
        plan, n_trials, seed, state, probe or cfg.probe, cfg.rates,
        cfg.pulses, cfg.couplings, threads=threads,
        config_snapshot=cfg.raw,
    )


def scenario_fig2(cfg: RunConfig, out_dir: Path, n_trials: int | None = None,
                  seed: int | None = None, threads: int = 1):
    """Projection-noise scaling scan: y1, y2, and 2 Var(M1-M2) vs N0."""
    out_dir.mkdir(parents=True, exist_ok=True)
    n_trials = n_trials or cfg.n_trials
    seed = cfg.master_seed if seed is None else seed
    opts = cfg.scenario_options("fig2")
    grid = opts.get("atom_grid", [cfg.n0])
    prep = PreparationModel(
        **{**{"prep_noise_factor": 1.0, "quadratic_noise_a2": 9e-6,
              "initial_contrast": cfg.preparation.initial_contrast,
              "impurity_fraction": cfg.preparation.impurity_fraction},
           **opts.get("preparation", {})}
    )

    rows = []
    for i, n0 in enumerate(grid):
        state = prepare_css(n0, prep)
        ts1 = _run(cfg, "squeeze-readout", n_trials, seed + 2 * i, state, threads)
        rep1 = variance_stats(ts1)
        n0_pair = n0 * (1.0 - prep.impurity_fraction)
        state2 = prepare_css(n0_pair, prep)
        ts2 = _run(cfg, "double-prep", n_trials, seed + 2 * i + 1, state2, threads)
        rep2 = variance_stats(ts2)
        rows.append([
            n0, rep1.y1, rep1.y1_se, rep2.y2, rep2.y2_se,
            4.0 * rep1.var_meas, 4.0 * rep1.var_meas_se,
            n0,
        ])

    csv_path = out_dir / "fig2.csv"
    _write_csv(
        csv_path,
        ["N0", "y1", "y1_err", "y2", "y2_err", "meas2", "meas2_err", "css_line"],
        rows,
    )

    arr = np.array([[r[0], r[1], r[2], r[3], r[4]] for r in rows], dtype=float)
    fits = {}
    if len(grid) >= 4 and max(grid) / min(grid) >= 3:
        for label, col, se_col in (("y1", 1, 2), ("y2", 3, 4)):
            coef, se = fit_quadratic_scaling(arr[:, 0], arr[:, col], arr[:, se_col])
            coef_c, se_c = fit_quadratic_scaling(
                arr[:, 0], arr[:, col], arr[:, se_col], constrain_a1=True
            )
            fits[label] = {
                "unconstrained": {"a0": coef[0], "a1": coef[1], "a2": coef[2],
                                  "se": list(se)},
                "a1_fixed": {"a0": coef_c[0], "a1": 1.0, "a2": coef_c[2],
                             "se": list(se_c)},
            }
    fit_path = out_dir / "fig2_fits.json"
    _write_json(fit_path, fits)
    files = [csv_path, fit_path, _echo_config(out_dir, cfg)]
    manifest = _emit_manifest(out_dir, "fig2", cfg, n_trials, seed, files)
    return csv_path, manifest


def scenario_fig3(cfg: RunConfig, out_dir: Path, n_trials: int | None = None,
                  seed: int | None = None, threads: int = 1):
    """Conditional squeezing vs photon number with model-curve columns."""
    out_dir.mkdir(parents=True, exist_ok=True)
    n_trials = n_trials or cfg.n_trials
    seed = cfg.master_seed if seed is None else seed
    grid = cfg.scenario_options("fig3").get(
        "photon_grid", [cfg.probe.photons_per_measurement]
    )
    n0 = cfg.n0
    css = n0 / 4.0
    budget = noise_budget_from_config(cfg)
    cpars = cfg.contrast_params
    state = prepare_css(n0, cfg.preparation)

    rows = []
    for i, p in enumerate(grid):
        probe = replace(cfg.probe, photons_per_measurement=p)
        ts = _run(cfg, "squeeze-readout", n_trials, seed + i, state, threads,
                  probe=probe)
        rep = variance_stats(ts)
        eps = p * cfg.rates.p_delta_f + cfg.pulses.mu_total
        cond = conditional_variance(rep.var_prep, rep.var_meas, eps)
        dm = rep.var_prep**2 / (rep.var_prep + rep.var_meas) ** 2
        dp = rep.var_meas**2 / (rep.var_prep + rep.var_meas) ** 2
        cond_err = math.hypot(dm * rep.var_meas_se, dp * rep.var_prep_se) / (
            1 - eps
        ) ** 2
        sigma2 = cond / css
        c_meas = contrast_model(p, cpars["c0"], cpars["alpha"], cpars["beta"])
        c_in = cpars["c0"] / (1.0 - cpars["readout_loss"])
        sq = squeezing_parameters(
            sigma2, float(c_meas), c_in, rep.var_prep, rep.var_meas,
            n0 / 2.0, epsilon_p=eps,
        )
        # model curves from the analytic budget composition
        vm_model = budget.evaluate(p) / 4.0
        vp_model = cfg.preparation.prep_variance(n0)
        sig_model = conditional_variance(vp_model, vm_model, eps) / css
        sq_model = squeezing_parameters(
            sig_model, float(c_meas), c_in, vp_model, vm_model, n0 / 2.0,
            epsilon_p=eps,
        )
        rows.append([
            p, sigma2, cond_err / css, to_db(sigma2), c_meas,
            sq.zeta_m_db, sq.zeta_e_db,
            sig_model, to_db(sig_model), sq_model.zeta_m_db, sq_model.zeta_e_db,
        ])

    csv_path = out_dir / "fig3.csv"
    _write_csv(
        csv_path,
        ["p", "sigma2", "sigma2_err", "sigma2_db", "C",
         "zeta_m_db", "zeta_e_db",
         "sigma2_model", "sigma2_model_db", "zeta_m_model_db",
         "zeta_e_model_db"],
        rows,
    )
    files = [csv_path, _echo_config(out_dir, cfg)]
    manifest = _emit_manifest(out_dir, "fig3", cfg, n_trials, seed, files)
    return csv_path, manifest


def scenario_rotation(cfg: RunConfig, out_dir: Path, n_trials: int | None = None,
                      seed: int | None = None, threads: int = 1):
    """Variance of Sz after rotating the squeezed state about <S>."""
    out_dir.mkdir(parents=True, exist_ok=True)
    n_trials = n_trials or cfg.n_trials
    seed = cfg.master_seed if seed is None else seed
    opts = cfg.scenario_options("rotation")
    p = opts.get("photons", cfg.probe.photons_per_measurement)
    angles = np.deg2rad(np.asarray(
        opts.get("angles_deg", [0, 30, 60, 90, 120, 150, 180]), dtype=float
    ))
    n0 = cfg.n0
    probe = replace(cfg.probe, photons_per_measurement=p)

    from .spinstate import measurement_backaction

    base = prepare_css(n0, cfg.preparation)
    state = measurement_backaction(
        base, p, cfg.couplings.phase_per_photon_eff, n0,
    )

    budget = noise_budget_from_config(cfg)
    vm_model = budget.evaluate(p) / 4.0
    vp_model = cfg.preparation.prep_variance(n0)
    var_z_cond = conditional_variance(vp_model, vm_model, 0.0)
    var_y_model = state.var_y

    ts0 = _run(cfg, "squeeze-readout", n_trials, seed, state, threads, probe=probe)
    rep0 = variance_stats(ts0)
    var_meas0 = rep0.var_meas

    rows = []
    for i, alpha in enumerate(angles):
        plan = SequencePlan("rotate-alpha", rotation_angle=float(alpha))
        ts = _run(cfg, plan, n_trials, seed + 1 + i, state, threads, probe=probe)
        keep = ~ts.saturated
        diff = ts.m1[keep] - ts.m2[keep]
        var_diff = float(np.var(diff, ddof=1))
        est = max(var_diff - var_meas0, 0.0)
        est_err = var_diff * math.sqrt(2.0 / (keep.sum() - 1))
        model = (
            var_z_cond * math.cos(alpha) ** 2
            + var_y_model * math.sin(alpha) ** 2
        )
        rows.append([alpha, est, est_err, model])

    csv_path = out_dir / "rotation.csv"
    _write_csv(csv_path, ["alpha_rad", "var_alpha", "var_alpha_err", "model"], rows)
    files = [csv_path, _echo_config(out_dir, cfg)]
    manifest = _emit_manifest(out_dir, "rotation", cfg, n_trials, seed, files)
    return csv_path, manifest


def _conditional_from_records(ts, var_meas_model: float):
    """min_w Var(M2 - w M1) minus the readout imprecision."""
    keep = ~ts.saturated
    m1, m2 = ts.m1[keep], ts.m2[keep]
    w = np.cov(m1, m2, ddof=1)[0, 1] / np.var(m1, ddof=1)
    resid = float(np.var(m2 - w * m1, ddof=1))
    return max(resid - var_meas_model, 1e-12)


def scenario_ramsey(cfg: RunConfig, out_dir: Path, n_trials: int | None = None,
                    seed: int | None = None, threads: int = 1):
    """Squeezing before vs after a short Ramsey clock sequence."""
    out_dir.mkdir(parents=True, exist_ok=True)
    n_trials = n_trials or cfg.n_trials
    seed = cfg.master_seed if seed is None else seed
    opts = cfg.scenario_options("ramsey")
    plan = SequencePlan(
        "ramsey-clock",
        precession_phase=opts.get("precession_phase", 0.0),
        phase_noise_rms=opts.get("phase_noise_rms", 0.0),
    )
    n0 = cfg.n0
    css = n0 / 4.0
    state = prepare_css(n0, cfg.preparation)
    budget = noise_budget_from_config(cfg)
    vm_model = budget.evaluate(cfg.probe.photons_per_measurement) / 4.0

    ts_before = _run(cfg, "squeeze-readout", n_trials, seed, state, threads)
    ts_after = _run(cfg, plan, n_trials, seed + 1, state, threads)
    sigma2_before = _conditional_from_records(ts_before, vm_model) / css
    sigma2_after = _conditional_from_records(ts_after, vm_model) / css

    rows = [
        ["squeeze-readout", sigma2_before, to_db(sigma2_before)],
        ["ramsey-clock", sigma2_after, to_db(sigma2_after)],
    ]
    csv_path = out_dir / "ramsey.csv"
    _write_csv(csv_path, ["sequence", "sigma2", "sigma2_db"], rows)
    files = [csv_path, _echo_config(out_dir, cfg)]
    manifest = _emit_manifest(out_dir, "ramsey", cfg, n_trials, seed, files)
    return csv_path, manifest


def scenario_limits(cfg: RunConfig, out_dir: Path,
                    seed: int | None = None, **_):
    """Fundamental-limit report for the configured system."""
    out_dir.mkdir(parents=True, exist_ok=True)
    c = cfg.couplings
    inputs = LimitInputs(
        collective_cooperativity=c.effective_atom_number
        * c.effective_cooperativity,
        p_raman=cfg.rates.p_raman_total,
        p_total=cfg.rates.p_total,
        phi_eff=c.phase_per_photon_eff,
        p_rayleigh_f1=cfg.rates.p_rayleigh_f1,
        p_rayleigh_f2=cfg.rates.p_rayleigh_f2,
    )
    report = limits_report(inputs)
    json_path = out_dir / "limits.json"
    _write_json(json_path, report)
    files = [json_path, _echo_config(out_dir, cfg)]
    manifest = _emit_manifest(
        out_dir, "limits", cfg, 0, cfg.master_seed if seed is None else seed, files
    )
    return json_path, manifest


def run_scenario(name: str, cfg: RunConfig, out_dir: Path,
                 n_trials: int | None = None, seed: int | None = None,
                 threads: int = 1):
    """Dispatch a named scenario; returns (primary artifact, manifest)."""
    out_dir = Path(out_dir)
    if name == "params-report":
        out_dir.mkdir(parents=True, exist_ok=True)
        path = out_dir / "params_report.json"
        _write_json(path, scenario_params_report(cfg))
        files = [path, _echo_config(out_dir, cfg)]
        manifest = _emit_manifest(
            out_dir, "params-report", cfg, 0,
            cfg.master_seed if seed is None else seed, files,
        )
        return path, manifest
    if name == "fig2":
        return scenario_fig2(cfg, out_dir, n_trials, seed, threads)
    if name == "fig3":
        return scenario_fig3(cfg, out_dir, n_trials, seed, threads)
    if name == "rotation":
        return scenario_rotation(cfg, out_dir, n_trials, seed, threads)
    if name == "ramsey":
        return scenario_ramsey(cfg, out_dir, n_trials, seed, threads)
    if name == "limits":
        return scenario_limits(cfg, out_dir, seed=seed)
    raise ValueError(f"unknown scenario {name!r}; choose from {SCENARIO_NAMES}")
