"""Acceptance suite: one test per criterion, with pinned tolerances.

Run with `pytest tests/test_acceptance.py -v -s` to see one PASS line
per criterion.  These are parameter-driven reproductions of published
values (the original experiment's raw records are not available), so
every target number and tolerance is stated inline.
"""

import math

import numpy as np
import pytest

from qndspin.analysis import (
    conditional_variance,
    contrast_model,
    fit_noise_model,
    NoiseBudget,
    squeezing_parameters,
    to_db,
    variance_stats,
)
from qndspin.cavity import antinode_cooperativity, ramsey_damping_envelope
from qndspin.cavity import inverse_transmission, lorentzian_transmission
from qndspin.config import load_and_validate
from qndspin.constants import TWO_PI
from qndspin.limits import (
    integrate_sigma2,
    LimitInputs,
    limit_contrast_and_zeta,
    optimal_photon_number,
    sigma2_min,
)
from qndspin.measurement import (
    NoiseSwitches,
    run_trials,
    spinflip_covariance_analytic,
)
from qndspin.scattering import raman_noise_coefficient, raman_rates
from qndspin.scenarios import noise_budget_from_config
from qndspin.spinstate import (
    GaussianSpinState,
    prepare_css,
    PreparationModel,
    PulseModel,
    rotate,
)
from dataclasses import replace

N0 = 3.3e4
CSS = N0 / 4.0


@pytest.fixture(scope="module")
def cfg():
    return load_and_validate()


def _report(line: str) -> None:
    print(f"\n{line}")


def test_criterion_1_cooperativity(cfg):
    """Antinode cooperativity at both wavelengths."""
    eta_probe = antinode_cooperativity(5.6e3, 780.241209686e-9, 56.9e-6)
    eta_trap = antinode_cooperativity(4.2e4, 851e-9, 59.5e-6)
    assert eta_probe == pytest.approx(0.203, abs=0.007)
    assert eta_trap == pytest.approx(1.65, abs=0.04)
    _report(
        f"ACCEPTANCE 1 PASS: eta0(780nm) = {eta_probe:.4f} (0.203 +- 0.007), "
        f"eta0(851nm) = {eta_trap:.3f} (1.65 +- 0.04)"
    )


def test_criterion_2_coupling_chain(cfg):
    """eta_eff/eta0, d omega/dN, phi0, and probe-mode shifts."""
    c = cfg.couplings
    ratio = c.effective_cooperativity / c.antinode_cooperativity
    assert ratio == pytest.approx(0.47, abs=0.01)
    assert c.domega_dn == pytest.approx(4.5e-5, abs=0.2e-5)
    assert c.phase_per_photon_max == pytest.approx(253e-6, abs=8e-6)
    assert c.shift_per_atom_f2 == pytest.approx(39e-6, rel=0.15)
    assert c.shift_per_atom_f1 == pytest.approx(-49e-6, rel=0.15)
    _report(
        "ACCEPTANCE 2 PASS: eta_eff/eta0 = "
        f"{ratio:.3f} (0.47 +- 0.01), domega/dN = {c.domega_dn * 1e5:.2f}e-5 "
        f"(4.5 +- 0.2), phi0 = {c.phase_per_photon_max * 1e6:.0f} urad "
        f"(253 +- 8), shifts = {c.shift_per_atom_f2 * 1e6:+.1f}/"
        f"{c.shift_per_atom_f1 * 1e6:+.1f} x1e-6 kappa (+39/-49 +- 15%)"
    )


def test_criterion_3_scattering(cfg):
    """Raman rates from first principles (no b1 rescaling)."""
    eta_geom = (
        cfg.couplings.effective_cooperativity
        / cfg.constants.d2_oscillator_strength
    )
    rates = raman_rates(TWO_PI * 3.57e9, eta_geom)
    ratio = rates.p_total / rates.p_raman_total
    b1 = raman_noise_coefficient(rates, 1.0)
    assert rates.p_raman_total == pytest.approx(5.6e-8, rel=0.20)
    assert ratio == pytest.approx(3.0, abs=0.4)
    assert b1 == pytest.approx(4.7e-8, rel=0.20)
    _report(
        f"ACCEPTANCE 3 PASS: P_Ram = {rates.p_raman_total:.2e} "
        f"(5.6e-8 +- 20%), P_sc/P_Ram = {ratio:.2f} (3.0 +- 0.4), "
        f"b1 = {b1:.2e} N0 (4.7e-8 +- 20%)"
    )


def test_criterion_4_noise_budget_monte_carlo(cfg):
    """Each noise source alone matches its analytic term; covariance
    structure matches the first-order flip algebra."""
    p = 6.4e5
    state = prepare_css(N0, PreparationModel())
    budget = noise_budget_from_config(cfg, N0)
    no_errors = PulseModel(composite_pi_infidelity=0.0, lock_light_mu=0.0)
    mu_pulses = PulseModel(composite_pi_infidelity=0.02, lock_light_mu=0.0)

    checks = []
    # (analytic term, pulse model, relative validity allowance of the
    # first-order expression itself: flip terms carry O(p P_Ram + mu)
    # second-order corrections in the exact physics)
    flip_allowance = p * cfg.rates.p_raman_total + 0.02
    source_terms = {
        "electronic": (budget.b_minus2 / p**2, no_errors, 0.0, 101),
        "shot": (budget.b_minus1 / p, no_errors, 0.0, 102),
        "technical": (budget.b0_tech, no_errors, 0.0, 103),
        "microwave": (budget.b0_mu, mu_pulses, 0.02, 104),
        "raman": (budget.b1 * p, no_errors, flip_allowance, 105),
    }
    n = 10_000
    probe_base = replace(cfg.probe, photons_per_measurement=p)
    for name, (expected, pulses, allowance, seed) in source_terms.items():
        probe = replace(probe_base, switches=NoiseSwitches.only(name))
        ts = run_trials(
            "squeeze-readout", n, seed, state, probe,
            cfg.rates, pulses, cfg.couplings,
        )
        sample = 2.0 * float(np.var(ts.m1 - ts.m2, ddof=1))
        se = sample * math.sqrt(2.0 / (n - 1))
        assert abs(sample - expected) <= 3.0 * se + allowance * expected, (
            f"{name}: {sample:.1f} vs {expected:.1f} (3 SE = {3 * se:.1f})"
        )
        checks.append(f"{name} {sample / expected:.3f}x")

    # covariance structure at 1e5 trials, flips only
    n_cov = 100_000
    probe = replace(probe_base, switches=NoiseSwitches(
        shot=False, electronic=False, technical=False,
        raman=True, microwave=True,
    ))
    ts = run_trials(
        "squeeze-readout", n_cov, 2024, state, probe, cfg.rates,
        mu_pulses, cfg.couplings,
    )
    sc = spinflip_covariance_analytic(
        cfg.rates.p_delta_f, cfg.rates.p_delta_mf,
        cfg.rates.p_delta_f_delta_mf, 0.02, p, N0,
    )
    sample_cov = np.cov(ts.pulses.T, ddof=1)
    se_scale = math.sqrt(2.0 / (n_cov - 1)) * CSS
    worst = float(np.max(np.abs(sample_cov - sc.cov))) / se_scale
    assert worst <= 3.0, f"covariance structure off by {worst:.2f} SE"
    _report(
        "ACCEPTANCE 4 PASS: per-source 2Var(M1-M2) ratios "
        + ", ".join(checks)
        + f"; flip covariance within {worst:.2f} SE (<= 3) at 1e5 trials"
    )


def test_criterion_5_conditional_squeezing(cfg):
    """sigma^2 at p = 6.4e5 with the published budget coefficients."""
    p = 6.4e5
    budget = NoiseBudget(
        b_minus2=6e13,
        b_minus1=noise_budget_from_config(cfg, N0).b_minus1,  # formula value
        b0_tech=0.04 * N0,
        b0_mu=0.02 * N0,
        b1=4.7e-8 * N0,
    )
    var_meas_model = budget.evaluate(p) / 4.0
    var_prep_model = 1.14 * CSS
    sigma2_model = conditional_variance(var_prep_model, var_meas_model) / CSS
    assert to_db(sigma2_model) == pytest.approx(-8.9, abs=1.0)

    # Monte Carlo at the same coefficients
    n = 10_000
    state = prepare_css(N0, PreparationModel(prep_noise_factor=1.14))
    probe = replace(cfg.probe, photons_per_measurement=p)
    ts = run_trials(
        "squeeze-readout", n, 55, state, probe, cfg.rates,
        PulseModel(0.02, 0.0), cfg.couplings,
    )
    rep = variance_stats(ts)
    sigma2_mc = conditional_variance(rep.var_prep, rep.var_meas) / CSS
    assert to_db(sigma2_mc) == pytest.approx(-8.9, abs=1.0)

    eps = p * cfg.rates.p_delta_f + 0.02
    shift = to_db(conditional_variance(var_prep_model, var_meas_model, eps)) - to_db(
        conditional_variance(var_prep_model, var_meas_model)
    )
    assert 0.2 <= shift <= 0.4
    _report(
        f"ACCEPTANCE 5 PASS: sigma^2 = {to_db(sigma2_model):.2f} dB model / "
        f"{to_db(sigma2_mc):.2f} dB MC (-8.9 +- 1.0; reference -9.1(8)/-8.8(8)); "
        f"eps_p correction +{shift:.2f} dB (0.2..0.4)"
    )


def test_criterion_6_metrological_gain(cfg):
    """zeta_m and zeta_e at p = 3e5 composing budget and contrast fit."""
    p = 3e5
    n = 10_000
    state = prepare_css(N0, PreparationModel(prep_noise_factor=1.14))
    probe = replace(cfg.probe, photons_per_measurement=p)
    ts = run_trials(
        "squeeze-readout", n, 56, state, probe, cfg.rates,
        PulseModel(0.02, 0.0), cfg.couplings,
    )
    rep = variance_stats(ts)
    eps = p * cfg.rates.p_delta_f + 0.02
    c_meas = float(contrast_model(p, 0.69, 7e-7, 9e-13))
    c_in = 0.71
    sigma2 = conditional_variance(rep.var_prep, rep.var_meas, eps) / CSS
    sq = squeezing_parameters(
        sigma2, c_meas, c_in, rep.var_prep, rep.var_meas, N0 / 2.0,
        epsilon_p=eps,
    )
    gain_db = -sq.zeta_m_db
    ent_db = -sq.zeta_e_db
    assert gain_db == pytest.approx(3.0, abs=1.5)
    assert ent_db == pytest.approx(4.2, abs=1.5)
    _report(
        f"ACCEPTANCE 6 PASS: zeta_m^-1 = {gain_db:.2f} dB (3.0 +- 1.5), "
        f"zeta_e^-1 = {ent_db:.2f} dB (4.2 +- 1.5) at p = 3e5, "
        f"C = {c_meas:.3f}"
    )


def test_criterion_7_fundamental_limits():
    """Closed-form limits and ODE consistency."""
    s_min = sigma2_min(3100.0, 1.0 / 3.0)
    s_min_db = to_db(s_min)
    assert s_min_db == pytest.approx(-18.3, abs=0.2)

    p_ram = 5.6e-8
    p_opt = optimal_photon_number(s_min, p_ram)
    assert p_opt * p_ram == pytest.approx(0.012, abs=0.001)

    inputs = LimitInputs(
        collective_cooperativity=3100.0,
        p_raman=p_ram,
        p_total=3.0 * p_ram,
        phi_eff=118e-6,
        p_rayleigh_f1=1.37e-7,
        p_rayleigh_f2=0.85e-7,
    )
    out = limit_contrast_and_zeta(inputs)
    assert out["contrast_loss"] == pytest.approx(0.012, abs=0.002)

    _, curve = integrate_sigma2(inputs, 8e6, n_points=3000)
    assert float(curve.min()) == pytest.approx(s_min, rel=1e-3)
    _report(
        f"ACCEPTANCE 7 PASS: sigma^2_min = {s_min_db:.2f} dB (-18.3 +- 0.2), "
        f"p*P_Ram = {p_opt * p_ram:.4f} (0.012 +- 0.001), contrast loss = "
        f"{out['contrast_loss']:.4f} (0.012 +- 0.002), ODE min within 1e-3"
    )


def test_criterion_8_property_suites(cfg):
    """Always-on invariants at their stated tolerances."""
    rng = np.random.default_rng(0)

    # covariance PSD preservation and conditional-variance bounds
    from qndspin.spinstate import (
        composite_pi,
        condition_on_measurement,
        measurement_backaction,
    )

    pulses = PulseModel()
    for _ in range(100):
        vz = rng.uniform(0.2, 2.0) * CSS
        vy = rng.uniform(0.2, 2.0) * CSS
        cov = rng.uniform(-0.9, 0.9) * math.sqrt(vz * vy)
        s = GaussianSpinState(
            s0=N0 / 2, mean_length=rng.uniform(0.3, 1.0) * N0 / 2,
            azimuth=0.0, mean_z=0.0, var_z=vz, var_y=vy, cov_yz=cov,
        )
        for out in (
            composite_pi(s, pulses),
            measurement_backaction(s, 1e5, 1.18e-4, N0),
            condition_on_measurement(s, rng.normal(), rng.uniform(10, 1e4)),
        ):
            assert out.var_z * out.var_y >= out.cov_yz**2 * (1 - 1e-12)
        vm = rng.uniform(10, 1e5)
        c = condition_on_measurement(s, 0.0, vm)
        assert c.var_z <= min(vz, vm) + 1e-12

        # zeta_e <= zeta_m whenever C_meas <= C_in
        c_in = rng.uniform(0.3, 1.0)
        c_meas = rng.uniform(0.05, 1.0) * c_in
        sig = conditional_variance(vz, vm) / CSS
        sq = squeezing_parameters(sig, c_meas, c_in, vz, vm, N0 / 2)
        assert sq.zeta_e <= sq.zeta_m * (1 + 1e-12)

        # rotation invariance of |<S>| and covariance determinant
        r = rotate(s, "mean", rng.uniform(-6, 6))
        assert r.mean_length == pytest.approx(s.mean_length, rel=1e-12)
        assert r.var_z * r.var_y - r.cov_yz**2 == pytest.approx(
            vz * vy - cov**2, rel=1e-10
        )

    # Bessel envelope vs quadrature oracle to 1e-8
    from scipy.integrate import quad

    for u in (0.1, 1.0, 5.0, 20.0):
        num, _ = quad(
            lambda t: math.cos(2 * u * math.sin(t) ** 2) * math.sin(t) ** 2,
            0.0, 2 * math.pi, limit=400,
        )
        den, _ = quad(lambda t: math.sin(t) ** 2, 0.0, 2 * math.pi)
        assert ramsey_damping_envelope(u) == pytest.approx(num / den, abs=1e-8)

    # Lorentzian round trip to 1e-12
    kappa = TWO_PI * 1.01e6
    for frac in (1e-4, 0.2, 0.5, 0.97, 1.0):
        delta = inverse_transmission(frac, kappa, "upper-slope")
        assert float(lorentzian_transmission(delta, kappa)) == pytest.approx(
            frac, rel=1e-12
        )

    # bitwise run reproducibility under varying thread counts
    state = prepare_css(N0, PreparationModel())
    a = run_trials("squeeze-readout", 48, 99, state, cfg.probe, cfg.rates,
                   cfg.pulses, cfg.couplings, threads=1)
    b = run_trials("squeeze-readout", 48, 99, state, cfg.probe, cfg.rates,
                   cfg.pulses, cfg.couplings, threads=4)
    assert np.array_equal(a.pulses, b.pulses)

    # fit-recovery chi^2 consistency over 100 seeds
    from scipy import stats

    truth = NoiseBudget(6e13, 1.1e9, 1320.0, 660.0, 1.55e-3)
    pvals = []
    for seed in range(100):
        r = np.random.default_rng(3000 + seed)
        pgrid = np.geomspace(3e4, 3e6, 14)
        y = truth.evaluate(pgrid)
        se = 0.02 * y
        y_noisy = y + se * r.standard_normal(len(pgrid))
        fit = fit_noise_model(pgrid, y_noisy, se, fixed={"b0_mu": 660.0})
        chi2 = float(np.sum(((y_noisy - fit.evaluate(pgrid)) / se) ** 2))
        pvals.append(1.0 - stats.chi2.cdf(chi2, df=len(pgrid) - 4))
    pvals = np.array(pvals)
    assert 0.01 < float(np.median(pvals)) < 0.99

    _report(
        "ACCEPTANCE 8 PASS: PSD preservation, conditional bounds, "
        "zeta_e <= zeta_m, rotation invariants (1e-10), Bessel envelope vs "
        "quadrature (1e-8), Lorentzian round trip (1e-12), thread-invariant "
        "bitwise reproducibility, fit-recovery chi^2 over 100 seeds"
    )
