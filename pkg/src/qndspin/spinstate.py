"""Gaussian (moment-level) model of the collective pseudo-spin.

The state tracks the mean Bloch vector and the 2x2 covariance of the
(S_z, in-plane transverse) fluctuations.  With N0 ~ 1e4 this second-moment
description is essentially exact for every protocol step used here:
CSS preparation, rotations, composite-pi spin flips, measurement
back-action, conditional updates, and first-order Raman corrections.

The mean spin is constrained to the equatorial (xy) plane, which covers
the full measurement protocol; rotations that would tip the mean out of
the plane are rejected rather than silently mishandled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .scattering import ScatteringRates


@dataclass(frozen=True)
class PreparationModel:
    """How close the initial state is to an ideal CSS.

    prep_noise_factor multiplies the CSS variance (linear-in-N0 technical
    noise); quadratic_noise_a2 adds a2*N0^2/4 of variance (technical noise
    scaling as N0^2, the alternative parameterization of the same data).
    impurity_fraction atoms are left in |1, +-1> and are excluded from the
    clock ensemble entirely (spin-echo cancels their signal).
    """

    prep_noise_factor: float = 1.0
    impurity_fraction: float = 0.0
    initial_contrast: float = 1.0
    quadratic_noise_a2: float = 0.0

    def __post_init__(self):
        if self.prep_noise_factor < 1.0:
            raise ValueError("prep_noise_factor must be >= 1")
        if not 0.0 <= self.impurity_fraction <= 0.2:
            raise ValueError("impurity_fraction must lie in [0, 0.2]")
        if not 0.0 < self.initial_contrast <= 1.0:
            raise ValueError("initial_contrast must lie in (0, 1]")
        if self.quadratic_noise_a2 < 0.0:
            raise ValueError("quadratic_noise_a2 must be >= 0")

    def prep_variance(self, n0: float) -> float:
        """Var(Sz) of the prepared state (spin^2 units)."""
        return (self.prep_noise_factor * n0 + self.quadratic_noise_a2 * n0**2) / 4.0


@dataclass(frozen=True)
class PulseModel:
    """Composite microwave pi pulse modeled by a flip-failure fraction."""

    composite_pi_infidelity: float = 0.02   # mu
    lock_light_mu: float = 0.005            # additive scattering-equivalent

    def __post_init__(self):
        if not 0.0 <= self.composite_pi_infidelity <= 0.1:
            raise ValueError("composite_pi_infidelity must lie in [0, 0.1]")
        if self.lock_light_mu < 0:
            raise ValueError("lock_light_mu must be >= 0")

    @property
    def mu_total(self) -> float:
        return self.composite_pi_infidelity + self.lock_light_mu


@dataclass(frozen=True)
class GaussianSpinState:
    """Collective spin: mean vector plus (z, transverse) covariance.

    s0 is the maximum spin N0/2 of the clock ensemble; azimuth is the
    in-plane angle of the mean spin (0 = +x).  var_z, var_y, cov_yz are
    the second moments of (S_z, S_perp) where S_perp is the in-plane
    direction perpendicular to the mean spin.
    """

    s0: float
    mean_length: float     # |<S>|
    azimuth: float         # rad, in the xy plane
    mean_z: float          # <S_z>, spin units (fluctuation bookkeeping)
    var_z: float
    var_y: float
    cov_yz: float = 0.0

    def __post_init__(self):
        if self.s0 <= 0:
            raise ValueError("s0 must be > 0")
        if self.mean_length > self.s0 * (1 + 1e-12):
            raise ValueError("|<S>| cannot exceed S0")
        if self.var_z <= 0 or self.var_y <= 0:
            raise ValueError("variances must be > 0")
        if self.var_z * self.var_y < self.cov_yz**2 * (1 - 1e-12):
            raise ValueError("covariance matrix must be positive semidefinite")

    @property
    def n0(self) -> float:
        return 2.0 * self.s0

    @property
    def contrast(self) -> float:
        return self.mean_length / self.s0

    @property
    def mean_vector(self) -> np.ndarray:
        return np.array(
            [
                self.mean_length * math.cos(self.azimuth),
                self.mean_length * math.sin(self.azimuth),
                self.mean_z,
            ]
        )

    @property
    def css_variance(self) -> float:
        """Projection-noise reference Var(Sz)_CSS = N0/4."""
        return self.n0 / 4.0

    def covariance(self) -> np.ndarray:
        return np.array(
            [[self.var_z, self.cov_yz], [self.cov_yz, self.var_y]]
        )


def prepare_css(n0: float, prep: PreparationModel) -> GaussianSpinState:
    """CSS on the equator (+x) with preparation noise and finite contrast."""
    if n0 <= 0:
        raise ValueError("n0 must be > 0")
    var = prep.prep_variance(n0)
    return GaussianSpinState(
        s0=n0 / 2.0,
        mean_length=prep.initial_contrast * n0 / 2.0,
        azimuth=0.0,
        mean_z=0.0,
        var_z=var,
        var_y=var,
        cov_yz=0.0,
    )


def rotate(state: GaussianSpinState, axis: str, angle: float) -> GaussianSpinState:
    """Rigid Bloch rotation.

    Supported geometries (all that the protocol uses):
      * axis "mean": any angle about the mean-spin direction; the
        (z, transverse) covariance rotates as a 2x2 quadratic form.
      * axis "z": precession; mean azimuth advances, covariance unchanged.
      * axis "x"/"y": allowed only when the mean spin lies along that
        axis, where it coincides with a mean-axis rotation.
    """
    if not math.isfinite(angle):
        raise ValueError("angle must be finite")
    if axis == "z":
        return replace(state, azimuth=state.azimuth + angle)
    if axis in ("x", "y"):
        target = 0.0 if axis == "x" else math.pi / 2.0
        if not math.isclose(
            math.cos(state.azimuth - target), 1.0, abs_tol=1e-9
        ):
            raise ValueError(
                f"rotation about {axis} requires the mean spin along {axis}"
            )
        axis = "mean"
    if axis != "mean":
        raise ValueError(f"unsupported rotation axis {axis!r}")

    c, s = math.cos(angle), math.sin(angle)
    # (delta_z, delta_perp) rotate into each other about the mean axis
    var_z = state.var_z * c**2 + state.var_y * s**2 + 2 * state.cov_yz * s * c
    var_y = state.var_z * s**2 + state.var_y * c**2 - 2 * state.cov_yz * s * c
    cov = (state.var_y - state.var_z) * s * c + state.cov_yz * (c**2 - s**2)
    mean_z = state.mean_z * c  # transverse mean fluctuation assumed centered
    return replace(state, var_z=var_z, var_y=var_y, cov_yz=cov, mean_z=mean_z)


def composite_pi(state: GaussianSpinState, pulses: PulseModel) -> GaussianSpinState:
    """Population-inverting composite pulse with incoherent failures.

    A fraction mu of the spins fails to flip: the mean inverts up to
    (1 - 2 mu), binomial flip noise is injected, and the failed fraction
    decoheres (contrast factor 1 - mu).
    """
    mu = pulses.mu_total
    if not 0.0 <= mu <= 1.0:
        raise ValueError("mu must lie in [0, 1]")
    n0 = state.n0
    var_z = (1 - 2 * mu) ** 2 * state.var_z + mu * (1 - mu) * n0
    # a pi rotation about the mean axis flips both transverse components,
    # so their covariance is unchanged
    return replace(
        state,
        mean_z=-(1 - 2 * mu) * state.mean_z,
        var_z=var_z,
        mean_length=state.mean_length * (1 - mu),
    )


def measurement_backaction(
    state: GaussianSpinState,
    transmitted_photons: float,
    phi_eff: float,
    n0: float,
    contrast_alpha: float = 0.0,
    contrast_beta: float = 0.0,
) -> GaussianSpinState:
    """Probe-light back-action: photon shot noise broadens the phase.

    var_y grows by Var_CSS * N0 * p * phi_eff^2 (the Heisenberg-area
    partner of the measurement's information gain) and the contrast
    follows the empirical exp(-alpha p - beta p^2 / 2) law.
    """
    p = transmitted_photons
    if p < 0:
        raise ValueError("photon number must be >= 0")
    var_y = state.var_y + (n0 / 4.0) * n0 * p * phi_eff**2
    contrast_factor = math.exp(-contrast_alpha * p - contrast_beta * p**2 / 2.0)
    return replace(
        state, var_y=var_y, mean_length=state.mean_length * contrast_factor
    )


def shot_noise_measurement_variance(n0: float, p: float, phi_eff: float) -> float:
    """Imprecision of an ideal photon-shot-noise-limited Sz measurement.

    Defined so that conditioning a CSS on it leaves the normalized
    variance at 1/(1 + N0 p phi_eff^2).
    """
    k = n0 * p * phi_eff**2
    if k <= 0:
        return math.inf
    return (n0 / 4.0) / k


def condition_on_measurement(
    state: GaussianSpinState, measured_z: float, var_meas: float
) -> GaussianSpinState:
    """Gaussian conditional update of (S_z, S_perp) given one Sz measurement."""
    if var_meas <= 0:
        raise ValueError("var_meas must be > 0")
    if math.isinf(var_meas):
        return state
    total = state.var_z + var_meas
    gain = state.var_z / total
    return replace(
        state,
        mean_z=state.mean_z + gain * (measured_z - state.mean_z),
        var_z=state.var_z * var_meas / total,
        var_y=state.var_y - state.cov_yz**2 / total,
        cov_yz=state.cov_yz * var_meas / total,
    )


def raman_flip_update(
    state: GaussianSpinState, rates: ScatteringRates, p: float
) -> GaussianSpinState:
    """First-order state change from Raman scattering of p probe photons.

    Clock-state flips (probability e_f = p * P_dF per atom) invert spins;
    m_F-changing events (e_m, e_c) remove atoms from the clock ensemble.
    All Raman events destroy the scattered atom's coherence.
    """
    if p < 0:
        raise ValueError("photon number must be >= 0")
    if p * rates.p_raman_total > 0.1:
        raise ValueError(
            "p * P_Ram > 0.1: first-order spin-flip model is invalid"
        )
    e_f = p * rates.p_delta_f
    e_out = p * (rates.p_delta_mf + rates.p_delta_f_delta_mf)
    n0 = state.n0
    var_z = (
        (1 - 2 * e_f) ** 2 * (1 - e_out) ** 2 * state.var_z
        + e_f * (1 - e_f) * n0
        + e_out * (1 - e_out) * n0 / 4.0
    )
    keep = (1 - 2 * e_f) * (1 - e_out)
    return GaussianSpinState(
        s0=state.s0 * (1 - e_out),
        mean_length=state.mean_length * (1 - p * rates.p_raman_total),
        azimuth=state.azimuth,
        mean_z=state.mean_z * keep,
        var_z=var_z,
        var_y=state.var_y,
        cov_yz=state.cov_yz * keep,
    )


def rotated_z_variance(state: GaussianSpinState, angle) -> np.ndarray:
    """Var(S_z) after rotating the state by `angle` about the mean spin.

    The covariance-rotation sinusoid: var_z cos^2 a + var_y sin^2 a
    + cov_yz sin 2a.  Vectorized over angle for model curves.
    """
    a = np.asarray(angle, dtype=float)
    return (
        state.var_z * np.cos(a) ** 2
        + state.var_y * np.sin(a) ** 2
        + state.cov_yz * np.sin(2 * a)
    )
