"""Estimators and fits: trial records -> published quantities.

Variances with chi^2 standard errors, conditional spin noise, squeezing
parameters, the four-term noise-budget fit, quadratic atom-number
scaling fits, the contrast model fit, and rotated-state variance.

Conventions: "atom number units" means 4*Var(Sz)-style quantities
(y1 = 4 Var(M1), the CSS reference line is y = N0); squeezing is quoted
in variance dB, 10*log10.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import curve_fit

from .measurement import TrialSet


def to_db(linear) -> float:
    """10 log10 of a variance ratio."""
    arr = np.asarray(linear, dtype=float)
    if np.any(arr <= 0):
        raise ValueError("dB conversion requires a positive ratio")
    out = 10.0 * np.log10(arr)
    return float(out) if out.ndim == 0 else out


def from_db(db) -> float:
    arr = np.asarray(db, dtype=float)
    out = 10.0 ** (arr / 10.0)
    return float(out) if out.ndim == 0 else out


def _var_se(sample_var: float, n: int) -> float:
    """Standard error of an unbiased sample variance (Gaussian records)."""
    return sample_var * math.sqrt(2.0 / (n - 1))


@dataclass(frozen=True)
class VarianceReport:
    var_m1: float
    var_m1_se: float
    var_m2: float
    var_m2_se: float
    var_meas: float            # Var(M1 - M2)/2
    var_meas_se: float
    cov_m1_m2: float
    cov_m1_m2_se: float
    var_prep: float            # Var(M1) - var_meas
    var_prep_se: float
    y1: float                  # 4 Var(M1)
    y1_se: float
    y2: float                  # 2 Var(M1 - M2); the CSS check for double preps
    y2_se: float
    adjacent_cycle_2var: float  # 2 Var(M1_i - M1_{i-1})
    adjacent_cycle_2var_se: float
    n_trials: int
    n_excluded_saturated: int

    def __post_init__(self):
        if self.var_meas < 0:
            raise ValueError("var_meas must be >= 0")

    def as_dict(self) -> dict:
        return asdict(self)


def variance_stats(trials: TrialSet) -> VarianceReport:
    """Unbiased variance/covariance estimates with chi^2 standard errors.

    Saturated trials are excluded (count reported).  The adjacent-cycle
    variant differences consecutive M1 records, which cancels slow
    drifts in the preparation.
    """
    keep = ~trials.saturated
    m1 = trials.m1[keep]
    m2 = trials.m2[keep]
    n = len(m1)
    if n < 2:
        raise ValueError("need at least 2 unsaturated trials")

    var_m1 = float(np.var(m1, ddof=1))
    var_m2 = float(np.var(m2, ddof=1))
    diff_var = float(np.var(m1 - m2, ddof=1))
    var_meas = diff_var / 2.0
    cov = float(np.cov(m1, m2, ddof=1)[0, 1])
    cov_se = math.sqrt((var_m1 * var_m2 + cov**2) / (n - 1))
    var_prep = var_m1 - var_meas

    adj = np.diff(m1)
    adj_2var = 2.0 * float(np.var(adj, ddof=1))
    return VarianceReport(
        var_m1=var_m1,
        var_m1_se=_var_se(var_m1, n),
        var_m2=var_m2,
        var_m2_se=_var_se(var_m2, n),
        var_meas=var_meas,
        var_meas_se=_var_se(var_meas, n),
        cov_m1_m2=cov,
        cov_m1_m2_se=cov_se,
        var_prep=var_prep,
        var_prep_se=math.sqrt(_var_se(var_m1, n) ** 2 + _var_se(var_meas, n) ** 2),
        y1=4.0 * var_m1,
        y1_se=4.0 * _var_se(var_m1, n),
        y2=2.0 * diff_var,
        y2_se=2.0 * _var_se(diff_var, n),
        adjacent_cycle_2var=adj_2var,
        adjacent_cycle_2var_se=2.0 * _var_se(adj_2var / 2.0, len(adj)),
        n_trials=n,
        n_excluded_saturated=int(np.sum(~keep)),
    )


def conditional_variance(var_prep: float, var_meas: float, epsilon_p: float = 0.0):
    """Posterior Var(Sz) after the squeezing measurement.

    var_meas * var_prep / [(1 - eps_p)^2 (var_prep + var_meas)]; eps_p is
    the first-order spin-flip fraction (p * P_dF + mu) whose scrambling
    makes the time-averaged measurement slightly underestimate the
    end-of-measurement spin noise.
    """
    if var_prep <= 0 or var_meas <= 0:
        raise ValueError("variances must be > 0")
    if not 0.0 <= epsilon_p < 0.5:
        raise ValueError("epsilon_p must lie in [0, 0.5)")
    return (var_meas * var_prep) / ((1 - epsilon_p) ** 2 * (var_prep + var_meas))


@dataclass(frozen=True)
class SqueezingReport:
    sigma2: float              # conditional variance / Var_CSS
    sigma2_db: float
    zeta_e: float
    zeta_e_db: float
    zeta_m: float
    zeta_m_db: float
    epsilon_p: float
    kappa_meas: float          # sqrt(var_prep / var_meas)
    contrast_meas: float
    contrast_in: float

    def __post_init__(self):
        if self.sigma2 <= 0:
            raise ValueError("sigma2 must be > 0")

    def as_dict(self) -> dict:
        return asdict(self)


def squeezing_parameters(
    sigma2: float,
    contrast_meas: float,
    contrast_in: float,
    var_prep: float,
    var_meas: float,
    s0: float,
    epsilon_p: float = 0.0,
) -> SqueezingReport:
    """Entanglement and metrological squeezing parameters.

    zeta_m is evaluated directly from measured variances,
    (C_in / C_meas^2) * 2 var_meas var_prep / [S0 (var_prep + var_meas)],
    a form in which the spin-flip factor eps_p cancels identically
    between the noise underestimate and the contrast underestimate.
    zeta_e = sigma2 / C uses the (eps_p-corrected) normalized variance.
    """
    if not 0.0 < contrast_meas <= contrast_in:
        raise ValueError("require 0 < C_meas <= C_in")
    if s0 <= 0:
        raise ValueError("S0 must be > 0")
    zeta_m = (
        (contrast_in / contrast_meas**2)
        * 2.0
        * var_meas
        * var_prep
        / (s0 * (var_prep + var_meas))
    )
    zeta_e = sigma2 / contrast_meas
    return SqueezingReport(
        sigma2=sigma2,
        sigma2_db=to_db(sigma2),
        zeta_e=zeta_e,
        zeta_e_db=to_db(zeta_e),
        zeta_m=zeta_m,
        zeta_m_db=to_db(zeta_m),
        epsilon_p=epsilon_p,
        kappa_meas=math.sqrt(var_prep / var_meas),
        contrast_meas=contrast_meas,
        contrast_in=contrast_in,
    )


@dataclass(frozen=True)
class NoiseBudget:
    """Coefficients of 4 Var(Sz)_meas = b-2/p^2 + b-1/p + b0 + b1 p."""

    b_minus2: float
    b_minus1: float
    b0_tech: float
    b0_mu: float
    b1: float
    provenance: dict = field(default_factory=dict)  # name -> "fixed" | "fitted"
    covariance: np.ndarray | None = None            # of the fitted subset

    def __post_init__(self):
        for name in ("b_minus2", "b_minus1", "b0_tech", "b0_mu", "b1"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")

    @property
    def b0(self) -> float:
        return self.b0_tech + self.b0_mu

    def evaluate(self, p):
        p = np.asarray(p, dtype=float)
        return self.b_minus2 / p**2 + self.b_minus1 / p + self.b0 + self.b1 * p


_BUDGET_TERMS = ("b_minus2", "b_minus1", "b0_tech", "b0_mu", "b1")
_BUDGET_POWERS = {"b_minus2": -2, "b_minus1": -1, "b0_tech": 0, "b0_mu": 0, "b1": 1}


def fit_noise_model(
    photons,
    four_var,
    four_var_se=None,
    fixed: dict | None = None,
) -> NoiseBudget:
    """Weighted least squares for the noise-budget coefficients.

    The model is linear in the b's, so any subset may be frozen via
    `fixed` (name -> value) and the rest is solved in closed form.
    Returns the budget with per-coefficient covariance of the free ones.
    """
    p = np.asarray(photons, dtype=float)
    y = np.asarray(four_var, dtype=float)
    if np.any(p <= 0):
        raise ValueError("photon numbers must be > 0")
    fixed = dict(fixed or {})
    free = [t for t in _BUDGET_TERMS if t not in fixed]
    if len(p) < len(free) + 2 and free:
        raise ValueError("need at least 2 more points than free coefficients")
    w = np.ones_like(y) if four_var_se is None else 1.0 / np.asarray(four_var_se) ** 2

    resid = y - sum(v * p ** _BUDGET_POWERS[k] for k, v in fixed.items())
    values = dict(fixed)
    cov = None
    if free:
        design = np.column_stack([p ** _BUDGET_POWERS[t] for t in free])
        scale = np.linalg.norm(design, axis=0)
        if np.any(scale == 0):
            raise ValueError("singular design matrix: coefficients not identifiable")
        design_s = design / scale
        wd = design_s * w[:, None]
        gram = design_s.T @ wd
        if np.linalg.cond(gram) > 1e10:
            raise ValueError("singular design matrix: coefficients not identifiable")
        sol = np.linalg.solve(gram, wd.T @ resid) / scale
        cov = np.linalg.inv(gram) / np.outer(scale, scale)
        for t, v in zip(free, sol):
            values[t] = max(float(v), 0.0)
    provenance = {t: ("fixed" if t in fixed else "fitted") for t in _BUDGET_TERMS}
    return NoiseBudget(
        b_minus2=values.get("b_minus2", 0.0),
        b_minus1=values.get("b_minus1", 0.0),
        b0_tech=values.get("b0_tech", 0.0),
        b0_mu=values.get("b0_mu", 0.0),
        b1=values.get("b1", 0.0),
        provenance=provenance,
        covariance=cov,
    )


def fit_quadratic_scaling(n0, y, y_se=None, constrain_a1: bool = False):
    """Fit y = a0 + a1 N0 + a2 N0^2 (optionally with a1 fixed to 1).

    Returns ((a0, a1, a2), (se_a0, se_a1, se_a2)).  Warns through a
    ValueError if the N0 range spans less than a factor 3 (the
    curvature is not identifiable on a narrow span).
    """
    n0 = np.asarray(n0, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(n0) < 4:
        raise ValueError("need at least 4 points")
    if n0.max() / n0.min() < 3.0:
        raise ValueError("atom-number span must cover at least a factor 3")
    w = np.ones_like(y) if y_se is None else 1.0 / np.asarray(y_se) ** 2

    if constrain_a1:
        design = np.column_stack([np.ones_like(n0), n0**2])
        target = y - n0
    else:
        design = np.column_stack([np.ones_like(n0), n0, n0**2])
        target = y
    wd = design * w[:, None]
    gram = design.T @ wd
    sol = np.linalg.solve(gram, wd.T @ target)
    cov = np.linalg.inv(gram)
    se = np.sqrt(np.diag(cov))
    if constrain_a1:
        return (float(sol[0]), 1.0, float(sol[1])), (float(se[0]), 0.0, float(se[1]))
    return tuple(float(v) for v in sol), tuple(float(v) for v in se)


def contrast_model(p, c0, alpha, beta):
    """C(p) = C0 exp(-alpha p - beta p^2 / 2)."""
    return c0 * np.exp(-alpha * p - beta * p**2 / 2.0)


def fit_contrast(photons, contrast, readout_loss: float = 0.04):
    """Nonlinear fit of the contrast decay model.

    Start point: C0 = max(C), alpha from the two-point log slope between
    the extreme photon numbers, beta = 0 (deterministic, documented).
    Returns ((C0, alpha, beta), standard errors, C_in) where C_in undoes
    the readout's own contrast reduction.
    """
    p = np.asarray(photons, dtype=float)
    c = np.asarray(contrast, dtype=float)
    if len(p) < 4:
        raise ValueError("need at least 4 points")
    if np.any(c <= 0) or np.any(c > 1):
        raise ValueError("contrast must lie in (0, 1]")
    if p.max() <= p.min():
        raise ValueError("degenerate design: photon numbers do not vary")

    # fit in q = p / p_scale so all three parameters are O(1)
    p_scale = float(p.max())
    q = p / p_scale
    i_lo, i_hi = np.argmin(q), np.argmax(q)
    a0 = max(math.log(c[i_lo] / c[i_hi]) / (q[i_hi] - q[i_lo]), 1e-9)
    start = (float(c.max()), a0, 1e-6)
    try:
        popt, pcov = curve_fit(
            contrast_model, q, c, p0=start,
            bounds=([1e-6, 0.0, 0.0], [1.5, 50.0, 50.0]),
            maxfev=10000,
        )
    except (RuntimeError, ValueError) as err:
        raise ValueError(f"contrast fit did not converge: {err}") from err
    se = np.sqrt(np.diag(pcov))
    unscale = np.array([1.0, 1.0 / p_scale, 1.0 / p_scale**2])
    popt = popt * unscale
    se = se * unscale
    c_in = float(popt[0]) / (1.0 - readout_loss)
    return tuple(float(v) for v in popt), tuple(float(v) for v in se), c_in


def rotated_variance(trials_alpha: TrialSet, var_meas_alpha0: float):
    """Estimate Var(S_z) of the rotated state from readout records.

    Subtraction estimator Var(M1 - M2)|_alpha - var_meas, valid when the
    measurement noise is small against the anti-squeezed quadrature.
    Negative estimates are clipped to 0 (flagged in the second return).
    """
    if var_meas_alpha0 <= 0:
        raise ValueError("var_meas must be > 0")
    keep = ~trials_alpha.saturated
    diff = trials_alpha.m1[keep] - trials_alpha.m2[keep]
    est = float(np.var(diff, ddof=1)) - var_meas_alpha0
    clipped = est < 0
    return max(est, 0.0), clipped
