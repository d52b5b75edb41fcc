"""Run configuration: JSON schema, validation, and physics assembly.

The shipped default configuration resolves to the reference apparatus
parameters.  Interfaces use ordinary frequencies (MHz/GHz) and lab units
(mm, um, us); everything becomes angular/SI when the physics objects
are built.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import jsonschema

from .cavity import CouplingSummary, EnsembleConfig, ResonatorParams, coupling_summary
from .constants import TWO_PI, PhysicalConstants, load_constants
from .measurement import NoiseSwitches, ProbeConfig
from .scattering import ScatteringRates, raman_noise_coefficient, raman_rates
from .spinstate import PreparationModel, PulseModel

_number = {"type": "number"}
_positive = {"type": "number", "exclusiveMinimum": 0}

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["resonator", "ensemble", "probe", "n_trials", "master_seed"],
    "properties": {
        "constants_file": {"type": ["string", "null"]},
        "resonator": {
            "type": "object",
            "required": [
                "wavelength_nm", "mirror_separation_mm", "mirror_curvature_mm",
                "free_spectral_range_mhz", "linewidth_mhz", "finesse",
                "mode_waist_um",
            ],
            "properties": {
                "wavelength_nm": _positive,
                "mirror_separation_mm": _positive,
                "mirror_curvature_mm": _positive,
                "free_spectral_range_mhz": _positive,
                "linewidth_mhz": _positive,
                "finesse": _positive,
                "mode_waist_um": _positive,
                "transverse_mode_spacing_mhz": _number,
            },
            "additionalProperties": False,
        },
        "trap_resonator": {"type": "object"},
        "ensemble": {
            "type": "object",
            "required": ["physical_atom_number", "rms_radius_um"],
            "properties": {
                "physical_atom_number": {"type": "number", "minimum": 0},
                "rms_radius_um": {"type": "number", "minimum": 0},
                "cloud_length_mm": _number,
            },
            "additionalProperties": False,
        },
        "probe": {
            "type": "object",
            "required": ["detuning_f2_f3_ghz", "photons_per_measurement"],
            "properties": {
                "detuning_f2_f3_ghz": _number,
                "compensation_detuning_f2_f3_ghz": _number,
                "photons_per_measurement": {"type": "number", "minimum": 0},
                "pulse_duration_us": _positive,
                "quantum_efficiency": {
                    "type": "number", "exclusiveMinimum": 0, "maximum": 1,
                },
                "apd_excess_factor": {"type": "number", "minimum": 1},
                "electronic_noise_b2": {"type": "number", "minimum": 0},
                "technical_noise_fraction": {"type": "number", "minimum": 0},
                "technical_correlation": {
                    "type": "number", "minimum": -1, "maximum": 1,
                },
            },
            "additionalProperties": False,
        },
        "pulses": {
            "type": "object",
            "properties": {
                "composite_pi_infidelity": {
                    "type": "number", "minimum": 0, "maximum": 0.1,
                },
                "lock_light_mu": {"type": "number", "minimum": 0},
            },
            "additionalProperties": False,
        },
        "preparation": {
            "type": "object",
            "properties": {
                "prep_noise_factor": {"type": "number", "minimum": 1},
                "impurity_fraction": {"type": "number", "minimum": 0, "maximum": 0.2},
                "initial_contrast": {
                    "type": "number", "exclusiveMinimum": 0, "maximum": 1,
                },
                "quadratic_noise_a2": {"type": "number", "minimum": 0},
            },
            "additionalProperties": False,
        },
        "contrast_model": {
            "type": "object",
            "properties": {
                "c0": _positive,
                "alpha": {"type": "number", "minimum": 0},
                "beta": {"type": "number", "minimum": 0},
                "readout_loss": {"type": "number", "minimum": 0, "maximum": 0.5},
            },
            "additionalProperties": False,
        },
        "noise": {
            "type": "object",
            "properties": {
                k: {"type": "boolean"}
                for k in ("shot", "electronic", "technical", "raman", "microwave")
            },
            "additionalProperties": False,
        },
        "scattering": {
            "type": "object",
            "properties": {"b1_target_per_atom": {"type": ["number", "null"]}},
            "additionalProperties": False,
        },
        "scenarios": {
            "type": "object",
            "properties": {
                "fig2": {
                    "type": "object",
                    "properties": {
                        "atom_grid": {
                            "type": "array", "items": _positive, "minItems": 1,
                        },
                        "preparation": {"type": "object"},
                    },
                },
                "fig3": {
                    "type": "object",
                    "properties": {
                        "photon_grid": {
                            "type": "array", "items": _positive, "minItems": 1,
                        },
                    },
                },
                "rotation": {
                    "type": "object",
                    "properties": {
                        "photons": _positive,
                        "angles_deg": {
                            "type": "array", "items": _number, "minItems": 1,
                        },
                    },
                },
                "ramsey": {
                    "type": "object",
                    "properties": {
                        "precession_us": _number,
                        "precession_phase": _number,
                        "phase_noise_rms": {"type": "number", "minimum": 0},
                    },
                },
            },
            "additionalProperties": False,
        },
        "n_trials": {"type": "integer", "minimum": 2},
        "master_seed": {"type": "integer", "minimum": 0},
        "output_dir": {"type": "string"},
    },
}


class ConfigError(ValueError):
    """Raised with the full list of schema violations."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


def default_config() -> dict:
    text = resources.files("qndspin").joinpath("data/default_config.json").read_text()
    return json.loads(text)


def _merge(base: dict, override: dict) -> dict:
    out = dict(base)
    for key, val in override.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], val)
        else:
            out[key] = val
    return out


@dataclass(frozen=True)
class RunConfig:
    raw: dict
    constants: PhysicalConstants
    resonator: ResonatorParams
    ensemble: EnsembleConfig
    couplings: CouplingSummary
    probe: ProbeConfig
    preparation: PreparationModel
    pulses: PulseModel
    rates: ScatteringRates
    n_trials: int
    master_seed: int
    output_dir: str

    @property
    def n0(self) -> float:
        return self.couplings.effective_atom_number

    @property
    def contrast_params(self) -> dict:
        return self.raw["contrast_model"]

    def scenario_options(self, name: str) -> dict:
        return self.raw.get("scenarios", {}).get(name, {})

    def config_hash(self) -> str:
        return hashlib.sha256(
            json.dumps(self.raw, sort_keys=True).encode()
        ).hexdigest()


def _build(raw: dict) -> RunConfig:
    constants = load_constants(raw.get("constants_file"))
    res = raw["resonator"]
    resonator = ResonatorParams(
        wavelength=res["wavelength_nm"] * 1e-9,
        mirror_separation=res["mirror_separation_mm"] * 1e-3,
        mirror_curvature=res["mirror_curvature_mm"] * 1e-3,
        free_spectral_range=TWO_PI * res["free_spectral_range_mhz"] * 1e6,
        linewidth=TWO_PI * res["linewidth_mhz"] * 1e6,
        finesse=res["finesse"],
        mode_waist=res["mode_waist_um"] * 1e-6,
        transverse_mode_spacing=TWO_PI
        * res.get("transverse_mode_spacing_mhz", 0.0)
        * 1e6,
    )
    ens = raw["ensemble"]
    ensemble = EnsembleConfig(
        physical_atom_number=ens["physical_atom_number"],
        rms_radius=ens["rms_radius_um"] * 1e-6,
        cloud_length=ens.get("cloud_length_mm", 0.0) * 1e-3,
    )
    pr = raw["probe"]
    probe_detuning = TWO_PI * pr["detuning_f2_f3_ghz"] * 1e9
    comp_detuning = TWO_PI * pr.get("compensation_detuning_f2_f3_ghz", -24.59) * 1e9
    couplings = coupling_summary(
        resonator, ensemble, probe_detuning, comp_detuning, constants
    )

    noise = raw.get("noise", {})
    switches = NoiseSwitches(
        shot=noise.get("shot", True),
        electronic=noise.get("electronic", True),
        technical=noise.get("technical", True),
        raman=noise.get("raman", True),
        microwave=noise.get("microwave", True),
    )
    probe = ProbeConfig(
        photons_per_measurement=pr["photons_per_measurement"],
        pulse_duration=pr.get("pulse_duration_us", 50.0) * 1e-6,
        quantum_efficiency=pr.get("quantum_efficiency", 0.43),
        apd_excess_factor=pr.get("apd_excess_factor", 1.9),
        electronic_noise_b2=pr.get("electronic_noise_b2", 6e13),
        technical_noise_fraction=pr.get("technical_noise_fraction", 0.04),
        technical_correlation=pr.get("technical_correlation", 0.0),
        switches=switches,
    )
    prep_raw = raw.get("preparation", {})
    preparation = PreparationModel(
        prep_noise_factor=prep_raw.get("prep_noise_factor", 1.0),
        impurity_fraction=prep_raw.get("impurity_fraction", 0.0),
        initial_contrast=prep_raw.get("initial_contrast", 1.0),
        quadratic_noise_a2=prep_raw.get("quadratic_noise_a2", 0.0),
    )
    pul = raw.get("pulses", {})
    pulses = PulseModel(
        composite_pi_infidelity=pul.get("composite_pi_infidelity", 0.02),
        lock_light_mu=pul.get("lock_light_mu", 0.0),
    )

    eta_geom = couplings.effective_cooperativity / constants.d2_oscillator_strength
    rates = raman_rates(probe_detuning, eta_geom, constants)
    b1_target = raw.get("scattering", {}).get("b1_target_per_atom")
    if b1_target is not None:
        rates = rates.scaled(b1_target / raman_noise_coefficient(rates, 1.0))

    return RunConfig(
        raw=raw,
        constants=constants,
        resonator=resonator,
        ensemble=ensemble,
        couplings=couplings,
        probe=probe,
        preparation=preparation,
        pulses=pulses,
        rates=rates,
        n_trials=int(raw["n_trials"]),
        master_seed=int(raw["master_seed"]),
        output_dir=raw.get("output_dir", "out"),
    )


def load_and_validate(path: str | Path | None = None,
                      overrides: dict | None = None) -> RunConfig:
    """Load a config file, merge onto the shipped defaults, validate fully.

    Raises ConfigError carrying every schema violation at once.  A
    resolved-config echo is written next to the outputs by the caller.
    """
    raw = default_config()
    if path is not None:
        p = Path(path)
        if not p.exists():
            raise ConfigError([f"config file not found: {p}"])
        try:
            user = json.loads(p.read_text())
        except json.JSONDecodeError as err:
            raise ConfigError([f"config is not valid JSON: {err}"]) from err
        raw = _merge(raw, user)
    if overrides:
        raw = _merge(raw, overrides)

    validator = jsonschema.Draft202012Validator(SCHEMA)
    violations = [
        f"{'/'.join(str(x) for x in err.absolute_path) or '<root>'}: {err.message}"
        for err in sorted(validator.iter_errors(raw), key=str)
    ]
    if violations:
        raise ConfigError(violations)
    cf = raw.get("constants_file")
    if cf is not None and not Path(cf).exists():
        raise ConfigError([f"constants_file: no such file {cf!r}"])
    try:
        return _build(raw)
    except ValueError as err:
        raise ConfigError([str(err)]) from err
