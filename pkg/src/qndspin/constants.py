"""Rb-87 D2 line constants.

Values ship in a versioned JSON file (``data/rb87_d2.json``) sourced
from the standard published Rb-87 line-data compilation, so every
downstream number is auditable against it.  The file stores ordinary
frequencies in Hz; this module converts to angular frequencies at the
boundary and everything internal is angular (rad/s).

Excited-level offsets are energies of the 5P3/2 hyperfine levels F'=0..3
relative to F'=3, so that a laser detuning quoted "from F=2 -> F'=3"
maps directly onto per-line detunings.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class PhysicalConstants:
    speed_of_light: float               # m/s
    rb87_d2_wavelength: float           # m
    rb87_d2_linewidth: float            # Gamma, angular rad/s
    rb87_ground_hyperfine_splitting: float   # angular rad/s
    rb87_excited_level_offsets: dict    # F' -> angular rad/s relative to F'=3
    line_strengths: dict                # F -> {F': S_FF'}, sum_F' S_FF' = 1
    d2_oscillator_strength: float       # f = 2/3 exactly
    version: str

    def __post_init__(self):
        if self.speed_of_light <= 0 or self.rb87_d2_wavelength <= 0:
            raise ValueError("constants must be strictly positive")
        if self.rb87_d2_linewidth <= 0 or self.rb87_ground_hyperfine_splitting <= 0:
            raise ValueError("constants must be strictly positive")
        if abs(self.d2_oscillator_strength - 2.0 / 3.0) > 1e-12:
            raise ValueError("D2 oscillator strength must be exactly 2/3")

    @property
    def wavenumber(self) -> float:
        """Probe wavenumber k = 2 pi / lambda (rad/m)."""
        return TWO_PI / self.rb87_d2_wavelength

    def excited_offset(self, f_excited: int) -> float:
        """Angular frequency of level F' relative to F'=3 (negative below)."""
        return self.rb87_excited_level_offsets[f_excited]

    def strength(self, f_ground: int, f_excited: int) -> float:
        """Hyperfine strength factor S_FF' (0 if dipole-forbidden)."""
        return self.line_strengths.get(f_ground, {}).get(f_excited, 0.0)


def load_constants(path: str | Path | None = None) -> PhysicalConstants:
    """Load constants from JSON; defaults to the packaged Rb-87 D2 file."""
    if path is None:
        text = (
            resources.files("qndspin").joinpath("data/rb87_d2.json").read_text()
        )
    else:
        text = Path(path).read_text()
    raw = json.loads(text)
    return PhysicalConstants(
        speed_of_light=raw["speed_of_light_m_s"],
        rb87_d2_wavelength=raw["d2_wavelength_m"],
        rb87_d2_linewidth=TWO_PI * raw["gamma_hz"],
        rb87_ground_hyperfine_splitting=TWO_PI * raw["ground_splitting_hz"],
        rb87_excited_level_offsets={
            int(k): TWO_PI * v for k, v in raw["excited_level_offsets_hz"].items()
        },
        line_strengths={
            int(F): {int(Fp): s for Fp, s in row.items()}
            for F, row in raw["line_strengths"].items()
        },
        d2_oscillator_strength=raw["d2_oscillator_strength"],
        version=raw["version"],
    )


RB87 = load_constants()
