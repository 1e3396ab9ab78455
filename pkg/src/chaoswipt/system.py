"""The full parameter bundle consumed by the BER and harvesting routines."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass

from .channel import LinkGeometry, TapProfile
from .chaos import WaveformConfig
from .mfris import MfRisConfig


@dataclass(frozen=True)
class EhModel:
    """Two-coefficient rectifier model ``v = eta1 E|y|^2 + eta2 E|y|^4`` into ``load_resistance``."""

    eta1: float
    eta2: float
    load_resistance: float

    def __post_init__(self):
        if self.eta1 < 0 or self.eta2 < 0:
            raise ValueError("rectifier coefficients must be non-negative")
        if self.eta1 == 0 and self.eta2 == 0:
            raise ValueError("at least one rectifier coefficient must be positive")
        if self.load_resistance <= 0:
            raise ValueError("load_resistance must be positive")


@dataclass(frozen=True)
class SystemConfig:
    waveform: WaveformConfig
    geometry: LinkGeometry
    surface: MfRisConfig
    eh: EhModel
    sr: TapProfile
    rdt: TapProfile
    rdr: TapProfile

    def profile(self, side: str) -> TapProfile:
        return {"t": self.rdt, "r": self.rdr}[side]

    @property
    def noise_psd(self) -> float:
        """Noise energy per chip, N0 * T_c, in joules."""
        return self.geometry.noise_power * self.waveform.chip_duration

    def replace(self, **changes) -> "SystemConfig":
        """Copy with fields of the nested configs replaced.

        Keys are ``waveform``/``geometry``/... for whole objects, or
        ``<part>.<field>`` for single fields, e.g. ``surface.ups_t=3``.
        ``waveform.phi`` keeps ``beta`` fixed and recomputes ``zeta``.
        """
        top = {}
        nested: dict[str, dict] = {}
        for key, value in changes.items():
            if "." in key:
                part, name = key.split(".", 1)
                nested.setdefault(part, {})[name] = value
            else:
                top[key] = value
        new = dataclasses.replace(self, **top) if top else self
        for part, fields in nested.items():
            obj = getattr(new, part)
            if part == "waveform" and "phi" in fields and "zeta" not in fields:
                beta = fields.get("beta", obj.beta)
                if beta % fields["phi"]:
                    raise ValueError(f"phi={fields['phi']} does not divide beta={beta}")
                fields["zeta"] = beta // fields["phi"]
            new = dataclasses.replace(new, **{part: dataclasses.replace(obj, **fields)})
        return new
