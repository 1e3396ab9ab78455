"""Chaotic SR-DCSK wireless information and power transfer through a multi-functional RIS."""
from .channel import ChannelRealization, LinkGeometry, TapProfile, path_gain, sample_link
from .config import ConfigError, load_preset, load_spec
from .chaos import SrDcskFrame, WaveformConfig, build_frame, generate_chebyshev
from .harvest import (
    HarvestReport,
    TradeoffPoint,
    chi2_multinomial,
    harvested_power_closed,
    harvested_power_sim,
    n_h_min,
    tradeoff_point,
)
from .mfris import MfRisConfig, energy_required
from .receiver import BerEstimate, monte_carlo_ber, semi_analytic_ber
from .system import EhModel, SystemConfig

__version__ = "0.1.0"

__all__ = [
    "BerEstimate",
    "ChannelRealization",
    "ConfigError",
    "EhModel",
    "HarvestReport",
    "LinkGeometry",
    "MfRisConfig",
    "SrDcskFrame",
    "SystemConfig",
    "TapProfile",
    "TradeoffPoint",
    "WaveformConfig",
    "build_frame",
    "chi2_multinomial",
    "energy_required",
    "generate_chebyshev",
    "harvested_power_closed",
    "harvested_power_sim",
    "load_preset",
    "load_spec",
    "monte_carlo_ber",
    "n_h_min",
    "path_gain",
    "sample_link",
    "semi_analytic_ber",
    "tradeoff_point",
]
