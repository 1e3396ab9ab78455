"""Multi-functional surface: element partition, amplified relaying, energy budget."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelRealization, LinkGeometry, complex_awgn
from .chaos import SrDcskFrame, WaveformConfig

PHASE_POLICIES = ("zero-shift", "fixed-table")


@dataclass(frozen=True)
class MfRisConfig:
    """Element split, amplification and power-consumption constants.

    Elements ``0 .. n_h-1`` harvest, the next ``n_t`` transmit towards U_t and
    the last ``n_r`` reflect towards U_r.  Powers are in watts; ``xi`` is the
    inverse amplifier efficiency.
    """

    n_h: int
    n_t: int
    n_r: int
    ups_t: float = 1.0
    ups_r: float = 1.0
    ups_max: float = 10.0
    phase_policy: str = "zero-shift"
    phases_t: tuple[float, ...] = field(default=(), repr=False)
    phases_r: tuple[float, ...] = field(default=(), repr=False)
    p_conv: float = 0.0
    p_c: float = 0.0
    p_dc: float = 0.0
    xi: float = 1.0

    def __post_init__(self):
        for name in ("n_h", "n_t", "n_r"):
            v = getattr(self, name)
            if int(v) != v or v < 0:
                raise ValueError(f"{name} must be a non-negative integer")
        if self.n == 0:
            raise ValueError("surface has no elements")
        for name in ("ups_t", "ups_r"):
            v = getattr(self, name)
            if not 0 <= v <= self.ups_max:
                raise ValueError(f"{name}={v} outside [0, ups_max={self.ups_max}]")
        if self.phase_policy not in PHASE_POLICIES:
            raise ValueError(f"unknown phase policy {self.phase_policy!r}")
        if self.phase_policy == "fixed-table":
            if len(self.phases_t) != self.n_t or len(self.phases_r) != self.n_r:
                raise ValueError("fixed-table policy needs one phase per IT/IR element")
        for name in ("p_conv", "p_c", "p_dc"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.xi < 1:
            raise ValueError("xi (inverse amplifier efficiency) must be >= 1")

    @property
    def n(self) -> int:
        return self.n_h + self.n_t + self.n_r

    def size(self, side: str) -> int:
        return {"t": self.n_t, "r": self.n_r}[_side(side)]

    def ups(self, side: str) -> float:
        return {"t": self.ups_t, "r": self.ups_r}[_side(side)]

    def offset(self, side: str) -> int:
        """Index of the first element serving ``side``."""
        return {"t": self.n_h, "r": self.n_h + self.n_t}[_side(side)]

    def element_slice(self, side: str) -> slice:
        start = self.offset(side)
        return slice(start, start + self.size(side))

    def phases(self, side: str) -> np.ndarray:
        if self.phase_policy == "zero-shift":
            return np.zeros(self.size(side))
        return np.asarray(self.phases_t if _side(side) == "t" else self.phases_r, dtype=float)


def _side(side: str) -> str:
    if side not in ("t", "r"):
        raise ValueError(f"side must be 't' or 'r', got {side!r}")
    return side


@dataclass(frozen=True)
class RisIncidentSignal:
    """Per-element chip streams ``(..., n_elements, n_chips)`` and their noise record."""

    chips: np.ndarray
    noise: np.ndarray

    @property
    def n_elements(self) -> int:
        return self.chips.shape[-2]


def desired_amplitude(geometry: LinkGeometry, side: str, ups: float, transmit_power: float) -> float:
    """delta_X = sqrt(P_t C0^2 d_sr^-a_sr d_rdX^-a_rdX Ups_X)."""
    return float(np.sqrt(transmit_power * geometry.source_gain * geometry.user_gain(side) * ups))


def noise_amplitude(geometry: LinkGeometry, side: str, ups: float) -> float:
    """Psi_X = sqrt(C0 d_rdX^-a_rdX Ups_X), the gain on re-radiated surface noise."""
    return float(np.sqrt(geometry.user_gain(side) * ups))


def incident(frame, h, geometry: LinkGeometry, rng: np.random.Generator | None,
             transmit_power: float | None = None) -> RisIncidentSignal:
    """Signal at every element under the delay-collapse approximation.

    ``frame`` is an :class:`SrDcskFrame` or a chip array ``(..., Q)``; ``h`` a
    realization or a tap array ``(..., N, L)``.  Returns streams of shape
    ``(..., N, Q)``.  With ``rng=None`` the noise record is all zeros.
    """
    if isinstance(frame, SrDcskFrame):
        chips = frame.chips
        p_t = frame.config.transmit_power if transmit_power is None else transmit_power
    else:
        chips = np.asarray(frame)
        if transmit_power is None:
            raise ValueError("transmit_power is required when passing raw chips")
        p_t = transmit_power
    taps = h.h if isinstance(h, ChannelRealization) else np.asarray(h)
    if taps.ndim < 2:
        raise ValueError("channel taps must be (..., N, L)")
    if taps.shape[:-2] != chips.shape[:-1]:
        raise ValueError(
            f"batch shapes differ: chips {chips.shape[:-1]} vs taps {taps.shape[:-2]}"
        )
    amp = np.sqrt(p_t * geometry.source_gain)
    signal = amp * taps.sum(axis=-1)[..., :, None] * chips[..., None, :]
    if rng is None:
        noise = np.zeros(signal.shape, dtype=complex)
    else:
        noise = complex_awgn(rng, signal.shape, geometry.noise_power)
    return RisIncidentSignal(chips=signal + noise, noise=noise)


def partition(signal: RisIncidentSignal, config: MfRisConfig):
    """Contiguous split into (EH, IT, IR) streams."""
    if signal.n_elements != config.n:
        raise ValueError(
            f"signal has {signal.n_elements} elements but n_h+n_t+n_r={config.n}"
        )
    bounds = [(0, config.n_h), (config.n_h, config.n_h + config.n_t),
              (config.n_h + config.n_t, config.n)]
    return tuple(
        RisIncidentSignal(chips=signal.chips[..., a:b, :], noise=signal.noise[..., a:b, :])
        for a, b in bounds
    )


def concatenate(parts) -> RisIncidentSignal:
    return RisIncidentSignal(
        chips=np.concatenate([p.chips for p in parts], axis=-2),
        noise=np.concatenate([p.noise for p in parts], axis=-2),
    )


def relay(stream: RisIncidentSignal, g, config: MfRisConfig, geometry: LinkGeometry,
          side: str, rng: np.random.Generator | None) -> np.ndarray:
    """Chip stream received by user ``side`` from its sub-surface.

    Each element re-radiates its incident chips (signal and surface noise
    together) with gain ``sqrt(Ups_X)`` and phase ``theta_X,n``; the user sees
    ``sqrt(C0 d^-a) * sum_n e^{j theta_n} (sum_k g_nk) y_n + w_X``.
    """
    ups = config.ups(side)
    if ups > config.ups_max:
        raise ValueError(f"ups_{side}={ups} exceeds ups_max={config.ups_max}")
    n_x = config.size(side)
    if n_x == 0 and ups > 0:
        raise ValueError(f"sub-surface {side!r} is empty but ups_{side}={ups}")
    g = g.g(side) if isinstance(g, ChannelRealization) else np.asarray(g)
    if stream.n_elements != n_x or g.shape[-2] != n_x:
        raise ValueError(
            f"side {side!r}: stream has {stream.n_elements} elements, "
            f"g has {g.shape[-2]}, config expects {n_x}"
        )
    weights = np.exp(1j * config.phases(side)) * g.sum(axis=-1)
    out = noise_amplitude(geometry, side, ups) * np.einsum("...n,...nq->...q", weights, stream.chips)
    if rng is not None:
        out = out + complex_awgn(rng, out.shape, geometry.noise_power)
    return out


def net_power(config: MfRisConfig, geometry: LinkGeometry, transmit_power: float,
              h=None, n_taps_sr: int = 1, noise_term: str = "per-dimension") -> float:
    """Surface power consumption E_net in watts.

    With ``h=None`` the fading sums are replaced by their means (``N_X`` per
    sub-surface, tap powers summing to one).  ``h`` may be a realization or a
    ``(N, L_sr)`` tap array, in which case ``n_taps_sr`` is taken from it.
    ``noise_term`` selects N0/2 (``"per-dimension"``) or N0 (``"total"``) for
    the amplified-noise contribution.
    """
    if noise_term == "per-dimension":
        n0 = geometry.noise_power / 2.0
    elif noise_term == "total":
        n0 = geometry.noise_power
    else:
        raise ValueError(f"unknown noise_term {noise_term!r}")
    if h is None:
        sum_t, sum_r = float(config.n_t), float(config.n_r)
    else:
        taps = h.h if isinstance(h, ChannelRealization) else np.asarray(h)
        n_taps_sr = taps.shape[-1]
        a2 = np.abs(taps) ** 2
        sum_t = float(a2[config.element_slice("t")].sum())
        sum_r = float(a2[config.element_slice("r")].sum())
    static = config.n_h * config.p_conv + (config.n_t + config.n_r) * (config.p_c + config.p_dc)
    amplified = transmit_power * geometry.source_gain * (config.ups_t * sum_t + config.ups_r * sum_r)
    amplified += n_taps_sr * n0 * (config.ups_t * config.n_t + config.ups_r * config.n_r)
    return static + config.xi * amplified


def energy_required(config: MfRisConfig, waveform: WaveformConfig, geometry: LinkGeometry,
                    h=None, n_taps_sr: int = 1, noise_term: str = "per-dimension") -> float:
    """Energy the surface consumes over one frame, T_c (beta + phi) E_net, in joules."""
    e_net = net_power(config, geometry, waveform.transmit_power, h=h,
                      n_taps_sr=n_taps_sr, noise_term=noise_term)
    return waveform.chip_duration * waveform.frame_length * e_net
