"""Frequency-selective Rayleigh fading and large-scale path loss."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# stream identifiers for SeedSequence spawn keys; one per consumer so that,
# e.g., the semi-analytic channel draws never alias the Monte Carlo ones
STREAM_MONTE_CARLO = 1
STREAM_SEMI_ANALYTIC = 2
STREAM_HARVEST = 3
STREAM_MISC = 9


def block_rng(master_seed: int, stream: int, block: int) -> np.random.Generator:
    """Independent generator for block ``block`` of ``stream``; reproducible in isolation."""
    ss = np.random.SeedSequence(entropy=int(master_seed), spawn_key=(int(stream), int(block)))
    return np.random.Generator(np.random.PCG64(ss))


@dataclass(frozen=True)
class LinkGeometry:
    """Distances (m), path-loss exponents, reference loss and noise.

    ``noise_power`` is the per-chip noise power N0 in watts; each real
    dimension of a complex noise sample carries N0/2.
    """

    C0: float
    d_sr: float
    d_rdt: float
    d_rdr: float
    alpha_sr: float = 3.0
    alpha_rdt: float = 3.0
    alpha_rdr: float = 3.0
    noise_power: float = 1e-12

    def __post_init__(self):
        if not 0 < self.C0 <= 1:
            raise ValueError(f"C0 must lie in (0, 1], got {self.C0}")
        for name in ("d_sr", "d_rdt", "d_rdr"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        for name in ("alpha_sr", "alpha_rdt", "alpha_rdr"):
            if getattr(self, name) < 2:
                raise ValueError(f"{name} must be >= 2")
        if self.noise_power < 0:
            raise ValueError("noise_power must be non-negative")

    def user_link(self, side: str) -> tuple[float, float]:
        """``(distance, exponent)`` of the surface->user link for side ``t`` or ``r``."""
        if side == "t":
            return self.d_rdt, self.alpha_rdt
        if side == "r":
            return self.d_rdr, self.alpha_rdr
        raise ValueError(f"side must be 't' or 'r', got {side!r}")

    @property
    def source_gain(self) -> float:
        return path_gain(self.C0, self.d_sr, self.alpha_sr)

    def user_gain(self, side: str) -> float:
        d, a = self.user_link(side)
        return path_gain(self.C0, d, a)


@dataclass(frozen=True)
class TapProfile:
    omegas: tuple[float, ...]

    def __post_init__(self):
        om = np.asarray(self.omegas, dtype=float)
        if om.size == 0:
            raise ValueError("tap profile is empty")
        if np.any(om <= 0):
            raise ValueError("tap powers must be positive")
        if abs(om.sum() - 1.0) > 1e-12:
            raise ValueError(f"tap powers must sum to 1, got {om.sum()!r}")
        object.__setattr__(self, "omegas", tuple(float(o) for o in om))

    def __len__(self) -> int:
        return len(self.omegas)

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.omegas)


@dataclass(frozen=True)
class ChannelRealization:
    """Complex tap gains: ``h`` is ``(N, L_sr)``, ``g_t`` is ``(N_t, L_rdt)``, ``g_r`` is ``(N_r, L_rdr)``.

    Leading batch axes are allowed on all three arrays.
    """

    h: np.ndarray
    g_t: np.ndarray
    g_r: np.ndarray

    def g(self, side: str) -> np.ndarray:
        if side == "t":
            return self.g_t
        if side == "r":
            return self.g_r
        raise ValueError(f"side must be 't' or 'r', got {side!r}")


def path_gain(C0: float, d: float, alpha: float) -> float:
    """Large-scale power gain ``C0 * d**-alpha``."""
    if d <= 0:
        raise ValueError("distance must be positive")
    return C0 * d ** (-alpha)


def sample_link(n_elements: int, profile: TapProfile, rng: np.random.Generator,
                batch: tuple[int, ...] = ()) -> np.ndarray:
    """Circularly-symmetric Gaussian taps, shape ``batch + (n_elements, L)``.

    Tap ``l`` has ``E|h|^2 = Omega_l``, split equally over real and imaginary parts.
    """
    if n_elements < 0:
        raise ValueError("n_elements must be non-negative")
    if not isinstance(profile, TapProfile):
        profile = TapProfile(tuple(profile))
    shape = tuple(batch) + (n_elements, len(profile))
    scale = np.sqrt(profile.array / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def sample_realization(n_elements: int, n_t: int, n_r: int, sr: TapProfile,
                       rdt: TapProfile, rdr: TapProfile, rng: np.random.Generator,
                       batch: tuple[int, ...] = ()) -> ChannelRealization:
    h = sample_link(n_elements, sr, rng, batch)
    g_t = sample_link(n_t, rdt, rng, batch)
    g_r = sample_link(n_r, rdr, rng, batch)
    return ChannelRealization(h=h, g_t=g_t, g_r=g_r)


def flat_sum(h: np.ndarray) -> np.ndarray:
    """Per-element sum over the tap axis (last axis)."""
    return np.asarray(h).sum(axis=-1)


def complex_awgn(rng: np.random.Generator, shape, noise_power: float) -> np.ndarray:
    """Complex AWGN with variance ``noise_power / 2`` per real dimension."""
    s = np.sqrt(noise_power / 2.0)
    return s * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))
