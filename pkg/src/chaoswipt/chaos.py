"""Chebyshev chaotic sequences and short-reference DCSK framing."""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import kernels

# fixed points of x -> 1 - 2x^2
FIXED_POINTS = (-1.0, 0.5)

# moments of the map's invariant (arcsine) density
CHIP_SECOND_MOMENT = 0.5
CHIP_FOURTH_MOMENT = 0.375


@dataclass(frozen=True)
class ChaoticSequence:
    samples: np.ndarray
    seed: float

    def __len__(self) -> int:
        return len(self.samples)


@dataclass(frozen=True)
class WaveformConfig:
    """SR-DCSK frame parameters.

    Attributes:
        phi: reference length in chips.
        zeta: number of data-modulated replicas of the reference.
        beta: spreading factor, must equal ``zeta * phi``.
        chip_duration: T_c in seconds.
        transmit_power: P_t in watts.
        normalize: rescale each reference segment to empirical mean square 0.5.
    """

    phi: int
    zeta: int
    beta: int
    chip_duration: float = 1e-6
    transmit_power: float = 1.0
    normalize: bool = False

    def __post_init__(self):
        for name in ("phi", "zeta", "beta"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise ValueError(f"{name} must be a positive integer, got {v!r}")
        if self.zeta * self.phi != self.beta:
            raise ValueError(
                f"beta={self.beta} but zeta*phi={self.zeta * self.phi}"
            )
        if self.chip_duration <= 0:
            raise ValueError("chip_duration must be positive")
        if self.transmit_power < 0:
            raise ValueError("transmit_power must be non-negative")

    @classmethod
    def from_beta(cls, beta: int, phi: int, **kw) -> "WaveformConfig":
        if beta % phi:
            raise ValueError(f"phi={phi} does not divide beta={beta}")
        return cls(phi=phi, zeta=beta // phi, beta=beta, **kw)

    @property
    def frame_length(self) -> int:
        return self.beta + self.phi


@dataclass(frozen=True)
class SrDcskFrame:
    chips: np.ndarray
    bits: np.ndarray
    config: WaveformConfig = field(repr=False)

    def per_bit(self) -> np.ndarray:
        """Chips reshaped to ``(n_bits, beta + phi)``."""
        return self.chips.reshape(len(self.bits), self.config.frame_length)


def _check_seed(seed: float) -> None:
    if not -1.0 < seed < 1.0:
        raise ValueError(f"seed must lie in (-1, 1), got {seed!r}")
    if seed in FIXED_POINTS:
        raise ValueError(f"seed {seed!r} is a fixed point of the Chebyshev map")


def generate_chebyshev(seed: float, length: int) -> ChaoticSequence:
    """Chebyshev orbit of ``length`` samples whose first sample is ``seed``.

    Raises ValueError for seeds outside (-1, 1), for the map's fixed points,
    and for seeds whose orbit collapses onto a fixed point (e.g. 0 -> 1 -> -1).
    """
    seed = float(seed)
    _check_seed(seed)
    if length < 1:
        raise ValueError("length must be at least 1")
    samples = kernels.chebyshev_orbits(np.array([seed]), length)[0]
    if length > 1 and samples[-1] in FIXED_POINTS and samples[-2] in FIXED_POINTS:
        raise ValueError(f"orbit from seed {seed!r} collapses onto a fixed point")
    return ChaoticSequence(samples=samples, seed=seed)


def draw_seeds(rng: np.random.Generator, n: int) -> np.ndarray:
    """Uniform seeds on (-1, 1), redrawing the (measure-zero) fixed points."""
    seeds = rng.uniform(-1.0, 1.0, n)
    bad = np.isin(seeds, FIXED_POINTS)
    while bad.any():
        seeds[bad] = rng.uniform(-1.0, 1.0, bad.sum())
        bad = np.isin(seeds, FIXED_POINTS)
    return seeds


def reference_segments(rng: np.random.Generator, n_bits: int, phi: int,
                       lanes: int = 64, burn_in: int = 64,
                       normalize: bool = False) -> np.ndarray:
    """Fresh reference segments for ``n_bits`` consecutive bits, shape ``(n_bits, phi)``.

    Bits are spread over ``lanes`` independent orbits; inside a lane,
    consecutive bits take consecutive segments of one continuing orbit.
    ``burn_in`` samples are dropped so uniform seeds relax to the invariant
    density.
    """
    lanes = max(1, min(lanes, n_bits))
    per_lane = -(-n_bits // lanes)
    orbits = kernels.chebyshev_orbits(draw_seeds(rng, lanes), burn_in + per_lane * phi)
    seg = orbits[:, burn_in:].reshape(lanes * per_lane, phi)[:n_bits]
    if normalize:
        seg = normalize_segments(seg)
    return seg


def normalize_segments(segments: np.ndarray) -> np.ndarray:
    """Scale each row to empirical mean square exactly 0.5."""
    ms = np.mean(segments**2, axis=-1, keepdims=True)
    return segments * np.sqrt(CHIP_SECOND_MOMENT / ms)


def modulate(bits: np.ndarray, references: np.ndarray, zeta: int) -> np.ndarray:
    """Frame chips ``(n_bits, phi*(zeta+1))``: reference then ``zeta`` signed copies."""
    bits = np.asarray(bits)
    data = np.tile(references, zeta) * bits[:, None]
    return np.concatenate([references, data], axis=1)


def build_frame(bits, config: WaveformConfig, reference: ChaoticSequence | np.ndarray) -> SrDcskFrame:
    """Assemble SR-DCSK chips for ``bits`` (values +-1).

    Bit ``p`` (0-based) uses reference samples ``p*phi .. (p+1)*phi - 1``.
    """
    bits = np.asarray(bits)
    if bits.size == 0:
        raise ValueError("bit array is empty")
    if not np.all(np.abs(bits) == 1):
        raise ValueError("bits must be +1 or -1")
    if config.zeta * config.phi != config.beta:
        raise ValueError("zeta*phi != beta")
    samples = reference.samples if isinstance(reference, ChaoticSequence) else np.asarray(reference)
    need = bits.size * config.phi
    if samples.size < need:
        raise ValueError(f"reference has {samples.size} samples, need {need}")
    refs = samples[:need].reshape(bits.size, config.phi)
    if config.normalize:
        refs = normalize_segments(refs)
    chips = modulate(bits, refs, config.zeta).reshape(-1)
    return SrDcskFrame(chips=chips, bits=bits.astype(np.int8), config=config)


def bit_energy(config: WaveformConfig, chip_second_moment: float = CHIP_SECOND_MOMENT) -> float:
    """Transmitted energy per bit, P_t * T_c * (beta + phi) * E{x^2}, in joules."""
    if chip_second_moment <= 0:
        raise ValueError("chip_second_moment must be positive")
    return config.transmit_power * config.chip_duration * config.frame_length * chip_second_moment


def chebyshev_sum_moment(phi: int, order: int) -> Fraction:
    """Exact ``E{(x_1 + ... + x_phi)^order}`` for a stationary Chebyshev orbit.

    Under the invariant density the orbit is ``x_z = cos(2**z * theta)`` up to a
    global sign with theta uniform, so the moment is the constant term of a
    sparse trigonometric polynomial.  Only even orders are sign-independent.
    """
    if order % 2:
        raise ValueError("only even orders are well defined up to the sign convention")
    half = order // 2
    base: dict[int, int] = defaultdict(int)
    for z in range(phi):
        base[2**z] += 1
        base[-(2**z)] += 1
    poly = {0: 1}
    for _ in range(half):
        nxt: dict[int, int] = defaultdict(int)
        for a, ca in poly.items():
            for b, cb in base.items():
                nxt[a + b] += ca * cb
        poly = nxt
    const = sum(c * poly.get(-e, 0) for e, c in poly.items())
    return Fraction(const, 2**order)
