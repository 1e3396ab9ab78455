"""Noncoherent SR-DCSK detection and bit-error-rate estimation.

Two estimators are provided.  ``monte_carlo_ber`` transmits chaotic frames and
counts detection errors; ``semi_analytic_ber`` averages the conditional
Gaussian-approximation BER over sampled channel realizations.

The Monte Carlo link has two models:

``"resolved"`` (default)
    The detection model the conditional BER is built on.  Composite
    source->element->user paths add in power (``lambda1``), the received chips
    are real with AWGN of variance N0/2, and re-radiated surface noise enters
    with power gain ``psi**2 * lambda2``.
``"coherent"``
    The complex-baseband chain ``incident -> partition -> relay -> decide``
    with taps collapsed per element and circular AWGN (N0/2 per dimension).
    Its noise-by-noise correlator term is twice the resolved one and its
    signal gain is ``|sum_{l,k,n} h g|^2`` rather than ``lambda1``, so its BER
    is systematically higher; see ``coherent_lambda_moments``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import erfc

from . import kernels
from .channel import (
    STREAM_MONTE_CARLO,
    STREAM_SEMI_ANALYTIC,
    ChannelRealization,
    block_rng,
    sample_link,
)
from .chaos import CHIP_SECOND_MOMENT, WaveformConfig, modulate, reference_segments
from .mfris import desired_amplitude, incident, noise_amplitude, partition, relay

MC_BLOCK = 2048
MC_BLOCK_COHERENT = 128
SA_BLOCK = 4096
Z95 = 1.959963984540054
SIDES = ("t", "r")


@dataclass(frozen=True)
class DecisionMetric:
    lam: float

    @property
    def bit(self) -> int:
        return 1 if self.lam >= 0 else -1


@dataclass(frozen=True)
class LambdaStatistics:
    lambda1: float | np.ndarray
    lambda2: float | np.ndarray


@dataclass(frozen=True)
class BerEstimate:
    """BER point estimate with a 95% half-width.

    ``errors`` is the integer error count for Monte Carlo estimates and
    ``None`` for channel-averaged ones.
    """

    value: float
    trials: int
    errors: int | None
    ci95: float

    @property
    def success_rate(self) -> float:
        return 1.0 - self.value


def _binomial_estimate(errors: int, trials: int) -> BerEstimate:
    p = errors / trials
    return BerEstimate(p, trials, int(errors), Z95 * np.sqrt(p * (1 - p) / trials))


def decide(received, config: WaveformConfig) -> DecisionMetric:
    """Correlate the ``zeta`` data blocks of one frame with its reference block."""
    y = np.asarray(received)
    if y.shape[-1] < config.frame_length:
        raise ValueError(f"need {config.frame_length} chips, got {y.shape[-1]}")
    lam = kernels.correlate_frames(y[None, : config.frame_length], config.phi,
                                   config.zeta, config.chip_duration)[0]
    return DecisionMetric(float(lam))


def detect(lam) -> np.ndarray:
    """Hard decisions from decision metrics; a zero metric maps to +1."""
    return np.where(np.asarray(lam) >= 0, 1, -1)


def decision_metrics(received, config: WaveformConfig) -> np.ndarray:
    """Vectorised :func:`decide` over a ``(B, beta + phi)`` batch."""
    return kernels.correlate_frames(received, config.phi, config.zeta, config.chip_duration)


def lambda_stats(h, g, config, side: str) -> LambdaStatistics:
    """Channel quadratic forms for the sub-surface serving ``side``.

    ``h`` holds Tx->surface taps for all N elements, ``(..., N, L_sr)``; ``g``
    the RIS->user taps of that side, ``(..., N_X, L_rdX)``.  Either may be
    given as a :class:`ChannelRealization`.
    """
    taps = h.h if isinstance(h, ChannelRealization) else np.asarray(h)
    g = g.g(side) if isinstance(g, ChannelRealization) else np.asarray(g)
    sub = taps[..., config.element_slice(side), :]
    batch = sub.shape[:-2]
    if g.shape[:-1] != sub.shape[:-1]:
        raise ValueError(f"h rows {sub.shape[:-1]} do not match g rows {g.shape[:-1]}")
    if sub.shape[-2] == 0:
        zeros = np.zeros(batch)
        return LambdaStatistics(zeros if batch else 0.0, zeros if batch else 0.0)
    lam1, lam2 = kernels.lambda_quadratic_forms(
        sub.reshape((-1,) + sub.shape[-2:]), g.reshape((-1,) + g.shape[-2:]),
        config.phases(side),
    )
    if not batch:
        return LambdaStatistics(float(lam1[0]), float(lam2[0]))
    return LambdaStatistics(lam1.reshape(batch), lam2.reshape(batch))


def gamma0(system, side: str) -> float:
    """Per-bit SNR scale E_b C0^2 d_sr^-a d_rdX^-a Ups_X / (N0 T_c)."""
    wf, geo = system.waveform, system.geometry
    if geo.noise_power == 0:
        return np.inf
    e_b = wf.transmit_power * wf.frame_length * CHIP_SECOND_MOMENT
    return e_b * geo.source_gain * geo.user_gain(side) * system.surface.ups(side) / geo.noise_power


def lambda_mean_var(stats: LambdaStatistics, gamma0: float, config: WaveformConfig,
                    psi: float, n0: float = 1.0):
    """Mean and variance of the decision metric given ``d_p = +1``.

    ``n0`` is the noise energy per chip (N0 T_c); with the default the results
    are in units of N0 and N0^2.
    """
    b, f, z = config.beta, config.phi, config.zeta
    l1 = np.asarray(stats.lambda1, dtype=float)
    l2 = np.asarray(stats.lambda2, dtype=float)
    mean = b * gamma0 * n0 * l1 / (b + f)
    var = b * n0**2 / 2 * (l1 * gamma0 * (z + 1) / (b + f) + 0.5)
    var = var + b * psi**2 * n0**2 / 4 * l2 * ((z + 1) + 4 * z * gamma0 * l1 / (b + f))
    if mean.ndim == 0:
        return float(mean), float(var)
    return mean, var


def conditional_ber(stats: LambdaStatistics, gamma0: float, config: WaveformConfig,
                    psi: float) -> float | np.ndarray:
    """Gaussian-approximation BER for fixed channel statistics (threshold zero)."""
    mean, var = lambda_mean_var(stats, gamma0, config, psi)
    mean = np.asarray(mean, dtype=float)
    var = np.asarray(var, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        arg = np.sqrt(mean**2 / (2 * var))
    ber = np.where(mean > 0, 0.5 * erfc(np.nan_to_num(arg, posinf=np.inf)), 0.5)
    return float(ber) if ber.ndim == 0 else ber


def conditional_ber_closed(stats: LambdaStatistics, gamma0: float, config: WaveformConfig,
                           psi: float) -> float | np.ndarray:
    """The same BER written directly in the channel statistics.

    Kept as an independent algebraic route to :func:`conditional_ber`.
    """
    b, f = config.beta, config.phi
    l1 = np.asarray(stats.lambda1, dtype=float)
    l2 = np.asarray(stats.lambda2, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        g = gamma0 * l1
        inner = (1.0 / f + 1.0 / (2 * g)
                 + psi**2 * l2 / (2 * g) * ((b + f) / f + 4 * b * g / (f * (b + f))))
        x = (b + f) ** 2 / (g * b) * inner
        ber = 0.5 * erfc(x ** -0.5)
    ber = np.where(g > 0, ber, 0.5)
    return float(ber) if ber.ndim == 0 else ber


def lambda_skewness(stats: LambdaStatistics, gamma0: float, config: WaveformConfig,
                    psi: float) -> float | np.ndarray:
    """Skewness of the decision metric for a fixed channel and a normalized reference.

    With per-chip SNR ``r = 4 gamma0 lambda1 / ((beta + phi)(1 + psi^2 lambda2))``
    the third cumulant is ``3 zeta beta r sigma^6``, giving
    ``3 zeta beta r / (beta (zeta + 1) r / 2 + beta)^(3/2)``.  It peaks at
    ``4 zeta / (sqrt(3) (zeta + 1) sqrt(beta))`` when ``r = 4 / (zeta + 1)``.
    """
    b, f, z = config.beta, config.phi, config.zeta
    l1 = np.asarray(stats.lambda1, dtype=float)
    l2 = np.asarray(stats.lambda2, dtype=float)
    r = 4 * gamma0 * l1 / ((b + f) * (1 + psi**2 * l2))
    skew = 3 * z * b * r / (b * (z + 1) * r / 2 + b) ** 1.5
    return float(skew) if skew.ndim == 0 else skew


def semi_analytic_ber(system, n_draws: int, seed: int, sides=SIDES,
                      channel: ChannelRealization | None = None) -> dict[str, BerEstimate]:
    """Average the conditional BER over ``n_draws`` independent channel draws.

    With ``channel`` given, that single realization is used for every draw.
    """
    if n_draws < 1:
        raise ValueError("n_draws must be >= 1")
    surf, wf = system.surface, system.waveform
    parts = {s: [] for s in sides}
    done = 0
    block = 0
    while done < n_draws:
        n = min(SA_BLOCK, n_draws - done)
        if channel is None:
            rng = block_rng(seed, STREAM_SEMI_ANALYTIC, block)
            h = sample_link(surf.n, system.sr, rng, (n,))
            gs = {"t": sample_link(surf.n_t, system.rdt, rng, (n,)),
                  "r": sample_link(surf.n_r, system.rdr, rng, (n,))}
        else:
            h = np.broadcast_to(channel.h, (n,) + channel.h.shape)
            gs = {s: np.broadcast_to(channel.g(s), (n,) + channel.g(s).shape) for s in SIDES}
        for s in sides:
            stats = lambda_stats(h, gs[s], surf, s)
            g0 = gamma0(system, s)
            psi = noise_amplitude(system.geometry, s, surf.ups(s))
            parts[s].append(np.atleast_1d(conditional_ber(stats, g0, wf, psi)))
        done += n
        block += 1
    out = {}
    for s in sides:
        vals = np.concatenate(parts[s])
        sd = vals.std(ddof=1) if vals.size > 1 else 0.0
        out[s] = BerEstimate(float(vals.mean()), int(vals.size), None,
                             float(Z95 * sd / np.sqrt(vals.size)))
    return out


def resolved_received(system, side: str, stats: LambdaStatistics, chips, rng) -> np.ndarray:
    """Real received chips under the resolved model for given channel statistics.

    ``chips`` is ``(B, beta + phi)``; ``stats`` holds one ``(lambda1, lambda2)``
    pair or one per row.
    """
    surf, wf, geo = system.surface, system.waveform, system.geometry
    chips = np.asarray(chips, dtype=float)
    sigma = np.sqrt(geo.noise_power / 2)
    l1 = np.broadcast_to(np.asarray(stats.lambda1, dtype=float), chips.shape[:1])
    l2 = np.broadcast_to(np.asarray(stats.lambda2, dtype=float), chips.shape[:1])
    amp = desired_amplitude(geo, side, surf.ups(side), wf.transmit_power) * np.sqrt(l1)
    psi = noise_amplitude(geo, side, surf.ups(side))
    surface_noise = (psi * np.sqrt(l2))[:, None] * rng.normal(0.0, sigma, chips.shape)
    return amp[:, None] * chips + surface_noise + rng.normal(0.0, sigma, chips.shape)


def _mc_block_resolved(system, rng, n, sides):
    surf, wf = system.surface, system.waveform
    h = sample_link(surf.n, system.sr, rng, (n,))
    gs = {"t": sample_link(surf.n_t, system.rdt, rng, (n,)),
          "r": sample_link(surf.n_r, system.rdr, rng, (n,))}
    bits = rng.choice(np.array([-1, 1]), n)
    refs = reference_segments(rng, n, wf.phi, normalize=wf.normalize)
    chips = modulate(bits, refs, wf.zeta)
    errors = {}
    for s in sides:
        y = resolved_received(system, s, lambda_stats(h, gs[s], surf, s), chips, rng)
        errors[s] = int(np.count_nonzero(detect(decision_metrics(y, wf)) != bits))
    return errors


def _mc_block_coherent(system, rng, n, sides):
    surf, wf, geo = system.surface, system.waveform, system.geometry
    h = sample_link(surf.n, system.sr, rng, (n,))
    gs = {"t": sample_link(surf.n_t, system.rdt, rng, (n,)),
          "r": sample_link(surf.n_r, system.rdr, rng, (n,))}
    bits = rng.choice(np.array([-1, 1]), n)
    refs = reference_segments(rng, n, wf.phi, normalize=wf.normalize)
    chips = modulate(bits, refs, wf.zeta)
    _, it, ir = partition(incident(chips, h, geo, rng, wf.transmit_power), surf)
    streams = {"t": it, "r": ir}
    errors = {}
    for s in sides:
        if surf.size(s) == 0:
            y = np.sqrt(geo.noise_power / 2) * (rng.standard_normal(chips.shape)
                                                + 1j * rng.standard_normal(chips.shape))
        else:
            y = relay(streams[s], gs[s], surf, geo, s, rng)
        errors[s] = int(np.count_nonzero(detect(decision_metrics(y, wf)) != bits))
    return errors


def monte_carlo_ber(system, n_bits: int, seed: int, sides=SIDES,
                    model: str = "resolved") -> dict[str, BerEstimate]:
    """Chip-level simulation with one fading draw and one fresh reference per bit.

    Bits are processed in fixed-size blocks, each with its own generator
    derived from ``seed``, so results do not depend on how blocks are
    scheduled.
    """
    if n_bits < 1:
        raise ValueError("n_bits must be >= 1")
    if model == "resolved":
        run, size = _mc_block_resolved, MC_BLOCK
    elif model == "coherent":
        run, size = _mc_block_coherent, MC_BLOCK_COHERENT
    else:
        raise ValueError(f"unknown link model {model!r}")
    totals = {s: 0 for s in sides}
    done = 0
    block = 0
    while done < n_bits:
        n = min(size, n_bits - done)
        rng = block_rng(seed, STREAM_MONTE_CARLO, block)
        for s, e in run(system, rng, n, sides).items():
            totals[s] += e
        done += n
        block += 1
    return {s: _binomial_estimate(totals[s], n_bits) for s in sides}


def coherent_lambda_moments(h, g, system, side: str, reference: np.ndarray):
    """Exact noise-conditional mean and variance of the coherent-chain metric.

    ``reference`` is the fixed chaotic reference (length phi); the data bit is
    +1.  Used to document how the complex chain departs from the resolved model.
    """
    surf, wf, geo = system.surface, system.waveform, system.geometry
    taps = h.h if isinstance(h, ChannelRealization) else np.asarray(h)
    g = g.g(side) if isinstance(g, ChannelRealization) else np.asarray(g)
    sub = taps[surf.element_slice(side)]
    rot = np.exp(1j * surf.phases(side))
    weights = rot * g.sum(axis=-1)
    coupling = np.sum(weights * sub.sum(axis=-1))
    amp2 = desired_amplitude(geo, side, surf.ups(side), wf.transmit_power) ** 2 * abs(coupling) ** 2
    psi2 = noise_amplitude(geo, side, surf.ups(side)) ** 2
    s2 = geo.noise_power / 2 * (1 + psi2 * np.sum(np.abs(weights) ** 2))
    energy = float(np.sum(np.asarray(reference) ** 2))
    tc, z = wf.chip_duration, wf.zeta
    mean = tc * z * amp2 * energy
    var = tc**2 * (amp2 * energy * z * (1 + z) * s2 + 2 * wf.beta * s2**2)
    return mean, var
