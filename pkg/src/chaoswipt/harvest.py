"""Energy harvesting at the EH sub-surface and the self-sustainability bound."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gamma as gamma_fn

from .channel import STREAM_HARVEST, TapProfile, block_rng, complex_awgn, flat_sum, sample_link
from .chaos import CHIP_SECOND_MOMENT, chebyshev_sum_moment, modulate, reference_segments
from .mfris import energy_required, net_power

EH_BLOCK = 1024


@dataclass(frozen=True)
class HarvestReport:
    p_eh_sim: float | None
    p_eh_closed: float
    e_req: float
    feasible: bool
    n_h_min: float


@dataclass(frozen=True)
class TradeoffPoint:
    sr_t: float
    sr_r: float
    p_eh: float
    e_req: float
    feasible: bool
    sr_t_ci95: float = 0.0
    sr_r_ci95: float = 0.0
    e_net: float = 0.0


def analog_correlator(chips) -> np.ndarray:
    """Sum of the chips of one frame (last axis)."""
    return np.asarray(chips).sum(axis=-1)


def compositions(total: int, parts: int):
    """All tuples of ``parts`` non-negative integers summing to ``total``."""
    if parts == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in compositions(total - first, parts - 1):
            yield (first,) + rest


def chi1(profile: TapProfile) -> float:
    om = np.asarray(profile.omegas if isinstance(profile, TapProfile) else profile, dtype=float)
    root = np.sqrt(om)
    cross = root.sum() ** 2 - om.sum()  # sum over l1 != l2 of sqrt(Om1 Om2)
    return 0.25 * (2.0 + math.pi * cross)


def chi2_multinomial(profile: TapProfile) -> float:
    """Sum over compositions k of 4 of prod_l Gamma(1 + k_l/2) Om_l^(k_l/2) / k_l!."""
    om = np.asarray(profile.omegas if isinstance(profile, TapProfile) else profile, dtype=float)
    total = 0.0
    for ks in compositions(4, om.size):
        term = 1.0
        for k, o in zip(ks, om):
            term *= gamma_fn(1 + k / 2) * o ** (k / 2) / math.factorial(k)
        total += term
    return total


def _nu(system):
    p_rx = system.waveform.transmit_power * system.geometry.source_gain
    return system.eh.eta1 * p_rx, system.eh.eta2 * p_rx**2


def element_voltage_closed(system) -> float:
    """Per-element rectifier output implied by the closed-form harvested power."""
    wf = system.waveform
    f, z = wf.phi, wf.zeta
    nu1, nu2 = _nu(system)
    return (nu1 * chi1(system.sr) * f * (1 + z**2)
            + 9 * nu2 * chi2_multinomial(system.sr) * f * (1 + 6 * z**2 + z**4) * (2 * f - 1))


def harvested_power_closed(system) -> float:
    """Closed-form P_EH = N_h / R_L * v**2 with fading-averaged chi constants."""
    v = element_voltage_closed(system)
    return system.surface.n_h / system.eh.load_resistance * v**2


def harvest_moments_sim(system, n_frames: int, seed: int, include_noise: bool = False,
                        channel=None):
    """Per-element ``(E|y_C|^2, E|y_C|^4)`` estimated over ``n_frames`` frames.

    Fading, chaotic references and data bits are redrawn every frame unless a
    fixed ``(N_h, L_sr)`` tap array is passed as ``channel``.
    """
    if n_frames < 1:
        raise ValueError("n_frames must be >= 1")
    wf, geo, surf = system.waveform, system.geometry, system.surface
    amp = np.sqrt(wf.transmit_power * geo.source_gain)
    m2 = np.zeros(surf.n_h)
    m4 = np.zeros(surf.n_h)
    done = 0
    block = 0
    while done < n_frames:
        n = min(EH_BLOCK, n_frames - done)
        rng = block_rng(seed, STREAM_HARVEST, block)
        if channel is None:
            h_sum = flat_sum(sample_link(surf.n_h, system.sr, rng, (n,)))
        else:
            h_sum = np.broadcast_to(flat_sum(np.asarray(channel)), (n, surf.n_h))
        bits = rng.choice(np.array([-1, 1]), n)
        refs = reference_segments(rng, n, wf.phi, normalize=wf.normalize)
        chip_sum = analog_correlator(modulate(bits, refs, wf.zeta))
        y_c = amp * h_sum * chip_sum[:, None]
        if include_noise:
            y_c = y_c + complex_awgn(rng, y_c.shape, wf.frame_length * geo.noise_power)
        p = np.abs(y_c) ** 2
        m2 += p.sum(axis=0)
        m4 += (p**2).sum(axis=0)
        done += n
        block += 1
    return m2 / n_frames, m4 / n_frames


def harvested_power_sim(system, n_frames: int, seed: int, include_noise: bool = False,
                        channel=None) -> float:
    """Waveform-level P_EH = sum_n v_n^2 / R_L from simulated correlator moments."""
    if system.surface.n_h == 0 or system.waveform.transmit_power == 0:
        return 0.0
    m2, m4 = harvest_moments_sim(system, n_frames, seed, include_noise, channel)
    v = system.eh.eta1 * m2 + system.eh.eta2 * m4
    return float(np.sum(v**2) / system.eh.load_resistance)


def moment_breakdown(system, n_frames: int, seed: int) -> dict:
    """Compare correlator moments: simulated, exact, and implied by the closed form.

    The exact values use circular Gaussian per-element gains
    (``E|H|^2 = sum Om``, ``E|H|^4 = 2 (sum Om)^2``) and the exact Chebyshev
    chip-sum moments.  Ratios ``closed/exact`` isolate how far the closed-form
    constants are from the simulated link.
    """
    wf = system.waveform
    f, z = wf.phi, wf.zeta
    p_rx = wf.transmit_power * system.geometry.source_gain
    om_sum = float(np.sum(system.sr.omegas))
    s2 = float(chebyshev_sum_moment(f, 2))
    s4 = float(chebyshev_sum_moment(f, 4))
    exact2 = p_rx * om_sum * (1 + z**2) * s2
    exact4 = p_rx**2 * 2 * om_sum**2 * (1 + 6 * z**2 + z**4) * s4
    closed2 = p_rx * chi1(system.sr) * f * (1 + z**2)
    closed4 = p_rx**2 * 9 * chi2_multinomial(system.sr) * f * (1 + 6 * z**2 + z**4) * (2 * f - 1)
    m2, m4 = harvest_moments_sim(system, n_frames, seed)
    eta1, eta2 = system.eh.eta1, system.eh.eta2
    p_closed = harvested_power_closed(system)
    p_exact = system.surface.n_h * (eta1 * exact2 + eta2 * exact4) ** 2 / system.eh.load_resistance
    p_sim = harvested_power_sim(system, n_frames, seed)
    return {
        "phi": f,
        "zeta": z,
        "m2_sim": float(m2.mean()),
        "m4_sim": float(m4.mean()),
        "m2_exact": exact2,
        "m4_exact": exact4,
        "m2_closed": closed2,
        "m4_closed": closed4,
        "ratio_m2_closed_exact": closed2 / exact2,
        "ratio_m4_closed_exact": closed4 / exact4,
        "chip_sum_m4_exact": s4,
        "chip_sum_m4_iid": CHIP_SECOND_MOMENT**2 * 3 * f * (2 * f - 1) / 2,
        "p_eh_sim": p_sim,
        "p_eh_exact": p_exact,
        "p_eh_closed": p_closed,
        "ratio_p_closed_sim": p_closed / p_sim if p_sim else math.inf,
    }


def n_h_min(system, self_consistent: bool = True, noise_term: str = "per-dimension") -> float:
    """Smallest EH element count for which harvested power covers consumption.

    The surface's consumption depends on ``n_h`` itself through the per-element
    conversion power; ``self_consistent`` solves for that dependence exactly.
    Otherwise consumption is evaluated at the configured ``n_h``.  Fading sums
    always use their expected values.  Returns ``inf`` when no element count
    suffices.
    """
    per_element = element_voltage_closed(system) ** 2 / system.eh.load_resistance
    if per_element == 0:
        raise ZeroDivisionError("harvested power per element is zero (P_t = 0?)")
    surf = system.surface
    e_net = net_power(surf, system.geometry, system.waveform.transmit_power,
                      n_taps_sr=len(system.sr), noise_term=noise_term)
    if not self_consistent:
        return e_net / per_element
    rest = e_net - surf.n_h * surf.p_conv
    margin = per_element - surf.p_conv
    if margin <= 0:
        return math.inf
    return rest / margin


def power_predicate(p_eh: float, e_req: float, system) -> bool:
    """Energy harvested over one frame covers the frame's consumption."""
    wf = system.waveform
    return p_eh * wf.chip_duration * wf.frame_length >= e_req


def frame_energy(system, noise_term: str = "per-dimension") -> float:
    return energy_required(system.surface, system.waveform, system.geometry,
                           n_taps_sr=len(system.sr), noise_term=noise_term)


def harvest_report(system, n_frames: int | None = None, seed: int = 0) -> HarvestReport:
    p_closed = harvested_power_closed(system)
    p_sim = harvested_power_sim(system, n_frames, seed) if n_frames else None
    e_req = frame_energy(system)
    return HarvestReport(
        p_eh_sim=p_sim,
        p_eh_closed=p_closed,
        e_req=e_req,
        feasible=power_predicate(p_closed, e_req, system),
        n_h_min=n_h_min(system),
    )


def tradeoff_point(system, seed: int, n_draws: int = 10_000, floors=(0.5, 0.5),
                   ber_method: str = "semi-analytic", n_bits: int = 100_000,
                   harvest_method: str = "closed-form", n_frames: int = 10_000) -> TradeoffPoint:
    """SR on both sides, harvested power, frame energy and the region predicate."""
    from .receiver import monte_carlo_ber, semi_analytic_ber

    if ber_method == "semi-analytic":
        ber = semi_analytic_ber(system, n_draws, seed)
    elif ber_method == "monte-carlo":
        ber = monte_carlo_ber(system, n_bits, seed)
    else:
        raise ValueError(f"unknown BER method {ber_method!r}")
    if harvest_method == "closed-form":
        p_eh = harvested_power_closed(system)
    elif harvest_method == "simulation":
        p_eh = harvested_power_sim(system, n_frames, seed)
    else:
        raise ValueError(f"unknown harvest method {harvest_method!r}")
    e_req = frame_energy(system)
    sr_t, sr_r = ber["t"].success_rate, ber["r"].success_rate
    feasible = (sr_t >= floors[0] and sr_r >= floors[1]
                and power_predicate(p_eh, e_req, system))
    return TradeoffPoint(
        sr_t=sr_t, sr_r=sr_r, p_eh=p_eh, e_req=e_req, feasible=bool(feasible),
        sr_t_ci95=ber["t"].ci95, sr_r_ci95=ber["r"].ci95,
        e_net=e_req / (system.waveform.chip_duration * system.waveform.frame_length),
    )

