import math
from itertools import permutations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate
from scipy.special import comb, gamma

from chaoswipt.channel import TapProfile, sample_link
from chaoswipt.chaos import chebyshev_sum_moment
from chaoswipt.harvest import (
    analog_correlator,
    chi1,
    chi2_multinomial,
    compositions,
    harvest_moments_sim,
    harvest_report,
    harvested_power_closed,
    harvested_power_sim,
    moment_breakdown,
    n_h_min,
    power_predicate,
    frame_energy,
    tradeoff_point,
)
from chaoswipt.system import EhModel

from conftest import make_system, preset_system


def chi2_recursive(om):
    """Independent oracle: recursive expansion of E{(a_1 + ... + a_L)^4} / 4!."""
    def moment(k, o):
        return gamma(1 + k / 2) * o ** (k / 2)

    def expand(rest, order):
        if len(rest) == 1:
            return moment(order, rest[0]) / math.factorial(order)
        return sum(moment(k, rest[0]) / math.factorial(k) * expand(rest[1:], order - k)
                   for k in range(order + 1))

    return expand(list(om), 4)


def rayleigh_pdf(a, om):
    return 2 * a / om * np.exp(-a * a / om)


def test_analog_correlator():
    assert analog_correlator(np.zeros(12)) == 0
    a, b = 0.3, -0.5
    assert analog_correlator([a, b, a, b]) == pytest.approx(2 * (a + b))
    rng = np.random.default_rng(0)
    y = rng.standard_normal((3, 7)) + 1j * rng.standard_normal((3, 7))
    np.testing.assert_allclose(analog_correlator(y), [sum(row) for row in y])


def test_chi_single_tap():
    assert chi1(TapProfile((1.0,))) == 0.5
    assert chi2_multinomial(TapProfile((1.0,))) == pytest.approx(1 / 12, rel=1e-15)


def test_chi_two_tap():
    assert chi1(TapProfile((0.8, 0.2))) == pytest.approx(0.5 + math.pi * 0.4 / 2, rel=1e-15)
    assert chi2_multinomial(np.array([1.0, 0.0])) == pytest.approx(1 / 12, rel=1e-15)


def test_chi_as_rayleigh_moments():
    om = (0.8, 0.2)
    e2 = integrate.dblquad(lambda a2, a1: (a1 + a2) ** 2 * rayleigh_pdf(a1, om[0]) * rayleigh_pdf(a2, om[1]),
                           0, 12, 0, 12, epsabs=1e-12)[0]
    e4 = integrate.dblquad(lambda a2, a1: (a1 + a2) ** 4 * rayleigh_pdf(a1, om[0]) * rayleigh_pdf(a2, om[1]),
                           0, 12, 0, 12, epsabs=1e-12)[0]
    assert chi2_multinomial(TapProfile(om)) == pytest.approx(e4 / 24, rel=1e-8)
    # chi1 is E{(sum a)^2}/2 only for one tap; the cross-tap term enters twice
    cross = 2 * math.sqrt(om[0] * om[1])
    assert chi1(TapProfile(om)) == pytest.approx(e2 / 2 + math.pi / 8 * cross, rel=1e-8)
    assert chi1(TapProfile((1.0,))) == pytest.approx(
        integrate.quad(lambda a: a * a * rayleigh_pdf(a, 1.0), 0, 20)[0] / 2, rel=1e-10)


@pytest.mark.parametrize("L", [1, 2, 3, 4, 5])
def test_composition_count(L):
    ks = list(compositions(4, L))
    assert len(ks) == comb(L + 3, L - 1, exact=True)
    assert len(set(ks)) == len(ks) and all(sum(k) == 4 for k in ks)


@given(st.lists(st.floats(0.05, 1.0), min_size=1, max_size=4))
@settings(max_examples=60)
def test_chi2_recursive_oracle(w):
    om = np.asarray(w) / np.sum(w)
    assert chi2_multinomial(om) == pytest.approx(chi2_recursive(om), rel=1e-12)


@given(st.lists(st.floats(0.05, 1.0), min_size=2, max_size=4))
@settings(max_examples=30)
def test_chi_permutation_invariant(w):
    om = np.asarray(w) / np.sum(w)
    ref1, ref2 = chi1(om), chi2_multinomial(om)
    for p in permutations(range(len(om))):
        assert chi1(om[list(p)]) == pytest.approx(ref1, rel=1e-12)
        assert chi2_multinomial(om[list(p)]) == pytest.approx(ref2, rel=1e-12)


def test_fig2_golden_value():
    # frozen after cross-checking chi2 against the recursive and quadrature oracles
    sys_ = preset_system("fig2", 10)
    assert harvested_power_closed(sys_) == pytest.approx(3.5240364121253893e-3, rel=1e-12)


def test_closed_form_linear_in_n_h():
    base = make_system(phi=6, n_h=1)
    p1 = harvested_power_closed(base)
    for n in (2, 7, 60):
        assert harvested_power_closed(base.replace(**{"surface.n_h": n})) == pytest.approx(n * p1, rel=1e-15)


def test_closed_form_trend_over_phi():
    p = [harvested_power_closed(preset_system("fig2", phi)) for phi in (1, 2, 3, 4, 5, 6, 10, 12, 15, 20, 30, 60)]
    assert np.all(np.diff(p) < 0)


def test_sim_zero_cases():
    assert harvested_power_sim(make_system(transmit_power=0.0), 10, 1) == 0.0
    assert harvested_power_sim(make_system(n_h=0), 10, 1) == 0.0


def test_sim_eta1_single_tap_fixed_channel():
    # 1e5 frames: at 1e4 the estimator's own relative spread is about 4%
    sys_ = make_system(phi=6, n_h=3, sr=(1.0,)).replace(eh=EhModel(920.7, 0.0, 5000.0))
    h = sample_link(3, TapProfile((1.0,)), np.random.default_rng(4))
    p = harvested_power_sim(sys_, 10**5, seed=5, channel=h)
    z = sys_.waveform.zeta
    p_rx = sys_.geometry.source_gain
    v = 920.7 * p_rx * np.abs(h[:, 0]) ** 2 * (1 + z**2) * float(chebyshev_sum_moment(6, 2))
    assert p == pytest.approx(np.sum(v**2) / 5000.0, rel=0.03)


def test_sim_moments_deterministic():
    sys_ = make_system(phi=6)
    a = harvest_moments_sim(sys_, 500, 3)
    b = harvest_moments_sim(sys_, 500, 3)
    np.testing.assert_array_equal(a[0], b[0])
    np.testing.assert_array_equal(a[1], b[1])


def test_sim_noise_mode_adds_power():
    sys_ = make_system(phi=6, noise_power=1e-3)
    assert harvested_power_sim(sys_, 2000, 3, include_noise=True) > harvested_power_sim(sys_, 2000, 3)


def test_single_tap_closed_form_equals_exact_moments_iid():
    # with one tap and i.i.d. chip moments the closed-form constants are exact
    sys_ = make_system(phi=6, sr=(1.0,))
    br = moment_breakdown(sys_, 200, 1)
    f, z = 6, sys_.waveform.zeta
    p_rx = sys_.geometry.source_gain
    assert br["m2_closed"] == pytest.approx(br["m2_exact"], rel=1e-12)
    iid4 = p_rx**2 * 2 * (1 + 6 * z**2 + z**4) * 3 * f * (2 * f - 1) / 8
    assert br["m4_closed"] == pytest.approx(iid4, rel=1e-12)
    assert br["chip_sum_m4_iid"] == pytest.approx(3 * f * (2 * f - 1) / 8)


def test_breakdown_exact_moments_match_simulation():
    sys_ = preset_system("fig2", 6)
    br = moment_breakdown(sys_, 20000, 7)
    assert br["m2_sim"] == pytest.approx(br["m2_exact"], rel=0.02)
    assert br["m4_sim"] == pytest.approx(br["m4_exact"], rel=0.05)


def test_n_h_min_zero_requirement():
    sys_ = make_system(phi=6, ups_t=0.0, ups_r=0.0)
    assert n_h_min(sys_) == 0.0
    assert n_h_min(sys_, self_consistent=False) == 0.0


def test_n_h_min_linear_in_requirement():
    a = make_system(phi=6, p_c=1e-4, p_dc=2e-4)
    b = make_system(phi=6, p_c=2e-4, p_dc=4e-4, ups_t=0.0, ups_r=0.0)
    a0 = a.replace(**{"surface.ups_t": 0.0, "surface.ups_r": 0.0})
    assert frame_energy(b) == pytest.approx(2 * frame_energy(a0), rel=1e-14)
    assert n_h_min(b, self_consistent=False) == pytest.approx(2 * n_h_min(a0, self_consistent=False), rel=1e-14)


def test_n_h_min_zero_denominator():
    with pytest.raises(ZeroDivisionError):
        n_h_min(make_system(transmit_power=0.0))


@pytest.mark.parametrize("phi", [1, 2, 4, 6, 10, 12])
@pytest.mark.parametrize("ups", [1.0, 3.0])
def test_bound_matches_integer_sweep(phi, ups):
    sys_ = preset_system("fig2", phi, ups)
    bound = n_h_min(sys_)
    ok = [power_predicate(harvested_power_closed(s), frame_energy(s), s)
          for s in (sys_.replace(**{"surface.n_h": n}) for n in range(0, int(math.ceil(bound)) + 3))]
    first = ok.index(True)
    assert first == max(0, math.ceil(bound))
    assert all(ok[first:])


def test_harvest_report_fields():
    sys_ = preset_system("fig2", 6)
    rep = harvest_report(sys_, n_frames=200, seed=1)
    assert rep.p_eh_closed > 0 and rep.p_eh_sim > 0 and rep.e_req > 0
    assert rep.feasible == (rep.p_eh_closed * 1e-6 * 66 >= rep.e_req)


def test_tradeoff_no_amplification():
    sys_ = make_system(phi=6, ups_t=0.0, ups_r=0.0)
    tp = tradeoff_point(sys_, seed=1, n_draws=50, floors=(0.6, 0.6))
    assert tp.sr_t == 0.5 and tp.sr_r == 0.5 and not tp.feasible


def test_tradeoff_methods():
    sys_ = preset_system("fig2", 6, 3.0)
    a = tradeoff_point(sys_, seed=1, n_draws=200, ber_method="monte-carlo", n_bits=2000,
                       harvest_method="simulation", n_frames=200)
    assert 0.5 < a.sr_t < 1 and a.p_eh > 0
    with pytest.raises(ValueError):
        tradeoff_point(sys_, seed=1, ber_method="exact")
    with pytest.raises(ValueError):
        tradeoff_point(sys_, seed=1, n_draws=10, harvest_method="exact")
