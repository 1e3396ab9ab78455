import numpy as np
import pytest

from chaoswipt.channel import LinkGeometry, TapProfile
from chaoswipt.chaos import WaveformConfig
from chaoswipt.config import load_preset
from chaoswipt.mfris import MfRisConfig
from chaoswipt.sweep import grid_points, system_at
from chaoswipt.system import EhModel, SystemConfig


def make_system(phi=10, beta=60, n_h=4, n_t=3, n_r=5, ups_t=1.0, ups_r=1.0,
                noise_power=1e-12, sr=(0.8, 0.2), rdt=(0.8, 0.2), rdr=(0.8, 0.2),
                d=(9.0, 20.0, 24.0), transmit_power=1.0, **surface_kw):
    return SystemConfig(
        waveform=WaveformConfig.from_beta(beta, phi, transmit_power=transmit_power),
        geometry=LinkGeometry(C0=10 ** -3.53, d_sr=d[0], d_rdt=d[1], d_rdr=d[2],
                              noise_power=noise_power),
        surface=MfRisConfig(n_h=n_h, n_t=n_t, n_r=n_r, ups_t=ups_t, ups_r=ups_r, **surface_kw),
        eh=EhModel(920.7, 5.2e6, 5000.0),
        sr=TapProfile(sr), rdt=TapProfile(rdt), rdr=TapProfile(rdr),
    )


def preset_system(name, phi, ups=1.0):
    spec = load_preset(name)
    point = next(p for p in grid_points(spec) if p["phi"] == phi and p["ups_t"] == ups)
    return system_at(spec, point)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_system():
    return make_system()


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
