"""Experiment specifications: TOML parsing, unit conversion, presets and overrides."""
from __future__ import annotations

import copy
import math
import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .channel import LinkGeometry, TapProfile
from .chaos import WaveformConfig
from .mfris import MfRisConfig
from .system import EhModel, SystemConfig

BER_METHODS = ("monte-carlo", "semi-analytic", "both")
HARVEST_METHODS = ("closed-form", "simulation", "both")
PRESETS = ("fig1", "fig2")

_SECTIONS = ("scenario", "waveform", "geometry", "channel", "surface", "harvester",
             "grid", "methods", "trials", "floors")


class ConfigError(ValueError):
    """Invalid or inconsistent experiment specification."""


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def watts_to_dbm(watts: float) -> float:
    return 10.0 * math.log10(watts) + 30.0


@dataclass(frozen=True)
class ExperimentSpec:
    name: str
    seed: int
    output: str
    base: SystemConfig
    phis: tuple[int, ...]
    splits: tuple[tuple[int, int, int], ...]
    amplification: tuple[tuple[float, float], ...]
    distances: tuple[tuple[float, float, float], ...]
    ber_method: str = "semi-analytic"
    harvest_method: str = "closed-form"
    mc_bits: int = 100_000
    sa_draws: int = 10_000
    eh_frames: int = 10_000
    floors: tuple[float, float] = (0.5, 0.5)
    raw: dict = field(default_factory=dict, repr=False, compare=False)
    converted: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def n_points(self) -> int:
        return len(self.phis) * len(self.splits) * len(self.amplification) * len(self.distances)

    def echo(self) -> dict:
        """Raw spec as written plus every unit conversion applied to it."""
        return {"raw": self.raw, "converted": self.converted}


def _power(section: dict, key: str, where: str, converted: dict, default=None):
    """Read ``key`` in watts, or ``key_dbm`` converted once to watts."""
    dbm_key = f"{key}_dbm"
    if key in section and dbm_key in section:
        raise ConfigError(f"[{where}] gives both {key} and {dbm_key}")
    if dbm_key in section:
        watts = dbm_to_watts(float(section[dbm_key]))
        converted[f"{where}.{key}"] = {"dbm": float(section[dbm_key]), "watts": watts}
        return watts
    if key in section:
        return float(section[key])
    if default is None:
        raise ConfigError(f"[{where}] needs {key} or {dbm_key}")
    return default


def _pairs(values, width: int, name: str, cast):
    out = []
    for item in values:
        if not isinstance(item, (list, tuple)) or len(item) != width:
            raise ConfigError(f"grid.{name} entries must be lists of {width} numbers, got {item!r}")
        out.append(tuple(cast(v) for v in item))
    return tuple(out)


def build_spec(data: dict) -> ExperimentSpec:
    """Validate a parsed spec document and build the experiment description."""
    unknown = set(data) - set(_SECTIONS)
    if unknown:
        raise ConfigError(f"unknown section(s): {sorted(unknown)}")
    raw = copy.deepcopy(data)
    converted: dict = {}
    get = lambda name: data.get(name, {})  # noqa: E731
    sc, wf, geo, ch, sf, eh, grid = (get(s) for s in
                                     ("scenario", "waveform", "geometry", "channel",
                                      "surface", "harvester", "grid"))
    try:
        if "seed" not in sc:
            raise ConfigError("[scenario] seed is required")
        seed = int(sc["seed"])
        if seed < 0:
            raise ConfigError("seed must be non-negative")
        beta = int(wf["beta"])
        phis = tuple(int(p) for p in grid.get("phi", []))
        bad = [p for p in phis if p < 1 or beta % p]
        if bad:
            raise ConfigError(f"phi values {bad} do not divide beta={beta}")
        splits = _pairs(grid.get("splits", []), 3, "splits", int)
        amplification = _pairs(grid.get("amplification", []), 2, "amplification", float)
        distances = _pairs(grid.get("distances", []), 3, "distances", float)

        p_t = _power(wf, "transmit_power", "waveform", converted)
        waveform = WaveformConfig(phi=beta, zeta=1, beta=beta,
                                  chip_duration=float(wf.get("chip_duration", 1e-6)),
                                  transmit_power=p_t,
                                  normalize=bool(wf.get("normalize", False)))
        if "c0_db" in geo and "C0" in geo:
            raise ConfigError("[geometry] gives both C0 and c0_db")
        if "c0_db" in geo:
            c0 = 10.0 ** (float(geo["c0_db"]) / 10.0)
            converted["geometry.C0"] = {"db": float(geo["c0_db"]), "linear": c0}
        else:
            c0 = float(geo["C0"])
        d0 = distances[0] if distances else (1.0, 1.0, 1.0)
        geometry = LinkGeometry(
            C0=c0, d_sr=d0[0], d_rdt=d0[1], d_rdr=d0[2],
            alpha_sr=float(geo.get("alpha_sr", 3.0)),
            alpha_rdt=float(geo.get("alpha_rdt", 3.0)),
            alpha_rdr=float(geo.get("alpha_rdr", 3.0)),
            noise_power=_power(geo, "noise_power", "geometry", converted),
        )
        s0 = splits[0] if splits else (0, 0, 1)
        surface = MfRisConfig(
            n_h=s0[0], n_t=s0[1], n_r=s0[2], ups_t=0.0, ups_r=0.0,
            ups_max=float(sf.get("ups_max", 10.0)),
            phase_policy=str(sf.get("phase_policy", "zero-shift")),
            phases_t=tuple(float(v) for v in sf.get("phases_t", ())),
            phases_r=tuple(float(v) for v in sf.get("phases_r", ())),
            p_conv=_power(sf, "p_conv", "surface", converted, 0.0),
            p_c=_power(sf, "p_c", "surface", converted, 0.0),
            p_dc=_power(sf, "p_dc", "surface", converted, 0.0),
            xi=float(sf.get("xi", 1.0)),
        )
        harvester = EhModel(float(eh["eta1"]), float(eh["eta2"]), float(eh["load_resistance"]))
        base = SystemConfig(
            waveform=waveform, geometry=geometry, surface=surface, eh=harvester,
            sr=TapProfile(tuple(ch.get("sr", (1.0,)))),
            rdt=TapProfile(tuple(ch.get("rdt", (1.0,)))),
            rdr=TapProfile(tuple(ch.get("rdr", (1.0,)))),
        )
        methods, trials, floors = get("methods"), get("trials"), get("floors")
        ber_method = str(methods.get("ber", "semi-analytic"))
        harvest_method = str(methods.get("harvest", "closed-form"))
        if ber_method not in BER_METHODS:
            raise ConfigError(f"unknown BER method {ber_method!r}; expected one of {BER_METHODS}")
        if harvest_method not in HARVEST_METHODS:
            raise ConfigError(
                f"unknown harvest method {harvest_method!r}; expected one of {HARVEST_METHODS}")
        counts = {k: int(trials.get(k, d)) for k, d in
                  (("mc_bits", 100_000), ("sa_draws", 10_000), ("eh_frames", 10_000))}
        if any(v < 1 for v in counts.values()):
            raise ConfigError("trial counts must be >= 1")
        fl = (float(floors.get("sr_t", 0.5)), float(floors.get("sr_r", 0.5)))
        check_floors(fl)
        spec = ExperimentSpec(
            name=str(sc.get("name", "experiment")), seed=seed,
            output=str(sc.get("output", f"{sc.get('name', 'experiment')}.csv")),
            base=base, phis=phis, splits=splits, amplification=amplification,
            distances=distances, ber_method=ber_method, harvest_method=harvest_method,
            floors=fl, raw=raw, converted=converted, **counts,
        )
        # surface and geometry constraints must hold at every grid point
        for split in splits:
            for ups in amplification:
                base.replace(**{"surface.n_h": split[0], "surface.n_t": split[1],
                                "surface.n_r": split[2], "surface.ups_t": ups[0],
                                "surface.ups_r": ups[1]})
        for d in distances:
            base.replace(**{"geometry.d_sr": d[0], "geometry.d_rdt": d[1], "geometry.d_rdr": d[2]})
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        msg = f"missing key {exc}" if isinstance(exc, KeyError) else str(exc)
        raise ConfigError(msg) from exc
    return spec


def check_floors(floors) -> None:
    for f in floors:
        if not 0.5 <= f < 1:
            raise ConfigError(f"SR floor {f} outside [0.5, 1)")


def parse_value(text: str):
    """Interpret an override value as a TOML literal, falling back to a bare string."""
    try:
        return tomllib.loads(f"v = {text}")["v"]
    except tomllib.TOMLDecodeError:
        return text


def apply_overrides(data: dict, overrides) -> dict:
    """Set ``section.key=value`` pairs on a parsed document (copy returned)."""
    out = copy.deepcopy(data)
    for item in overrides or ():
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        key, value = item.split("=", 1)
        parts = key.strip().split(".")
        if len(parts) < 2 or parts[0] not in _SECTIONS:
            raise ConfigError(f"override key {key!r} must be <section>.<name>")
        node = out
        for p in parts[:-1]:
            node = node.setdefault(p, {})
            if not isinstance(node, dict):
                raise ConfigError(f"override key {key!r} descends into a value")
        node[parts[-1]] = parse_value(value.strip())
    return out


def load_document(path) -> dict:
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"spec file not found: {path}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def preset_document(name: str) -> dict:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; expected one of {PRESETS}")
    text = resources.files("chaoswipt.presets").joinpath(f"{name}.toml").read_text()
    return tomllib.loads(text)


def load_spec(path, overrides=()) -> ExperimentSpec:
    return build_spec(apply_overrides(load_document(Path(path)), overrides))


def load_preset(name: str, overrides=()) -> ExperimentSpec:
    return build_spec(apply_overrides(preset_document(name), overrides))
