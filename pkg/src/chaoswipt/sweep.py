"""Grid sweeps with ordered emission, checkpoint/resume and CSV + JSON output."""
from __future__ import annotations

import csv
import hashlib
import io
import json
import os
import platform
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from itertools import product
from pathlib import Path

import numpy as np

from . import __version__, kernels
from .harvest import frame_energy, harvested_power_closed, harvested_power_sim, n_h_min, power_predicate
from .receiver import monte_carlo_ber, semi_analytic_ber

WORKERS_ENV = "CHAOSWIPT_WORKERS"

COLUMNS = (
    "scenario", "phi", "zeta", "beta", "n_h", "n_t", "n_r", "ups_t", "ups_r",
    "d_sr", "d_rdt", "d_rdr",
    "ber_t_mc", "ber_t_mc_ci95", "ber_r_mc", "ber_r_mc_ci95",
    "ber_t_sa", "ber_t_sa_ci95", "ber_r_sa", "ber_r_sa_ci95",
    "sr_t", "sr_r", "p_eh_closed", "p_eh_sim", "e_net", "e_req", "n_h_min",
    "power_ok", "feasible",
)


def grid_points(spec):
    """Parameter tuples in emission order; ``phi`` varies fastest."""
    for split, dist, ups, phi in product(spec.splits, spec.distances, spec.amplification, spec.phis):
        yield {"phi": phi, "n_h": split[0], "n_t": split[1], "n_r": split[2],
               "ups_t": ups[0], "ups_r": ups[1],
               "d_sr": dist[0], "d_rdt": dist[1], "d_rdr": dist[2]}


def system_at(spec, point):
    return spec.base.replace(**{
        "waveform.phi": point["phi"],
        "surface.n_h": point["n_h"], "surface.n_t": point["n_t"], "surface.n_r": point["n_r"],
        "surface.ups_t": point["ups_t"], "surface.ups_r": point["ups_r"],
        "geometry.d_sr": point["d_sr"], "geometry.d_rdt": point["d_rdt"],
        "geometry.d_rdr": point["d_rdr"],
    })


def evaluate_point(spec, point) -> dict:
    """One result row.  Every point reuses the master seed (common random numbers)."""
    system = system_at(spec, point)
    wf = system.waveform
    row = {"scenario": spec.name, "zeta": wf.zeta, "beta": wf.beta, **point}
    for c in COLUMNS[12:]:
        row.setdefault(c, None)
    if spec.ber_method in ("monte-carlo", "both"):
        mc = monte_carlo_ber(system, spec.mc_bits, spec.seed)
        for s in ("t", "r"):
            row[f"ber_{s}_mc"], row[f"ber_{s}_mc_ci95"] = mc[s].value, mc[s].ci95
    if spec.ber_method in ("semi-analytic", "both"):
        sa = semi_analytic_ber(system, spec.sa_draws, spec.seed)
        for s in ("t", "r"):
            row[f"ber_{s}_sa"], row[f"ber_{s}_sa_ci95"] = sa[s].value, sa[s].ci95
    src = "sa" if row["ber_t_sa"] is not None else "mc"
    row["sr_t"] = 1.0 - row[f"ber_t_{src}"]
    row["sr_r"] = 1.0 - row[f"ber_r_{src}"]
    if spec.harvest_method in ("closed-form", "both"):
        row["p_eh_closed"] = harvested_power_closed(system)
    if spec.harvest_method in ("simulation", "both"):
        row["p_eh_sim"] = harvested_power_sim(system, spec.eh_frames, spec.seed)
    p_eh = row["p_eh_closed"] if row["p_eh_closed"] is not None else row["p_eh_sim"]
    row["e_req"] = frame_energy(system)
    row["e_net"] = row["e_req"] / (wf.chip_duration * wf.frame_length)
    row["n_h_min"] = n_h_min(system) if system.waveform.transmit_power > 0 else float("inf")
    row["power_ok"] = bool(power_predicate(p_eh, row["e_req"], system))
    row["feasible"] = bool(row["power_ok"] and row["sr_t"] >= spec.floors[0]
                           and row["sr_r"] >= spec.floors[1])
    return {k: _plain(v) for k, v in row.items()}


def _plain(v):
    if isinstance(v, np.floating):
        return float(v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    return v


def format_value(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def format_row(row: dict) -> list[str]:
    return [format_value(row[c]) for c in COLUMNS]


def point_key(spec, point) -> str:
    """Hash of everything that determines a row's content."""
    raw = json.loads(json.dumps(spec.raw, sort_keys=True, default=str))
    raw.get("scenario", {}).pop("output", None)
    blob = json.dumps({"spec": raw, "point": point}, sort_keys=True, default=str)
    return hashlib.sha256(blob.encode()).hexdigest()


def worker_count(default: int = 1) -> int:
    value = os.environ.get(WORKERS_ENV)
    if not value:
        return default
    n = int(value)
    if n < 1:
        raise ValueError(f"{WORKERS_ENV} must be >= 1")
    return n


def _timed(args):
    spec, point = args
    t0 = time.perf_counter()
    row = evaluate_point(spec, point)
    return row, time.perf_counter() - t0


def _load_checkpoint(path: Path) -> dict:
    done = {}
    if path.exists():
        with open(path) as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                try:
                    rec = json.loads(line)
                except json.JSONDecodeError:
                    break  # torn final line from an interrupted write
                done[rec["key"]] = (rec["row"], rec["seconds"])
    return done


def run_sweep(spec, workers: int | None = None, checkpoint: str | Path | None = None):
    """Yield ``(row, seconds)`` for every grid point, in grid order.

    Rows already present in ``checkpoint`` are replayed without recomputation;
    new rows are appended to it as soon as they are available.
    """
    points = list(grid_points(spec))
    keys = [point_key(spec, p) for p in points]
    done = _load_checkpoint(Path(checkpoint)) if checkpoint else {}
    todo = [(spec, p) for p, k in zip(points, keys) if k not in done]
    workers = worker_count() if workers is None else workers
    ck = open(checkpoint, "a") if checkpoint else None
    pool = ProcessPoolExecutor(workers) if workers > 1 and len(todo) > 1 else None
    try:
        fresh = pool.map(_timed, todo) if pool else map(_timed, todo)
        for p, k in zip(points, keys):
            if k in done:
                yield done[k]
                continue
            row, secs = next(fresh)
            if ck:
                ck.write(json.dumps({"key": k, "row": row, "seconds": secs}) + "\n")
                ck.flush()
            yield row, secs
    finally:
        if pool:
            pool.shutdown(cancel_futures=True)
        if ck:
            ck.close()


def versions() -> dict:
    import numba
    import scipy

    return {"chaoswipt": __version__, "python": platform.python_version(),
            "numpy": np.__version__, "scipy": scipy.__version__, "numba": numba.__version__}


def write_results(spec, output: str | Path | None = None, workers: int | None = None,
                  resume: bool = True) -> tuple[Path, list[dict]]:
    """Run the sweep and write ``<output>`` (CSV) and ``<output>.json`` (metadata)."""
    out = Path(output or spec.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    ckpt = out.with_name(out.name + ".ckpt.jsonl")
    if not resume and ckpt.exists():
        ckpt.unlink()
    t0 = time.perf_counter()
    rows, timings = [], []
    tmp = out.with_name(out.name + ".part")
    with open(tmp, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(COLUMNS)
        for row, secs in run_sweep(spec, workers=workers, checkpoint=ckpt):
            w.writerow(format_row(row))
            fh.flush()
            rows.append(row)
            timings.append(secs)
    os.replace(tmp, out)
    meta = {
        "scenario": spec.name,
        "seed": spec.seed,
        "columns": list(COLUMNS),
        "rows": len(rows),
        "spec": spec.echo(),
        "versions": versions(),
        "kernel_backend": kernels.backend(),
        "workers": worker_count() if workers is None else workers,
        "wall_time_seconds": {"total": time.perf_counter() - t0, "per_row": timings},
    }
    with open(out.with_name(out.name + ".json"), "w") as fh:
        json.dump(meta, fh, indent=2, default=str)
        fh.write("\n")
    if ckpt.exists():
        ckpt.unlink()
    return out, rows


def csv_text(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for row in rows:
        w.writerow(format_row(row))
    return buf.getvalue()


@dataclass(frozen=True)
class RegionGroup:
    split: tuple[int, int, int]
    distances: tuple[float, float, float]
    ups: tuple[float, float]
    feasible_phis: tuple[int, ...]

    @property
    def interval(self):
        if not self.feasible_phis:
            return None
        return (min(self.feasible_phis), max(self.feasible_phis))


def check_feasibility(rows, floors) -> dict:
    """Feasible reference lengths per operating point and the amplification gains.

    A row is feasible when both success rates meet their floors and the power
    predicate holds.  For each (split, distances) the amplification pairs whose
    feasible set strictly contains that of the smallest pair are listed as
    region-enlarging.
    """
    from .config import check_floors

    check_floors(floors)
    groups: dict = {}
    for r in rows:
        key = ((r["n_h"], r["n_t"], r["n_r"]), (r["d_sr"], r["d_rdt"], r["d_rdr"]),
               (r["ups_t"], r["ups_r"]))
        ok = r["power_ok"] and r["sr_t"] >= floors[0] and r["sr_r"] >= floors[1]
        groups.setdefault(key, [])
        if ok:
            groups[key].append(r["phi"])
    regions = [RegionGroup(k[0], k[1], k[2], tuple(sorted(v))) for k, v in groups.items()]
    summary = []
    by_site: dict = {}
    for g in regions:
        by_site.setdefault((g.split, g.distances), []).append(g)
    for (split, dist), gs in by_site.items():
        gs = sorted(gs, key=lambda g: g.ups)
        base = set(gs[0].feasible_phis)
        enlarging = [list(g.ups) for g in gs[1:] if set(g.feasible_phis) > base]
        summary.append({
            "split": list(split),
            "distances": list(dist),
            "regions": [{"ups": list(g.ups), "feasible_phi": list(g.feasible_phis),
                         "interval": list(g.interval) if g.interval else None} for g in gs],
            "enlarging_ups": enlarging,
        })
    return {"floors": list(floors), "sites": summary,
            "nonempty": any(g.feasible_phis for g in regions)}
