"""Monte-Carlo drop runner, parameter sweeps and scheme benchmark.

Every drop gets its own seed derived from the master seed and the drop index,
so results do not depend on the number of workers or on execution order.
"""
from __future__ import annotations

import copy
import csv
import hashlib
import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, fields
from pathlib import Path

import numpy as np
from scipy import stats

from .baselines import fd_no_ris, hd_rates, mrc_ris_phases, random_phase_fd
from .channels import RicianParams, ScenarioGeometry, Sizes, generate_drop
from .fris import FrisConfig, run_fris
from .system import PowerConfig, rates


class ConfigError(ValueError):
    pass


DEFAULTS = {
    "seed": 1,
    "drops": 10,
    "workers": None,
    "sizes": {"N_t": 6, "N_r": 6, "K": 16, "M": 4, "N": 4},
    "geometry": {"d_m": 80.0, "d_H_m": 200.0, "d_V_m": 50.0, "user_radius_m": 50.0},
    "channel": {"rho": 3.0, "pl_intercept_db": 38.88, "pl_exponent_db_per_decade": 22.0,
                "beta": 0.9, "si_isolation_db": 110.0, "si_rho": 3.0,
                "pathloss_convention": "physical"},
    "power": {"p_D_w": 1.0, "p_U_w": 1e-3, "P_max_w": 1.0, "sigma2_w": 1e-12, "sigma2_U_w": 1e-12},
    "fris": {"gamma_U_db": 5.0},
    "sweep": {
        "M_values": [1, 2, 3, 4, 5, 6, 7, 8],
        "N_values": [1, 2, 3, 4, 5, 6, 7, 8],
        "gamma_U_db_values": [5.0, 10.0],
        "d_values_m": [40, 50, 60, 70, 80, 90, 100, 110, 120],
        "K_values": [8, 16, 32],
        "ratios": [[4, 1], [4, 2], [4, 4], [2, 4], [1, 4]],
    },
}

_POWER_KEYS = {"p_D": "p_D", "p_U": "p_U", "P_max": "P_max", "sigma2": "sigma2", "sigma2_U": "sigma2_U"}


def _merge(base: dict, over: dict, path="") -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if k not in base:
            raise ConfigError(f"unknown config field {path + k!r}")
        if isinstance(base[k], dict) and not isinstance(v, dict):
            raise ConfigError(f"{path + k} must be an object")
        if k == "power":
            out[k] = dict(v)  # unit-suffixed fields, validated by _power_from
        elif k == "fris":
            out[k] = {**base[k], **v}  # validated against FrisConfig
        elif isinstance(base[k], dict):
            out[k] = _merge(base[k], v, path + k + ".")
        else:
            out[k] = v
    return out


def _power_from(spec: dict) -> PowerConfig:
    """Powers given either in watts (``*_w``) or in dBm (``*_dbm``)."""
    vals = {}
    for k, name in _POWER_KEYS.items():
        w, dbm = spec.get(k + "_w"), spec.get(k + "_dbm")
        if w is not None and dbm is not None:
            raise ConfigError(f"power.{k}: give either _w or _dbm, not both")
        if dbm is not None:
            w = 10.0 ** ((float(dbm) - 30.0) / 10.0)
        if w is None:
            w = DEFAULTS["power"][k + "_w"]
        vals[name] = float(w)
    extra = set(spec) - {k + s for k in _POWER_KEYS for s in ("_w", "_dbm")}
    if extra:
        raise ConfigError(f"unknown power fields {sorted(extra)}")
    return PowerConfig(**vals)


class Experiment:
    """Validated experiment configuration."""

    def __init__(self, raw: dict | None = None):
        raw = {} if raw is None else raw
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
        self.raw = _merge(DEFAULTS, raw)
        c = self.raw
        try:
            if int(c["drops"]) < 1:
                raise ConfigError("drops must be at least 1")
            self.sizes = Sizes(**{k: int(v) for k, v in c["sizes"].items()})
            g = c["geometry"]
            self.geometry = ScenarioGeometry(g["d_m"], g["d_H_m"], g["d_V_m"], g["user_radius_m"])
            ch = c["channel"]
            self.params = RicianParams(ch["rho"], ch["pl_intercept_db"], ch["pl_exponent_db_per_decade"],
                                       ch["beta"], ch["si_isolation_db"], ch["si_rho"],
                                       ch["pathloss_convention"])
            self.power = _power_from(c["power"])
            valid = {f.name for f in fields(FrisConfig)}
            bad = set(c["fris"]) - valid
            if bad:
                raise ConfigError(f"unknown fris fields {sorted(bad)}")
            self.fris = FrisConfig(**c["fris"])
        except ConfigError:
            raise
        except (TypeError, ValueError, KeyError) as exc:
            raise ConfigError(str(exc)) from exc
        if min(self.sizes.N_t, self.sizes.N_r) < 1 or min(self.sizes) < 0:
            raise ConfigError("sizes must be nonnegative with at least one BS antenna")

    @classmethod
    def from_file(cls, path) -> "Experiment":
        try:
            with open(path) as fh:
                raw = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls(raw)

    def with_overrides(self, **kw) -> "Experiment":
        raw = copy.deepcopy(self.raw)
        for key, val in kw.items():
            if val is None:
                continue
            node = raw
            *parents, leaf = key.split(".")
            for p in parents:
                node = node[p]
            node[leaf] = val
        return Experiment(raw)

    @property
    def seed(self) -> int:
        return int(self.raw["seed"])

    @property
    def drops(self) -> int:
        return int(self.raw["drops"])

    @property
    def hash(self) -> str:
        text = json.dumps(self.raw, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()[:12]


def drop_seed(master: int, drop: int) -> int:
    """Per-drop seed, independent of the order in which drops are run."""
    return int(np.random.SeedSequence([int(master), int(drop)]).generate_state(1, np.uint64)[0] >> 1)


def resolve_workers(workers=None) -> int:
    if workers is None:
        env = os.environ.get("RIS_FD_OPT_WORKERS")
        workers = int(env) if env else 1
    return max(1, int(workers))


def parallel_map(fn, tasks, workers=None) -> list:
    workers = resolve_workers(workers)
    tasks = list(tasks)
    if workers == 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks, chunksize=max(1, len(tasks) // (4 * workers))))


# -- single drops --------------------------------------------------------


def _drop_channels(exp: Experiment, drop: int):
    seed = drop_seed(exp.seed, drop)
    return seed, generate_drop(exp.geometry, exp.sizes, exp.params, seed)


def run_drop(task) -> dict:
    """FRIS on one drop. ``task = (raw_config, drop)``; returns row and full result."""
    raw, drop = task
    exp = Experiment(raw)
    seed, ch = _drop_channels(exp, drop)
    t0 = time.perf_counter()
    res = run_fris(ch, exp.power, exp.fris, seed)
    wall = time.perf_counter() - t0
    rep = rates(res.W, res.phase, ch, exp.power)
    row = {"drop": drop, "seed": seed, "config_hash": exp.hash, "status": res.status,
           "iterations": res.iterations, "wall_time_s": round(wall, 4),
           "initial_dl_sum": res.initial_rate, "slack": res.slack,
           "jensen_holds": int(rep.jensen_holds)}
    row.update(rep.csv_fields())
    if res.status == "infeasible":
        for k in list(row):
            if k.startswith(("dl_", "ul_", "sum_rate")):
                row[k] = float("nan")
    return {"row": row, "result": res.to_dict()}


def run_batch(exp: Experiment, workers=None) -> list:
    out = parallel_map(run_drop, [(exp.raw, i) for i in range(exp.drops)], workers)
    return sorted(out, key=lambda r: r["row"]["drop"])


def benchmark_drop(task) -> dict:
    """All schemes on the same drop. Sum rates are DL sum plus aggregate UL rate."""
    raw, drop = task
    exp = Experiment(raw)
    seed, ch = _drop_channels(exp, drop)
    p, cfg = exp.power, exp.fris
    fr = run_fris(ch, p, cfg, seed)
    nr = fd_no_ris(ch, p, cfg, seed)
    rp = random_phase_fd(ch, p, cfg, seed)
    hm = hd_rates(ch, mrc_ris_phases(ch, exp.params.beta), p)
    h0 = hd_rates(ch.without_ris(), None, p)

    def total(r):
        return float("nan") if r.status == "infeasible" else r.dl_sum_rate + r.ul_aggregate_rate

    return {"drop": drop, "seed": seed, "config_hash": exp.hash, "M": exp.sizes.M, "N": exp.sizes.N,
            "fris": total(fr), "fd_no_ris": total(nr), "random_phase": total(rp),
            "hd_ris_mrc": hm.sum_rate, "hd_no_ris": h0.sum_rate,
            "fris_dl": fr.dl_sum_rate, "fris_status": fr.status}


# -- sweeps ----------------------------------------------------------------


def _sweep_rows(exp: Experiment, points: list, fn=run_drop, workers=None) -> list:
    """Run every point (a dict of dotted overrides plus labels) over all drops."""
    tasks, labels = [], []
    for pt in points:
        sub = exp.with_overrides(**pt["overrides"])
        for i in range(exp.drops):
            tasks.append((sub.raw, i))
            labels.append(pt["labels"])
    out = parallel_map(fn, tasks, workers)
    rows = []
    for lab, res in zip(labels, out):
        row = dict(lab)
        row.update(res["row"] if "row" in res else res)
        rows.append(row)
    return rows


def user_sweep_points(exp: Experiment) -> list:
    sw = exp.raw["sweep"]
    pts = []
    for g in sw["gamma_U_db_values"]:
        for M in sw["M_values"]:
            pts.append({"labels": {"sweep": "M", "gamma_U_db": g, "M": M, "N": 4},
                        "overrides": {"sizes.M": M, "sizes.N": 4, "fris.gamma_U_db": g}})
        for N in sw["N_values"]:
            pts.append({"labels": {"sweep": "N", "gamma_U_db": g, "M": 4, "N": N},
                        "overrides": {"sizes.M": 4, "sizes.N": N, "fris.gamma_U_db": g}})
    return pts


def distance_sweep_points(exp: Experiment) -> list:
    sw = exp.raw["sweep"]
    return [{"labels": {"K": K, "d_m": d},
             "overrides": {"sizes.K": K, "geometry.d_m": float(d), "sizes.M": 4, "sizes.N": 4,
                           "sizes.N_t": 6, "sizes.N_r": 6, "fris.gamma_U_db": 5.0}}
            for K in sw["K_values"] for d in sw["d_values_m"]]


def benchmark_points(exp: Experiment) -> list:
    return [{"labels": {"ratio": f"{N}/{M}"}, "overrides": {"sizes.M": M, "sizes.N": N}}
            for M, N in exp.raw["sweep"]["ratios"]]


def sweep_users(exp: Experiment, workers=None) -> list:
    return _sweep_rows(exp, user_sweep_points(exp), workers=workers)


def sweep_distance(exp: Experiment, workers=None) -> list:
    return _sweep_rows(exp, distance_sweep_points(exp), workers=workers)


def benchmark(exp: Experiment, workers=None) -> list:
    return _sweep_rows(exp, benchmark_points(exp), fn=benchmark_drop, workers=workers)


# -- statistics --------------------------------------------------------------


def mean_se(values) -> tuple:
    v = np.asarray([x for x in values if np.isfinite(x)], float)
    if v.size == 0:
        return float("nan"), float("nan"), 0
    se = float(np.std(v, ddof=1) / np.sqrt(v.size)) if v.size > 1 else float("nan")
    return float(v.mean()), se, int(v.size)


def summarize(rows: list, keys: list, value: str) -> list:
    """Mean, standard error and count of ``value`` grouped by ``keys``."""
    groups: dict = {}
    for r in rows:
        groups.setdefault(tuple(r[k] for k in keys), []).append(r[value])
    out = []
    for key, vals in groups.items():
        m, se, n = mean_se(vals)
        d = dict(zip(keys, key))
        d.update({f"{value}_mean": m, f"{value}_se": se, "n": n})
        out.append(d)
    return out


def sign_test(a, b) -> dict:
    """One-sided paired sign test of ``a > b`` (ties dropped)."""
    a, b = np.asarray(a, float), np.asarray(b, float)
    ok = np.isfinite(a) & np.isfinite(b)
    diff = a[ok] - b[ok]
    wins, losses = int(np.sum(diff > 0)), int(np.sum(diff < 0))
    n = wins + losses
    p = float(stats.binomtest(wins, n, 0.5, alternative="greater").pvalue) if n else 1.0
    return {"wins": wins, "losses": losses, "ties": int(diff.size - n), "p_value": p}


def improvement(a, b) -> float:
    """Relative improvement of mean(a) over mean(b)."""
    ma, mb = np.nanmean(a), np.nanmean(b)
    return float((ma - mb) / mb) if mb else float("nan")


SCHEMES = ("fris", "fd_no_ris", "random_phase", "hd_ris_mrc", "hd_no_ris")


def benchmark_summary(rows: list) -> dict:
    cols = {s: np.array([r[s] for r in rows], float) for s in SCHEMES}
    return {
        "means": {s: float(np.nanmean(v)) for s, v in cols.items()},
        "sign_tests": {s: sign_test(cols["fris"], cols[s]) for s in SCHEMES if s != "fris"},
        "improvements": {
            "hd_ris_mrc_over_hd_no_ris": improvement(cols["hd_ris_mrc"], cols["hd_no_ris"]),
            "fd_no_ris_over_hd_no_ris": improvement(cols["fd_no_ris"], cols["hd_no_ris"]),
            "fris_over_fd_no_ris": improvement(cols["fris"], cols["fd_no_ris"]),
            "fris_over_random_phase": improvement(cols["fris"], cols["random_phase"]),
        },
    }


# -- output ------------------------------------------------------------------


def write_csv(path, rows: list) -> None:
    path = Path(path)
    header: list = []
    for r in rows:
        header.extend(k for k in r if k not in header)
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=header)
        w.writeheader()
        for r in rows:
            w.writerow(r)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        return None if not np.isfinite(obj) else float(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def write_json(path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(_jsonable(obj), fh, indent=1)


GNUPLOT = {
    "fig2": """set datafile separator ','
set key autotitle columnhead
set xlabel 'number of users'
set ylabel 'mean rate (bit/s/Hz)'
set title 'DL/UL rate vs number of DL (N=4) or UL (M=4) users'
# columns: sweep,gamma_U_db,M,N,dl_sum_mean,dl_sum_se,ul_aggregate_mean,ul_aggregate_se,n
plot 'summary.csv' using ($1 eq 'M' && $2==5 ? $3 : 1/0):5 with linespoints title 'DL, vary M, 5 dB', \\
     '' using ($1 eq 'M' && $2==10 ? $3 : 1/0):5 with linespoints title 'DL, vary M, 10 dB', \\
     '' using ($1 eq 'N' && $2==5 ? $4 : 1/0):5 with linespoints title 'DL, vary N, 5 dB', \\
     '' using ($1 eq 'N' && $2==10 ? $4 : 1/0):5 with linespoints title 'DL, vary N, 10 dB'
""",
    "fig3": """set datafile separator ','
set key autotitle columnhead
set xlabel 'BS-RIS horizontal distance d (m)'
set ylabel 'mean DL sum rate (bit/s/Hz)'
# columns: K,d_m,dl_sum_mean,dl_sum_se,n
plot for [K in "8 16 32"] 'summary.csv' using ($1==K ? $2 : 1/0):3:4 with yerrorlines title 'K='.K
""",
    "fig4": """set datafile separator ','
set style data histograms
set style fill solid 0.6
set ylabel 'mean sum rate (bit/s/Hz)'
# columns: ratio,fris,fd_no_ris,random_phase,hd_ris_mrc,hd_no_ris
plot 'summary.csv' using 2:xtic(1) title 'FRIS', '' using 3 title 'FD no RIS', \\
     '' using 4 title 'FD random phase', '' using 5 title 'HD RIS MRC', '' using 6 title 'HD no RIS'
""",
}


def write_plot(out: Path, name: str) -> Path:
    path = Path(out) / f"{name}.gp"
    path.write_text(GNUPLOT[name])
    return path


def config_record(exp: Experiment) -> dict:
    return {"config": exp.raw, "config_hash": exp.hash, "fris": asdict(exp.fris)}
