"""Batch drivers behind the command line: single runs, parameter sweeps, SPM scans.

Every file written here carries the config hash. Numbers are written with
the shortest round-trip float repr and JSON keys are sorted, so identical
inputs produce byte-identical files.
"""

import csv
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .analysis import figures_of_merit, jsa_decompose, moment_M
from .config import build_from_config, parse_value
from .errors import ConfigError
from .io import write_matrix_csv, write_propagator_bin, write_propagator_json
from .process import ProcessKind
from .propagator import trotter_propagate
from .pump import spm_overlap_fom
from .seeding import derive_seed

PDC_COLUMNS = ["photons_s", "photons_i", "schmidt_number", "purity", "r1", "edge_fraction"]
QFC_COLUMNS = ["gamma1", "separability", "edge_fraction"]
EDGE_WARNING = 0.05
WORKERS_ENV = "TWMSIM_WORKERS"


def default_workers():
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def fom_columns(kind):
    return PDC_COLUMNS if ProcessKind.coerce(kind) is ProcessKind.PDC else QFC_COLUMNS


def _fmt(x):
    if isinstance(x, float):
        return repr(x) if np.isfinite(x) else "nan"
    return str(x)


def _jsonable(x):
    if isinstance(x, float) and not np.isfinite(x):
        return None
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    return x


def dump_json(path, obj):
    Path(path).write_text(json.dumps(_jsonable(obj), sort_keys=True, indent=1, allow_nan=False) + "\n")


@dataclass
class RunResult:
    config_hash: str
    propagator: object
    fom: object
    record: dict


def simulate(cfg):
    """Build, propagate and evaluate one configuration (no files)."""
    scenario = build_from_config(cfg)
    prop = trotter_propagate(scenario, max_step=cfg.opt("mesh.max_step_m"),
                             interleave_loss=bool(cfg.get("mesh.interleave_loss")) or None)
    fom = figures_of_merit(prop)
    h = cfg.hash()
    master = cfg.get("seeds.master")
    warnings = []
    if fom.edge_fraction > EDGE_WARNING:
        warnings.append(f"{fom.edge_fraction:.1%} of the spectral weight sits in the outer 10% of the window")
    record = {
        "config_hash": h,
        "kind": prop.kind.value,
        "figures_of_merit": {k: v for k, v in fom.to_dict().items() if k in _fom_keys(prop.kind)},
        "undefined": fom.undefined,
        "grids": {"signal_rad_s": [float(w) for w in scenario.signal.points],
                  "idler_rad_s": [float(w) for w in scenario.idler.points]},
        "seeds": {"master": master, "domain_errors": derive_seed(master, 0), "inhomogeneity": derive_seed(master, 1)},
        "eta_tot": prop.eta_tot,
        "interleaved_loss": prop.interleaved,
        "mesh_steps": len(prop.mesh) - 1,
        "warnings": warnings,
    }
    return RunResult(h, prop, fom, record)


def _fom_keys(kind):
    cols = set(fom_columns(kind))
    return cols | ({"squeezing"} if kind is ProcessKind.PDC else {"gammas"})


def run_single(cfg, out_dir, emit_plots=False):
    """Write fom.json, jsa_abs.csv, jsa_phase.csv and the propagator export."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    res = simulate(cfg)
    prop = res.propagator
    if prop.kind is ProcessKind.PDC:
        jsa = jsa_decompose(moment_M(prop)).jsa
    else:
        # transfer function from input signal to converted idler
        jsa = prop.eta_tot * prop.matrix[prop.n :, : prop.n]
    write_matrix_csv(out / "jsa_abs.csv", np.abs(jsa), res.config_hash)
    write_matrix_csv(out / "jsa_phase.csv", np.where(np.abs(jsa) > 0, np.angle(jsa), 0.0), res.config_hash)
    if cfg.get("output.propagator_format") == "bin":
        write_propagator_bin(out / "propagator.bin", prop, res.config_hash)
    else:
        write_propagator_json(out / "propagator.json", prop, res.config_hash)
    dump_json(out / "fom.json", res.record)
    if emit_plots:
        from .plots import plot_jsa

        plot_jsa(out / "jsa_abs.png", np.abs(jsa), prop.signal.points, prop.idler.points, res.config_hash)
    return res


# ---------------------------------------------------------------------------
# sweeps


@dataclass(frozen=True)
class SweepSpec:
    """One swept config path, its values, seeds per value and the aggregate statistic."""

    param: str
    values: tuple
    repetitions: int = 1
    aggregation: str = "mean"
    paired_seeds: bool = False

    def __post_init__(self):
        if len(self.values) < 1:
            raise ConfigError("a sweep needs at least one value", operation="SweepSpec", key=self.param)
        if self.repetitions < 1:
            raise ConfigError("repetitions must be at least 1", operation="SweepSpec", key=self.param)
        if self.aggregation not in ("mean", "min", "max"):
            raise ConfigError("aggregation must be mean, min or max", operation="SweepSpec", key=self.param)

    def seed(self, master, value_index, rep):
        """Derived master seed of one run; paired sweeps reuse seeds across values."""
        index = rep if self.paired_seeds else value_index * self.repetitions + rep
        return derive_seed(master, 2 + index)


def parse_values(text):
    """``"0,0.5,1"`` or a TOML array literal."""
    text = text.strip()
    if text.startswith("["):
        vals = parse_value(text)
        if not isinstance(vals, list):
            raise ConfigError(f"cannot parse values {text!r}", operation="parse_values")
        return tuple(vals)
    return tuple(parse_value(t.strip()) for t in text.split(",") if t.strip())


def _sweep_task(args):
    cfg, param, value, seed = args
    run_cfg = cfg.with_overrides({param: value, "seeds.master": seed})
    res = simulate(run_cfg)
    return {k: getattr(res.fom, k) for k in fom_columns(run_cfg.kind)}


def run_sweep(cfg, spec, out_dir=None, workers=None, emit_plots=False):
    """Evaluate every (value, repetition) pair and append one aggregate row per value.

    Returns the rows as dicts; writes ``sweep.csv`` when ``out_dir`` is given.
    Results do not depend on ``workers``.
    """
    cfg.with_overrides({spec.param: spec.values[0]})  # fail fast on a bad path
    master = cfg.get("seeds.master")
    h = cfg.hash()
    tasks, keys = [], []
    for vi, value in enumerate(spec.values):
        for rep in range(spec.repetitions):
            seed = spec.seed(master, vi, rep)
            tasks.append((cfg, spec.param, value, seed))
            keys.append((vi, rep, seed))
    workers = workers or default_workers()
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_task, tasks))
    else:
        results = [_sweep_task(t) for t in tasks]
    collected = sorted(zip(keys, results), key=lambda kr: kr[0][:2])
    cols = fom_columns(cfg.kind)
    agg = {"mean": np.nanmean, "min": np.nanmin, "max": np.nanmax}[spec.aggregation]
    rows = []
    for vi, value in enumerate(spec.values):
        group = [r for (v, _, _), r in collected if v == vi]
        for (v, rep, seed), r in collected:
            if v == vi:
                rows.append({"config_hash": h, "param": spec.param, "value": value, "rep": rep, "seed": seed,
                             "row": "run", **r})
        stats = {}
        for c in cols:
            vals = np.array([g[c] for g in group], dtype=float)
            stats[c] = float(agg(vals)) if np.any(np.isfinite(vals)) else float("nan")
        rows.append({"config_hash": h, "param": spec.param, "value": value, "rep": "", "seed": "",
                     "row": f"aggregate:{spec.aggregation}", **stats})
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        _write_rows(out / "sweep.csv", rows, ["config_hash", "param", "value", "rep", "seed", "row"] + cols)
        if emit_plots:
            from .plots import plot_sweep

            plot_sweep(out / "sweep.png", rows, spec.param, cols)
    return rows


def _write_rows(path, rows, columns):
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_fmt(r[c]) for c in columns])


# ---------------------------------------------------------------------------
# self-phase modulation onset


def regime(fom, thresholds=(0.99, 0.9)):
    hi, lo = thresholds
    if fom >= hi:
        return "near-zero"
    if fom >= lo:
        return "weak"
    return "strong"


def run_spm_scan(cfg, photons, out_dir=None, thresholds=None, simulate_states=True, emit_plots=False):
    """Pump-overlap FOM, regime label and state figures for each pump photon number."""
    thresholds = tuple(thresholds or cfg.get("spm_scan.thresholds"))
    h = cfg.hash()
    rows = []
    cols = fom_columns(cfg.kind)
    for n_p in sorted(float(x) for x in photons):
        run_cfg = cfg.with_overrides({"pump.photons": n_p})
        scenario = build_from_config(run_cfg)
        overlap = spm_overlap_fom(scenario.pump, scenario.coefficients.spm, scenario.length, scenario.pump_alpha)
        row = {"config_hash": h, "pump_photons": n_p, "overlap_fom": float(overlap),
               "regime": regime(overlap, thresholds)}
        if simulate_states:
            fom = simulate(run_cfg).fom
            row.update({c: getattr(fom, c) for c in cols})
        else:
            row.update({c: float("nan") for c in cols})
        rows.append(row)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        _write_rows(out / "spm_scan.csv", rows, ["config_hash", "pump_photons", "overlap_fom", "regime"] + cols)
        if emit_plots:
            from .plots import plot_spm_scan

            plot_spm_scan(out / "spm_scan.png", rows, thresholds)
    return rows
