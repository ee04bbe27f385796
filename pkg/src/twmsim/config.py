"""TOML scenario configuration: schema, validation, overrides and scenario assembly."""

import copy
import hashlib
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.constants import c as SPEED_OF_LIGHT

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .dispersion import baseline_phase_mismatch, centered_grid, qpm_period, read_dispersion_csv
from .errors import ConfigError, TwmError
from .io import read_inhomogeneity_csv, read_mode_grid, read_poling_csv
from .nonlinearity import (
    DomainErrorModel,
    InteractionCoefficients,
    apodized_poling,
    generate_inhomogeneity,
    inject_domain_errors,
    overlap_coefficients,
    periodic_poling,
    uniform_pattern,
)
from .process import ProcessKind
from .pump import PumpPulse, db_per_cm_to_per_m
from .scenario import LossModel, build_scenario
from .seeding import derive_seed

# every key the loader understands, with its default (None = required or optional without default)
SCHEMA = {
    "process": {"kind": "pdc"},
    "dispersion": {"signal": None, "idler": None, "pump": None},
    "grid": {"points": None, "spacing_rad_s": None, "signal_wavelength_m": None, "idler_wavelength_m": None},
    "pump": {"wavelength_m": None, "duration_s": None, "photons": None, "spm_coefficient": 0.0,
             "loss_db_per_cm": None},
    "coefficients": {"twm": None, "xpm_s": 0.0, "xpm_i": 0.0, "modes": None},
    "poling": {"type": "periodic", "length_m": None, "period_m": None, "duty": 0.5,
               "apodization_sigma": 0.2, "file": None},
    "errors": {"loss_db_per_cm": 0.0, "loss_idler_db_per_cm": None, "domain_shift_m": 0.0,
               "missing_probability": 0.0, "inhomogeneity_range_rad_per_m": 0.0,
               "smoothing_length_m": None, "inhomogeneity_file": None},
    "seeds": {"master": 0},
    "mesh": {"max_step_m": None, "interleave_loss": False, "inhomogeneity_nodes": 401},
    "output": {"propagator_format": "json"},
    "spm_scan": {"thresholds": [0.99, 0.9]},
    "presets": {},
}
MODE_KEYS = {"pump", "signal", "idler", "chi2_zzz_m_per_v", "chi3_zzzz_m2_per_v2"}
REQUIRED = [
    "dispersion.signal", "dispersion.idler", "dispersion.pump", "grid.points", "grid.spacing_rad_s",
    "grid.signal_wavelength_m", "pump.wavelength_m", "pump.duration_s", "pump.photons", "poling.length_m",
]
POLING_TYPES = ("uniform", "periodic", "apodized", "file")


def _omega(wavelength):
    return 2 * np.pi * SPEED_OF_LIGHT / wavelength


def _get(data, path):
    node = data
    for part in path.split("."):
        if not isinstance(node, dict) or part not in node:
            raise KeyError(path)
        node = node[part]
    return node


def parse_value(text):
    """Interpret a command-line value as a TOML literal, falling back to a bare string."""
    try:
        return tomllib.loads(f"v = {text}")["v"]
    except tomllib.TOMLDecodeError:
        return text


def set_path(data, path, value):
    """Set a dotted key, refusing keys outside the schema."""
    parts = path.split(".")
    if len(parts) < 2 or parts[0] not in SCHEMA or parts[0] == "presets":
        raise ConfigError(f"unknown parameter path {path!r}", operation="override", key=path)
    section, key = parts[0], parts[1]
    if section == "coefficients" and key == "modes" and len(parts) == 3:
        if parts[2] not in MODE_KEYS:
            raise ConfigError(f"unknown parameter path {path!r}", operation="override", key=path)
        data.setdefault("coefficients", {}).setdefault("modes", {})[parts[2]] = value
        return
    if len(parts) != 2 or key not in SCHEMA[section]:
        raise ConfigError(f"unknown parameter path {path!r}", operation="override", key=path)
    data.setdefault(section, {})[key] = value


@dataclass(frozen=True)
class ScenarioConfig:
    """A validated configuration: resolved values plus where relative paths point."""

    data: dict
    base_dir: Path

    def get(self, path):
        return _get(self.data, path)

    def opt(self, path, default=None):
        try:
            return _get(self.data, path)
        except KeyError:
            return default

    def path(self, key):
        value = self.get(key)
        p = Path(value)
        return p if p.is_absolute() else self.base_dir / p

    @property
    def kind(self):
        return ProcessKind.coerce(self.get("process.kind"))

    def with_overrides(self, overrides):
        data = copy.deepcopy(self.data)
        for k, v in overrides.items():
            set_path(data, k, v)
        return validate(data, self.base_dir)

    def referenced_files(self):
        keys = ["dispersion.signal", "dispersion.idler", "dispersion.pump"]
        if self.opt("poling.file") and self.get("poling.type") == "file":
            keys.append("poling.file")
        if self.opt("errors.inhomogeneity_file"):
            keys.append("errors.inhomogeneity_file")
        files = [self.path(k) for k in keys]
        modes = self.opt("coefficients.modes")
        if modes:
            files += [self.base_dir / modes[k] for k in ("pump", "signal", "idler")]
        return files

    def hash(self):
        """Short SHA-256 over the resolved values and the bytes of every referenced file."""
        h = hashlib.sha256(json.dumps(self.data, sort_keys=True).encode())
        for f in self.referenced_files():
            h.update(hashlib.sha256(f.read_bytes()).digest())
        return h.hexdigest()[:16]


def load_config(path, overrides=None, preset=None):
    """Read, merge defaults, apply a preset and overrides, validate.

    Raises:
        ConfigError: unreadable file, unknown keys, bad values, missing files.
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}", operation="load_config")
    try:
        raw = tomllib.loads(path.read_text())
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}", operation="load_config") from None
    data = {}
    for section, value in raw.items():
        if section not in SCHEMA:
            raise ConfigError(f"unknown section [{section}]", operation="load_config", key=section)
        if not isinstance(value, dict):
            raise ConfigError(f"[{section}] must be a table", operation="load_config", key=section)
        if section == "presets":
            data["presets"] = value
            continue
        for key, v in value.items():
            if section == "coefficients" and key == "modes" and isinstance(v, dict):
                for mk, mv in v.items():
                    set_path(data, f"coefficients.modes.{mk}", mv)
            else:
                set_path(data, f"{section}.{key}", v)
    if preset is not None:
        presets = data.get("presets", {})
        if preset not in presets:
            raise ConfigError(f"unknown preset {preset!r}", operation="load_config", key=f"presets.{preset}")
        for k, v in presets[preset].items():
            set_path(data, k, v)
    for k, v in (overrides or {}).items():
        set_path(data, k, v)
    return validate(data, path.parent)


def _positive(data, key, allow_zero=False):
    v = _get(data, key)
    ok = isinstance(v, (int, float)) and not isinstance(v, bool) and np.isfinite(v) and (v >= 0 if allow_zero else v > 0)
    if not ok:
        raise ConfigError(f"{key} must be a {'non-negative' if allow_zero else 'positive'} number, got {v!r}",
                          operation="validate", key=key)
    return v


def validate(data, base_dir):
    """Fill defaults and check types, ranges and file existence."""
    out = {}
    for section, keys in SCHEMA.items():
        given = data.get(section, {})
        if section == "presets":
            out[section] = copy.deepcopy(given)
            continue
        out[section] = {k: copy.deepcopy(given.get(k, default)) for k, default in keys.items()}
    out = {s: {k: v for k, v in d.items() if v is not None} if s != "presets" else d for s, d in out.items()}
    for key in REQUIRED:
        try:
            _get(out, key)
        except KeyError:
            raise ConfigError(f"missing required key {key}", operation="validate", key=key) from None
    try:
        ProcessKind.coerce(out["process"]["kind"])
    except ValueError:
        raise ConfigError("process.kind must be 'pdc' or 'qfc'", operation="validate", key="process.kind") from None
    for key in ("grid.spacing_rad_s", "grid.signal_wavelength_m", "pump.wavelength_m", "pump.duration_s",
                "poling.length_m"):
        _positive(out, key)
    for key in ("pump.photons", "errors.loss_db_per_cm", "errors.inhomogeneity_range_rad_per_m"):
        _positive(out, key, allow_zero=True)
    n = out["grid"]["points"]
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise ConfigError("grid.points must be a positive integer", operation="validate", key="grid.points")
    p = out["errors"]["missing_probability"]
    if not (isinstance(p, (int, float)) and 0 <= p <= 1):
        raise ConfigError("errors.missing_probability must lie in [0, 1]", operation="validate",
                          key="errors.missing_probability")
    if out["poling"]["type"] not in POLING_TYPES:
        raise ConfigError(f"poling.type must be one of {POLING_TYPES}", operation="validate", key="poling.type")
    if out["poling"]["type"] == "file" and "file" not in out["poling"]:
        raise ConfigError("poling.type = 'file' needs poling.file", operation="validate", key="poling.file")
    if out["output"]["propagator_format"] not in ("json", "bin"):
        raise ConfigError("output.propagator_format must be 'json' or 'bin'", operation="validate",
                          key="output.propagator_format")
    th = out["spm_scan"]["thresholds"]
    if not (isinstance(th, list) and len(th) == 2 and 0 < th[1] <= th[0] <= 1):
        raise ConfigError("spm_scan.thresholds must be [upper, lower] with 0 < lower <= upper <= 1",
                          operation="validate", key="spm_scan.thresholds")
    coeff = out["coefficients"]
    if "twm" not in coeff and "modes" not in coeff:
        raise ConfigError("give coefficients.twm or coefficients.modes", operation="validate", key="coefficients")
    if "twm" in coeff:
        twm = coeff["twm"]
        if not (isinstance(twm, (int, float)) or isinstance(twm, list) and len(twm) == 2):
            raise ConfigError("coefficients.twm must be a number or [re, im]", operation="validate",
                              key="coefficients.twm")
    seed = out["seeds"]["master"]
    if not isinstance(seed, int) or seed < 0:
        raise ConfigError("seeds.master must be a non-negative integer", operation="validate", key="seeds.master")
    cfg = ScenarioConfig(out, Path(base_dir))
    files = {
        "dispersion.signal": out["dispersion"]["signal"],
        "dispersion.idler": out["dispersion"]["idler"],
        "dispersion.pump": out["dispersion"]["pump"],
    }
    if "file" in out["poling"] and out["poling"]["type"] == "file":
        files["poling.file"] = out["poling"]["file"]
    if "inhomogeneity_file" in out["errors"]:
        files["errors.inhomogeneity_file"] = out["errors"]["inhomogeneity_file"]
    if "modes" in coeff:
        for k in ("pump", "signal", "idler"):
            if k not in coeff["modes"]:
                raise ConfigError(f"coefficients.modes.{k} missing", operation="validate", key=f"coefficients.modes.{k}")
            files[f"coefficients.modes.{k}"] = coeff["modes"][k]
    for key, rel in files.items():
        f = Path(rel) if Path(rel).is_absolute() else cfg.base_dir / rel
        if not f.is_file():
            raise ConfigError(f"file not found: {f}", operation="validate", key=key)
    return cfg


# ---------------------------------------------------------------------------
# scenario assembly


def band_centers(cfg):
    kind = cfg.kind
    wp = _omega(cfg.get("pump.wavelength_m"))
    ws = _omega(cfg.get("grid.signal_wavelength_m"))
    wi = wp - ws if kind is ProcessKind.PDC else wp + ws
    if cfg.opt("grid.idler_wavelength_m") is not None:
        wi_given = _omega(cfg.get("grid.idler_wavelength_m"))
        if abs(wi_given - wi) > 1e-9 * max(wp, wi):
            raise ConfigError("band centres violate energy conservation", operation="band_centers",
                              key="grid.idler_wavelength_m")
        wi = wi_given
    if wi <= 0:
        raise ConfigError("idler frequency is not positive", operation="band_centers", key="grid.signal_wavelength_m")
    return wp, ws, wi


def _wrap(exc, key):
    if isinstance(exc, TwmError) and exc.key is None:
        exc.key = key
    return exc


def build_from_config(cfg):
    """Assemble the :class:`~twmsim.scenario.Scenario` described by ``cfg``.

    Random draws use sub-seeds of ``seeds.master``: stream 0 for missing
    domains, stream 1 for the inhomogeneity profile.
    """
    kind = cfg.kind
    wp, ws, wi = band_centers(cfg)
    models = {}
    for name, w in (("signal", ws), ("idler", wi), ("pump", wp)):
        try:
            models[name] = read_dispersion_csv(cfg.path(f"dispersion.{name}"), w)
        except TwmError as exc:
            raise _wrap(exc, f"dispersion.{name}")
    n = cfg.get("grid.points")
    d = cfg.get("grid.spacing_rad_s")
    sg = centered_grid(ws, d, n, "signal")
    ig = centered_grid(wi, d, n, "idler")
    vp = models["pump"].central_group_velocity
    pulse = PumpPulse(wp, vp, float(cfg.get("pump.photons")), float(cfg.get("pump.duration_s")))
    coefficients = _coefficients(cfg, (wp, ws, wi), kind)
    L = float(cfg.get("poling.length_m"))
    dbeta = baseline_phase_mismatch(models["pump"], models["signal"], models["idler"], wp, ws, wi, kind)
    pattern = _poling(cfg, dbeta, L)
    master = cfg.get("seeds.master")
    shift = float(cfg.get("errors.domain_shift_m"))
    p_miss = float(cfg.get("errors.missing_probability"))
    if shift != 0.0 or p_miss != 0.0:
        try:
            pattern = inject_domain_errors(pattern, DomainErrorModel(shift, p_miss, derive_seed(master, 0)))
        except TwmError as exc:
            raise _wrap(exc, "errors.domain_shift_m")
    inhom = None
    R = float(cfg.get("errors.inhomogeneity_range_rad_per_m"))
    if cfg.opt("errors.inhomogeneity_file"):
        inhom = read_inhomogeneity_csv(cfg.path("errors.inhomogeneity_file"))
    elif R > 0:
        nodes = cfg.get("mesh.inhomogeneity_nodes")
        smoothing = float(cfg.opt("errors.smoothing_length_m", L / 10))
        try:
            inhom = generate_inhomogeneity(R, smoothing, np.linspace(0.0, L, nodes), derive_seed(master, 1))
        except ValueError as exc:
            raise ConfigError(str(exc), operation="generate_inhomogeneity", key="errors.smoothing_length_m") from None
    a_s = db_per_cm_to_per_m(cfg.get("errors.loss_db_per_cm"))
    a_i = db_per_cm_to_per_m(cfg.opt("errors.loss_idler_db_per_cm", cfg.get("errors.loss_db_per_cm")))
    a_p = db_per_cm_to_per_m(cfg.opt("pump.loss_db_per_cm", cfg.get("errors.loss_db_per_cm")))
    return build_scenario(kind, sg, ig, models, pulse, coefficients, pattern, inhomogeneity=inhom,
                          loss=LossModel(a_s, a_i), pump_alpha=a_p)


def _coefficients(cfg, omegas, kind):
    c = cfg.data["coefficients"]
    spm = float(cfg.get("pump.spm_coefficient"))
    if "modes" in c:
        m = c["modes"]
        modes = [read_mode_grid(cfg.base_dir / m[k]).normalized() for k in ("pump", "signal", "idler")]
        chi2 = chi3 = None
        if "chi2_zzz_m_per_v" in m:
            chi2 = np.zeros((3, 3, 3))
            chi2[2, 2, 2] = m["chi2_zzz_m_per_v"]
        if "chi3_zzzz_m2_per_v2" in m:
            chi3 = np.zeros((3, 3, 3, 3))
            chi3[2, 2, 2, 2] = m["chi3_zzzz_m2_per_v2"]
        out = overlap_coefficients(*modes, omegas, chi2=chi2, chi3=chi3, kind=kind)
        return InteractionCoefficients(out.twm, out.xpm_s, out.xpm_i, spm or out.spm)
    twm = c["twm"]
    twm = complex(*twm) if isinstance(twm, list) else complex(twm)
    return InteractionCoefficients(twm, float(c["xpm_s"]), float(c["xpm_i"]), spm)


def _poling(cfg, dbeta, L):
    p = cfg.data["poling"]
    kind = p["type"]
    try:
        if kind == "uniform":
            return uniform_pattern(L)
        if kind == "file":
            return read_poling_csv(cfg.path("poling.file"), L)
        period = float(p.get("period_m", qpm_period(dbeta)))
        if kind == "periodic":
            return periodic_poling(period, L, float(p["duty"]))
        sigma = float(p["apodization_sigma"]) * L
        return apodized_poling(lambda z: np.exp(-((z - L / 2) ** 2) / (2 * sigma**2)), period, L)
    except TwmError as exc:
        raise _wrap(exc, "poling")
