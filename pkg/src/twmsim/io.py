"""File formats: poling tables, inhomogeneity profiles, mode grids and result exports."""

import csv
import json
import struct
from pathlib import Path

import numpy as np

from .errors import ConfigError, InvalidModeError, InvalidPatternError
from .nonlinearity import InhomogeneityProfile, ModeFieldGrid, PolingPattern

BIN_MAGIC = b"TWMK"


def _rows(path, header, operation):
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"file not found: {path}", operation=operation)
    with path.open(newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].lstrip().startswith("#")]
    if not rows or [h.strip() for h in rows[0]] != list(header):
        raise ConfigError(f"{path}: header must be {','.join(header)}", operation=operation)
    try:
        return np.array([[float(x) for x in r] for r in rows[1:]], dtype=float).reshape(-1, len(header))
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}", operation=operation) from None


def read_poling_csv(path, length=None):
    """Domains as ``z_left_m,z_right_m,orientation`` rows, contiguous and sorted."""
    data = _rows(path, ("z_left_m", "z_right_m", "orientation"), "read_poling_csv")
    if len(data) == 0:
        raise InvalidPatternError(f"{path}: no domains", operation="read_poling_csv")
    left, right, orient = data.T
    if np.any(left[1:] != right[:-1]):
        raise InvalidPatternError(f"{path}: domains must be contiguous", operation="read_poling_csv")
    edges = np.concatenate([left[:1], right])
    return PolingPattern(edges, orient.astype(np.int8), float(length if length is not None else edges[-1]))


def write_poling_csv(path, pattern):
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["z_left_m", "z_right_m", "orientation"])
        for a, b, o in zip(pattern.edges[:-1], pattern.edges[1:], pattern.orientation):
            w.writerow([repr(float(a)), repr(float(b)), int(o)])


def read_inhomogeneity_csv(path):
    data = _rows(path, ("z_m", "delta_beta_rad_per_m"), "read_inhomogeneity_csv")
    z, v = data.T
    if len(z) < 2 or np.any(np.diff(z) <= 0):
        raise ConfigError(f"{path}: z must be strictly increasing", operation="read_inhomogeneity_csv")
    return InhomogeneityProfile(z, v, float(v.max() - v.min()))


def write_inhomogeneity_csv(path, profile):
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["z_m", "delta_beta_rad_per_m"])
        for z, v in zip(profile.z, profile.values):
            w.writerow([repr(float(z)), repr(float(v))])


def read_mode_grid(path):
    """Mode grid from an ``.npz`` with arrays x, y, d (3, ny, nx), n and scalars phase_velocity, group_velocity."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"file not found: {path}", operation="read_mode_grid")
    with np.load(path) as z:
        try:
            return ModeFieldGrid(z["x"], z["y"], z["d"], z["n"], float(z["phase_velocity"]), float(z["group_velocity"]))
        except KeyError as exc:
            raise InvalidModeError(f"{path}: missing array {exc}", operation="read_mode_grid") from None


def write_mode_grid(path, mode):
    np.savez(path, x=mode.x, y=mode.y, d=mode.d, n=mode.n,
             phase_velocity=mode.phase_velocity, group_velocity=mode.group_velocity)


# ---------------------------------------------------------------------------
# result exports


def _complex_pairs(a):
    return [[[float(z.real), float(z.imag)] for z in row] for row in a]


def propagator_record(prop, config_hash=""):
    ss, si, is_, ii = prop.blocks()
    return {
        "config_hash": config_hash,
        "kind": prop.kind.value,
        "n": prop.n,
        "eta_tot": prop.eta_tot,
        "interleaved_loss": prop.interleaved,
        "signal_grid_rad_s": [float(w) for w in prop.signal.points] if prop.signal else None,
        "idler_grid_rad_s": [float(w) for w in prop.idler.points] if prop.idler else None,
        "block_convention": "K = [[K_ss, K_si], [K_is*, K_ii*]] for PDC, [[K_ss, K_si], [K_is, K_ii]] for QFC",
        "blocks": {"ss": _complex_pairs(ss), "si": _complex_pairs(si), "is": _complex_pairs(is_), "ii": _complex_pairs(ii)},
    }


def write_propagator_json(path, prop, config_hash=""):
    Path(path).write_text(json.dumps(propagator_record(prop, config_hash), sort_keys=True) + "\n")


def read_propagator_json(path):
    """Return (full matrix, metadata dict)."""
    rec = json.loads(Path(path).read_text())
    b = {k: np.array([[complex(*z) for z in row] for row in v]) for k, v in rec["blocks"].items()}
    is_, ii = b["is"], b["ii"]
    if rec["kind"] == "pdc":
        is_, ii = is_.conj(), ii.conj()
    K = np.block([[b["ss"], b["si"]], [is_, ii]])
    meta = {k: v for k, v in rec.items() if k != "blocks"}
    return K, meta


def write_propagator_bin(path, prop, config_hash=""):
    """Magic, uint32 header length, JSON header, then the 2N x 2N matrix as little-endian complex128."""
    rec = propagator_record(prop, config_hash)
    del rec["blocks"]
    rec["layout"] = "row-major full matrix, complex128 little-endian"
    header = json.dumps(rec, sort_keys=True).encode()
    with Path(path).open("wb") as fh:
        fh.write(BIN_MAGIC + struct.pack("<I", len(header)) + header)
        fh.write(np.ascontiguousarray(prop.matrix, dtype="<c16").tobytes())


def read_propagator_bin(path):
    raw = Path(path).read_bytes()
    if raw[:4] != BIN_MAGIC:
        raise ValueError(f"{path}: not a propagator file")
    (hlen,) = struct.unpack("<I", raw[4:8])
    meta = json.loads(raw[8 : 8 + hlen])
    n2 = 2 * meta["n"]
    K = np.frombuffer(raw[8 + hlen :], dtype="<c16").reshape(n2, n2).copy()
    return K, meta


def write_matrix_csv(path, matrix, config_hash=""):
    with Path(path).open("w", newline="") as fh:
        fh.write(f"# config_hash={config_hash}\n")
        w = csv.writer(fh)
        for row in np.asarray(matrix):
            w.writerow([repr(float(x)) for x in row])


def read_matrix_csv(path):
    return np.loadtxt(path, delimiter=",", comments="#", ndmin=2)
