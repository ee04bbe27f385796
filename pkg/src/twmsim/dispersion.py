"""Frequency grids, tabulated waveguide dispersion, walk-off and phase mismatch.

Dispersion enters as tables of effective index against angular frequency,
typically exported from an external mode solver. The effective index is
interpolated with a C1 cubic spline so the group velocity can be taken from
the analytic derivative instead of finite differences.
"""

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.constants import c as SPEED_OF_LIGHT
from scipy.interpolate import CubicSpline

from .errors import (
    ExtrapolationError,
    InconsistentBandsError,
    InvalidGridError,
    MalformedTableError,
)
from .process import ProcessKind

FIELD_LABELS = ("signal", "idler", "pump")


@dataclass(frozen=True)
class FrequencyGrid:
    """Equally spaced grid ``omega_n = band_start + n * spacing`` for n = 1..count."""

    band_start: float
    spacing: float
    count: int
    label: str = "signal"

    @property
    def points(self):
        return self.band_start + self.spacing * np.arange(1, self.count + 1)

    @property
    def center(self):
        return self.band_start + 0.5 * (self.count + 1) * self.spacing

    @property
    def span(self):
        return (self.band_start + self.spacing, self.band_start + self.count * self.spacing)


def build_grid(band_start, spacing, count, label="signal"):
    """Build a frequency grid, validating spacing and count."""
    if not np.isfinite(spacing) or spacing <= 0:
        raise InvalidGridError(f"grid spacing must be positive, got {spacing}", operation="build_grid")
    if int(count) != count or count < 2:
        raise InvalidGridError(f"grid needs at least 2 points, got {count}", operation="build_grid")
    if label not in FIELD_LABELS:
        raise InvalidGridError(f"unknown field label {label!r}", operation="build_grid")
    return FrequencyGrid(float(band_start), float(spacing), int(count), label)


def centered_grid(center, spacing, count, label="signal"):
    """Grid of ``count`` points placed symmetrically about ``center``."""
    return build_grid(center - 0.5 * (count + 1) * spacing, spacing, count, label)


@dataclass(frozen=True, eq=False)
class DispersionModel:
    """Effective-index table with spline interpolant.

    Attributes:
        omega: sample angular frequencies (rad/s), strictly increasing.
        n_eff: effective index at each sample.
        omega_central: band center used for walk-off and phase mismatch.
    """

    omega: np.ndarray
    n_eff: np.ndarray
    omega_central: float
    _spline: CubicSpline = field(repr=False, compare=False, default=None)

    def __post_init__(self):
        if self._spline is None:
            object.__setattr__(self, "_spline", CubicSpline(self.omega, self.n_eff))

    @property
    def window(self):
        return float(self.omega[0]), float(self.omega[-1])

    def _check(self, w):
        w = np.asarray(w, dtype=float)
        lo, hi = self.window
        # a relative slack of a few ulps keeps round-tripped grid points inside
        tol = 1e-12 * max(abs(lo), abs(hi))
        if np.any(w < lo - tol) or np.any(w > hi + tol):
            raise ExtrapolationError(
                f"frequency outside dispersion table window [{lo:.6e}, {hi:.6e}] rad/s",
                operation="evaluate",
            )
        return np.clip(w, lo, hi)

    def index(self, w):
        w = self._check(w)
        out = self._spline(w)
        # exact reproduction at the sample abscissae
        hit = np.searchsorted(self.omega, w)
        hit = np.clip(hit, 0, len(self.omega) - 1)
        exact = self.omega[hit] == w
        return np.where(exact, self.n_eff[hit], out)

    def beta(self, w):
        """Propagation constant n_eff * omega / c (rad/m)."""
        w = np.asarray(w, dtype=float)
        return self.index(w) * w / SPEED_OF_LIGHT

    def group_index(self, w):
        w = self._check(w)
        return self._spline(w) + w * self._spline(w, 1)

    def group_velocity(self, w):
        """c / (n_eff + omega dn_eff/domega) (m/s)."""
        return SPEED_OF_LIGHT / self.group_index(w)

    @property
    def central_group_velocity(self):
        return float(self.group_velocity(self.omega_central))


def load_dispersion(omega, n_eff, omega_central):
    """Create a :class:`DispersionModel` from sample arrays.

    Raises:
        MalformedTableError: fewer than 4 samples, non-increasing abscissae,
            or a group velocity that is not finite and positive.
        ExtrapolationError: ``omega_central`` outside the table.
    """
    omega = np.asarray(omega, dtype=float).copy()
    n_eff = np.asarray(n_eff, dtype=float).copy()
    if omega.ndim != 1 or omega.shape != n_eff.shape:
        raise MalformedTableError("omega and n_eff must be 1-D arrays of equal length", operation="load_dispersion")
    if len(omega) < 4:
        raise MalformedTableError(f"need at least 4 samples, got {len(omega)}", operation="load_dispersion")
    if not (np.all(np.isfinite(omega)) and np.all(np.isfinite(n_eff))):
        raise MalformedTableError("non-finite entries in dispersion table", operation="load_dispersion")
    if np.any(np.diff(omega) <= 0):
        raise MalformedTableError("frequency samples must be strictly increasing", operation="load_dispersion")
    if not (omega[0] <= omega_central <= omega[-1]):
        raise ExtrapolationError("central frequency outside dispersion table", operation="load_dispersion")
    omega.flags.writeable = False
    n_eff.flags.writeable = False
    model = DispersionModel(omega, n_eff, float(omega_central), CubicSpline(omega, n_eff))
    # hybridization artifacts show up as non-positive group index; refuse them
    probe = np.linspace(omega[0], omega[-1], 8 * len(omega))
    ng = model.group_index(probe)
    if not np.all(np.isfinite(ng)) or np.any(ng <= 0):
        raise MalformedTableError(
            "group velocity is not finite and positive over the table window",
            operation="load_dispersion",
        )
    return model


def read_dispersion_csv(path, omega_central):
    """Read a CSV with header ``omega_rad_s,n_eff`` or ``lambda_m,n_eff`` (SI units)."""
    path = Path(path)
    with path.open(newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].lstrip().startswith("#")]
    if not rows:
        raise MalformedTableError(f"{path}: empty dispersion file", operation="read_dispersion_csv")
    header = [h.strip() for h in rows[0]]
    if len(header) != 2 or header[1] != "n_eff" or header[0] not in ("omega_rad_s", "lambda_m"):
        raise MalformedTableError(
            f"{path}: header must be 'omega_rad_s,n_eff' or 'lambda_m,n_eff', got {','.join(header)}",
            operation="read_dispersion_csv",
        )
    try:
        data = np.array([[float(x) for x in r] for r in rows[1:]])
    except ValueError as exc:
        raise MalformedTableError(f"{path}: {exc}", operation="read_dispersion_csv") from None
    if data.ndim != 2 or data.shape[1] != 2:
        raise MalformedTableError(f"{path}: expected two columns", operation="read_dispersion_csv")
    x, n = data[:, 0], data[:, 1]
    if header[0] == "lambda_m":
        x = 2 * np.pi * SPEED_OF_LIGHT / x
        order = np.argsort(x)
        x, n = x[order], n[order]
    return load_dispersion(x, n, omega_central)


def write_dispersion_csv(path, model, *, wavelength=False):
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        if wavelength:
            w.writerow(["lambda_m", "n_eff"])
            for om, n in zip(model.omega[::-1], model.n_eff[::-1]):
                w.writerow([repr(float(2 * np.pi * SPEED_OF_LIGHT / om)), repr(float(n))])
        else:
            w.writerow(["omega_rad_s", "n_eff"])
            for om, n in zip(model.omega, model.n_eff):
                w.writerow([repr(float(om)), repr(float(n))])


@dataclass(frozen=True, eq=False)
class WalkOffProfile:
    """Walk-off Delta k_j(omega_n) (rad/m) of one field relative to the pump frame."""

    omega: np.ndarray
    values: np.ndarray
    omega_central: float


def walk_off(model_j, model_p, grid_j):
    """Walk-off of field j against the pump frame, keeping all dispersion of field j.

    ``dk(w) = beta_j(w) - beta_j(w_j) - (w - w_j) / v_p(w_p)``. For a linear
    ``beta_j`` this is ``(1/v_j - 1/v_p)(w - w_j)``.
    """
    w = grid_j.points
    wj = model_j.omega_central
    inv_vp = 1.0 / model_p.central_group_velocity
    dk = model_j.beta(w) - model_j.beta(wj) - (w - wj) * inv_vp
    # exact zero at the center when it is a grid point
    dk = np.where(w == wj, 0.0, dk)
    return WalkOffProfile(w, dk, wj)


def phase_mismatch(beta_p, beta_s, beta_i, kind=ProcessKind.PDC):
    """beta_p - beta_s - beta_i for PDC, beta_p + beta_s - beta_i for QFC."""
    kind = ProcessKind.coerce(kind)
    sign = -1.0 if kind is ProcessKind.PDC else 1.0
    return beta_p + sign * beta_s - beta_i


def baseline_phase_mismatch(model_p, model_s, model_i, omega_p, omega_s, omega_i, kind=ProcessKind.PDC):
    """Uncompensated phase mismatch at the band centers (rad/m).

    Raises:
        InconsistentBandsError: band centers violate energy conservation by
            more than one part in 1e9 (PDC: w_p = w_s + w_i; QFC: w_i = w_p + w_s).
    """
    kind = ProcessKind.coerce(kind)
    if kind is ProcessKind.PDC:
        residual, scale = omega_p - omega_s - omega_i, omega_p
    else:
        residual, scale = omega_i - omega_p - omega_s, omega_i
    if abs(residual) > 1e-9 * abs(scale):
        raise InconsistentBandsError(
            f"band centers violate energy conservation (residual {residual:.3e} rad/s)",
            operation="baseline_phase_mismatch",
        )
    return float(phase_mismatch(model_p.beta(omega_p), model_s.beta(omega_s), model_i.beta(omega_i), kind))


def qpm_period(delta_beta):
    """First-order quasi-phase-matching period 2 pi / |delta_beta| (m)."""
    if delta_beta == 0:
        return np.inf
    return 2 * np.pi / abs(delta_beta)


def taylor_dispersion(omega_central, n_phase, n_group, gvd=0.0, half_width=None, samples=64):
    """Dispersion table from a second-order Taylor expansion of beta.

    ``beta(w) = n_phase w_c / c + n_group (w - w_c) / c + gvd (w - w_c)^2 / 2``
    with ``gvd`` in s^2/m. Handy for synthetic devices and tests.
    """
    if half_width is None:
        half_width = 0.05 * omega_central
    w = np.linspace(omega_central - half_width, omega_central + half_width, samples)
    d = w - omega_central
    beta = n_phase * omega_central / SPEED_OF_LIGHT + n_group * d / SPEED_OF_LIGHT + 0.5 * gvd * d**2
    return load_dispersion(w, beta * SPEED_OF_LIGHT / w, omega_central)
