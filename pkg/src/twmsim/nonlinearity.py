"""Structure of the nonlinearity along the waveguide.

Covers the chi(2) poling pattern g(z), chi(3) presence h(z), fabrication
errors in domain writing, the residual phase mismatch from geometric
inhomogeneity, and the transverse overlap integrals that give the
interaction coefficients.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.constants import epsilon_0, hbar
from scipy.ndimage import uniform_filter1d

from .errors import (
    InfeasibleApodizationError,
    InvalidModeError,
    InvalidPatternError,
    OutOfRangeError,
    OverBroadeningError,
)
from .process import ProcessKind

# ---------------------------------------------------------------------------
# poling patterns


@dataclass(frozen=True, eq=False)
class PolingPattern:
    """Piecewise-constant domain orientation over a device of length ``length``.

    ``edges`` has one more entry than ``orientation``; domain k occupies the
    half-open interval ``[edges[k], edges[k+1])``. Outside the poled region
    the crystal has the ``background`` orientation. Adjacent domains with
    equal orientation are merged on construction.
    """

    edges: np.ndarray
    orientation: np.ndarray
    length: float
    background: int = 1

    def __post_init__(self):
        edges = np.asarray(self.edges, dtype=float)
        orient = np.asarray(self.orientation, dtype=np.int8)
        if edges.ndim != 1 or orient.ndim != 1 or len(edges) != len(orient) + 1:
            raise InvalidPatternError("need len(edges) == len(orientation) + 1", operation="PolingPattern")
        if len(orient) and (np.any(np.diff(edges) <= 0) or edges[0] < 0 or edges[-1] > self.length):
            raise InvalidPatternError("domain edges must increase strictly within [0, L]", operation="PolingPattern")
        if not np.all(np.isin(orient, (-1, 0, 1))):
            raise InvalidPatternError("orientations must be -1, 0 or +1", operation="PolingPattern")
        if len(orient) > 1:
            keep = np.concatenate([[True], orient[1:] != orient[:-1]])
            edges = np.concatenate([edges[:-1][keep], edges[-1:]])
            orient = orient[keep]
        edges.flags.writeable = False
        orient.flags.writeable = False
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "orientation", orient)
        object.__setattr__(self, "length", float(self.length))

    @property
    def widths(self):
        return np.diff(self.edges)

    @property
    def boundaries(self):
        """All z positions where g may change, including 0 and L."""
        return np.unique(np.concatenate([[0.0, self.length], self.edges]))

    def inverted_intervals(self):
        inv = self.orientation == -1
        return np.stack([self.edges[:-1][inv], self.edges[1:][inv]], axis=1)

    def first_harmonic(self, k):
        """int_0^L g(z) exp(i k z) dz, evaluated exactly domain by domain."""
        k = np.asarray(k, dtype=float)
        edges = np.unique(np.concatenate([[0.0], self.edges, [self.length]]))
        mids = 0.5 * (edges[1:] + edges[:-1])
        vals = sample_g(self, mids)
        a, b = edges[:-1], edges[1:]
        kk = k[..., None]
        with np.errstate(invalid="ignore", divide="ignore"):
            seg = np.where(kk == 0, (b - a) + 0j, (np.exp(1j * kk * b) - np.exp(1j * kk * a)) / (1j * np.where(kk == 0, 1, kk)))
        return np.sum(vals * seg, axis=-1)

    def __eq__(self, other):
        return (
            isinstance(other, PolingPattern)
            and self.length == other.length
            and self.background == other.background
            and np.array_equal(self.edges, other.edges)
            and np.array_equal(self.orientation, other.orientation)
        )

    __hash__ = None


def uniform_pattern(length, orientation=1):
    """Unpoled device: a single domain (g = orientation everywhere)."""
    return PolingPattern(np.array([0.0, length]), np.array([orientation]), length, background=orientation)


def periodic_poling(period, length, duty=0.5):
    """Periodic poling starting with an inverted domain of width ``duty * period``.

    The final period is truncated at ``length``.
    """
    if not (period > 0) or period > length:
        raise InvalidPatternError(f"need 0 < period <= length (period={period}, length={length})", operation="periodic_poling")
    if not (0 < duty < 1):
        raise InvalidPatternError(f"duty cycle must lie in (0, 1), got {duty}", operation="periodic_poling")
    n = int(np.ceil(length / period - 1e-12))
    starts = period * np.arange(n)
    edges = np.stack([starts, starts + duty * period], axis=1).ravel()
    edges = np.append(edges[edges < length], length)
    orient = np.tile([-1, 1], n)[: len(edges) - 1]
    return PolingPattern(edges, orient, length)


def apodized_poling(target, period, length, *, count=None):
    """Greedy domain-by-domain apodization toward a target amplitude profile.

    The device is cut into slots of half a period. Walking along z, each slot
    gets the orientation that keeps the running first-harmonic integral
    ``int_0^z g exp(i K z') dz'`` (K = 2 pi / period) closest to the target
    accumulation ``(2/pi) int_0^z a(z') dz'``. A constant target of 1 gives
    the 50 % duty periodic pattern.

    Args:
        target: callable ``a(z)`` with values in [0, 1] (peak-normalised).
        period: poling period (m).
        length: device length (m).
        count: number of half-period slots; defaults to ``floor(2 L / period)``.

    Raises:
        InfeasibleApodizationError: target exceeds the square-wave maximum of 1
            or is negative.
    """
    if not (period > 0) or period > length:
        raise InvalidPatternError("need 0 < period <= length", operation="apodized_poling")
    half = period / 2
    if count is None:
        count = int(np.floor(length / half + 1e-9))
    if count * half > length * (1 + 1e-12):
        raise InvalidPatternError("slots do not fit in the device", operation="apodized_poling")
    edges = half * np.arange(count + 1)
    edges[-1] = min(edges[-1], length)
    mids = 0.5 * (edges[1:] + edges[:-1])
    amp = np.asarray(target(mids), dtype=float) * np.ones_like(mids)
    if np.any(amp > 1 + 1e-12) or np.any(amp < 0):
        raise InfeasibleApodizationError(
            f"target amplitude must lie in [0, 1] (max {amp.max():.3f})", operation="apodized_poling"
        )
    goal = (2 / np.pi) * np.cumsum(amp * np.diff(edges))
    kq = 2 * np.pi / period
    contrib = (np.exp(1j * kq * edges[1:]) - np.exp(1j * kq * edges[:-1])) / (1j * kq)
    # the periodic pattern opens with an inverted domain; its running integral sets the direction
    direction = -contrib[0] / abs(contrib[0])
    orient = np.empty(count, dtype=np.int8)
    running = 0j
    for k in range(count):
        aim = goal[k] * direction
        d_plus = abs(running + contrib[k] - aim)
        d_minus = abs(running - contrib[k] - aim)
        s = 1 if d_plus <= d_minus + 1e-12 * abs(contrib[k]) else -1
        orient[k] = s
        running += s * contrib[k]
    return PolingPattern(edges, orient, length)


def sample_g(pattern, z):
    """Domain orientation at ``z`` (half-open domains, background outside)."""
    z = np.asarray(z, dtype=float)
    if np.any(z < 0) or np.any(z > pattern.length):
        raise OutOfRangeError("z outside the device", operation="sample_g")
    idx = np.searchsorted(pattern.edges, z, side="right") - 1
    inside = (idx >= 0) & (idx < len(pattern.orientation))
    vals = np.where(inside, pattern.orientation[np.clip(idx, 0, max(len(pattern.orientation) - 1, 0))] if len(pattern.orientation) else 0, pattern.background)
    return vals.astype(int) if vals.ndim else int(vals)


def sample_h(length, z):
    """chi(3) presence: 1 over the whole waveguide."""
    z = np.asarray(z, dtype=float)
    if np.any(z < 0) or np.any(z > length):
        raise OutOfRangeError("z outside the device", operation="sample_h")
    out = np.ones_like(z, dtype=int)
    return out if out.ndim else int(out)


@dataclass(frozen=True)
class DomainErrorModel:
    """Domain-writing errors.

    Attributes:
        shift: boundary displacement per wall (m); > 0 broadens inverted
            domains, < 0 narrows them.
        missing_probability: chance that an inverted domain is not written.
        seed: RNG seed for the missing-domain draw.
    """

    shift: float = 0.0
    missing_probability: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not (0.0 <= self.missing_probability <= 1.0):
            raise InvalidPatternError("missing-domain probability must lie in [0, 1]", operation="DomainErrorModel")


def inject_domain_errors(pattern, errors):
    """Apply broadening/narrowing and missing domains; deterministic given the seed.

    Every inverted domain grows by ``shift`` on both walls (clipped against its
    neighbours and the device ends); each inverted domain is independently
    reverted to the background orientation with ``missing_probability``.

    Raises:
        OverBroadeningError: ``|shift|`` is not smaller than the narrowest domain.
    """
    inv = pattern.inverted_intervals()
    if len(pattern.widths) and abs(errors.shift) >= pattern.widths.min():
        raise OverBroadeningError(
            f"|shift| = {abs(errors.shift):.3e} m is not below the minimum domain width {pattern.widths.min():.3e} m",
            operation="inject_domain_errors",
        )
    rng = np.random.default_rng(errors.seed)
    draws = rng.random(len(inv))
    inv = inv[draws >= errors.missing_probability]
    if errors.shift != 0.0 and len(inv):
        a = np.clip(inv[:, 0] - errors.shift, 0.0, pattern.length)
        b = np.clip(inv[:, 1] + errors.shift, 0.0, pattern.length)
        # broadened neighbours meet halfway
        overlap = a[1:] < b[:-1]
        mid = 0.5 * (a[1:] + b[:-1])
        a[1:] = np.where(overlap, mid, a[1:])
        b[:-1] = np.where(overlap, mid, b[:-1])
        keep = b > a
        inv = np.stack([a[keep], b[keep]], axis=1)
    return _rebuild(pattern, inv)


def _rebuild(pattern, inverted):
    if len(pattern.edges):
        lo, hi = pattern.edges[0], pattern.edges[-1]
    else:
        lo, hi = 0.0, pattern.length
    if len(inverted):
        lo, hi = min(lo, inverted[0, 0]), max(hi, inverted[-1, 1])
    edges = np.unique(np.concatenate([[lo, hi], inverted.ravel()]))
    mids = 0.5 * (edges[1:] + edges[:-1])
    orient = np.full(len(mids), pattern.background, dtype=np.int8)
    if len(inverted):
        idx = np.searchsorted(inverted[:, 0], mids, side="right") - 1
        ok = idx >= 0
        inside = ok & (mids < inverted[np.clip(idx, 0, None), 1])
        orient[inside] = -1
    return PolingPattern(edges, orient, pattern.length, pattern.background)


# ---------------------------------------------------------------------------
# waveguide inhomogeneity


@dataclass(frozen=True, eq=False)
class InhomogeneityProfile:
    """Residual phase mismatch Delta beta(z) (rad/m), linear between mesh nodes."""

    z: np.ndarray
    values: np.ndarray
    target_range: float = 0.0
    smoothing_length: float = 0.0
    seed: int = 0

    def __call__(self, z):
        z = np.asarray(z, dtype=float)
        if np.any(z < self.z[0] - 1e-15) or np.any(z > self.z[-1] + 1e-15):
            raise OutOfRangeError("z outside the inhomogeneity mesh", operation="InhomogeneityProfile")
        return np.interp(z, self.z, self.values)


def generate_inhomogeneity(target_range, smoothing_length, mesh, seed):
    """Smoothed random walk with zero mean and a prescribed peak-to-peak range.

    IID standard-normal steps are summed along the mesh, smoothed with a
    moving average of ``smoothing_length``, mean-subtracted and scaled so that
    ``max - min == target_range``.
    """
    z = np.asarray(mesh, dtype=float)
    if target_range < 0:
        raise ValueError("range must be non-negative")
    if len(z) < 2 or np.any(np.diff(z) <= 0):
        raise ValueError("mesh must be strictly increasing with at least two nodes")
    dz = float(np.mean(np.diff(z)))
    if smoothing_length < dz * (1 - 1e-9):
        raise ValueError("smoothing length must be at least the mesh spacing")
    rng = np.random.default_rng(seed)
    walk = np.cumsum(rng.standard_normal(len(z)) * np.sqrt(dz))
    window = max(1, int(round(smoothing_length / dz)))
    smooth = uniform_filter1d(walk, size=window, mode="nearest")
    smooth = smooth - smooth.mean()
    spread = smooth.max() - smooth.min()
    if target_range == 0 or spread == 0:
        values = np.zeros_like(z)
    else:
        values = smooth * (target_range / spread)
        values -= values.mean()
    return InhomogeneityProfile(z, values, float(target_range), float(smoothing_length), int(seed))


def cumulative_mismatch_phase(profile, baseline, z):
    """Trapezoid cumulative integral of ``baseline + profile(z)``; zero at z[0]."""
    z = np.asarray(z, dtype=float)
    db = np.full_like(z, float(baseline))
    if profile is not None:
        db = db + profile(z)
    return np.concatenate([[0.0], np.cumsum(0.5 * (db[1:] + db[:-1]) * np.diff(z))])


# ---------------------------------------------------------------------------
# interaction coefficients


@dataclass(frozen=True)
class InteractionCoefficients:
    """z-independent interaction coefficients (SI)."""

    twm: complex = 0.0
    xpm_s: float = 0.0
    xpm_i: float = 0.0
    spm: float = 0.0

    def __post_init__(self):
        for name in ("twm", "xpm_s", "xpm_i", "spm"):
            if not np.isfinite(getattr(self, name)):
                raise ValueError(f"coefficient {name} is not finite")


@dataclass(frozen=True, eq=False)
class ModeFieldGrid:
    """Transverse displacement-field mode sampled at cell centres.

    Attributes:
        x, y: cell-centre coordinates (m), uniform.
        d: complex array ``(3, ny, nx)`` with the x, y, z components.
        n: material refractive index map ``(ny, nx)``.
        phase_velocity, group_velocity: modal velocities (m/s).
    """

    x: np.ndarray
    y: np.ndarray
    d: np.ndarray
    n: np.ndarray
    phase_velocity: float
    group_velocity: float

    @property
    def dx(self):
        return float(self.x[1] - self.x[0])

    @property
    def dy(self):
        return float(self.y[1] - self.y[0])

    @property
    def cell(self):
        return self.dx * self.dy

    def norm(self):
        dens = np.sum(np.abs(self.d) ** 2, axis=0) / (epsilon_0 * self.n ** 2)
        return float(np.sum(dens) * self.cell * self.phase_velocity / self.group_velocity)

    def normalized(self):
        return ModeFieldGrid(self.x, self.y, self.d / np.sqrt(self.norm()), self.n,
                             self.phase_velocity, self.group_velocity)


def _check_modes(modes):
    ref = modes[0]
    for m in modes:
        if m.d.shape != (3, len(ref.y), len(ref.x)) or not (np.array_equal(m.x, ref.x) and np.array_equal(m.y, ref.y)):
            raise InvalidModeError("mode grids must share one mesh", operation="overlap_coefficients")
        if abs(m.norm() - 1.0) > 1e-3:
            raise InvalidModeError(f"mode not normalised (norm {m.norm():.6f})", operation="overlap_coefficients")


def overlap_coefficients(pump, signal, idler, omegas, *, chi2=None, chi3=None, kind=ProcessKind.PDC,
                         chi2_mask=None, chi3_mask=None):
    """Interaction coefficients from transverse mode overlaps (midpoint quadrature).

    Args:
        pump, signal, idler: normalised :class:`ModeFieldGrid` on a common mesh.
        omegas: central angular frequencies ``(w_p, w_s, w_i)``.
        chi2: ``(3, 3, 3)`` second-order tensor (m/V), or None.
        chi3: ``(3, 3, 3, 3)`` third-order tensor (m^2/V^2), or None.
        kind: PDC conjugates the signal field in the three-wave overlap, QFC does not.
        chi2_mask, chi3_mask: boolean ``(ny, nx)`` maps of where each material sits.

    Raises:
        InvalidModeError: modes are not normalised or do not share a mesh.
    """
    kind = ProcessKind.coerce(kind)
    _check_modes([pump, signal, idler])
    wp, ws, wi = omegas
    vp, vs, vi = pump.group_velocity, signal.group_velocity, idler.group_velocity
    cell = pump.cell
    dp, ds, di = pump.d, signal.d, idler.d
    twm = 0j
    if chi2 is not None:
        chi2 = np.asarray(chi2)
        mask = np.ones(pump.n.shape) if chi2_mask is None else np.asarray(chi2_mask, dtype=float)
        s_field = np.conj(ds) if kind is ProcessKind.PDC else ds
        weight = mask / (signal.n ** 2 * idler.n ** 2 * pump.n ** 2)
        integral = np.einsum("jkl,jyx,kyx,lyx,yx->", chi2, s_field, np.conj(di), dp, weight) * cell
        twm = integral / epsilon_0 ** 2 * np.sqrt(ws * wi / (2 * vp * vs * vi))
    xpm_s = xpm_i = spm = 0.0
    if chi3 is not None:
        chi3 = np.asarray(chi3)
        mask = np.ones(pump.n.shape) if chi3_mask is None else np.asarray(chi3_mask, dtype=float)

        def quartic(a, b, na, nb):
            weight = mask / (na ** 4 * nb ** 4)
            return np.einsum("jklm,jyx,kyx,lyx,myx,yx->", chi3, np.conj(a), np.conj(b), a, b, weight) * cell

        spm = 3 / (epsilon_0 ** 3 * hbar) * (hbar * wp / 2) ** 2 * quartic(dp, dp, pump.n, pump.n)
        xpm_s = 1.5 / epsilon_0 ** 3 * ws / (vp * vs) * quartic(dp, ds, pump.n, signal.n)
        xpm_i = 1.5 / epsilon_0 ** 3 * wi / (vp * vi) * quartic(dp, di, pump.n, idler.n)
        spm, xpm_s, xpm_i = (float(np.real(v)) for v in (spm, xpm_s, xpm_i))
    return InteractionCoefficients(complex(twm), xpm_s, xpm_i, spm)
