"""Classical undepleted pump: envelope, SPM-dressed spectral amplitude, energy distribution.

The pump is described in its co-moving frame by a real-space amplitude
``Lambda(z')`` normalised to the photon number, ``int |Lambda|^2 dz' = N_p``.
Self-phase modulation multiplies every slice of the envelope by a phase
proportional to its local photon density and to the SPM phase accumulated
since the device entrance. Linear pump loss rescales both the amplitude and
the density seen by that phase.

All z'-quadratures use the trapezoid rule on a uniform grid. For smooth,
rapidly decaying integrands this converges exponentially, and the error is
estimated by comparing against the same rule on every second node.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.constants import hbar

from .errors import InvalidLossError, QuadratureError, UndefinedOverlapError

FWHM_TO_SIGMA = 1.0 / (2.0 * np.sqrt(2.0 * np.log(2.0)))
QUAD_RTOL = 1e-6
MAX_QUAD_POINTS = 1 << 17


def db_per_cm_to_per_m(alpha_db_cm):
    """Power attenuation in dB/cm to the natural-log coefficient in 1/m."""
    return float(alpha_db_cm) * np.log(10.0) / 10.0 * 100.0


@dataclass(frozen=True, eq=False)
class PumpPulse:
    """Classical pump pulse in the co-moving frame.

    Either a transform-limited Gaussian given by its intensity FWHM
    ``duration`` (s), or a tabulated envelope (``z_samples``, ``samples``)
    that is rescaled to ``photons``.
    """

    omega_p: float
    group_velocity: float
    photons: float
    duration: float = None
    z_samples: np.ndarray = None
    samples: np.ndarray = None
    t0: float = 0.0
    _norm: float = field(default=1.0, repr=False)

    def __post_init__(self):
        if self.group_velocity <= 0:
            raise ValueError("pump group velocity must be positive")
        if self.photons < 0:
            raise ValueError("pump photon number must be non-negative")
        if self.t0 != 0.0:
            raise ValueError("only t0 = 0 is supported")
        if self.samples is None:
            if self.duration is None or self.duration <= 0:
                raise ValueError("a Gaussian pump needs a positive duration")
        else:
            z = np.asarray(self.z_samples, dtype=float)
            s = np.asarray(self.samples, dtype=complex)
            if z.shape != s.shape or z.ndim != 1 or np.any(np.diff(z) <= 0):
                raise ValueError("tabulated envelope needs matching, increasing z samples")
            norm = np.trapezoid(np.abs(s) ** 2, z)
            if norm <= 0:
                raise ValueError("tabulated envelope has zero norm")
            object.__setattr__(self, "z_samples", z)
            object.__setattr__(self, "samples", s)
            object.__setattr__(self, "_norm", float(norm))

    @property
    def is_gaussian(self):
        return self.samples is None

    @property
    def sigma_z(self):
        """Standard deviation of |Lambda|^2 along the co-moving coordinate (m)."""
        if self.is_gaussian:
            return self.duration * self.group_velocity * FWHM_TO_SIGMA
        p = np.abs(self.samples) ** 2
        z = self.z_samples
        mean = np.trapezoid(p * z, z) / self._norm
        return float(np.sqrt(np.trapezoid(p * (z - mean) ** 2, z) / self._norm))

    def with_photons(self, photons):
        return PumpPulse(self.omega_p, self.group_velocity, photons, self.duration,
                         self.z_samples, self.samples, self.t0)

    def envelope(self, z):
        """Lambda(z') in photons^(1/2) m^(-1/2)."""
        z = np.asarray(z, dtype=float)
        if self.is_gaussian:
            s = self.sigma_z
            return np.sqrt(self.photons / (s * np.sqrt(2 * np.pi))) * np.exp(-(z ** 2) / (4 * s ** 2)) + 0j
        scale = np.sqrt(self.photons / self._norm)
        re = np.interp(z, self.z_samples, self.samples.real, left=0.0, right=0.0)
        im = np.interp(z, self.z_samples, self.samples.imag, left=0.0, right=0.0)
        return scale * (re + 1j * im)

    def density(self, z):
        return np.abs(self.envelope(z)) ** 2

    def default_grid(self, kappa_max=0.0, phase_slope=0.0, refine=0):
        """Uniform odd-length z' grid resolving the envelope and the fastest carrier."""
        if not self.is_gaussian:
            z = self.z_samples
            if refine:
                z = np.linspace(z[0], z[-1], (len(z) - 1) * 2 ** refine + 1)
            return z
        s_amp = np.sqrt(2.0) * self.sigma_z
        half = 12.0 * s_amp
        bandwidth = kappa_max + 8.0 / s_amp + phase_slope
        dz = min(s_amp / 4.0, np.pi / (2.0 * bandwidth)) / 2 ** refine
        n = 2 * int(np.ceil(half / dz)) + 1
        if n > MAX_QUAD_POINTS:
            raise QuadratureError(f"pump quadrature would need {n} nodes", operation="pump_grid")
        return np.linspace(-half, half, n)


def _trapz_weights(z):
    w = np.empty_like(z)
    dz = np.diff(z)
    w[0] = dz[0] / 2
    w[-1] = dz[-1] / 2
    w[1:-1] = (dz[:-1] + dz[1:]) / 2
    return w


def _transform(z, integrand, kappa):
    """sum_j w_j integrand_j exp(-i kappa z_j) on full and half grids."""
    phase = np.exp(-1j * np.outer(kappa, z))
    full = phase @ (_trapz_weights(z) * integrand)
    if len(z) >= 5 and len(z) % 2 == 1:
        zh = z[::2]
        half = phase[:, ::2] @ (_trapz_weights(zh) * integrand[::2])
    else:
        half = full
    return full, half


def _check_quadrature(full, half, operation):
    scale = np.max(np.abs(full)) if np.size(full) else 0.0
    if scale == 0.0:
        return
    err = np.max(np.abs(full - half)) / scale
    if err > QUAD_RTOL:
        raise QuadratureError(f"z'-quadrature error estimate {err:.2e} exceeds {QUAD_RTOL:g}", operation=operation)


def spm_phase_integral(c_spm, v_p, z, alpha=0.0):
    """int_0^z C_SPM N_p(z'')/N_p(0) / v_p dz'' for uniform C_SPM and pump loss."""
    z = np.asarray(z, dtype=float)
    if alpha == 0.0:
        return c_spm * z / v_p
    return c_spm / v_p * (-np.expm1(-alpha * z)) / alpha


def pump_loss_schedule(photons, alpha, positions):
    """Pump photon numbers ``N_p(z_l) = exp(-int_{z_0}^{z_l} alpha dz) N_p(z_0)``.

    ``alpha`` (1/m) may be a scalar, an array of per-interval values (one per
    gap between consecutive ``positions``) or a callable, integrated by the
    trapezoid rule on ``positions``.
    """
    z = np.asarray(positions, dtype=float)
    if callable(alpha):
        a = np.asarray(alpha(z), dtype=float)
        if np.any(a < 0):
            raise InvalidLossError("loss coefficient must be non-negative", operation="pump_loss_schedule")
        integral = np.concatenate([[0.0], np.cumsum(0.5 * (a[1:] + a[:-1]) * np.diff(z))])
    elif np.ndim(alpha) == 0:
        if alpha < 0:
            raise InvalidLossError("loss coefficient must be non-negative", operation="pump_loss_schedule")
        integral = alpha * (z - z[0])
    else:
        a = np.asarray(alpha, dtype=float)
        if a.shape != (len(z) - 1,):
            raise InvalidLossError("need one loss value per interval", operation="pump_loss_schedule")
        if np.any(a < 0):
            raise InvalidLossError("loss coefficient must be non-negative", operation="pump_loss_schedule")
        integral = np.concatenate([[0.0], np.cumsum(a * np.diff(z))])
    return photons * np.exp(-integral)


class PumpField:
    """Tabulates the SPM-dressed pump spectral amplitude on fixed frequencies.

    The z'-grid is refined until the quadrature error estimate is below
    1e-6 at both the device entrance and the largest SPM phase requested
    (``length``), then frozen. Evaluation at any ``z`` is a single
    matrix-vector product.
    """

    def __init__(self, pulse, omegas, c_spm=0.0, alpha=0.0, length=0.0):
        self.pulse = pulse
        self.omegas = np.asarray(omegas, dtype=float)
        self.c_spm = float(c_spm)
        self.alpha = float(alpha)
        self.length = float(length)
        vp = pulse.group_velocity
        self.prefactor = np.sqrt(hbar * pulse.omega_p / (2 * np.pi * vp))
        self._kappa = (self.omegas - pulse.omega_p) / vp
        kmax = float(np.max(np.abs(self._kappa))) if self._kappa.size else 0.0
        phi_max = abs(self.spm_phase(self.length))
        slope = 0.0
        if phi_max and pulse.photons:
            zz = pulse.default_grid(kmax)
            slope = phi_max * float(np.max(np.abs(np.gradient(pulse.density(zz), zz))))
        for refine in range(6):
            self.z = pulse.default_grid(kmax, slope, refine)
            self._lam = pulse.envelope(self.z)
            self._dens = np.abs(self._lam) ** 2
            self._phase = np.exp(-1j * np.outer(self._kappa, self.z)) * _trapz_weights(self.z)
            try:
                for zc in {0.0, self.length}:
                    full, half = _transform(self.z, self._integrand(zc), self._kappa)
                    _check_quadrature(full, half, "PumpField")
                break
            except QuadratureError:
                if not pulse.is_gaussian and refine == 5:
                    raise
        else:  # pragma: no cover - exhausted refinement
            raise QuadratureError("pump quadrature did not converge", operation="PumpField")

    def photon_scale(self, z):
        """N_p(z) / N_p(0)."""
        return np.exp(-self.alpha * np.asarray(z, dtype=float))

    def spm_phase(self, z):
        return spm_phase_integral(self.c_spm, self.pulse.group_velocity, z, self.alpha)

    def _integrand(self, z):
        phi = self.spm_phase(z)
        if phi == 0.0:
            return self._lam
        return self._lam * np.exp(1j * self._dens * phi)

    def amplitude(self, z):
        """A(z, omega) on ``self.omegas``."""
        scale = np.sqrt(self.photon_scale(z))
        return self.prefactor * scale * (self._phase @ self._integrand(z))


def pump_spectral_amplitude(pulse, omega, z=0.0, c_spm=0.0, alpha=0.0):
    """SPM-dressed pump spectral amplitude A(z, omega).

    Args:
        pulse: the pump pulse.
        omega: angular frequencies (rad/s), scalar or array.
        z: propagation distance from the device entrance (m).
        c_spm: uniform SPM coefficient.
        alpha: pump power loss coefficient (1/m).

    Raises:
        QuadratureError: the z'-quadrature did not reach 1e-6 relative accuracy.
    """
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    field_ = PumpField(pulse, omega, c_spm, alpha, length=z)
    out = field_.amplitude(z)
    return out if out.size > 1 else complex(out[0])


def energy_distribution(pulse, omega):
    """E(omega) = hbar w_p int |Lambda(z)|^2 exp(-i omega z / v_p) dz (J)."""
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    kappa = omega / pulse.group_velocity
    z = pulse.default_grid(float(np.max(np.abs(kappa))))
    full, half = _transform(z, pulse.density(z), kappa)
    _check_quadrature(full, half, "energy_distribution")
    out = hbar * pulse.omega_p * full
    return out if out.size > 1 else complex(out[0])


def gaussian_spectral_amplitude(pulse, omega):
    """Closed-form |A(omega)| of an unchirped Gaussian pulse without SPM."""
    s = pulse.sigma_z
    vp = pulse.group_velocity
    kappa = (np.asarray(omega, dtype=float) - pulse.omega_p) / vp
    peak = np.sqrt(hbar * pulse.omega_p / (2 * np.pi * vp)) * np.sqrt(pulse.photons / (s * np.sqrt(2 * np.pi))) * 2 * s * np.sqrt(np.pi)
    return peak * np.exp(-(kappa ** 2) * s ** 2)


def spectral_window(pulse, c_spm=0.0, length=0.0, alpha=0.0, points=None):
    """Frequency grid wide enough to hold the SPM-broadened pump spectrum."""
    s_amp = np.sqrt(2.0) * pulse.sigma_z
    phi = abs(spm_phase_integral(c_spm, pulse.group_velocity, length, alpha))
    z = pulse.default_grid()
    slope = phi * float(np.max(np.abs(np.gradient(pulse.density(z), z)))) if pulse.photons else 0.0
    kappa_half = 8.0 / s_amp + 1.5 * slope
    if points is None:
        # resolve features on the scale of the full envelope extent
        points = 2 * int(np.ceil(kappa_half * 24.0 * s_amp / np.pi)) + 1
    vp = pulse.group_velocity
    return pulse.omega_p + vp * np.linspace(-kappa_half, kappa_half, points)


def spm_overlap_fom(pulse, c_spm, length, alpha=0.0, omegas=None):
    """Normalised overlap between SPM-dressed and SPM-free pump spectra at ``length``.

    Returns |<A_spm, A_0>|^2 / (||A_spm||^2 ||A_0||^2), evaluated on
    ``omegas`` (defaults to :func:`spectral_window`).

    Raises:
        UndefinedOverlapError: either spectrum has zero norm.
    """
    if omegas is None:
        omegas = spectral_window(pulse, c_spm, length, alpha)
    omegas = np.asarray(omegas, dtype=float)
    a_spm = PumpField(pulse, omegas, c_spm, alpha, length).amplitude(length)
    a_0 = PumpField(pulse, omegas, 0.0, alpha, length).amplitude(length)
    w = _trapz_weights(omegas)
    n_spm = float(np.sum(w * np.abs(a_spm) ** 2))
    n_0 = float(np.sum(w * np.abs(a_0) ** 2))
    if n_spm == 0.0 or n_0 == 0.0:
        raise UndefinedOverlapError("pump spectrum has zero norm", operation="spm_overlap_fom")
    if spm_phase_integral(c_spm, pulse.group_velocity, length, alpha) == 0.0:
        # identical fields; skip the rounding of the inner product
        return 1.0
    inner = np.sum(w * np.conj(a_spm) * a_0)
    return float(min(1.0, abs(inner) ** 2 / (n_spm * n_0)))
