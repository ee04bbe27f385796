"""A fully specified device + pump + error configuration, ready to propagate."""

from dataclasses import dataclass, field, replace

import numpy as np

from .dispersion import baseline_phase_mismatch, walk_off
from .errors import CoverageError, InvalidGridError, MeshError
from .nonlinearity import InteractionCoefficients, PolingPattern, sample_g, uniform_pattern
from .process import ProcessKind
from .pump import PumpField, energy_distribution


@dataclass(frozen=True, eq=False)
class LossModel:
    """Linear power loss of signal and idler (1/m), uniform along z.

    ``alpha_s``/``alpha_i`` are scalars or arrays over the respective grids.
    """

    alpha_s: object = 0.0
    alpha_i: object = 0.0

    def __post_init__(self):
        for a in (self.alpha_s, self.alpha_i):
            if np.any(np.asarray(a) < 0):
                raise ValueError("loss coefficients must be non-negative")

    @property
    def uniform(self):
        """True when one scalar coefficient covers both bands."""
        return np.ndim(self.alpha_s) == 0 and np.ndim(self.alpha_i) == 0 and float(self.alpha_s) == float(self.alpha_i)

    @property
    def lossless(self):
        return not (np.any(np.asarray(self.alpha_s)) or np.any(np.asarray(self.alpha_i)))

    def step_factors(self, n, dz):
        """Amplitude transmissions (eta_s, eta_i) as arrays of length n for a step dz."""
        es = np.exp(-0.5 * np.asarray(self.alpha_s, dtype=float) * dz) * np.ones(n)
        ei = np.exp(-0.5 * np.asarray(self.alpha_i, dtype=float) * dz) * np.ones(n)
        return es, ei

    def total(self, length):
        """eta_tot = exp(-alpha L / 2) for uniform loss."""
        if not self.uniform:
            raise ValueError("eta_tot is only defined for band-uniform loss")
        return float(np.exp(-0.5 * float(self.alpha_s) * length))


@dataclass(frozen=True, eq=False)
class Scenario:
    """Everything the propagator needs, with all random draws already made.

    The walk-off arrays are ``Delta k_j`` on the signal/idler grids;
    ``baseline_mismatch`` is the uncompensated ``Delta beta`` at the band
    centres; ``inhomogeneity`` (optional) adds a z-dependent residual.
    """

    kind: ProcessKind
    signal: object
    idler: object
    walk_off_s: np.ndarray
    walk_off_i: np.ndarray
    pump: object
    coefficients: InteractionCoefficients
    poling: PolingPattern
    baseline_mismatch: float = 0.0
    inhomogeneity: object = None
    loss: LossModel = field(default_factory=LossModel)
    pump_alpha: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", ProcessKind.coerce(self.kind))
        if self.signal.count != self.idler.count:
            raise InvalidGridError("signal and idler grids need the same number of points", operation="Scenario")
        if not np.isclose(self.signal.spacing, self.idler.spacing, rtol=1e-12, atol=0):
            raise InvalidGridError("signal and idler grids need the same spacing", operation="Scenario")
        for name in ("walk_off_s", "walk_off_i"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != (self.n,):
                raise CoverageError(f"{name} must have one value per grid point", operation="Scenario")
            object.__setattr__(self, name, arr)
        if self.pump_alpha < 0:
            raise ValueError("pump loss must be non-negative")

    @property
    def n(self):
        return self.signal.count

    @property
    def length(self):
        return self.poling.length

    @property
    def spacing(self):
        return self.signal.spacing

    def replace(self, **changes):
        return replace(self, **changes)

    # -- frequencies the pump has to cover ----------------------------------
    def pump_frequencies(self):
        """Sum (PDC) or difference (QFC) frequencies, index k = m + n or n - m + N - 1."""
        d = self.spacing
        k = np.arange(2 * self.n - 1)
        ws1, wi1 = self.signal.points[0], self.idler.points[0]
        if self.kind is ProcessKind.PDC:
            return ws1 + wi1 + k * d
        return wi1 - ws1 + (k - (self.n - 1)) * d

    def pump_index(self):
        m = np.arange(self.n)[:, None]
        nn = np.arange(self.n)[None, :]
        if self.kind is ProcessKind.PDC:
            return m + nn
        return nn - m + self.n - 1

    def difference_frequencies(self):
        return (np.arange(2 * self.n - 1) - (self.n - 1)) * self.spacing

    @property
    def z_dependent(self):
        """Whether the generator varies along z beyond the sign of g."""
        return bool(
            self.coefficients.spm != 0.0 and self.pump.photons != 0.0
            or self.pump_alpha != 0.0
            or self.inhomogeneity is not None and np.any(self.inhomogeneity.values)
        )

    def pump_field(self):
        return PumpField(self.pump, self.pump_frequencies(), self.coefficients.spm, self.pump_alpha, self.length)

    def energy_table(self):
        if self.coefficients.xpm_s == 0 and self.coefficients.xpm_i == 0:
            return np.zeros(2 * self.n - 1, dtype=complex)
        return np.atleast_1d(energy_distribution(self.pump, self.difference_frequencies()))

    def mismatch(self, z):
        """Local residual phase mismatch baseline + inhomogeneity (rad/m)."""
        z = np.asarray(z, dtype=float)
        out = np.full(z.shape, float(self.baseline_mismatch))
        if self.inhomogeneity is not None:
            out = out + self.inhomogeneity(z)
        return out

    def g(self, z):
        return sample_g(self.poling, z)


def build_scenario(kind, signal_grid, idler_grid, models, pump, coefficients, poling=None, *,
                   length=None, inhomogeneity=None, loss=None, pump_alpha=0.0):
    """Assemble a :class:`Scenario` from dispersion models.

    Args:
        models: mapping with ``"signal"``, ``"idler"`` and ``"pump"``
            :class:`~twmsim.dispersion.DispersionModel`.
        poling: domain pattern; defaults to an unpoled device of ``length``.
    """
    kind = ProcessKind.coerce(kind)
    ms, mi, mp = models["signal"], models["idler"], models["pump"]
    if poling is None:
        if length is None:
            raise ValueError("need a poling pattern or a device length")
        poling = uniform_pattern(length)
    dks = walk_off(ms, mp, signal_grid).values
    dki = walk_off(mi, mp, idler_grid).values
    dbeta = baseline_phase_mismatch(mp, ms, mi, mp.omega_central, ms.omega_central, mi.omega_central, kind)
    return Scenario(kind, signal_grid, idler_grid, dks, dki, pump, coefficients, poling, dbeta,
                    inhomogeneity, loss or LossModel(), pump_alpha)


def build_mesh(scenario, max_step=None, extra=()):
    """Propagation mesh: domain walls + inhomogeneity nodes, subdivided to ``max_step``."""
    L = scenario.length
    nodes = [scenario.poling.boundaries]
    if scenario.inhomogeneity is not None:
        nodes.append(np.clip(scenario.inhomogeneity.z, 0.0, L))
    nodes.append(np.asarray(extra, dtype=float))
    z = np.unique(np.concatenate(nodes))
    z = z[(z >= 0) & (z <= L)]
    if max_step is None or not np.isfinite(max_step):
        return z
    if max_step <= 0:
        raise MeshError("max_step must be positive", operation="build_mesh")
    gaps = np.diff(z)
    parts = np.maximum(1, np.ceil(gaps / max_step - 1e-9).astype(int))
    pieces = [z[:1]]
    for a, gap, p in zip(z[:-1], gaps, parts):
        pieces.append(a + gap * np.arange(1, p + 1) / p)
    out = np.concatenate(pieces)
    out[-1] = L
    return out


def check_mesh(scenario, mesh):
    mesh = np.asarray(mesh, dtype=float)
    if mesh.ndim != 1 or len(mesh) < 2 or np.any(np.diff(mesh) <= 0):
        raise MeshError("mesh must be strictly increasing", operation="check_mesh")
    if mesh[0] != 0.0 or not np.isclose(mesh[-1], scenario.length, rtol=1e-12, atol=0):
        raise MeshError("mesh must cover [0, L]", operation="check_mesh")
    walls = scenario.poling.boundaries
    pos = np.searchsorted(mesh, walls)
    pos = np.clip(pos, 0, len(mesh) - 1)
    ok = np.isclose(mesh[pos], walls, rtol=0, atol=1e-15 * max(scenario.length, 1e-300) * 10)
    if not np.all(ok):
        raise MeshError("mesh does not refine every domain boundary", operation="check_mesh")
    return mesh
