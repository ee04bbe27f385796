"""Step generators, the ordered-exponential propagator and an RK4 reference.

The field vector is ``x = (a_s, a_i^dagger)`` for PDC and ``(a_s, a_i)`` for
QFC, and it obeys ``dx/dz = i Q(z) x``. The pump couples the two bands through
a phase ``exp(i theta(z))``, where ``theta`` is the accumulated residual
mismatch. The product of step exponentials is taken in a frame that rotates
with ``theta``. In that frame the generator only changes at domain walls (and
where the pump or mismatch varies), so the piecewise-constant product is exact
for clean poling however fast the mismatch phase winds.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from .errors import (
    CoverageError,
    DegenerateLossError,
    MeshError,
    NumericError,
    OracleUnconvergedError,
)
from .process import ProcessKind
from .scenario import build_mesh, check_mesh

_CHUNK = 256


@dataclass(frozen=True, eq=False)
class StepGenerator:
    """Blocks of the generator on one step.

    ``F`` carries the pump coupling without conjugation, ``G``/``H`` the
    walk-off and cross-phase modulation of signal and idler.
    """

    F: np.ndarray
    G: np.ndarray
    H: np.ndarray
    kind: ProcessKind
    dz: float = 0.0

    @property
    def n(self):
        return self.F.shape[0]

    def matrix(self, phase=0.0, shift=0.0):
        """2N x 2N generator with coupling phase ``exp(i phase)``.

        ``shift`` adds ``s * diag(I, -I)``, used by the rotating frame.
        """
        n = self.n
        Q = np.empty((2 * n, 2 * n), dtype=complex)
        e = np.exp(1j * phase)
        if self.kind is ProcessKind.PDC:
            Q[:n, :n] = self.G
            Q[:n, n:] = e * self.F
            Q[n:, :n] = -np.conj(e) * self.F.conj().T
            Q[n:, n:] = -self.H
        else:
            Q[:n, :n] = self.G
            Q[:n, n:] = np.conj(e) * self.F.conj()
            Q[n:, :n] = e * self.F.T
            Q[n:, n:] = self.H
        if shift:
            idx = np.arange(n)
            Q[idx, idx] += shift
            Q[idx + n, idx + n] -= shift
        return Q


def _frame_shift(kind, dbeta):
    # PDC rotates (a_s, a_i^+) by (e^{i th/2}, e^{-i th/2}); QFC the other way round
    return -0.5 * dbeta if kind is ProcessKind.PDC else 0.5 * dbeta


def _frame(kind, theta, n):
    s = 0.5 if kind is ProcessKind.PDC else -0.5
    return np.concatenate([np.full(n, np.exp(1j * s * theta)), np.full(n, np.exp(-1j * s * theta))])


def coupling_indices(n, kind):
    """Index into the pump table for each (m, n) pair: m + n (PDC) or n - m + N - 1 (QFC)."""
    m = np.arange(n)[:, None]
    k = np.arange(n)[None, :]
    return m + k if ProcessKind.coerce(kind) is ProcessKind.PDC else k - m + n - 1


def assemble_step(walk_off_s, walk_off_i, pump_values, energy_values, coefficients, g, h, phase, spacing, kind, dz=0.0):
    """Generator blocks at one position.

    Args:
        walk_off_s, walk_off_i: Delta k on the signal/idler grids (rad/m).
        pump_values: pump amplitude on the 2N-1 sum (PDC) or difference (QFC)
            frequencies, ordered as :func:`coupling_indices`.
        energy_values: pump energy distribution at the 2N-1 offsets
            ``(k - N + 1) * spacing``.
        g, h: sign of the quadratic and cubic nonlinearity here.
        phase: accumulated mismatch phase.
    """
    kind = ProcessKind.coerce(kind)
    ks = np.asarray(walk_off_s, dtype=float)
    ki = np.asarray(walk_off_i, dtype=float)
    n = len(ks)
    pump_values = np.asarray(pump_values)
    energy_values = np.asarray(energy_values)
    if len(ki) != n:
        raise CoverageError("signal and idler walk-off have different lengths", operation="assemble_step")
    if pump_values.shape != (2 * n - 1,):
        raise CoverageError(f"pump table needs {2 * n - 1} samples, got {pump_values.shape}", operation="assemble_step")
    if energy_values.shape != (2 * n - 1,):
        raise CoverageError(f"energy table needs {2 * n - 1} samples, got {energy_values.shape}", operation="assemble_step")
    c = coefficients
    F = (c.twm * g / np.sqrt(2 * np.pi)) * np.exp(1j * phase) * pump_values[coupling_indices(n, kind)] * spacing
    diff = np.arange(n)[:, None] - np.arange(n)[None, :] + n - 1
    E = energy_values[diff] * spacing / (2 * np.pi) * h
    G = np.diag(ks).astype(complex) + c.xpm_s * E
    H = np.diag(ki).astype(complex) + c.xpm_i * E
    return StepGenerator(F, G, H, kind, float(dz))


def step_exponential(Q, dz):
    """``expm(i Q dz)`` for one generator or a stack of them (scaling and squaring)."""
    Q = np.asarray(Q)
    if not np.all(np.isfinite(Q)) or not np.all(np.isfinite(dz)):
        raise NumericError("non-finite generator entries", operation="step_exponential")
    dz = np.asarray(dz, dtype=float)
    if Q.ndim == 3:
        dz = dz.reshape(-1, 1, 1)
    return expm(1j * Q * dz)


def ordered_product(mats):
    """``mats[-1] @ ... @ mats[0]`` by pairwise reduction."""
    mats = np.asarray(mats)
    if len(mats) == 0:
        raise ValueError("empty product")
    while len(mats) > 1:
        odd = mats[-1:] if len(mats) % 2 else None
        mats = mats[1 : len(mats) - (len(mats) % 2) : 2] @ mats[0 : len(mats) - (len(mats) % 2) : 2]
        if odd is not None:
            mats = np.concatenate([mats, odd])
    return mats[0]


@dataclass(frozen=True, eq=False)
class Propagator:
    """Propagator K with x(L) = eta_tot K x(0) plus loss noise.

    With frequency-dependent loss the losses are multiplied into ``matrix``,
    ``interleaved`` is set and ``covariance`` holds the exactly tracked
    ``<x x^dagger>`` for vacuum input.
    """

    matrix: np.ndarray
    kind: ProcessKind
    signal: object = None
    idler: object = None
    eta_tot: float = 1.0
    interleaved: bool = False
    covariance: np.ndarray = None
    mesh: np.ndarray = field(default=None, repr=False)

    @property
    def n(self):
        return self.matrix.shape[0] // 2

    @property
    def lossless(self):
        return self.eta_tot == 1.0 and not self.interleaved

    def blocks(self):
        """(K^ss, K^si, K^is, K^ii); the lower blocks are conjugated for PDC."""
        n = self.n
        K = self.matrix
        ss, si, is_, ii = K[:n, :n], K[:n, n:], K[n:, :n], K[n:, n:]
        if self.kind is ProcessKind.PDC:
            is_, ii = is_.conj(), ii.conj()
        return ss, si, is_, ii

    def metric(self):
        n = self.n
        if self.kind is ProcessKind.PDC:
            return np.diag(np.concatenate([np.ones(n), -np.ones(n)]))
        return np.eye(2 * n)

    def commutator_error(self):
        """Frobenius norm of K J K^dagger - J (PDC) or K^dagger K - I (QFC)."""
        K = self.matrix
        if self.kind is ProcessKind.PDC:
            J = self.metric()
            return float(np.linalg.norm(K @ J @ K.conj().T - J))
        return float(np.linalg.norm(K.conj().T @ K - np.eye(2 * self.n)))


class _Tables:
    """Per-step generator data frozen before the product is formed."""

    def __init__(self, scenario, mesh):
        sc = scenario
        self.kind = sc.kind
        self.mesh = mesh
        self.dz = np.diff(mesh)
        mid = 0.5 * (mesh[1:] + mesh[:-1])
        self.mid = mid
        self.g = sc.g(mid)
        self.dbeta_nodes = sc.mismatch(mesh)
        # piecewise linear mismatch: its midpoint value is the step average
        self.dbeta = 0.5 * (self.dbeta_nodes[1:] + self.dbeta_nodes[:-1])
        self.theta = np.concatenate([[0.0], np.cumsum(self.dbeta * self.dz)])
        self.slope = np.diff(self.dbeta_nodes) / self.dz
        self.z_dependent = sc.pump_alpha != 0 or (sc.coefficients.spm != 0 and sc.pump.photons != 0)
        self.field = sc.pump_field()
        self.energy = sc.energy_table()
        self._A0 = None if self.z_dependent else self.field.amplitude(0.0)
        self.scenario = sc

    def step(self, l):
        sc = self.scenario
        z = self.mid[l]
        if self.z_dependent:
            A = self.field.amplitude(z)
            E = self.energy * self.field.photon_scale(z)
        else:
            A, E = self._A0, self.energy
        return assemble_step(sc.walk_off_s, sc.walk_off_i, A, E, sc.coefficients, self.g[l], 1.0, 0.0,
                             sc.spacing, sc.kind, self.dz[l])

    def rotating(self, l):
        """Effective rotating-frame generator of step l.

        Inside a step the frame shift ramps linearly with the mismatch. Besides
        the midpoint value this adds the second Magnus term
        ``-i dz^2/12 [A0, A1]`` (A1 the shift slope), which is what the
        coupling blocks pick up from the ramp.
        """
        Q = self.step(l).matrix(shift=_frame_shift(self.kind, self.dbeta[l]))
        if self.slope[l] != 0.0:
            n = Q.shape[0] // 2
            d = _frame_shift(self.kind, self.slope[l]) * np.concatenate([np.ones(n), -np.ones(n)])
            Q = Q - 1j * self.dz[l] ** 2 / 12.0 * Q * (d[None, :] - d[:, None])
        return Q

    def cache_keys(self):
        """Steps that share a generator, or None when every step differs."""
        sc = self.scenario
        if self.z_dependent or np.any(self.dbeta != self.dbeta[0]):
            return None
        scale = sc.length if sc.length else 1.0
        return np.round(self.dz / scale * 1e12).astype(np.int64) * 2 + (self.g > 0)


def default_max_step(scenario, min_steps=64):
    """Step ceiling 0.1/||Q'|| with Q' the rotating-frame generator less the mismatch shift."""
    tab_field = scenario.pump_field()
    st = assemble_step(scenario.walk_off_s, scenario.walk_off_i, tab_field.amplitude(0.0), scenario.energy_table(),
                       scenario.coefficients, 1.0, 1.0, 0.0, scenario.spacing, scenario.kind)
    norm = np.linalg.norm(st.matrix(), 2)
    ceiling = 0.1 / norm if norm > 0 else np.inf
    if scenario.z_dependent:
        ceiling = min(ceiling, scenario.length / min_steps)
    return ceiling


def _resolve_mesh(scenario, mesh, max_step):
    if mesh is None:
        if max_step is None:
            max_step = default_max_step(scenario)
        mesh = build_mesh(scenario, max_step)
    return check_mesh(scenario, mesh)


def _span_slice(mesh, span):
    if span is None:
        return 0, len(mesh) - 1
    a, b = span
    i, j = np.searchsorted(mesh, [a, b])
    if i >= len(mesh) or j >= len(mesh) or mesh[i] != a or mesh[j] != b or j <= i:
        raise MeshError("span endpoints must be mesh nodes", operation="trotter_propagate")
    return int(i), int(j)


def trotter_propagate(scenario, mesh=None, *, max_step=None, interleave_loss=None, span=None):
    """Ordered product of step exponentials over the mesh.

    Uniform-band loss is returned as a separate ``eta_tot``; frequency-dependent
    loss (or ``interleave_loss=True``) multiplies per-step transmissions into
    the product. ``span=(za, zb)`` restricts the product to part of the mesh,
    so that propagators over adjacent spans compose exactly.

    Raises:
        MeshError: the mesh misses a domain wall or does not cover [0, L].
    """
    sc = scenario
    mesh = _resolve_mesh(sc, mesh, max_step)
    n = sc.n
    tab = _Tables(sc, mesh)
    i0, i1 = _span_slice(mesh, span)
    loss = sc.loss
    if interleave_loss is None:
        interleave_loss = not loss.lossless and not loss.uniform
    elif not interleave_loss and not loss.uniform:
        raise ValueError("frequency-dependent loss has to be interleaved")

    steps = range(i0, i1)
    keys = tab.cache_keys()
    cache = {}
    K = np.eye(2 * n, dtype=complex)
    C = None
    if interleave_loss:
        c0 = np.concatenate([np.ones(n), np.zeros(n) if sc.kind is ProcessKind.PDC else np.ones(n)])
        C = np.diag(c0).astype(complex)
    for start in range(i0, i1, _CHUNK):
        idx = np.arange(start, min(start + _CHUNK, i1))
        if keys is not None:
            todo = [l for l in idx if keys[l] not in cache]
            uniq = {}
            for l in todo:
                uniq.setdefault(keys[l], l)
            if uniq:
                ls = list(uniq.values())
                ex = step_exponential(np.stack([tab.rotating(l) for l in ls]), tab.dz[ls])
                for key, e in zip(uniq, ex):
                    cache[key] = e
            ex = np.stack([cache[keys[l]] for l in idx])
        else:
            ex = step_exponential(np.stack([tab.rotating(l) for l in idx]), tab.dz[idx])
        if interleave_loss:
            for l, e in zip(idx, ex):
                es, ei = loss.step_factors(n, tab.dz[l])
                eta = np.concatenate([es, ei])
                e = eta[:, None] * e
                K = e @ K
                C = e @ C @ e.conj().T + np.diag((1 - eta**2) * c0)
        else:
            K = ordered_product(ex) @ K
    if not np.all(np.isfinite(K)):
        raise NumericError("propagator overflowed", operation="trotter_propagate")
    da = _frame(sc.kind, tab.theta[i0], n)
    db = _frame(sc.kind, tab.theta[i1], n)
    K = db[:, None] * K / da[None, :]
    if C is not None:
        C = db[:, None] * C * db.conj()[None, :]
        # fold the entrance frame into the vacuum input (diagonal, so unchanged)
    eta_tot = 1.0
    if not interleave_loss and not loss.lossless:
        eta_tot = float(np.exp(-0.5 * float(loss.alpha_s) * (mesh[i1] - mesh[i0])))
    return Propagator(K, sc.kind, sc.signal, sc.idler, eta_tot, bool(interleave_loss), C, mesh[i0 : i1 + 1])


def _coupling_blocks(step):
    """Off-diagonal coupling blocks and the sign of the phase they carry on the upper block."""
    F = step.F
    if step.kind is ProcessKind.PDC:
        # top += e^{i th} F y_bot, bottom += -e^{-i th} F^dagger y_top
        return F, -F.conj().T, 1
    # top += e^{-i th} F* y_bot, bottom += e^{i th} F^T y_top
    return F.conj(), F.T, -1


def _rk4_interval(step, theta0, b0, slope, dz, K, nsub):
    n = step.n
    A_top, A_bot, sgn = _coupling_blocks(step)
    q0 = step.matrix()
    q0[:n, n:] = 0
    q0[n:, :n] = 0
    diag = np.diag(q0).copy()
    dense = np.count_nonzero(q0 - np.diag(diag)) > 0
    h = dz / nsub

    def rhs(t, Y):
        e = np.exp(1j * sgn * (theta0 + b0 * t + 0.5 * slope * t * t))
        out = q0 @ Y if dense else diag[:, None] * Y
        out[:n] += e * (A_top @ Y[n:])
        out[n:] += np.conj(e) * (A_bot @ Y[:n])
        return 1j * out

    t = 0.0
    for _ in range(nsub):
        k1 = rhs(t, K)
        k2 = rhs(t + 0.5 * h, K + 0.5 * h * k1)
        k3 = rhs(t + 0.5 * h, K + 0.5 * h * k2)
        k4 = rhs(t + h, K + h * k3)
        K = K + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        t += h
    return K


def ode_reference(scenario, mesh=None, *, max_step=None, tol=1e-8, resolution=0.1, max_doublings=6):
    """Classical RK4 integration of dK/dz = i Q(z) K in the laboratory frame.

    Uses the same frozen per-step pump and nonlinearity tables as
    :func:`trotter_propagate`, but integrates the accumulated mismatch phase
    continuously inside each step. The number of RK4 substeps is doubled until
    the result changes by less than ``tol`` (relative Frobenius).

    Raises:
        OracleUnconvergedError: no convergence after ``max_doublings``.
    """
    sc = scenario
    mesh = _resolve_mesh(sc, mesh, max_step)
    if not sc.loss.lossless:
        raise ValueError("the reference integrator handles lossless scenarios only")
    tab = _Tables(sc, mesh)
    n = sc.n
    steps = [tab.step(l) for l in range(len(tab.dz))]
    slopes = np.diff(tab.dbeta_nodes) / tab.dz
    # initial substeps from the fastest rate in each interval
    rates = np.array([np.linalg.norm(st.matrix(), 2) for st in steps])
    rates = rates + np.maximum(np.abs(tab.dbeta_nodes[1:]), np.abs(tab.dbeta_nodes[:-1]))
    base = np.maximum(1, np.ceil(rates * tab.dz / resolution)).astype(int)

    def run(mult):
        K = np.eye(2 * n, dtype=complex)
        for l, st in enumerate(steps):
            K = _rk4_interval(st, tab.theta[l], tab.dbeta_nodes[l], slopes[l], tab.dz[l], K, base[l] * mult)
            if not np.all(np.isfinite(K)):
                raise OracleUnconvergedError("RK4 integration diverged", operation="ode_reference")
        return K

    prev = run(1)
    mult = 1
    err = np.inf
    for _ in range(max_doublings):
        mult *= 2
        cur = run(mult)
        err = np.linalg.norm(cur - prev) / np.linalg.norm(cur)
        if err < tol:
            return Propagator(cur, sc.kind, sc.signal, sc.idler, 1.0, False, None, mesh)
        prev = cur
    raise OracleUnconvergedError(f"RK4 halving test did not reach {tol:g} (last change {err:.2e})",
                                 operation="ode_reference")


@dataclass(frozen=True, eq=False)
class InversePropagator:
    """Backward map of the output operators.

    ``system`` is the 2N x 2N block acting on the device modes; ``environment``
    (lossy runs only) is the block for the loss reservoir modes.
    """

    system: np.ndarray
    kind: ProcessKind
    environment: np.ndarray = None

    @property
    def n(self):
        return self.system.shape[0] // 2

    def blocks(self):
        n = self.n
        R = self.system
        ss, si, is_, ii = R[:n, :n], R[:n, n:], R[n:, :n], R[n:, n:]
        if self.kind is ProcessKind.PDC:
            is_, ii = is_.conj(), ii.conj()
        return ss, si, is_, ii


def inverse_propagator(prop):
    """Exact inverse for lossless runs, minimum-norm right inverse of [eta K | sqrt(1-eta^2) I] otherwise.

    Raises:
        DegenerateLossError: ``eta_tot == 0``.
    """
    if prop.interleaved:
        raise ValueError("inverse is only defined for lossless or band-uniform loss")
    K = prop.matrix
    eta = prop.eta_tot
    if eta <= 0:
        raise DegenerateLossError("total transmission is zero; the input is unrecoverable", operation="inverse_propagator")
    if eta == 1.0:
        if prop.kind is ProcessKind.PDC:
            J = np.concatenate([np.ones(prop.n), -np.ones(prop.n)])
            inv = J[:, None] * K.conj().T * J[None, :]
        else:
            inv = K.conj().T
        return InversePropagator(inv, prop.kind)
    dim = K.shape[0]
    aug = np.hstack([eta * K, np.sqrt(1 - eta**2) * np.eye(dim)])
    gram = aug @ aug.conj().T
    R = np.linalg.solve(gram.T, aug.conj()).T  # aug^dagger gram^{-1}
    return InversePropagator(R[:dim], prop.kind, R[dim:])
