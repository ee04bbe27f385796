"""Observables derived from a propagator: moments, Schmidt modes, conversion.

Moments are built from the vacuum covariance ``C = <x x^dagger>`` of the
output field vector. For PDC ``x = (a_s, a_i^dagger)`` so the off-diagonal
block of C is the phase-sensitive moment M and the diagonal blocks hold the
photon-number moments.
"""

import json
from collections import namedtuple
from dataclasses import dataclass, field

import numpy as np

from .errors import KindMismatchError, NumericError, UndefinedFigureError
from .process import ProcessKind
from .propagator import inverse_propagator

Operator = namedtuple("Operator", "mode index dagger")
Operator.__doc__ = "Discretized ladder operator; mode is 's', 'i' (device) and dagger marks creation."


def _require(prop, kind, op):
    if prop.kind is not kind:
        raise KindMismatchError(f"{op} needs a {kind.value.upper()} propagator, got {prop.kind.value}", operation=op)


def covariance(prop):
    """``<x x^dagger>`` at the output for vacuum input, including loss noise."""
    if prop.covariance is not None:
        return prop.covariance
    n = prop.n
    c0 = np.ones(2 * n)
    if prop.kind is ProcessKind.PDC:
        c0[n:] = 0.0
    K = prop.matrix
    eta2 = prop.eta_tot**2
    return eta2 * (K * c0[None, :]) @ K.conj().T + (1 - eta2) * np.diag(c0)


def moment_M(prop):
    """Phase-sensitive moment M_mn = <a_s,m a_i,n>."""
    _require(prop, ProcessKind.PDC, "moment_M")
    n = prop.n
    if prop.covariance is not None:
        return prop.covariance[:n, n:].copy()
    ss, _, is_, _ = prop.blocks()
    return prop.eta_tot**2 * (ss @ is_.T)


def photon_moments(prop):
    """(N^s, N^i) with N_mn = <a_m^dagger a_n>; Hermitian, positive semidefinite."""
    _require(prop, ProcessKind.PDC, "photon_moments")
    n = prop.n
    if prop.covariance is not None:
        C = prop.covariance
        Ns = (C[:n, :n] - np.eye(n)).T
        Ni = C[n:, n:].copy()
    else:
        eta2 = prop.eta_tot**2
        si = prop.matrix[:n, n:]
        B = prop.matrix[n:, :n]
        Ns = eta2 * (si.conj() @ si.T)
        Ni = eta2 * (B @ B.conj().T)
    return 0.5 * (Ns + Ns.conj().T), 0.5 * (Ni + Ni.conj().T)


def _fix_phases(V, W, s):
    """Make the first significant entry of each V column real positive; stable tie order."""
    V = V.copy()
    W = W.copy()
    for j in range(V.shape[1]):
        col = V[:, j]
        big = np.abs(col) > 1e-10 * np.abs(col).max()
        k = int(np.argmax(big))
        ph = col[k] / abs(col[k])
        V[:, j] = col / ph
        V[k, j] = abs(col[k])  # division leaves ~1e-17 of imaginary part
        W[:, j] = W[:, j] * ph
    # degenerate values: order by the magnitudes of the mode vectors
    keys = [(-np.round(s[j] / max(s[0], 1e-300), 12), tuple(-np.round(np.abs(V[:, j]), 10))) for j in range(len(s))]
    order = sorted(range(len(s)), key=lambda j: keys[j])
    return V[:, order], W[:, order], s[order]


@dataclass(frozen=True, eq=False)
class JsaDecomposition:
    """M = V diag(r_tilde) W^T and the JSA J = V diag(r) W^T with r = asinh(2 r_tilde)/2."""

    V: np.ndarray
    W: np.ndarray
    singular_values: np.ndarray
    squeezing: np.ndarray

    @property
    def jsa(self):
        return (self.V * self.squeezing[None, :]) @ self.W.T

    def schmidt_number(self):
        return schmidt_number(self.squeezing)


def jsa_decompose(M):
    """Schmidt decomposition of the phase-sensitive moment."""
    M = np.asarray(M, dtype=complex)
    if not np.all(np.isfinite(M)):
        raise NumericError("non-finite moment matrix", operation="jsa_decompose")
    try:
        U, s, Vh = np.linalg.svd(M)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"SVD failed: {exc}", operation="jsa_decompose") from None
    V, W, s = _fix_phases(U, Vh.T, s)
    return JsaDecomposition(V, W, s, 0.5 * np.arcsinh(2 * s))


def schmidt_number(r):
    """SN = (sum sinh^2 r)^2 / sum sinh^4 r.

    Raises:
        UndefinedFigureError: all squeezing parameters vanish.
    """
    w = np.sinh(np.asarray(r, dtype=float)) ** 2
    if not np.any(w > 0):
        raise UndefinedFigureError("Schmidt number is undefined without squeezing", operation="schmidt_number")
    return float(w.sum() ** 2 / np.sum(w**2))


def purity(r):
    return 1.0 / schmidt_number(r)


@dataclass(frozen=True, eq=False)
class QfcDecomposition:
    """Joint singular value decomposition of the QFC transfer blocks.

    ``K[N:, :N] = V_i_out diag(s) W_s_in^T`` converts signal to idler and
    ``K[:N, N:] = V_s_out diag(s') W_i_in^T`` the reverse. ``angles`` are the
    lossless mixing angles ``t_n``; ``gammas`` include any uniform loss.
    """

    W_s_in: np.ndarray
    V_i_out: np.ndarray
    W_i_in: np.ndarray
    V_s_out: np.ndarray
    angles: np.ndarray
    gammas: np.ndarray


def qfc_decompose(prop):
    _require(prop, ProcessKind.QFC, "qfc_decompose")
    n = prop.n
    K = prop.matrix
    U1, s1, Vh1 = np.linalg.svd(K[n:, :n])
    U2, s2, Vh2 = np.linalg.svd(K[:n, n:])
    V1, W1, s1 = _fix_phases(U1, Vh1.T, s1)
    V2, W2, s2 = _fix_phases(U2, Vh2.T, s2)
    eta = prop.eta_tot
    s1 = np.clip(s1, 0.0, 1.0)
    angles = np.arcsin(s1)
    gammas = (eta * s1) ** 2
    return QfcDecomposition(W1, V1, W2, V2, angles, gammas)


def separability(gammas):
    """Share of the dominant Schmidt mode in the total conversion, gamma_1 / sum gamma."""
    g = np.sort(np.asarray(gammas, dtype=float))[::-1]
    total = g.sum()
    if not total > 0:
        raise UndefinedFigureError("separability is undefined without conversion", operation="separability")
    return float(g[0] / total)


# ---------------------------------------------------------------------------
# non-vacuum inputs


def _substitute(op, R, kind, n):
    """Backward-evolved expansion of one input creation operator in output operators."""
    if not op.dagger:
        raise ValueError("input polynomials are written in creation operators")
    row = op.index if op.mode == "s" else n + op.index
    if kind is ProcessKind.PDC and op.mode == "i":
        coeffs = R[row]
        ops = [Operator("s", k, False) for k in range(n)] + [Operator("i", k, True) for k in range(n)]
    elif kind is ProcessKind.PDC:
        coeffs = R[row].conj()
        ops = [Operator("s", k, True) for k in range(n)] + [Operator("i", k, False) for k in range(n)]
    else:
        coeffs = R[row].conj()
        ops = [Operator("s", k, True) for k in range(n)] + [Operator("i", k, True) for k in range(n)]
    return [(o, c) for o, c in zip(ops, coeffs) if c != 0]


def transform_nonvacuum_input(prop_or_inverse, polynomial, tol=0.0):
    """Rewrite an input state f(a^dagger)|vac> in terms of output operators.

    Args:
        prop_or_inverse: a :class:`~twmsim.propagator.Propagator` or its
            precomputed :class:`~twmsim.propagator.InversePropagator`.
        polynomial: mapping from tuples of creation :class:`Operator` (or
            ``(mode, index)`` pairs) to coefficients.
        tol: drop output terms with ``|coefficient| <= tol``.

    Returns:
        dict from ordered operator tuples to coefficients. Products keep
        their operator order; no normal ordering is applied.
    """
    inv = prop_or_inverse
    if not hasattr(inv, "system"):
        inv = inverse_propagator(inv)
    R = inv.system
    n = inv.n
    out = {}
    for mono, coeff in polynomial.items():
        ops = [o if isinstance(o, Operator) else Operator(o[0], int(o[1]), True) for o in mono]
        for o in ops:
            if o.mode not in ("s", "i") or not 0 <= o.index < n:
                raise ValueError(f"unknown input operator {o}")
        terms = {(): complex(coeff)}
        for o in ops:
            expansion = _substitute(o, R, inv.kind, n)
            nxt = {}
            for key, c in terms.items():
                for op2, c2 in expansion:
                    k2 = key + (op2,)
                    nxt[k2] = nxt.get(k2, 0) + c * c2
            terms = nxt
        for key, c in terms.items():
            out[key] = out.get(key, 0) + c
    return {k: v for k, v in out.items() if abs(v) > tol}


# ---------------------------------------------------------------------------
# state descriptor


def state_descriptor(decomp, rtol=1e-12):
    """Two-mode-squeezer product form: (r_n, V column, W column) for each r_n > 0."""
    r = decomp.squeezing
    if len(r) == 0 or r[0] <= 0:
        return []
    keep = r > rtol * r[0]
    return [(float(r[j]), decomp.V[:, j].copy(), decomp.W[:, j].copy()) for j in np.flatnonzero(keep)]


def write_state_descriptor(decomp):
    """JSON text of the squeezer triples; floats use shortest round-trip repr."""
    triples = state_descriptor(decomp)
    data = [
        {"r": r, "V": [[float(z.real), float(z.imag)] for z in v], "W": [[float(z.real), float(z.imag)] for z in w]}
        for r, v, w in triples
    ]
    return json.dumps({"modes": data}, sort_keys=True)


def parse_state_descriptor(text):
    data = json.loads(text)["modes"]
    return [
        (float(d["r"]), np.array([complex(a, b) for a, b in d["V"]]), np.array([complex(a, b) for a, b in d["W"]]))
        for d in data
    ]


# ---------------------------------------------------------------------------
# figures of merit


def edge_fraction(matrix, share=0.1):
    """Fraction of sum |X|^2 in rows or columns within the outer ``share`` of the grid."""
    X = np.abs(np.asarray(matrix)) ** 2
    total = X.sum()
    if total == 0:
        return 0.0
    n = X.shape[0]
    k = max(1, int(np.ceil(share * n)))
    inner = X[k : n - k, k : n - k].sum()
    return float(1.0 - inner / total)


@dataclass
class FiguresOfMerit:
    kind: str
    schmidt_number: float = float("nan")
    purity: float = float("nan")
    r1: float = float("nan")
    photons_s: float = float("nan")
    photons_i: float = float("nan")
    gamma1: float = float("nan")
    separability: float = float("nan")
    edge_fraction: float = 0.0
    squeezing: list = field(default_factory=list)
    gammas: list = field(default_factory=list)
    undefined: list = field(default_factory=list)

    def to_dict(self):
        """JSON-ready dict; NaN entries become None and stay listed in ``undefined``."""
        out = {}
        for k, v in self.__dict__.items():
            if isinstance(v, float) and not np.isfinite(v):
                v = None
            out[k] = v
        return out


def figures_of_merit(prop):
    """Headline numbers of a run, with undefined figures flagged instead of defaulted."""
    fom = FiguresOfMerit(prop.kind.value)
    if prop.kind is ProcessKind.PDC:
        M = moment_M(prop)
        dec = jsa_decompose(M)
        Ns, Ni = photon_moments(prop)
        fom.squeezing = [float(x) for x in dec.squeezing]
        fom.r1 = float(dec.squeezing[0])
        fom.photons_s = float(np.trace(Ns).real)
        fom.photons_i = float(np.trace(Ni).real)
        fom.edge_fraction = edge_fraction(M)
        try:
            fom.schmidt_number = schmidt_number(dec.squeezing)
            fom.purity = 1.0 / fom.schmidt_number
        except UndefinedFigureError:
            fom.undefined += ["schmidt_number", "purity"]
    else:
        dec = qfc_decompose(prop)
        fom.gammas = [float(x) for x in dec.gammas]
        fom.gamma1 = float(dec.gammas[0])
        fom.edge_fraction = edge_fraction(prop.matrix[prop.n :, : prop.n])
        try:
            fom.separability = separability(dec.gammas)
        except UndefinedFigureError:
            fom.undefined.append("separability")
    return fom
