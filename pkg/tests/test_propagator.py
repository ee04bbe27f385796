import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from scenarios import single_mode, synthetic
from twmsim.errors import CoverageError, DegenerateLossError, MeshError, NumericError, OracleUnconvergedError
from twmsim.nonlinearity import InteractionCoefficients
from twmsim.process import ProcessKind
from twmsim.propagator import (
    Propagator,
    assemble_step,
    inverse_propagator,
    ode_reference,
    ordered_product,
    step_exponential,
    trotter_propagate,
)
from twmsim.pump import db_per_cm_to_per_m
from twmsim.scenario import LossModel, build_mesh


def fro_rel(a, b):
    return np.linalg.norm(a - b) / np.linalg.norm(b)


def pump_table(freqs):
    return np.exp(-((freqs - freqs.mean()) / 3e12) ** 2) * (1 + 0.3j)


@pytest.mark.parametrize("kind", ["pdc", "qfc"])
def test_vacuum_pump_step(kind):
    ks, ki = np.linspace(-3, 3, 5), np.linspace(1, 2, 5)
    st_ = assemble_step(ks, ki, np.zeros(9), np.zeros(9), InteractionCoefficients(100.0, 2.0, 2.0), 1, 1, 0.3, 1e12, kind)
    assert np.all(st_.F == 0)
    assert np.array_equal(st_.G, np.diag(ks))
    assert np.array_equal(st_.H, np.diag(ki))


@pytest.mark.parametrize("kind", ["pdc", "qfc"])
def test_step_sign_follows_g(kind):
    args = (np.zeros(4), np.zeros(4), pump_table(np.arange(7.0) * 1e12), np.zeros(7), InteractionCoefficients(50.0))
    plus = assemble_step(*args, 1, 1, 0.2, 1e12, kind).F
    minus = assemble_step(*args, -1, 1, 0.2, 1e12, kind).F
    assert np.array_equal(minus, -plus)


def test_step_spacing_scaling():
    # same band covered by N points at spacing d and by N/2 points at 2d
    w0 = 1.0e15
    fine = w0 + 1e12 * np.arange(1, 9)
    coarse = w0 + 2e12 * np.arange(1, 5)
    amp = lambda w: np.exp(-((w - 2 * w0 - 9e12) / 5e12) ** 2)
    F_f = assemble_step(np.zeros(8), np.zeros(8), amp(2 * w0 + 1e12 * np.arange(2, 17)), np.zeros(15),
                        InteractionCoefficients(1.0), 1, 1, 0, 1e12, "pdc").F
    F_c = assemble_step(np.zeros(4), np.zeros(4), amp(2 * w0 + 2e12 * np.arange(2, 9)), np.zeros(7),
                        InteractionCoefficients(1.0), 1, 1, 0, 2e12, "pdc").F
    # coarse point k sits at fine point 2k+1
    shared = F_f[1::2, 1::2]
    assert np.allclose(F_c, 2 * shared, rtol=1e-14)
    assert np.allclose(fine[1::2], coarse)


def test_step_xpm_blocks_hermitian():
    n = 6
    offsets = (np.arange(2 * n - 1) - (n - 1)) * 1e12
    energy = np.exp(-((offsets / 4e12) ** 2)) * np.exp(1j * offsets / 7e12)  # E(-w) = E(w)*
    st_ = assemble_step(np.linspace(-1, 1, n), np.linspace(0, 2, n), np.ones(2 * n - 1), energy,
                        InteractionCoefficients(1.0, 3.0, 5.0), 1, 1, 0, 1e12, "pdc")
    assert np.allclose(st_.G, st_.G.conj().T, atol=0)
    assert np.allclose(st_.H, st_.H.conj().T, atol=0)


def test_step_coverage():
    with pytest.raises(CoverageError):
        assemble_step(np.zeros(4), np.zeros(4), np.ones(6), np.zeros(7), InteractionCoefficients(1.0), 1, 1, 0, 1.0, "pdc")


def test_step_exponential_basics():
    assert np.array_equal(step_exponential(np.zeros((4, 4)), 0.1), np.eye(4))
    q = np.array([0.5, -2.0, 3.0])
    assert np.allclose(step_exponential(np.diag(q), 0.7), np.diag(np.exp(1j * q * 0.7)), rtol=1e-15, atol=1e-15)
    with pytest.raises(NumericError):
        step_exponential(np.full((2, 2), np.nan), 1.0)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_step_exponential_unitary(seed):
    r = np.random.default_rng(seed)
    A = r.normal(size=(8, 8)) + 1j * r.normal(size=(8, 8))
    U = step_exponential(A + A.conj().T, 0.37)
    assert np.linalg.norm(U.conj().T @ U - np.eye(8)) < 1e-12


def test_ordered_product_order():
    r = np.random.default_rng(1)
    mats = r.normal(size=(7, 3, 3))
    expect = np.eye(3)
    for m in mats:
        expect = m @ expect
    assert np.allclose(ordered_product(mats), expect, rtol=1e-12)


@pytest.mark.parametrize("kind", ["pdc", "qfc"])
def test_free_propagation(kind):
    sc = synthetic(kind, n=8, twm=0.0)
    prop = trotter_propagate(sc)
    ss, si, is_, ii = prop.blocks()
    L = sc.length
    assert np.all(si == 0) and np.all(is_ == 0)
    # the frame phase reaches ~1e3 rad, so a few hundred steps leave ~1e-12 of rounding
    assert np.allclose(ss, np.diag(np.exp(1j * sc.walk_off_s * L)), rtol=0, atol=1e-10)
    assert np.allclose(ii, np.diag(np.exp(1j * sc.walk_off_i * L)), rtol=0, atol=1e-10)


@pytest.mark.parametrize("kind", ["pdc", "qfc"])
@pytest.mark.parametrize("poling", ["uniform", "periodic", "apodized"])
def test_commutators_preserved(kind, poling):
    prop = trotter_propagate(synthetic(kind, n=12, poling=poling, photons=2.5e7 if kind == "pdc" else 1.5e6))
    assert prop.commutator_error() < 1e-9


def test_commutators_with_z_dependence():
    sc = synthetic("pdc", n=10, poling="apodized", inhomogeneity=3e4, xpm=3.0, spm=0.02, photons=2.5e7,
                   pump_alpha=5.0)
    assert sc.z_dependent
    assert trotter_propagate(sc).commutator_error() < 1e-9


def test_mesh_must_hit_domain_walls():
    sc = synthetic("pdc", n=4)
    with pytest.raises(MeshError):
        trotter_propagate(sc, mesh=np.linspace(0, sc.length, 37))
    with pytest.raises(MeshError):
        trotter_propagate(sc, mesh=np.array([0.0, sc.length / 2]))


@pytest.mark.parametrize("kind", ["pdc", "qfc"])
def test_composability(kind):
    sc = synthetic(kind, n=8, poling="apodized", inhomogeneity=2e4)
    half = sc.length / 2
    mesh = build_mesh(sc, sc.length / 200, extra=(half,))
    whole = trotter_propagate(sc, mesh).matrix
    first = trotter_propagate(sc, mesh, span=(0.0, half)).matrix
    second = trotter_propagate(sc, mesh, span=(half, sc.length)).matrix
    assert np.linalg.norm(second @ first - whole) < 1e-10


def test_trotter_refinement_monotone():
    sc = synthetic("pdc", n=8, poling="uniform", inhomogeneity=5e4, photons=1e7, length=1e-3)
    # the mismatch profile has 101 nodes; refine below that spacing
    Ks = [trotter_propagate(sc, max_step=sc.length / m).matrix for m in (200, 400, 800, 1600)]
    d = [np.linalg.norm(a - b) for a, b in zip(Ks, Ks[1:])]
    assert d[0] > d[1] > d[2]


def test_ode_constant_generator():
    sc = synthetic("pdc", n=6, poling="uniform", length=5e-4, photons=1e7).replace(baseline_mismatch=0.0)
    ref = ode_reference(sc, max_step=sc.length)
    tab = sc.pump_field().amplitude(0.0)
    Q = assemble_step(sc.walk_off_s, sc.walk_off_i, tab, sc.energy_table(), sc.coefficients, 1, 1, 0,
                      sc.spacing, sc.kind).matrix()
    assert fro_rel(ref.matrix, expm(1j * Q * sc.length)) < 1e-8


def test_ode_zero_generator():
    sc = synthetic("qfc", n=4, twm=0.0, poling="uniform", length=1e-4)
    sc = sc.replace(walk_off_s=np.zeros(4), walk_off_i=np.zeros(4), baseline_mismatch=0.0)
    assert np.allclose(ode_reference(sc).matrix, np.eye(8), atol=1e-15)


def test_ode_matches_trotter():
    sc = synthetic("qfc", n=6, poling="periodic", length=5e-4, inhomogeneity=3e4)
    mesh = build_mesh(sc, sc.length / 300)
    assert fro_rel(trotter_propagate(sc, mesh).matrix, ode_reference(sc, mesh).matrix) < 1e-6


def test_ode_unconverged():
    sc = synthetic("pdc", n=4, poling="uniform", length=2e-4)
    with pytest.raises(OracleUnconvergedError):
        ode_reference(sc, max_step=sc.length / 4, tol=1e-30, max_doublings=1)


def test_ode_rejects_loss():
    sc = synthetic("pdc", n=4, loss=LossModel(1.0, 1.0))
    with pytest.raises(ValueError):
        ode_reference(sc)


def test_uniform_loss_factor():
    alpha = db_per_cm_to_per_m(0.5)
    sc = synthetic("pdc", n=6, length=1e-2, poling="uniform", twm=0.0, loss=LossModel(alpha, alpha))
    prop = trotter_propagate(sc)
    assert abs(prop.eta_tot - 10 ** (-0.025)) < 1e-12
    assert not prop.interleaved


@pytest.mark.parametrize("kind", ["pdc", "qfc"])
def test_interleaved_loss_matches_separated(kind):
    alpha = db_per_cm_to_per_m(0.5)
    sc = synthetic(kind, n=8, poling="apodized", loss=LossModel(alpha, alpha))
    sep = trotter_propagate(sc)
    inter = trotter_propagate(sc, interleave_loss=True)
    assert inter.interleaved
    assert np.linalg.norm(inter.matrix - sep.eta_tot * sep.matrix) < 1e-10


def test_frequency_dependent_loss_is_interleaved():
    n = 6
    sc = synthetic("pdc", n=n, loss=LossModel(np.linspace(1, 5, n), 2.0))
    prop = trotter_propagate(sc)
    assert prop.interleaved and not prop.lossless
    C = prop.covariance
    assert np.allclose(C, C.conj().T, atol=1e-14)
    with pytest.raises(ValueError):
        trotter_propagate(sc, interleave_loss=False)


@pytest.mark.parametrize("kind, photons", [("pdc", 1e2), ("qfc", 1.0)])
def test_low_gain_scaling(kind, photons):
    # amplitude is linear in sqrt(photons)
    a = trotter_propagate(synthetic(kind, n=8, photons=photons)).blocks()[1]
    b = trotter_propagate(synthetic(kind, n=8, photons=4 * photons)).blocks()[1]
    assert np.linalg.norm(b) / np.linalg.norm(a) == pytest.approx(2.0, rel=1e-2)


@pytest.mark.parametrize("kind", ["pdc", "qfc"])
def test_lossless_inverse(kind):
    prop = trotter_propagate(synthetic(kind, n=8, photons=1e7))
    inv = inverse_propagator(prop)
    K = prop.matrix
    assert np.linalg.norm(K @ inv.system - np.eye(16)) < 1e-9
    assert np.linalg.norm(inv.system @ K - np.eye(16)) < 1e-9
    if kind == "qfc":
        assert np.array_equal(inv.system, K.conj().T)
    assert inv.environment is None


def test_lossy_inverse_is_right_inverse():
    alpha = db_per_cm_to_per_m(2.0)
    prop = trotter_propagate(synthetic("pdc", n=6, photons=1e7, loss=LossModel(alpha, alpha)))
    inv = inverse_propagator(prop)
    eta = prop.eta_tot
    aug = np.hstack([eta * prop.matrix, np.sqrt(1 - eta**2) * np.eye(12)])
    R = np.vstack([inv.system, inv.environment])
    assert np.linalg.norm(aug @ R - np.eye(12)) < 1e-9


def test_lossy_inverse_no_loss_limit():
    prop = trotter_propagate(synthetic("qfc", n=6))
    near = Propagator(prop.matrix, prop.kind, eta_tot=1 - 1e-12)
    inv = inverse_propagator(near)
    assert np.linalg.norm(inv.system - prop.matrix.conj().T) < 1e-6
    assert np.linalg.norm(inv.environment) < 1e-5


def test_degenerate_loss():
    prop = trotter_propagate(synthetic("qfc", n=4))
    with pytest.raises(DegenerateLossError):
        inverse_propagator(Propagator(prop.matrix, prop.kind, eta_tot=0.0))


@pytest.mark.parametrize("kind, closed", [("pdc", np.sinh), ("qfc", np.sin)])
def test_single_mode_closed_form(kind, closed):
    prop = trotter_propagate(single_mode(kind, 700.0))
    t = 700.0 * 1e-3
    assert abs(prop.matrix[0, 1]) == pytest.approx(closed(t), rel=1e-10)
    assert prop.kind is ProcessKind.coerce(kind)
