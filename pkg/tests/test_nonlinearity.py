import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.constants import epsilon_0
from scipy.stats import binom

from twmsim.errors import (
    InfeasibleApodizationError,
    InvalidModeError,
    InvalidPatternError,
    OutOfRangeError,
    OverBroadeningError,
)
from twmsim.nonlinearity import (
    DomainErrorModel,
    ModeFieldGrid,
    PolingPattern,
    apodized_poling,
    cumulative_mismatch_phase,
    generate_inhomogeneity,
    inject_domain_errors,
    overlap_coefficients,
    periodic_poling,
    sample_g,
    sample_h,
    uniform_pattern,
)

PERIOD = 2e-5


def gaussian_target(L, width=0.2):
    return lambda z: np.exp(-((z - L / 2) ** 2) / (2 * (width * L) ** 2))


def test_periodic_construction():
    p = periodic_poling(10e-6, 30e-6, 0.5)
    assert len(p.orientation) == 6
    assert np.allclose(p.widths, 5e-6, rtol=1e-12)
    assert list(p.orientation) == [-1, 1, -1, 1, -1, 1]


@pytest.mark.parametrize("duty", [0.5, 0.25, 0.1])
def test_periodic_first_harmonic(duty):
    L = 500 * PERIOD
    p = periodic_poling(PERIOD, L, duty)
    coeff = abs(p.first_harmonic(2 * np.pi / PERIOD)) / L
    assert coeff == pytest.approx(2 / np.pi * np.sin(np.pi * duty), rel=1e-3)


def test_qpm_identity_long_device():
    dbeta = 2 * np.pi / PERIOD
    L = 100 * PERIOD
    assert abs(periodic_poling(PERIOD, L).first_harmonic(dbeta)) == pytest.approx(2 / np.pi * L, rel=1e-2)


@pytest.mark.parametrize("period, length, duty", [(0.0, 1e-3, 0.5), (2e-3, 1e-3, 0.5), (PERIOD, 1e-3, 1.0)])
def test_periodic_rejects(period, length, duty):
    with pytest.raises(InvalidPatternError):
        periodic_poling(period, length, duty)


def test_apodized_constant_target_is_periodic():
    L = 200 * PERIOD
    a = apodized_poling(lambda z: np.ones_like(z), PERIOD, L)
    b = periodic_poling(PERIOD, L)
    assert np.array_equal(a.orientation, b.orientation)
    assert np.allclose(a.edges, b.edges, rtol=0, atol=1e-12 * L)


def test_apodized_phase_matching_function():
    L = 500 * PERIOD  # 1000 half-period slots
    target = gaussian_target(L)
    p = apodized_poling(target, PERIOD, L)
    K = 2 * np.pi / PERIOD
    dk = np.linspace(-3000, 3000, 61)
    realised = np.abs(p.first_harmonic(K + dk))
    z = np.linspace(0, L, 100001)
    oracle = np.abs([np.trapezoid(2 / np.pi * target(z) * np.exp(1j * d * z), z) for d in dk])
    assert np.max(np.abs(realised - oracle)) / oracle.max() < 0.05


def test_apodized_infeasible_target():
    with pytest.raises(InfeasibleApodizationError):
        apodized_poling(lambda z: 1.5 * np.ones_like(z), PERIOD, 100 * PERIOD)


def test_sample_g_conventions():
    p = PolingPattern(np.array([0.0, 1e-5, 2e-5]), np.array([-1, 1]), 5e-5)
    assert sample_g(p, 0.5e-5) == -1
    assert sample_g(p, 4e-5) == 1  # background past the poled section
    assert sample_g(p, 1e-5) == 1  # a wall belongs to the domain on its right
    assert sample_g(p, 0.0) == -1
    with pytest.raises(OutOfRangeError):
        sample_g(p, 6e-5)
    assert sample_h(5e-5, 2e-5) == 1


def test_adjacent_domains_merge():
    p = PolingPattern(np.array([0.0, 1.0, 2.0, 3.0]), np.array([-1, -1, 1]), 3.0)
    assert list(p.edges) == [0.0, 2.0, 3.0]
    assert uniform_pattern(1.0).orientation.tolist() == [1]


def test_no_errors_is_identity():
    p = apodized_poling(gaussian_target(1e-3), PERIOD, 1e-3)
    out = inject_domain_errors(p, DomainErrorModel(0.0, 0.0, 7))
    assert out.edges.tobytes() == p.edges.tobytes()
    assert out.orientation.tobytes() == p.orientation.tobytes()


def test_all_domains_missing():
    p = periodic_poling(PERIOD, 100 * PERIOD)
    out = inject_domain_errors(p, DomainErrorModel(0.0, 1.0, 3))
    z = np.linspace(0, p.length, 5001)
    assert np.all(sample_g(out, z) == 1)


def test_missing_count_binomial():
    p = periodic_poling(PERIOD, 1000 * PERIOD)
    n = len(p.inverted_intervals())
    assert n == 1000
    out = inject_domain_errors(p, DomainErrorModel(0.0, 0.3, 12345))
    reverted = n - len(out.inverted_intervals())
    lo, hi = binom.interval(0.99, n, 0.3)
    assert lo <= reverted <= hi


def test_errors_deterministic_in_seed():
    p = periodic_poling(PERIOD, 300 * PERIOD)
    a = inject_domain_errors(p, DomainErrorModel(1e-7, 0.2, 5))
    b = inject_domain_errors(p, DomainErrorModel(1e-7, 0.2, 5))
    c = inject_domain_errors(p, DomainErrorModel(1e-7, 0.2, 6))
    assert a == b and a != c


@pytest.mark.parametrize("shift", [1e-7, 5e-7, 2e-6])
def test_broadening_shifts_walls(shift):
    p = periodic_poling(PERIOD, 50 * PERIOD)
    out = inject_domain_errors(p, DomainErrorModel(shift))
    inner = out.inverted_intervals()[1:-1]
    assert np.allclose(np.diff(inner, axis=1), PERIOD / 2 + 2 * shift, rtol=1e-9)


@pytest.mark.parametrize("make", [lambda L: periodic_poling(PERIOD, L), lambda L: apodized_poling(gaussian_target(L), PERIOD, L)])
@pytest.mark.parametrize("shift", [1e-7, 1e-6])
def test_broadening_narrowing_symmetry(make, shift):
    L = 500 * PERIOD
    p = make(L)
    K = 2 * np.pi / PERIOD
    plus = abs(inject_domain_errors(p, DomainErrorModel(shift)).first_harmonic(K))
    minus = abs(inject_domain_errors(p, DomainErrorModel(-shift)).first_harmonic(K))
    assert abs(plus - minus) / plus < 1e-3


def test_over_broadening():
    with pytest.raises(OverBroadeningError):
        inject_domain_errors(periodic_poling(PERIOD, 10 * PERIOD), DomainErrorModel(PERIOD))
    with pytest.raises(InvalidPatternError):
        DomainErrorModel(0.0, 1.5)


def test_inhomogeneity_zero_range():
    prof = generate_inhomogeneity(0.0, 1e-4, np.linspace(0, 1e-3, 51), 1)
    assert np.all(prof.values == 0)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**63), st.floats(1.0, 1e6))
def test_inhomogeneity_mean_and_range(seed, R):
    prof = generate_inhomogeneity(R, 1e-4, np.linspace(0, 1e-3, 201), seed)
    assert abs(prof.values.mean()) <= 1e-9 * R
    assert np.ptp(prof.values) == pytest.approx(R, rel=1e-6)


def test_inhomogeneity_seeds():
    z = np.linspace(0, 1e-3, 201)
    a = generate_inhomogeneity(1e4, 1e-4, z, 1)
    b = generate_inhomogeneity(1e4, 1e-4, z, 2)
    assert np.linalg.norm(a.values - b.values) > 0
    assert np.array_equal(a.values, generate_inhomogeneity(1e4, 1e-4, z, 1).values)


def test_cumulative_phase():
    z = np.linspace(0, 1e-2, 11)
    assert np.all(cumulative_mismatch_phase(None, 0.0, z) == 0)
    assert cumulative_mismatch_phase(None, 100.0, z)[-1] == pytest.approx(1.0, rel=1e-12)


def test_cumulative_phase_refinement():
    prof = generate_inhomogeneity(1e4, 1e-3, np.linspace(0, 1e-2, 101), 9)
    coarse = cumulative_mismatch_phase(prof, 50.0, np.linspace(0, 1e-2, 101))[-1]
    fine = cumulative_mismatch_phase(prof, 50.0, np.linspace(0, 1e-2, 1001))[-1]
    assert coarse == pytest.approx(fine, rel=1e-4)


# ---------------------------------------------------------------------------
# overlap integrals


def mode(n_cells, profile, component=2, width=4e-6, index=2.1):
    x = (np.arange(n_cells) + 0.5) * width / n_cells - width / 2
    X, Y = np.meshgrid(x, x)
    d = np.zeros((3, n_cells, n_cells), dtype=complex)
    d[component] = profile(X, Y)
    m = ModeFieldGrid(x, x, d, np.full((n_cells, n_cells), index), 1.4e8, 1.3e8)
    return m.normalized()


def fundamental(X, Y, w=4e-6):
    return np.cos(np.pi * X / w) * np.cos(np.pi * Y / w)


def chi2_zzz(value=2.5e-11):
    t = np.zeros((3, 3, 3))
    t[2, 2, 2] = value
    return t


OMEGAS = (2.43e15, 1.26e15, 1.17e15)


def test_mode_normalisation():
    m = mode(40, fundamental)
    assert m.norm() == pytest.approx(1.0, rel=1e-12)


def test_orthogonal_modes_do_not_couple():
    p = mode(40, fundamental)
    s = mode(40, lambda X, Y: np.sin(2 * np.pi * X / 4e-6) * np.cos(np.pi * Y / 4e-6))
    c = overlap_coefficients(p, s, p, OMEGAS, chi2=chi2_zzz())
    assert abs(c.twm) < 1e-12 * abs(overlap_coefficients(p, p, p, OMEGAS, chi2=chi2_zzz()).twm)


def test_overlap_linear_in_chi2():
    m = mode(30, fundamental)
    a = overlap_coefficients(m, m, m, OMEGAS, chi2=chi2_zzz(1e-11)).twm
    b = overlap_coefficients(m, m, m, OMEGAS, chi2=chi2_zzz(2e-11)).twm
    assert b == pytest.approx(2 * a, rel=1e-14)


def test_overlap_second_order_convergence():
    # a profile that does not vanish at the box edge keeps the midpoint rule at second order
    prof = lambda X, Y: 1 + 0.5 * np.cos(np.pi * X / 4e-6) * np.cos(np.pi * Y / 4e-6) + 0.3 * X / 4e-6
    vals = [overlap_coefficients(*(mode(n, prof),) * 3, OMEGAS, chi2=chi2_zzz()).twm for n in (20, 40, 80)]
    ratio = abs(vals[0] - vals[1]) / abs(vals[1] - vals[2])
    assert ratio == pytest.approx(4.0, rel=0.05)


def test_overlap_closed_form_uniform_mode():
    # uniform z-polarised mode filling the box: every integral is elementary
    n_cells, width, index = 10, 4e-6, 2.1
    m = mode(n_cells, lambda X, Y: np.ones_like(X), width=width, index=index)
    vg, vph = 1.3e8, 1.4e8
    area = width**2
    amp = np.sqrt(epsilon_0 * index**2 * vg / (vph * area))
    chi = 2.5e-11
    wp, ws, wi = OMEGAS
    integral = chi * amp**3 * area / index**6
    expect = integral / epsilon_0**2 * np.sqrt(ws * wi / (2 * vg**3))
    c = overlap_coefficients(m, m, m, OMEGAS, chi2=chi2_zzz(chi))
    assert c.twm.real == pytest.approx(expect, rel=1e-12)


def test_overlap_rejects_unnormalised():
    m = mode(20, fundamental)
    bad = ModeFieldGrid(m.x, m.y, 2 * m.d, m.n, m.phase_velocity, m.group_velocity)
    with pytest.raises(InvalidModeError):
        overlap_coefficients(m, bad, m, OMEGAS, chi2=chi2_zzz())


def test_chi3_coefficients_positive():
    m = mode(20, fundamental)
    chi3 = np.zeros((3, 3, 3, 3))
    chi3[2, 2, 2, 2] = 2e-22
    c = overlap_coefficients(m, m, m, OMEGAS, chi3=chi3)
    assert c.xpm_s > 0 and c.xpm_i > 0 and c.spm > 0
    assert c.xpm_s / c.xpm_i == pytest.approx(OMEGAS[1] / OMEGAS[2], rel=1e-12)
