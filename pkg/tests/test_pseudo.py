import math
import warnings
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qeuclid import pseudo as P
from qeuclid.harmonic import SigmaDescriptor, _spanning_indices
from qeuclid.integrate import DivergenceError, RadialMeasure

SIG = SigmaDescriptor(a=Fraction(-1, 2), b=Fraction(1, 2))


# grid transforms


@given(st.floats(-3, 3), st.floats(0.6, 2.5))
def test_gaussian_spectrum_matches_closed_form(center, width):
    g = P.gaussian_grid(3, center=center, width=width)
    assert np.max(np.abs(g.spectrum - P.gaussian_spectrum(g.omega, center, width))) < 1e-12
    assert P.parseval_residual(g) < 1e-12


def test_inverse_transform_round_trip():
    g = P.gaussian_grid(4, center=0.7, width=1.5, shift_omega=0.4)
    back = P.inverse_fourier_transform(4, g.y_min, g.dy, g.spectrum)
    assert np.max(np.abs(back.weighted - g.weighted)) < 1e-13


def test_window_check_rejects_truncated_function():
    g = P.gaussian_grid(3, center=38.0, width=2.0)
    with pytest.raises(P.AliasingError):
        P.fourier_transform(g)
    P.fourier_transform(P.gaussian_grid(3))


def test_shift_is_exact_for_band_limited_samples():
    g = P.gaussian_grid(3, width=1.3).band_limited(6.0)
    s = g.shifted(0.37)
    assert np.max(np.abs(s.evaluate_weighted(g.y[4000:4010]) - g.evaluate_weighted(g.y[4000:4010] + 0.37))) < 1e-10


def test_sigma_on_gaussian_closed_form():
    # q^{a (omega + i b)^2} on a Gaussian is again a Gaussian with width s^2 + 2 a h
    q0, s, c = 0.5, 1.2, 0.3
    a, b, h = -0.5, 0.5, math.log(q0)
    g = P.gaussian_grid(3, center=c, width=s)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        out = P.apply_sigma_grid(SIG, g, 0, q0)
    A_ = s * s / 2 + a * h
    exact = math.exp(a * h * b * b) * s / math.sqrt(2 * A_) * np.exp(-((g.y - c - 2 * a * h * b) ** 2) / (4 * A_))
    assert np.max(np.abs(out.weighted - exact)) < 1e-10


def test_sigma_adjoint_moves_across_the_product():
    q0 = 0.8
    f, g = P.band_limited_family(3, seed=1, count=2, q0=q0)
    sig = SigmaDescriptor(a=Fraction(-1, 3), b=Fraction(1, 4), c=Fraction(1, 2))
    lhs = f.inner(P.apply_sigma_grid(sig, g, 1, q0))
    rhs = P.apply_sigma_grid(P.adjoint_sigma(sig), f, 1, q0).inner(g)
    assert abs(lhs - rhs) < 1e-12 * abs(lhs)


def test_lambda_multiplier_is_dilatation():
    q0, N = 0.7, 3
    g = P.gaussian_grid(N, width=1.1)
    out = P.apply_lambda_grid(g, 1, q0)
    # Lambda phi(x) = phi(q^{-1} x)  ->  F(y) e^{N h/2} with y shifted by -h
    h = math.log(q0)
    expect = math.exp(N * h / 2) * np.exp(-((g.y - h) ** 2) / (2 * 1.1**2))
    assert np.max(np.abs(out.weighted - expect)) < 1e-12


# scalar products in sigma pictures


@pytest.mark.parametrize("sig", [SIG, SigmaDescriptor(a=Fraction(-1, 2), b=Fraction(1, 2), c=Fraction(1, 4)), SigmaDescriptor(a=Fraction(1, 4), b=Fraction(-1, 3))])
@pytest.mark.parametrize("l", [0, 1])
def test_sigma_product_forms_agree(sig, l):
    q0 = 0.8
    fam = P.band_limited_family(3, seed=0, count=2, q0=q0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        ps = P.apply_sigma_grid(sig, fam[0], l, q0)
        qs = P.apply_sigma_grid(sig, fam[1], l, q0)
    forms = P.sigma_product_forms(ps, qs, sig, l, q0)
    ref = fam[0].inner(fam[1])
    for v in forms.values():
        assert abs(v - ref) <= 1e-10 * abs(ref)


def test_weighted_product_rejects_nondecaying_integrand():
    g = P.gaussian_grid(3, width=0.8)
    with pytest.raises(DivergenceError):
        P.inner_product_m1(g, g, SigmaDescriptor(a=Fraction(-3)), 0, 0.5)


def _two_level_pair(q0):
    fam = P.band_limited_family(3, seed=3, count=4, q0=q0)
    idx = _spanning_indices(3, 1)
    phi = {(0, ()): fam[0], (1, tuple(idx[0])): fam[1]}
    psi = {(0, ()): fam[2], (1, tuple(idx[-1])): fam[3]}
    return phi, psi


@pytest.fixture(scope="module")
def sigma_pair():
    q0 = 0.8
    phi, psi = _two_level_pair(q0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return phi, psi, P.apply_sigma_components(SIG, phi, q0), P.apply_sigma_components(SIG, psi, q0)


@pytest.mark.parametrize("alpha", [0, 1, 2])
def test_realized_momentum_is_hermitian(sigma_pair, alpha):
    _, _, phis, psis = sigma_pair
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        rep = P.momentum_hermiticity(phis, psis, alpha, SIG, 0.8)
    assert rep["relative"] <= 1e-8


def test_plain_momentum_is_not_hermitian(sigma_pair):
    # without the nu factor, -i Lambda d is not symmetric for the Lebesgue product
    phi, psi, _, _ = sigma_pair
    plain = SigmaDescriptor()
    for alpha in (1, 2):
        lhs = P.wave_inner(phi, P.apply_realized_momentum(psi, alpha, 0.8, nu=plain), 0.8)
        rhs = P.wave_inner(P.apply_realized_momentum(phi, alpha, 0.8, nu=plain), psi, 0.8)
        assert abs(lhs - rhs) > 1e-3 * abs(lhs)


# pole lattices and residues


@pytest.mark.parametrize(
    "gamma,N,npol,beta", [(1, 3, 2, 0), (1, 3, 3, 0.5), (1, 4, 3, 0), (2, 3, 1, 0), (2, 4, 2, 0.5)]
)
@pytest.mark.parametrize("omega", [-2.0, 0.5])
def test_residue_spectrum_against_quadrature(gamma, N, npol, beta, omega):
    f = P.minimal_l2_combination(N, gamma, beta, 0.5, list(range(npol)))
    assert f.is_square_integrable()
    r = P.residues_to_spectrum(f, omega)[0]
    d = P.direct_spectrum(f, omega)
    assert abs(r - d) <= 1e-8 * abs(d)


def test_residue_formula_continues_off_the_real_axis():
    f = P.PoleLatticeFunction(3, 1, 0, 0.5, {0: 1.0})
    w = 0.5 - 1j
    assert abs(P.residues_to_spectrum(f, w)[0] - P.direct_spectrum(f, w)) < 1e-9


def test_single_pole_is_not_square_integrable_in_three_dimensions():
    assert not P.PoleLatticeFunction(3, 1, 0, 0.5, {0: 1.0}).is_square_integrable()
    assert P.PoleLatticeFunction(3, 2, 0, 0.5, {0: 1.0}).is_square_integrable()


def test_residues_match_contour_integrals():
    f = P.PoleLatticeFunction.from_residues(3, 2, 0.5, 0.6, {0: 1.0, 1: -0.3})
    for j in (0, 1):
        for k in range(2):
            assert abs(f.residue_at(j, k) - f.residues[j]) < 1e-8


def test_pole_on_contour_rejected():
    # gamma = 1 poles sit at r = -q^j; a negative coefficient does not move them
    f = P.PoleLatticeFunction(3, 1, 0, 0.5, {0: 1.0})
    f.check_no_real_poles()
    bad = P.PoleLatticeFunction(3, 2, 0, 0.5, {0: 1.0})
    bad.poles = lambda: [(0, 0, 1.0 + 0j)]
    with pytest.raises(P.PoleOnContourError):
        bad.check_no_real_poles()


def test_lattice_validation():
    with pytest.raises(ValueError):
        P.PoleLatticeFunction(3, 0, 0, 0.5)
    with pytest.raises(ValueError):
        P.PoleLatticeFunction(3, 1, 0.25, 0.5)
    with pytest.raises(ValueError):
        P.minimal_l2_combination(4, 1, 0, 0.5, [0, 1])


# the M matrix


@pytest.mark.parametrize(
    "N,gamma,beta,r0", [(3, 1, 0, "1"), (3, 1, 0.5, "sqrt_q"), (4, 2, 0, "1"), (4, 2, 0.5, "sqrt_q"), (3, 3, 0, "1")]
)
def test_m_matrix_against_direct_jackson_sum(N, gamma, beta, r0):
    mu = RadialMeasure.jackson(r0)
    f = P.minimal_l2_combination(N, gamma, beta, 0.5, [-1, 0, 1], seed=1)
    g = P.minimal_l2_combination(N, gamma, beta, 0.5, [0, 1, 2], seed=2)
    v = P.reduced_inner_product_lattice(f, g, 0, 0, 0, 0, mu, J=3)
    d = P.jackson_sum_direct(f, g, mu)
    assert abs(v - d) <= 1e-10 * abs(d)


@pytest.fixture(scope="module")
def lattice_pair():
    mu = RadialMeasure.jackson("1")
    f = P.minimal_l2_combination(3, 1, 0, 0.5, [-1, 0, 1], seed=1)
    g = P.minimal_l2_combination(3, 1, 0, 0.5, [0, 1, 2], seed=2)
    return mu, f, g


def test_m_matrix_real_and_hermitian(lattice_pair):
    mu, _, _ = lattice_pair
    M = P.m_matrix(-0.5, 0, -0.5, 0, mu, 0, 1, 3, 3, 0.5)
    assert M.max_imag <= 1e-12
    assert M.hermiticity_residual() <= 1e-10


def test_adjointness_and_conjugate_symmetry(lattice_pair):
    mu, f, g = lattice_pair
    assert P.sigma_adjointness(f, g, -1, 0.5, mu)["residual"] <= 1e-9
    assert P.sigma_conjugate_symmetry(f, g, -1, 0.5, mu)["residual"] <= 1e-9


def test_parameter_swap_holds_only_transposed(lattice_pair):
    mu, _, _ = lattice_pair
    A_ = P.m_matrix(0, 0, -1, 0.5, mu, 0, 1, 3, 3, 0.5).values
    B = P.m_matrix(-1, 0.5, 0, 0, mu, 0, 1, 3, 3, 0.5).values
    assert np.max(np.abs(A_ - B.T)) <= 1e-10 * np.max(np.abs(A_))
    assert np.max(np.abs(A_ - B)) > 1e-3 * np.max(np.abs(A_))


def test_m_matrix_diverges_for_growing_gaussian(lattice_pair):
    mu, f, g = lattice_pair
    with pytest.raises(DivergenceError):
        P.reduced_inner_product_lattice(f, g, 0, 0, 0.5, 0, mu, J=2)


# the positivity kernel


def _kernel_naive(omega, y, delta, t, odd, L):
    C = math.cosh if odd else math.sinh
    total = 0.0
    for l in range(-L, L + 1):
        a = math.exp(-t * (omega + 2 * l) ** 2) / C(delta * (omega + 2 * l))
        total += a * sum(math.cos(k * math.pi * y) / C(delta * (omega + 2 * (k + l))) for k in range(-L, L + 1))
    return total


@pytest.mark.parametrize("odd", [True, False])
def test_kernel_against_naive_double_sum(odd):
    delta, t = P.kernel_parameters(0.5, 2.0, 1)
    L = P.kernel_terms(delta, t)
    for om in (-0.7, 0.3, 0.9):
        for y in (-0.5, 0.0, 0.8):
            got = P.kernel_K([om], [y], delta, t, odd=odd)[0, 0]
            assert got == pytest.approx(_kernel_naive(om, y, delta, t, odd, L), rel=1e-12)


@pytest.mark.parametrize("odd", [True, False])
def test_kernel_symmetry(odd):
    delta, t = P.kernel_parameters(0.5, 2.0, 1)
    om = np.linspace(-0.9, 0.9, 7)
    ys = np.linspace(-1, 1, 5)
    K1 = P.kernel_K(om, ys, delta, t, odd=odd)
    assert np.max(np.abs(K1 - P.kernel_K(-om, -ys, delta, t, odd=odd))) < 1e-12 * np.max(np.abs(K1))


@pytest.mark.parametrize("q0,a", [(0.5, -0.5), (2.0, 0.3)])
@pytest.mark.parametrize("N,gamma", [(3, 1), (3, 3), (4, 2)])
def test_kernel_form_equals_m_matrix(q0, a, N, gamma):
    mu = RadialMeasure.jackson("1")
    R = {0: 1.0, 1: -0.6, 2: 0.2}
    if (N // gamma) % 2 == 0:
        # the kernel has 1/sinh poles at omega = 0; the form is finite only when phi_check(0) = 0
        h = math.log(q0)
        R[2] = -(R[0] + R[1] * math.exp(N / 2 * h)) / math.exp(N * h)
    f = P.PoleLatticeFunction.from_residues(N, gamma, 0, q0, R)
    v = P.reduced_inner_product_lattice(f, f, 0, 0, a, 0, mu, J=2).real
    assert P.kernel_form_value(f, a, mu) == pytest.approx(v, rel=1e-8)


@pytest.mark.parametrize("N,gamma", [(3, 1), (3, 3), (4, 1), (4, 2), (4, 4)])
@pytest.mark.parametrize("q0,a", [(0.5, -0.5), (2.0, 0.3)])
def test_positivity_scan_passes_for_admissible_gamma(N, gamma, q0, a):
    rep = P.positivity_scan(RadialMeasure.jackson("1"), a, q0, gamma, N)
    assert rep.passed and rep.minimum > 0


def test_positivity_scan_needs_positive_ah():
    with pytest.raises(ValueError):
        P.positivity_scan(RadialMeasure.jackson("1"), 0.5, 0.5, 1, 3)


def test_small_h_needs_odd_ratio():
    f = P.PoleLatticeFunction.from_residues(4, 2, 0, 0.9, {0: 1.0})
    with pytest.raises(ValueError):
        P.asymptotic_small_h(f, 1.0, RadialMeasure.jackson("1"))


# momentum spectra


@pytest.mark.parametrize("N,op,M", [(3, "p0", 20), (3, "pp", 20), (4, "pp", 10)])
def test_ground_state_eigen_equation(N, op, M):
    rep = P.eigen_residual(N, 0.5, kappa=1.3, M_trunc=M, operator=op)
    assert rep.residual <= 1e-10
    assert rep.checked_orders >= M - 1


def test_eigen_residual_validation():
    with pytest.raises(ValueError):
        P.eigen_residual(3, 2.0)
    with pytest.raises(ValueError):
        P.eigen_residual(4, 0.5, operator="p0")


def test_kappa_quantization_pass_class():
    reps = P.kappa_quantization_check(4, 0.5)
    passed = {r.exponent for r in reps if r.passed}
    assert passed == {0.0, 2.0, -2.0, 4.0}
    assert not any(r.literal_lattice_passed for r in reps)
    base = P.kappa_squared_quantized(4, 0.5)
    for r in reps:
        assert r.kappa2 == pytest.approx(base * 0.5**r.exponent)


def test_spectra_table_values():
    rows = P.spectra_table(3, 1.0, 0.5, range(-2, 3))
    assert [v for _, _, v in rows] == [16.0, 4.0, 1.0, 0.25, 0.0625]
    assert {n for _, n, _ in rows} == {1}


def test_kappa0_and_green_weights():
    # N = 4: kappa_0^2 = kappa^2 q^4 (1 + 1/q)/(1 + q^2)
    assert P.kappa0_squared(4, 2.0, 0.5) == pytest.approx(4 * 0.0625 * 3 / 1.25)
    assert P.green_mode_weights(3, 1, 0, 1.0, 0.0, 0.5) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        P.green_mode_weights(3, 1, 0, 0.0, 1.0, 0.5)


@pytest.mark.parametrize("beta", [0.0, 0.5])
def test_measured_kernel_with_offset_lattice_origin(beta):
    # origin q^{1/2} against a lattice at beta = 0 alternates the sign of the measure modes
    mu = RadialMeasure.jackson("sqrt_q")
    m0, mk = P.measure_modes(mu, 0.5, beta)
    assert mk(np.int64(-3)) == (-m0 if beta == 0.0 else m0)
    assert P.positivity_scan(mu, -0.5, 0.5, 1, 3, beta=beta).passed
