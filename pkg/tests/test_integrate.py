import math
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qeuclid import algebra as A
from qeuclid import integrate as I
from qeuclid.coeff import structure_constants


def gauss_const(N, a=1.0):
    return I.ProfiledFunction.monomial(N, (), I.gaussian_profile(a))


def test_lebesgue_gaussian_moment():
    # int_0^inf r^2 e^{-r^2} dr = sqrt(pi)/4
    res = I.integrate_q(gauss_const(3), I.RadialMeasure.lebesgue(), 0.6)
    assert res.value == pytest.approx(math.sqrt(math.pi) / 4, rel=1e-12)


@pytest.mark.parametrize("r0", ["1", "sqrt_q"])
@pytest.mark.parametrize("q0", [0.5, 2.0])
def test_jackson_gaussian_against_direct_sum(r0, q0):
    N = 4
    origin = 1.0 if r0 == "1" else math.sqrt(q0)
    direct = mpmath.nsum(lambda n: abs(1 - q0) * (origin * q0**n) ** N * mpmath.exp(-((origin * q0**n) ** 2)), [-mpmath.inf, mpmath.inf])
    res = I.integrate_q(gauss_const(N), I.RadialMeasure.jackson(r0), q0)
    assert res.value == pytest.approx(float(direct), rel=1e-12)


def test_fourier_weight_reduces_to_lebesgue_mean():
    N = 3
    q0 = 0.6
    flat = I.integrate_q(gauss_const(N), I.RadialMeasure.fourier({0: 1.0}), q0).value
    leb = I.integrate_q(gauss_const(N), I.RadialMeasure.lebesgue(), q0).value
    assert flat == pytest.approx(leb, rel=1e-12)


def test_jackson_tends_to_lebesgue_as_q_to_1():
    leb = math.sqrt(math.pi) / 4
    errs = [abs(I.integrate_q(gauss_const(3), I.RadialMeasure.jackson(), q0).value - leb) for q0 in (0.99, 0.999)]
    assert errs[0] < 1e-2
    assert errs[1] < errs[0] / 5


def test_laurent_monomials_diverge():
    f = I.ProfiledFunction.monomial(3, ())
    with pytest.raises(I.DivergenceError):
        I.integrate_q(f, I.RadialMeasure.lebesgue(), 0.5)


@pytest.mark.parametrize("N", [3, 4])
def test_dilatation_invariance_is_exact(N):
    idx = structure_constants(N).indices
    lz = I.rational_profile(4)
    f = I.ProfiledFunction.monomial(N, (idx[0], idx[-1]), lz) + I.ProfiledFunction.monomial(N, (), lz)
    assert I.check_dilatation_invariance(f, Fraction(1, 4))


MEASURES = [
    I.RadialMeasure.lebesgue(),
    I.RadialMeasure.jackson("1"),
    I.RadialMeasure.jackson("sqrt_q"),
    I.RadialMeasure.fourier({0: 1.0, 1: 0.3}),
]


@given(
    st.sampled_from([3, 4]),
    st.sampled_from(MEASURES),
    st.floats(0.3, 0.8),
    st.floats(0.5, 2.0),
    st.integers(0, 2),
)
def test_stokes_on_decaying_family(N, mu, q0, width, degree):
    idx = structure_constants(N).indices
    X = tuple(idx[k % N] for k in range(degree))
    f = I.ProfiledFunction.monomial(N, X, I.gaussian_profile(width))
    report = I.verify_stokes(f, mu, q0)
    assert all(ok for _, ok in report.values()), report


def test_stokes_fails_without_dilatation_in_the_profile_rule(monkeypatch):
    monkeypatch.setattr(I, "_shift", lambda P, t: P)
    f = I.ProfiledFunction.monomial(3, (1,), I.gaussian_profile(1.0))
    report = I.verify_stokes(f, I.RadialMeasure.lebesgue(), 0.6)
    assert not all(ok for _, ok in report.values())


@pytest.mark.parametrize("mu", MEASURES[:2], ids=["lebesgue", "jackson"])
def test_momentum_adjointness(mu):
    N = 3
    idx = structure_constants(N).indices
    g = I.gaussian_profile(1.0)
    phi = I.ProfiledFunction.monomial(N, (idx[0],), g) + I.ProfiledFunction.monomial(N, (), g)
    psi = I.ProfiledFunction.monomial(N, (idx[-1],), I.gaussian_profile(0.5))
    report = I.verify_adjointness(phi, psi, mu, 0.6)
    assert max(r for r, _ in report.values()) <= 1e-8
    # without the q^{-N} factor the relation fails
    assert max(lit for _, lit in report.values()) > 1e-3


def test_real_basis_is_real_at_q1():
    V = I.real_basis(3, 1 + 1e-12)
    assert set(V) == {0, 1, 2}


def test_exact_scalar_evaluation():
    from qeuclid.coeff import Q, q_pow

    assert I.scalar_at_rational(Q * Q + Q, Fraction(1, 4)) == Fraction(5, 16)
    assert I.scalar_at_rational(q_pow(Fraction(1, 2)), Fraction(1, 4)) == Fraction(1, 2)
    with pytest.raises(ValueError):
        I.scalar_at_rational(q_pow(Fraction(1, 2)), Fraction(1, 2))


def test_radial_measure_validation():
    with pytest.raises(ValueError):
        I.RadialMeasure.jackson("2")
    with pytest.raises(ValueError):
        I.RadialMeasure.fourier({-1: 0.2})
