import math

import mpmath
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qeuclid import specfun as S
from qeuclid.coeff import ONE, Q, ZERO, Scalar, q_pow


def test_pochhammer_exact_and_numeric_agree():
    exact = S.q_pochhammer(Scalar(3), Q, 4)
    assert exact.eval(0.5) == pytest.approx(S.q_pochhammer_partial(3, 0.5, 4))
    assert S.q_pochhammer(0.3, 0.5, 0) == 1


def test_infinite_pochhammer_matches_long_product():
    assert float(S.q_pochhammer(0.3, 0.5, math.inf)) == pytest.approx(S.q_pochhammer_partial(0.3, 0.5, 80), rel=1e-14)
    with pytest.raises(S.SeriesDivergence):
        S.q_pochhammer(0.3, 1.5, math.inf)


def test_product_identities_exact():
    assert S.satisfies_product_equation(S.phi00(Q, 20), ZERO, Q)
    a = Scalar(3) * Q
    assert S.satisfies_product_equation(S.product_series(a, Q, 20), a, Q)


def test_literal_0phi0_is_the_reciprocal_product():
    # with the general sign factor the 0phi0 series is (z; q)_inf, not its inverse
    lit = S.basic_hypergeometric([], [], Q, 12)
    assert not S.satisfies_product_equation(lit, ZERO, Q)
    assert float(lit.evaluate(0.3, 0.5)) == pytest.approx(float(mpmath.qp(0.3, 0.5)), rel=1e-12)


@given(st.floats(0.1, 0.9), st.floats(-0.9, 0.9), st.floats(-0.8, 0.8))
def test_product_identity_numeric(q0, a, z):
    series = S.product_series(a, q0, 200)(z)
    assert float(series) == pytest.approx(float(S.product_numeric(a, q0, z)), rel=1e-12, abs=1e-12)


@given(
    st.floats(-0.6, 0.6),
    st.floats(-0.6, 0.6),
    st.floats(0.05, 0.6),
    st.floats(0.2, 0.7),
    st.floats(-0.8, 0.8),
)
def test_heine_transformation(a1, a2, b, q0, z):
    lhs = S.heine_lhs(a1, a2, b, q0, z)
    rhs = S.heine_rhs(a1, a2, b, q0, z)
    assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(lhs))


def test_heine_at_zero_upper_parameters():
    q0 = 0.4
    for b in (q0**2, q0**-1, 0.16):
        for z in (0.3, -0.7, 0.9):
            lhs = S.heine_lhs(0, 0, b, q0, z)
            assert abs(lhs - S.heine_rhs(0, 0, b, q0, z)) <= 1e-12 * max(1.0, abs(lhs))


def test_q_exponential():
    assert S.eq_as_phi00(Q, 20)
    # e_q tends to exp as q -> 1
    assert float(S.eq_exponential(0.999999, 40)(1.0)) == pytest.approx(math.e, rel=1e-5)


def test_q_gaussian_recursion():
    assert S.q_gaussian_recursion_holds(Q, 20)


@pytest.mark.parametrize("J", [0, 1, 2, 3])
def test_phi_j_as_2phi1(J):
    assert S.phi_J_as_2phi1(Q, J, 20)


@pytest.mark.parametrize("J", [1, 2])
def test_phi_j_with_unshifted_lower_parameter_fails(J):
    assert not S.phi_J_as_2phi1(Q, J, 12, shift=0)


def test_phi_j_rejects_negative_order():
    with pytest.raises(ValueError):
        S.phi_J(Q, -1)


def test_lower_parameter_pole():
    with pytest.raises(S.ParameterPoleError):
        S.basic_hypergeometric([ZERO], [q_pow(-2)], Q, 5)


def test_pole_lattice_of_q_gaussian_product():
    # 1/(c r^2; q^2)_inf with c < 0: poles on the imaginary axis, lattice gamma = 2
    q0 = 0.5
    lat = S.pole_lattice_of_product(-1.0, q0, 2, "q2", beta=0.0)
    assert lat.on_lattice
    lat = S.pole_lattice_of_product(-3.0, q0, 2, "q2", beta=0.0)
    assert not lat.on_lattice
    lat = S.pole_lattice_of_product(1.0, q0, 1, "q2")
    assert not lat.on_lattice
