import itertools
from math import comb

import pytest
from hypothesis import given
from hypothesis import strategies as st

from qeuclid import exterior as E
from qeuclid.coeff import ONE, Q, Scalar, structure_constants


@pytest.mark.parametrize("N", [3, 4])
def test_epsilon_identities(N):
    assert E.check_epsilon_lowering(N)
    assert E.check_epsilon_contraction(N)


@pytest.mark.parametrize("N", [3, 4])
def test_reversed_contraction_is_a_negative_control(N):
    # contracting against the index-reversed epsilon does not reproduce it
    assert not E.check_epsilon_reversed_contraction(N)


@pytest.mark.parametrize("N", [3, 4, 5])
def test_dimensions(N):
    assert [E.exterior_dimension(N, p) for p in range(N + 1)] == [comb(N, p) for p in range(N + 1)]


def test_epsilon_normalisation_and_antisymmetry_at_q1():
    N = 3
    eps = E.epsilon_tensor(N)
    assert eps[eps.top] == ONE
    # at q -> 1 the tensor is the permutation sign
    for perm in itertools.permutations(eps.top):
        inversions = sum(1 for i in range(N) for j in range(i + 1, N) if perm[i] > perm[j])
        assert eps[perm].eval(1 + 1e-9) == pytest.approx((-1) ** inversions, abs=1e-6)
    assert not eps[(1, 1, 0)]


@pytest.mark.parametrize("N", [3, 4])
def test_hodge(N):
    assert E.check_hodge_involution(N)
    assert E.check_hodge_unit(N)
    assert E.check_hodge_well_defined(N)


@given(st.data())
def test_hodge_involution_on_random_forms(data):
    N = data.draw(st.sampled_from([3, 4]))
    p = data.draw(st.integers(0, N))
    basis = E.form_basis(N, p)
    coeffs = {w: Scalar(data.draw(st.integers(-3, 3))) * Q ** data.draw(st.integers(-2, 2)) for w in basis}
    f = E.ThetaForm.make(N, p, coeffs)
    assert E.hodge(E.hodge(f)) == f


def test_inner_constant_carries_a_radical_for_n3():
    c = E.hodge_constants(3)
    s = E.hodge_products(3)
    assert c[1].radical != ONE
    # c_p c_{N-p} s_p = 1
    for p in range(4):
        assert c[p].eval(0.7) * c[3 - p].eval(0.7) * s[p].eval(0.7) == pytest.approx(1.0)


@pytest.mark.parametrize("N,p", [(3, 1), (3, 2), (4, 2)])
def test_contraction_is_antisymmetrizer(N, p):
    assert E.contraction_is_antisymmetrizer(N, p)


@pytest.mark.parametrize("N", [3, 4])
def test_laplacian_identities(N):
    report = E.laplacian_identity_check(N)
    assert all(report.values()), report


def test_theta_form_rejects_unordered_words():
    with pytest.raises(ValueError):
        E.ThetaForm.make(3, 2, {(1, -1): ONE})
