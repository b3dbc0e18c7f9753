"""q-epsilon tensor, Hodge map on frame monomials and Laplacian identities."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from math import comb

import numpy as np

from . import algebra as A
from . import rmat
from ._linalg import rref
from .coeff import ONE, ZERO, Scalar, q_pow, structure_constants


class HodgeConstantError(ValueError):
    """The epsilon contractions do not square to a multiple of the identity."""


def _xi_normal(N, word) -> dict:
    """Normal form of a product of frame (or differential) letters."""
    eng = A.engine(N)
    cur = {(): ONE}
    for a in word:
        nxt = {}
        for w, c in cur.items():
            for w2, c2 in eng.xi_append(w, a).items():
                A._acc(nxt, w2, c * c2)
        cur = nxt
    return cur


@dataclass(frozen=True)
class EpsilonTensor:
    N: int
    tensor: rmat.LabeledTensor

    def __getitem__(self, idx) -> Scalar:
        return self.tensor[tuple(idx)]

    @property
    def top(self) -> tuple:
        return structure_constants(self.N).indices


@lru_cache(maxsize=None)
def epsilon_tensor(N: int) -> EpsilonTensor:
    """``xi^{i1} ... xi^{iN} = eps^{i1...iN} xi^{-n} ... xi^{n}``."""
    idx = structure_constants(N).indices
    entries = {}
    for I in itertools.product(idx, repeat=N):
        c = _xi_normal(N, I).get(tuple(idx))
        if c:
            entries[I] = c
    return EpsilonTensor(N, rmat.LabeledTensor(N, N, 0, entries))


def lowered_epsilon(N: int, k: int):
    """``eps_{b1..bk}^{a1..a(N-k)} = g_{b1 j1} ... g_{bk jk} eps^{j1 ... jk a1 ... a(N-k)}``.

    Indices are lowered position by position.  With the normal ordering used
    here this is the convention under which the fully lowered tensor is the
    index-reversed upper one (see :func:`check_epsilon_lowering`).  Returned as
    ``{(b-tuple, a-tuple): Scalar}``.
    """
    g, _ = rmat.metric(N)
    eps = epsilon_tensor(N).tensor.entries
    out = {}
    for J, v in eps.items():
        b = tuple(-j for j in J[:k])
        coef = v
        for bi in b:
            coef = coef * g[(bi, -bi)]
        out[(b, J[k:])] = coef
    return out


def check_epsilon_lowering(N: int) -> bool:
    """``g_{i1 j1} ... g_{iN jN} eps^{j1...jN} = eps^{iN...i1}``."""
    eps = epsilon_tensor(N)
    idx = structure_constants(N).indices
    low = lowered_epsilon(N, N)
    return all(low.get((I, ()), ZERO) == eps[tuple(reversed(I))] for I in itertools.product(idx, repeat=N))


def check_epsilon_reversed_contraction(N: int) -> bool:
    """The variant contracting ``eps^{jN...j1}``; false already at ``q = 1`` for odd N(N-1)/2."""
    eps = epsilon_tensor(N)
    g, _ = rmat.metric(N)
    idx = structure_constants(N).indices
    for I in itertools.product(idx, repeat=N):
        lhs = eps[tuple(-i for i in reversed(I))]
        for i in I:
            lhs = lhs * g[(i, -i)]
        if lhs != eps[tuple(reversed(I))]:
            return False
    return True


def check_epsilon_contraction(N: int) -> bool:
    """``eps^{i1...iN} = (-1)^{N-1} U^{i1}_{j} eps^{i2...iN j}``."""
    eps = epsilon_tensor(N)
    U = rmat.u_matrix(N)
    idx = structure_constants(N).indices
    sign = -ONE if N % 2 == 0 else ONE
    for I in itertools.product(idx, repeat=N):
        rhs = ZERO
        for j in idx:
            u = U[(I[0], j)]
            if u:
                rhs = rhs + u * eps[I[1:] + (j,)]
        if eps[I] != sign * rhs:
            return False
    return True


def form_basis(N: int, p: int):
    """Strictly increasing index words of length p."""
    return list(itertools.combinations(structure_constants(N).indices, p))


def exterior_dimension(N: int, p: int) -> int:
    """Rank of the span of all normal-ordered length-p words."""
    idx = structure_constants(N).indices
    rows = [dict(_xi_normal(N, w)) for w in itertools.product(idx, repeat=p)]
    pivots, _ = rref([r for r in rows if r], form_basis(N, p))
    return len(pivots)


def _contract(N: int, word) -> dict:
    """``theta^{a_{p+1}} ... theta^{a_N} eps_{a_N ... a_{p+1}}^{word}``, normal-ordered."""
    low = lowered_epsilon(N, N - len(word))
    out = {}
    for (b, a), v in low.items():
        if a != tuple(word):
            continue
        for w, c in _xi_normal(N, tuple(reversed(b))).items():
            A._acc(out, w, v * c)
    return out


@lru_cache(maxsize=None)
def hodge_products(N: int) -> dict:
    """``s_p`` with ``contract o contract = s_p id`` on degree p."""
    out = {}
    for p in range(N + 1):
        s = None
        for w in form_basis(N, p):
            img = {}
            for t, c in _contract(N, w).items():
                for t2, c2 in _contract(N, t).items():
                    A._acc(img, t2, c * c2)
            if set(img) != {w}:
                raise HodgeConstantError(f"epsilon contraction is not diagonal on degree {p}")
            if s is None:
                s = img[w]
            elif img[w] != s:
                raise HodgeConstantError(f"epsilon contraction is not scalar on degree {p}")
        out[p] = s
    return out


def _poly_sqrt(p):
    try:
        return p.sqrt()
    except Exception:
        return None


def exact_sqrt(s: Scalar):
    """Square root of ``s`` in Q(u), positive for u > 0, or None."""
    if s.e % 2:
        return None
    rn, rd = _poly_sqrt(s.num), _poly_sqrt(s.den)
    if rn is None or rd is None:
        return None
    root = Scalar(rn, rd, s.e // 2)
    if root.eval_u(1) < 0:
        root = -root
    return root


@dataclass(frozen=True)
class ThetaForm:
    """``sqrt(radical) * sum_w coeffs[w] theta^w`` on strictly increasing words ``w``.

    The radical carries the square roots that appear in the inner Hodge
    constants; it is absorbed whenever it becomes a perfect square.
    """

    N: int
    p: int
    coeffs: dict
    radical: Scalar = ONE

    @staticmethod
    def make(N: int, p: int, coeffs: dict, radical: Scalar = ONE) -> "ThetaForm":
        admissible = set(form_basis(N, p))
        coeffs = {w: c for w, c in coeffs.items() if c}
        if not set(coeffs) <= admissible:
            raise ValueError("coefficients must sit on strictly increasing words")
        if radical != ONE:
            root = exact_sqrt(radical)
            if root is not None:
                coeffs = {w: c * root for w, c in coeffs.items()}
                radical = ONE
        return ThetaForm(N, p, coeffs, radical)

    @staticmethod
    def monomial(N: int, word) -> "ThetaForm":
        word = tuple(word)
        return ThetaForm.make(N, len(word), _xi_normal(N, word))

    def __add__(self, other: "ThetaForm") -> "ThetaForm":
        if (self.N, self.p, self.radical) != (other.N, other.p, other.radical):
            raise ValueError("incompatible forms")
        out = dict(self.coeffs)
        for w, c in other.coeffs.items():
            A._acc(out, w, c)
        return ThetaForm.make(self.N, self.p, out, self.radical)

    def scale(self, c: Scalar) -> "ThetaForm":
        return ThetaForm.make(self.N, self.p, {w: v * c for w, v in self.coeffs.items()}, self.radical)

    def __eq__(self, other):
        if not isinstance(other, ThetaForm):
            return NotImplemented
        if not self.coeffs and not other.coeffs:
            return self.N == other.N
        return (self.N, self.p, self.radical, self.coeffs) == (other.N, other.p, other.radical, other.coeffs)

    __hash__ = None

    def numeric(self, q0: float) -> dict:
        r = float(np.sqrt(self.radical.eval(q0)))
        return {w: r * c.eval(q0) for w, c in self.coeffs.items()}


@dataclass(frozen=True)
class HodgeConstant:
    """``c_p = value * sqrt(radical)`` with the positive root."""

    value: Scalar
    radical: Scalar = ONE

    def eval(self, q0: float) -> float:
        return self.value.eval(q0) * float(np.sqrt(self.radical.eval(q0)))


@lru_cache(maxsize=None)
def hodge_constants(N: int) -> dict:
    """``c_p`` fixed by ``*1 = dV`` and ``* o * = id``.

    ``c_0`` follows from ``*1 = dV`` and then ``c_N = 1/(c_0 s_N)``.  The inner
    constraints only fix ``c_p c_{N-p} = 1/s_p``; the symmetric choice
    ``c_p = c_{N-p} = 1/sqrt(s_p)`` with the positive root is taken.
    """
    s = hodge_products(N)
    top = tuple(structure_constants(N).indices)
    c0 = ONE / _contract(N, ())[top]
    c = {0: HodgeConstant(c0), N: HodgeConstant(ONE / (c0 * s[0]))}
    for p in range(1, N):
        if s[p].eval(0.7) <= 0:
            raise HodgeConstantError(f"no positive root for degree {p}")
        root = exact_sqrt(s[p])
        c[p] = HodgeConstant(ONE / root) if root is not None else HodgeConstant(ONE, ONE / s[p])
    return c


def hodge(form: ThetaForm) -> ThetaForm:
    """Hodge map on frame forms, extended linearly from monomials."""
    N, p = form.N, form.p
    cp = hodge_constants(N)[p]
    out = {}
    for w, v in form.coeffs.items():
        for t, x in _contract(N, w).items():
            A._acc(out, t, v * x * cp.value)
    return ThetaForm.make(N, N - p, out, form.radical * cp.radical)


def volume_form(N: int) -> ThetaForm:
    return ThetaForm.make(N, N, {tuple(structure_constants(N).indices): ONE})


def unit_form(N: int) -> ThetaForm:
    return ThetaForm.make(N, 0, {(): ONE})


def check_hodge_involution(N: int) -> bool:
    for p in range(N + 1):
        for w in form_basis(N, p):
            f = ThetaForm.monomial(N, w)
            if hodge(hodge(f)) != f:
                return False
    return True


def check_hodge_unit(N: int) -> bool:
    """``*1 = dV`` and ``*dV = 1``."""
    return hodge(unit_form(N)) == volume_form(N) and hodge(volume_form(N)) == unit_form(N)


def check_hodge_well_defined(N: int) -> bool:
    """Contracting a raw word agrees with contracting its normal form."""
    idx = structure_constants(N).indices
    for p in range(N + 1):
        for w in itertools.product(idx, repeat=p):
            via = {}
            for w2, c in _xi_normal(N, w).items():
                for t, x in _contract(N, w2).items():
                    A._acc(via, t, c * x)
            via = {t: c for t, c in via.items() if c}
            if _contract(N, w) != via:
                return False
    return True


def contraction_is_antisymmetrizer(N: int, p: int, q0: float = 0.7, tol: float = 1e-9) -> bool:
    """On raw index tuples the double contraction over ``s_p`` is an idempotent of rank C(N,p)."""
    idx = structure_constants(N).indices
    tuples = list(itertools.product(idx, repeat=p))
    pos = {t: n for n, t in enumerate(tuples)}
    low_k = lowered_epsilon(N, N - p)
    low_p = lowered_epsilon(N, p)
    by_upper = {}
    for (b2, a2), v2 in low_p.items():
        by_upper.setdefault(a2, []).append((b2, v2))
    M = np.zeros((len(tuples), len(tuples)))
    for (b, a), v in low_k.items():
        for b2, v2 in by_upper.get(tuple(reversed(b)), ()):
            M[pos[tuple(reversed(b2))], pos[a]] += v.eval(q0) * v2.eval(q0)
    P = M / hodge_products(N)[p].eval(q0)
    return bool(np.allclose(P @ P, P, atol=tol) and np.linalg.matrix_rank(P, tol=1e-8) == comb(N, p))


def laplacian_identity_check(N: int) -> dict:
    """Identities between the two Laplacians and the Lambda^{-2} relations."""
    box = A.box(N)
    box_hat = A.box_hat(N)
    sc = structure_constants(N)
    mu = sc.mu
    Q = q_pow(1)
    report = {}
    report["box_lambda2"] = A.operator_equal((box * A.lam(N, 2)).scale(-Q * Q), box_hat.scale(-q_pow(-N)))
    report["boxhat_lambda_m2"] = A.operator_equal((box_hat * A.lam(N, -2)).scale(-q_pow(-2)), box.scale(-q_pow(N)))
    report["box_x"] = all(
        box * A.x(N, i) == A.d_up(N, i).scale(mu) + (A.x(N, i) * box).scale(Q * Q) for i in sc.indices
    )
    lhs = box * A.r2(N)
    rhs = (A.lam(N, -2).scale(q_pow(N)) - A.NCElement.one(N)).scale(mu * mu / (Q * Q - ONE)) + (A.r2(N) * box).scale(
        Q * Q
    )
    report["box_r2"] = A.operator_equal(lhs, rhs)
    return report
