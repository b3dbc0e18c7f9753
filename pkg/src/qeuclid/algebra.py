"""Normal ordering in the q-deformed differential calculus extended by Lambda.

A normal-ordered word is ``(X, Xi, D, lam)``: a non-decreasing tuple of
coordinate indices, a strictly increasing tuple of differential indices, a
non-decreasing tuple of lower derivative indices and an integer power of the
scaling operator Lambda, read left to right in that order.  Elements are
dicts from words to Scalar coefficients.

Quadratic rules inside each block are derived by row reduction of the
projector relations.  Cross-block rules are read off the exchange relations
directly.  Multiplication folds a word letter by letter into a normal-ordered
element, memoising every block-level sub-computation.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

from . import rmat
from ._linalg import DegenerateSystem, rref
from .coeff import ONE, ZERO, Q, Scalar, q_pow, structure_constants

X_, XI_, D_, L_ = 0, 1, 2, 3
EMPTY = ((), (), (), 0)


class EliminationError(DegenerateSystem):
    """A disordered pair could not be expressed by ordered ones."""


@dataclass(frozen=True)
class RuleSet:
    N: int
    xx: dict
    xixi: dict
    dd: dict
    xi_x: dict
    d_x: dict
    d_xi: dict

    def counts(self) -> dict:
        return {"xx": len(self.xx), "xixi": len(self.xixi), "dd": len(self.dd)}


def _block_rules(relations, disordered, ordered_key):
    """Row-reduce relations so that every disordered pair has a rule."""
    order = sorted(disordered, key=ordered_key, reverse=True)
    pivots, left = rref(relations, order)
    missing = [p for p in disordered if p not in pivots]
    if missing:
        raise EliminationError(f"pairs without rule: {missing}")
    if left:
        raise EliminationError("relations among ordered monomials remain")
    rules = {}
    for pair, row in pivots.items():
        rhs = {c: -v for c, v in row.items() if c != pair}
        for c in rhs:
            if c in pivots:
                raise EliminationError("rule right-hand side not reduced")
        rules[pair] = tuple(rhs.items())
    return rules


@lru_cache(maxsize=None)
def derive_exchange_rules(N: int) -> RuleSet:
    idx = structure_constants(N).indices
    bd = rmat.calibrate(N)
    R, Rinv = bd.R, bd.Rinv
    Ps, Pa, Pt = rmat.projector_matrices(N)
    g, gu = rmat.metric(N)
    pairs = list(itertools.product(idx, repeat=2))

    def key(p):
        return p

    # x x: P_a^{ij}_{hk} x^h x^k = 0
    rel = [dict(Pa.rows.get(r, {})) for r in pairs]
    xx = _block_rules(rel, [p for p in pairs if p[0] > p[1]], key)
    # xi xi: (P_s + P_t)^{ij}_{hk} xi^h xi^k = 0
    St = Ps + Pt
    rel = [dict(St.rows.get(r, {})) for r in pairs]
    xixi = _block_rules(rel, [p for p in pairs if p[0] >= p[1]], key)
    # d d: P_a^{ij}_{hk} d_j d_i = 0, the word d_a d_b carries P_a^{ba}_{hk}
    rel = []
    for hk in pairs:
        row = {}
        for (i, j), v in Pa.transpose().rows.get(hk, {}).items():
            row[(j, i)] = row.get((j, i), ZERO) + v
        rel.append({c: v for c, v in row.items() if v})
    dd = _block_rules(rel, [p for p in pairs if p[0] > p[1]], key)

    # xi^j x^k = q^{-1} Rinv^{jk}_{hi} x^h xi^i
    qi = Q.inverse()
    xi_x = {}
    for (j, k) in pairs:
        xi_x[(j, k)] = tuple((hi, qi * v) for hi, v in Rinv.rows.get((j, k), {}).items())
    # d_a x^i = delta + q R^{ih}_{ak} x^k d_h
    d_x = {}
    for a in idx:
        for i in idx:
            terms = []
            for (ii, h) in pairs:
                if ii != i:
                    continue
                for (aa, kk), v in R.rows.get((i, h), {}).items():
                    if aa == a:
                        terms.append(((kk, h), Q * v))
            d_x[(a, i)] = (ONE if a == i else ZERO, tuple(terms))
    # d_a xi^i = q^{-1} g_{a,-a} R^{-a,i}_{j,-b} g^{-b,b} xi^j d_b
    d_xi = {}
    for a in idx:
        for i in idx:
            terms = []
            for (j, mb), v in R.rows.get((-a, i), {}).items():
                b = -mb
                terms.append(((j, b), qi * g[(a, -a)] * v * gu[(mb, b)]))
            d_xi[(a, i)] = tuple(terms)
    return RuleSet(N, xx, xixi, dd, xi_x, d_x, d_xi)


def _acc(out, key, v):
    nv = out.get(key, ZERO) + v
    if nv:
        out[key] = nv
    else:
        out.pop(key, None)


class Engine:
    """Memoised normal-ordering machinery for a fixed N."""

    def __init__(self, N: int):
        self.N = N
        self.rules = derive_exchange_rules(N)
        self.indices = structure_constants(N).indices
        self._qpow = {}
        self._cache = {}

    def qp(self, e: int) -> Scalar:
        s = self._qpow.get(e)
        if s is None:
            s = self._qpow[e] = Q**e
        return s

    # block algebras: append one letter to a sorted block
    def _block_append(self, kind, word, k, rules, strict):
        key = (kind, word, k)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        if not word or (word[-1] < k) or (not strict and word[-1] == k):
            res = {word + (k,): ONE}
        else:
            res = {}
            head, last = word[:-1], word[-1]
            for (b1, b2), c in rules.get((last, k), ()):
                for w1, c1 in self._block_append(kind, head, b1, rules, strict).items():
                    for w2, c2 in self._block_append(kind, w1, b2, rules, strict).items():
                        _acc(res, w2, c * c1 * c2)
        self._cache[key] = res
        return res

    def x_append(self, X, k):
        return self._block_append(X_, X, k, self.rules.xx, False)

    def xi_append(self, Xi, k):
        return self._block_append(XI_, Xi, k, self.rules.xixi, True)

    def d_append(self, D, k):
        return self._block_append(D_, D, k, self.rules.dd, False)

    def d_times_x(self, D, i):
        """``D x^i`` as ``{(xpart, D'): c}`` with ``xpart`` of length <= 1."""
        key = ("dx", D, i)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        if not D:
            res = {((i,), ()): ONE}
        else:
            res = {}
            head, a = D[:-1], D[-1]
            const, terms = self.rules.d_x[(a, i)]
            if const:
                _acc(res, ((), head), const)
            for (kk, h), c in terms:
                for (xp, D1), c1 in self.d_times_x(head, kk).items():
                    for D2, c2 in self.d_append(D1, h).items():
                        _acc(res, (xp, D2), c * c1 * c2)
        self._cache[key] = res
        return res

    def xi_times_x(self, Xi, k):
        """``Xi x^k`` as ``{(h, Xi'): c}``."""
        key = ("xix", Xi, k)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        if not Xi:
            res = {(k, ()): ONE}
        else:
            res = {}
            head, j = Xi[:-1], Xi[-1]
            for (h, i), c in self.rules.xi_x[(j, k)]:
                for (h1, X1), c1 in self.xi_times_x(head, h).items():
                    for X2, c2 in self.xi_append(X1, i).items():
                        _acc(res, (h1, X2), c * c1 * c2)
        self._cache[key] = res
        return res

    def d_times_xi(self, D, i):
        """``D xi^i`` as ``{(j, D'): c}``."""
        key = ("dxi", D, i)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        if not D:
            res = {(i, ()): ONE}
        else:
            res = {}
            head, a = D[:-1], D[-1]
            for (j, b), c in self.rules.d_xi[(a, i)]:
                for (j1, D1), c1 in self.d_times_xi(head, j).items():
                    for D2, c2 in self.d_append(D1, b).items():
                        _acc(res, (j1, D2), c * c1 * c2)
        self._cache[key] = res
        return res

    # words times letters
    def word_letter(self, word, kind, i):
        X, Xi, D, lam = word
        if kind == L_:
            return {(X, Xi, D, lam + i): ONE}
        if kind == D_:
            s = self.qp(lam)
            return {(X, Xi, D2, lam): s * c for D2, c in self.d_append(D, i).items()}
        if kind == XI_:
            res = {}
            for (j, D2), c in self.d_times_xi(D, i).items():
                for Xi2, c2 in self.xi_append(Xi, j).items():
                    _acc(res, (X, Xi2, D2, lam), c * c2)
            return res
        # coordinate
        s = self.qp(-lam)
        res = {}
        for (xp, D2), c in self.d_times_x(D, i).items():
            if not xp:
                _acc(res, (X, Xi, D2, lam), s * c)
                continue
            for (h, Xi2), c2 in self.xi_times_x(Xi, xp[0]).items():
                for X2, c3 in self.x_append(X, h).items():
                    _acc(res, (X2, Xi2, D2, lam), s * c * c2 * c3)
        return res

    # block-level products, each memoised on its own
    def block_mul(self, kind, B1, B2):
        """Normal form of the product of two sorted blocks of one kind."""
        if not B2:
            return {B1: ONE}
        if not B1:
            return {B2: ONE}
        key = ("bm", kind, B1, B2)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        rules, strict = {X_: (self.rules.xx, False), XI_: (self.rules.xixi, True), D_: (self.rules.dd, False)}[kind]
        cur = {B1: ONE}
        for k in B2:
            nxt = {}
            for w, c in cur.items():
                for w2, c2 in self._block_append(kind, w, k, rules, strict).items():
                    _acc(nxt, w2, c * c2)
            cur = nxt
        self._cache[key] = cur
        return cur

    def d_block_x_block(self, D, X):
        """``D X`` as ``{(X', D'): c}``."""
        if not D or not X:
            return {(X, D): ONE}
        key = ("DX", D, X)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        res = {}
        for (xp, D1), c in self.d_times_x(D, X[0]).items():
            for (X2, D2), c2 in self.d_block_x_block(D1, X[1:]).items():
                for X3, c3 in self.block_mul(X_, xp, X2).items():
                    _acc(res, (X3, D2), c * c2 * c3)
        self._cache[key] = res
        return res

    def d_block_xi_block(self, D, Xi):
        """``D Xi`` as ``{(Xi', D'): c}``."""
        if not D or not Xi:
            return {(Xi, D): ONE}
        key = ("DXi", D, Xi)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        res = {}
        for (j, D1), c in self.d_times_xi(D, Xi[0]).items():
            for (Xi2, D2), c2 in self.d_block_xi_block(D1, Xi[1:]).items():
                for Xi3, c3 in self.block_mul(XI_, (j,), Xi2).items():
                    _acc(res, (Xi3, D2), c * c2 * c3)
        self._cache[key] = res
        return res

    def xi_block_x_block(self, Xi, X):
        """``Xi X`` as ``{(X', Xi'): c}``."""
        if not Xi or not X:
            return {(X, Xi): ONE}
        key = ("XiX", Xi, X)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        res = {}
        for (h, Xi1), c in self.xi_times_x(Xi, X[0]).items():
            for (X2, Xi2), c2 in self.xi_block_x_block(Xi1, X[1:]).items():
                for X3, c3 in self.block_mul(X_, (h,), X2).items():
                    _acc(res, (X3, Xi2), c * c2 * c3)
        self._cache[key] = res
        return res

    def word_word(self, w1, w2):
        """Normal form of the product of two normal words."""
        X1, Xi1, D1, l1 = w1
        X2, Xi2, D2, l2 = w2
        key = ("ww", w1, w2)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        scal = self.qp(l1 * (len(D2) - len(X2))) if l1 else ONE
        res = {}
        for (Xa, Da), c1 in self.d_block_x_block(D1, X2).items():
            for (Xib, Db), c2 in self.d_block_xi_block(Da, Xi2).items():
                Dfs = self.block_mul(D_, Db, D2)
                for (Xc, Xi1b), c3 in self.xi_block_x_block(Xi1, Xa).items():
                    Xfs = self.block_mul(X_, X1, Xc)
                    Xifs = self.block_mul(XI_, Xi1b, Xib)
                    c123 = scal * c1 * c2 * c3
                    for Xf, c4 in Xfs.items():
                        for Xif, c5 in Xifs.items():
                            c45 = c123 * c4 * c5
                            for Df, c6 in Dfs.items():
                                _acc(res, (Xf, Xif, Df, l1 + l2), c45 * c6)
        if len(self._cache) < 2_000_000:
            self._cache[key] = res
        return res


def word_letters(w):
    X, Xi, D, lam = w
    out = [(X_, i) for i in X] + [(XI_, i) for i in Xi] + [(D_, i) for i in D]
    if lam:
        out.append((L_, lam))
    return out


@lru_cache(maxsize=None)
def engine(N: int) -> Engine:
    return Engine(N)


class NCElement:
    """Finite linear combination of normal-ordered words over Scalar."""

    __slots__ = ("N", "terms")

    def __init__(self, N: int, terms=None):
        self.N = N
        self.terms = {w: c for w, c in (terms or {}).items() if c}

    # constructors
    @staticmethod
    def scalar(N, c) -> "NCElement":
        return NCElement(N, {EMPTY: c if isinstance(c, Scalar) else Scalar(c)})

    @staticmethod
    def one(N) -> "NCElement":
        return NCElement.scalar(N, ONE)

    @staticmethod
    def zero(N) -> "NCElement":
        return NCElement(N)

    @staticmethod
    def from_letters(N, letters) -> "NCElement":
        out = NCElement.one(N)
        eng = engine(N)
        cur = dict(out.terms)
        for kind, i in letters:
            nxt = {}
            for w, c in cur.items():
                for w3, c3 in eng.word_letter(w, kind, i).items():
                    _acc(nxt, w3, c * c3)
            cur = nxt
        return NCElement(N, cur)

    # arithmetic
    def __add__(self, other):
        if not isinstance(other, NCElement):
            other = NCElement.scalar(self.N, other)
        out = dict(self.terms)
        for w, c in other.terms.items():
            _acc(out, w, c)
        return NCElement(self.N, out)

    __radd__ = __add__

    def __neg__(self):
        return NCElement(self.N, {w: -c for w, c in self.terms.items()})

    def __sub__(self, other):
        if not isinstance(other, NCElement):
            other = NCElement.scalar(self.N, other)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, s) -> "NCElement":
        if not isinstance(s, Scalar):
            s = Scalar(s)
        if not s:
            return NCElement(self.N)
        return NCElement(self.N, {w: c * s for w, c in self.terms.items()})

    def __mul__(self, other):
        if isinstance(other, (int, Scalar)):
            return self.scale(other)
        eng = engine(self.N)
        out = {}
        for w1, c1 in self.terms.items():
            for w2, c2 in other.terms.items():
                c = c1 * c2
                for w, c3 in eng.word_word(w1, w2).items():
                    _acc(out, w, c * c3)
        return NCElement(self.N, out)

    def __rmul__(self, other):
        if isinstance(other, (int, Scalar)):
            return self.scale(other)
        return NotImplemented

    def __pow__(self, e: int):
        out = NCElement.one(self.N)
        for _ in range(e):
            out = out * self
        return out

    def is_zero(self) -> bool:
        return not self.terms

    def __eq__(self, other):
        if isinstance(other, (int, Scalar)):
            other = NCElement.scalar(self.N, other)
        return (self - other).is_zero()

    def __repr__(self):
        parts = []
        for (X, Xi, D, lam), c in sorted(self.terms.items(), key=lambda t: str(t[0])):
            parts.append(f"{c!r}*x{list(X)}xi{list(Xi)}d{list(D)}L^{lam}")
        return " + ".join(parts) if parts else "0"

    def lambda_range(self):
        lams = [w[3] for w in self.terms]
        return (min(lams), max(lams)) if lams else (0, 0)

    def degrees(self):
        return {(len(w[0]), len(w[1]), len(w[2])) for w in self.terms}


# generators


def x(N, i) -> NCElement:
    return NCElement(N, {((i,), (), (), 0): ONE})


def xi(N, i) -> NCElement:
    return NCElement(N, {((), (i,), (), 0): ONE})


def d(N, i) -> NCElement:
    """Lower-index derivative ``d_i``."""
    return NCElement(N, {((), (), (i,), 0): ONE})


def d_up(N, i) -> NCElement:
    """``d^i = g^{ij} d_j``."""
    _, gu = rmat.metric(N)
    return d(N, -i).scale(gu[(i, -i)])


def lam(N, e: int = 1) -> NCElement:
    return NCElement(N, {((), (), (), e): ONE})


def x_lower(N, i) -> NCElement:
    """``x_i = g_{ij} x^j``."""
    g, _ = rmat.metric(N)
    return x(N, -i).scale(g[(i, -i)])


def xi_lower(N, i) -> NCElement:
    g, _ = rmat.metric(N)
    return xi(N, -i).scale(g[(i, -i)])


@lru_cache(maxsize=None)
def r2(N) -> NCElement:
    """``x.x = g_{ij} x^i x^j``."""
    idx = structure_constants(N).indices
    return sum((x(N, i) * x_lower(N, i) for i in idx), NCElement.zero(N))


@lru_cache(maxsize=None)
def box(N) -> NCElement:
    """``d.d = d^i d_i``."""
    idx = structure_constants(N).indices
    return sum((d_up(N, i) * d(N, i) for i in idx), NCElement.zero(N))


@lru_cache(maxsize=None)
def ext_d(N) -> NCElement:
    """Exterior derivative ``xi^i d_i``."""
    idx = structure_constants(N).indices
    return sum((xi(N, i) * d(N, i) for i in idx), NCElement.zero(N))


@lru_cache(maxsize=None)
def euler(N) -> NCElement:
    """``x^i d_i``."""
    idx = structure_constants(N).indices
    return sum((x(N, i) * d(N, i) for i in idx), NCElement.zero(N))


@lru_cache(maxsize=None)
def xi_dot_x(N) -> NCElement:
    idx = structure_constants(N).indices
    return sum((xi(N, i) * x_lower(N, i) for i in idx), NCElement.zero(N))


def normal_order(N, letters) -> NCElement:
    """Normal form of a product of generators given as ``(kind, index)``.

    Kinds: ``'x'``, ``'xi'``, ``'d'`` (lower index) and ``'L'`` (power).
    """
    kinds = {"x": X_, "xi": XI_, "d": D_, "L": L_}
    return NCElement.from_letters(N, [(kinds.get(k, k), i) for k, i in letters])


def evaluate_bar(e: NCElement) -> NCElement:
    """Derivative-free part applied to 1 (Lambda 1 = 1)."""
    out = {}
    for (X, Xi, D, lam_), c in e.terms.items():
        if D:
            continue
        _acc(out, (X, Xi, (), 0), c)
    return NCElement(e.N, out)


def pairing(N, d_word, x_word) -> Scalar:
    """``<d_{i1}...d_{il}, x^{j1}...x^{jm}>``."""
    if len(d_word) != len(x_word):
        return ZERO
    e = normal_order(N, [("d", i) for i in d_word] + [("x", j) for j in x_word])
    return evaluate_bar(e).terms.get(EMPTY, ZERO)


# hatted generators and the reduction modulo the Lambda^{-2} identity


@lru_cache(maxsize=None)
def lambda_m2(N) -> NCElement:
    """Polynomial expression of ``Lambda^{-2}`` in coordinates and derivatives."""
    sc = structure_constants(N)
    k = sc.k
    c2 = q_pow(N) * k * k / (sc.mubar * sc.mubar)
    return NCElement.one(N) + euler(N).scale(Q * k) + (r2(N) * box(N)).scale(c2)


@lru_cache(maxsize=None)
def d_hat_up(N, i) -> NCElement:
    sc = structure_constants(N)
    c = Q * sc.k / sc.mu
    return lam(N, 2) * (d_up(N, i) + (x(N, i) * box(N)).scale(c))


def d_hat(N, i) -> NCElement:
    """Lower-index ``hat d_i = g_{ij} hat d^j``."""
    g, _ = rmat.metric(N)
    return d_hat_up(N, -i).scale(g[(i, -i)])


@lru_cache(maxsize=None)
def xi_hat(N, i, form: int = 1) -> NCElement:
    """Hatted differential; ``form`` selects one of the two equivalent forms."""
    sc = structure_constants(N)
    k = sc.k
    one = NCElement.one(N)
    if form == 1:
        inner = (
            xi(N, i)
            + (x(N, i) * ext_d(N)).scale(Q.inverse() * k)
            - (xi_dot_x(N).scale(q_pow(1 - N)) + (r2(N) * ext_d(N)).scale(k * q_pow(-2) / sc.mubar))
            .scale(k)
            * d_hat_up(N, i)
        )
        return (lam(N, -2) * inner).scale(q_pow(N))
    xid = [xi(N, j) * d(N, j) for j in structure_constants(N).indices]
    t1 = sum((w * x(N, i) for w in xid), NCElement.zero(N))
    t2 = sum((w * r2(N) for w in xid), NCElement.zero(N))
    inner = (
        xi(N, i)
        + t1.scale(Q * k)
        - (xi_dot_x(N).scale(q_pow(1 - N)) + t2.scale(k / sc.mubar)).scale(k) * d_hat_up(N, i)
    )
    return (lam(N, -2) * inner).scale(q_pow(N - 2))


def xi_hat_lower(N, i) -> NCElement:
    g, _ = rmat.metric(N)
    return xi_hat(N, -i).scale(g[(i, -i)])


@lru_cache(maxsize=None)
def box_hat(N) -> NCElement:
    idx = structure_constants(N).indices
    return sum((d_hat_up(N, i) * d_hat(N, i) for i in idx), NCElement.zero(N))


@lru_cache(maxsize=None)
def ext_d_hat(N) -> NCElement:
    idx = structure_constants(N).indices
    return sum((xi_hat(N, i) * d_hat(N, i) for i in idx), NCElement.zero(N))


def hatted_generators(N):
    idx = structure_constants(N).indices
    return (
        {i: d_hat_up(N, i) for i in idx},
        {i: xi_hat(N, i) for i in idx},
        lambda_m2(N),
    )


def reduce_lambda(e: NCElement):
    """Canonical form modulo ``Lambda^{-2} = lambda_m2``.

    The element is multiplied on the right by an even power ``Lambda^{-2S}``
    so that every Lambda power is non-positive, then each ``Lambda^{-2s}``
    is replaced by the polynomial ``lambda_m2**s``.  The result maps the
    parity ``0`` or ``-1`` of the remaining Lambda power to a Lambda-free
    element.  Since right multiplication by an invertible element is
    injective, ``e`` vanishes iff every returned part vanishes.
    """
    N = e.N
    if e.is_zero():
        return {}
    lo, hi = e.lambda_range()
    S = max(0, (hi + 1) // 2)
    shifted = e * lam(N, -2 * S) if S else e
    L2 = lambda_m2(N)
    powers = {0: NCElement.one(N)}
    parts = {0: NCElement.zero(N), -1: NCElement.zero(N)}
    by_power = {}
    for w, c in shifted.terms.items():
        by_power.setdefault(w[3], {})[(w[0], w[1], w[2], 0)] = c
    for p, terms in by_power.items():
        s, eps = divmod(-p, 2)
        if eps:
            s, eps = s, -1
        # p = -2 s + eps
        if s not in powers:
            m = max(powers)
            acc = powers[m]
            for j in range(m + 1, s + 1):
                acc = acc * L2
                powers[j] = acc
        base = NCElement(N, terms) * powers[s]
        parts[eps] = parts[eps] + base
    return {k: v for k, v in parts.items() if not v.is_zero()}


def operator_equal(a: NCElement, b: NCElement) -> bool:
    """Equality in the calculus, using the polynomial form of Lambda^{-2}."""
    diff = a - b
    if diff.is_zero():
        return True
    return not reduce_lambda(diff)


# star structure


@lru_cache(maxsize=None)
def _star_generator(N, kind, i) -> NCElement:
    g, _ = rmat.metric(N)
    if kind == X_:
        return x(N, -i).scale(g[(-i, i)])
    if kind == XI_:
        return xi_hat(N, -i).scale(g[(-i, i)])
    if kind == D_:
        # d_i = g_{ih} d^h,  d^{h*} = -q^{-N} hat d^j g_{jh}
        h = -i
        return d_hat_up(N, i).scale(-q_pow(-N) * g[(i, h)] * g[(i, h)])
    if kind == L_:
        if i > 0:
            return lam(N, -i).scale(q_pow(N * i))
        return lam(N, -i).scale(q_pow(N * i))
    raise ValueError(kind)


def star(e: NCElement) -> NCElement:
    """Antilinear antimultiplicative involution (coefficients are real)."""
    N = e.N
    out = NCElement.zero(N)
    for w, c in e.terms.items():
        acc = NCElement.scalar(N, c)
        for kind, i in reversed(word_letters(w)):
            acc = acc * _star_generator(N, kind, i)
        out = out + acc
    return out


class FockModule:
    """Left module spanned by derivative-free words, with ``d_i 1 = 0``.

    ``Lambda 1 = sign * 1``.  Both signs are representations in which
    ``Lambda^{-2}`` acts like ``lambda_m2``; the Lambda-free and the
    ``Lambda^{-1}`` parts of an element are recovered from the two signs,
    so agreement in both sectors is agreement modulo that identity on the
    vectors tested.  Vectors are dicts ``(X, Xi) -> Scalar``.
    """

    def __init__(self, N: int, sign: int = 1):
        if sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")
        self.N = N
        self.sign = sign
        self.eng = engine(N)
        self._memo = {}

    def act_word(self, w, b) -> dict:
        key = ("w", w, b)
        hit = self._memo.get(key)
        if hit is not None:
            return hit
        res = {}
        for (X, Xi, D, lm), c in self.eng.word_word(w, (b[0], b[1], (), 0)).items():
            if D:
                continue
            _acc(res, (X, Xi), -c if (self.sign < 0 and lm % 2) else c)
        self._memo[key] = res
        return res

    def act(self, e: NCElement, vec: dict) -> dict:
        out = {}
        for b, cb in vec.items():
            for w, c in e.terms.items():
                for b2, c2 in self.act_word(w, b).items():
                    _acc(out, b2, c * cb * c2)
        return out

    def _star_letter(self, kind, i, depth, b) -> dict:
        """Action of ``star^depth`` of one generator on a basis vector."""
        key = ("s", kind, i, depth, b)
        hit = self._memo.get(key)
        if hit is not None:
            return hit
        res = self.act_star(_star_generator(self.N, kind, i), {b: ONE}, depth - 1)
        self._memo[key] = res
        return res

    def act_star(self, e: NCElement, vec: dict, depth: int = 1) -> dict:
        """Action of ``star^depth(e)``, unfolding one normal word at a time."""
        if depth == 0:
            return self.act(e, vec)
        out = {}
        for w, c in e.terms.items():
            letters = word_letters(w)
            if depth % 2 == 0:
                letters = letters[::-1]
            cur = {b: c * cb for b, cb in vec.items()}
            for kind, i in letters:
                nxt = {}
                for b, cb in cur.items():
                    for b2, c2 in self._star_letter(kind, i, depth, b).items():
                        _acc(nxt, b2, cb * c2)
                cur = nxt
            for b, cb in cur.items():
                _acc(out, b, cb)
        return out


def fock_basis(N, max_x: int, max_xi: int = 0):
    """Normal-ordered derivative-free words up to the given degrees."""
    from itertools import combinations, combinations_with_replacement

    idx = structure_constants(N).indices
    out = []
    for m in range(max_x + 1):
        for X in combinations_with_replacement(idx, m):
            for p in range(min(max_xi, N) + 1):
                for Xi in combinations(idx, p):
                    out.append((X, Xi))
    return out


# U_q so(N) images


@lru_cache(maxsize=None)
def zprime(N):
    """``Z'^h_k`` as a dict ``{(h, k): NCElement}``."""
    sc = structure_constants(N)
    g, gu = rmat.metric(N)
    k = sc.k
    idx = sc.indices
    out = {}
    for h in idx:
        for kk in idx:
            j = -kk
            e = NCElement.scalar(N, q_pow(-2) if h == kk else ZERO)
            e = e + (d_up(N, h) * x(N, j)).scale(Q.inverse() * k * g[(j, kk)])
            e = e - (x(N, h) * d_hat_up(N, j)).scale(q_pow(-1 - N) * k * g[(j, kk)])
            e = e - (d_up(N, h) * r2(N) * d_hat_up(N, j)).scale(k * k * q_pow(-2) / sc.mubar * g[(j, kk)])
            out[(h, kk)] = e
    return out


def casimir_prime(N, l: int) -> NCElement:
    """``C'_l = tr(U Z'^l)``."""
    idx = structure_constants(N).indices
    Z = zprime(N)
    U = rmat.u_matrix(N)
    power = {(a, b): NCElement.one(N) if a == b else NCElement.zero(N) for a in idx for b in idx}
    for _ in range(l):
        nxt = {}
        for a in idx:
            for b in idx:
                nxt[(a, b)] = sum((power[(a, c)] * Z[(c, b)] for c in idx), NCElement.zero(N))
        power = nxt
    return sum((power[(j, i)].scale(U[(i, j)]) for i in idx for j in idx if U[(i, j)]), NCElement.zero(N))


def commutator(a: NCElement, b: NCElement) -> NCElement:
    return a * b - b * a


# independent pair-rewriting engine, used to test confluence


class PairRewriter:
    """Plain adjacent-pair rewriting on letter sequences.

    Letters are ``(kind, index)``; Lambda letters carry ``+1`` or ``-1``.
    ``strategy`` picks the leftmost or the rightmost reducible pair.
    """

    def __init__(self, N: int, strategy: str = "left"):
        self.N = N
        self.rules = derive_exchange_rules(N)
        self.strategy = strategy
        self.memo = {}

    def _in_order(self, a, b) -> bool:
        ka, ia = a
        kb, ib = b
        if ka != kb:
            return ka < kb
        if ka == X_ or ka == D_:
            return ia <= ib
        if ka == XI_:
            return ia < ib
        return ia == ib

    def _rewrite(self, a, b):
        """Rewrite the disordered pair ``a b`` into ``[(letters, coeff)]``."""
        ka, ia = a
        kb, ib = b
        R = self.rules
        if ka == kb:
            table = {X_: R.xx, XI_: R.xixi, D_: R.dd}.get(ka)
            if table is None:
                return [((), ONE)]
            return [(((ka, p), (ka, r)), c) for (p, r), c in table.get((ia, ib), ())]
        if ka == L_:
            if kb == X_:
                return [((b, a), Q ** (-ia))]
            if kb == D_:
                return [((b, a), Q**ia)]
            return [((b, a), ONE)]
        if ka == XI_ and kb == X_:
            return [(((X_, h), (XI_, i)), c) for (h, i), c in R.xi_x[(ia, ib)]]
        if ka == D_ and kb == X_:
            const, terms = R.d_x[(ia, ib)]
            out = [((), const)] if const else []
            return out + [(((X_, kk), (D_, h)), c) for (kk, h), c in terms]
        if ka == D_ and kb == XI_:
            return [(((XI_, j), (D_, bb)), c) for (j, bb), c in R.d_xi[(ia, ib)]]
        raise ValueError((a, b))

    def normal_form(self, letters) -> dict:
        letters = tuple(letters)
        hit = self.memo.get(letters)
        if hit is not None:
            return hit
        pos = None
        rng = range(len(letters) - 1)
        if self.strategy == "right":
            rng = reversed(rng)
        for p in rng:
            if not self._in_order(letters[p], letters[p + 1]):
                pos = p
                break
        if pos is None:
            res = {letters: ONE}
        else:
            res = {}
            for rep, c in self._rewrite(letters[pos], letters[pos + 1]):
                for w, c2 in self.normal_form(letters[:pos] + rep + letters[pos + 2 :]).items():
                    _acc(res, w, c * c2)
        self.memo[letters] = res
        return res

    def to_element(self, letters) -> NCElement:
        out = {}
        for w, c in self.normal_form(letters).items():
            X = tuple(i for k, i in w if k == X_)
            Xi = tuple(i for k, i in w if k == XI_)
            D = tuple(i for k, i in w if k == D_)
            lm = sum(i for k, i in w if k == L_)
            _acc(out, (X, Xi, D, lm), c)
        return NCElement(self.N, out)


def lambda_letters(e: int):
    return [(L_, 1 if e > 0 else -1)] * abs(e)


# verification entry points


def random_word(N, rng, max_degree: int):
    """Random letter sequence of length 1..max_degree over all generator kinds."""
    idx = structure_constants(N).indices
    out = []
    for _ in range(rng.randint(1, max_degree)):
        k = rng.choice((X_, XI_, D_, L_))
        out.append((k, rng.choice((1, -1)) if k == L_ else rng.choice(idx)))
    return out


def confluence_check(N: int, count: int = 1000, max_degree: int = 6, seed: int = 0) -> int:
    """Number of random words whose three normal forms disagree.

    The memoised block engine is compared with leftmost-first and
    rightmost-first adjacent-pair rewriting.
    """
    import random

    rng = random.Random(seed)
    left, right = PairRewriter(N, "left"), PairRewriter(N, "right")
    bad = 0
    for _ in range(count):
        w = random_word(N, rng, max_degree)
        a = NCElement.from_letters(N, w)
        if not (a == left.to_element(w) and a == right.to_element(w)):
            bad += 1
    return bad


def check_d_squared(N: int) -> bool:
    dd = ext_d(N)
    return (dd * dd).is_zero()


def check_d_hat_squared(N: int) -> bool:
    """``hat d^2 = 0`` modulo the polynomial form of Lambda^{-2}."""
    dh = ext_d_hat(N)
    return operator_equal(dh * dh, NCElement.zero(N))


def check_centrality(N: int) -> dict:
    """``x.x`` commutes with every x^i and ``d.d`` with every d_i."""
    idx = structure_constants(N).indices
    return {
        "r2": all(commutator(r2(N), x(N, i)).is_zero() for i in idx),
        "box": all(commutator(box(N), d(N, i)).is_zero() for i in idx),
    }


def random_element(N, rng, max_degree: int = 4, max_terms: int = 3) -> NCElement:
    out = NCElement.zero(N)
    for _ in range(rng.randint(1, max_terms)):
        w = random_word(N, rng, max_degree) if max_degree else []
        out = out + NCElement.from_letters(N, w).scale(Scalar(rng.randint(-5, 5)))
    return out


def star_involution_check(N: int, count: int = 1000, max_degree: int = 4, seed: int = 0) -> int:
    """Number of random elements on which ``star(star(e))`` and ``e`` act differently.

    Both act on random vectors of the Fock module in the two Lambda-parity
    sectors, which together detect elements modulo the Lambda^{-2} identity.
    """
    import random

    rng = random.Random(seed)
    basis = fock_basis(N, 2, 1)
    modules = [FockModule(N, s) for s in (1, -1)]
    bad = 0
    for _ in range(count):
        e = random_element(N, rng, max_degree)
        v = {b: Scalar(rng.randint(-3, 3)) for b in rng.sample(basis, min(6, len(basis)))}
        if any(M.act_star(e, v, 2) != M.act(e, v) for M in modules):
            bad += 1
    return bad
