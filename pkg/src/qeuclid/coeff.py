"""Exact coefficient arithmetic in the deformation parameter.

Every coefficient is a rational function of a formal root ``u`` with
``q = u**16``.  Numerators and denominators are integer polynomials held by
python-flint, so coefficients never overflow and equality is equality of
canonical forms.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Union

import math

import flint
import mpmath

ROOT_ORDER = 16

_ONE = flint.fmpz_poly([1])
_ZERO = flint.fmpz_poly([])

Number = Union[int, Fraction, "Scalar"]


class PoleError(ZeroDivisionError):
    """Raised when a rational function is evaluated at one of its poles."""


_MONO: list = []


def _u_monomial(k: int) -> flint.fmpz_poly:
    while len(_MONO) <= k:
        _MONO.append(flint.fmpz_poly([0] * len(_MONO) + [1]))
    return _MONO[k]


def _valuation(p: flint.fmpz_poly) -> int:
    v = 0
    while p[v] == 0:
        v += 1
    return v


def _cancel(num, den):
    """Remove ``gcd(num, den)``, working in ``u**k`` when both are deflatable."""
    k = 1
    if den.degree() > 32 or num.degree() > 32:
        k = math.gcd(num.deflation()[1], den.deflation()[1])
    if k > 1:
        a, b = num.deflate(k), den.deflate(k)
        g = a.gcd(b)
        if g.is_one():
            return num, den
        return (a // g).inflate(k), (b // g).inflate(k)
    g = num.gcd(den)
    if g.is_one():
        return num, den
    return num // g, den // g


def _make(num, den, e):
    """Canonical triple for ``u**e * num / den`` (num nonzero)."""
    if num[0] == 0:
        v = _valuation(num)
        num = num.right_shift(v)
        e += v
    if den[0] == 0:
        v = _valuation(den)
        den = den.right_shift(v)
        e -= v
    if not den.is_constant():
        num, den = _cancel(num, den)
    c = num.content().gcd(den.content())
    if c != 1:
        num = num // c
        den = den // c
    if den.leading_coefficient() < 0:
        num, den = -num, -den
    return num, den, e


class Scalar:
    """Immutable element of Q(u) with ``q = u**16``.

    Stored as ``u**e * num / den`` with integer polynomials ``num`` and
    ``den`` having nonzero constant terms, ``gcd(num, den) = 1``, coprime
    contents and ``den`` with positive leading coefficient.
    """

    __slots__ = ("num", "den", "e", "_hash")

    def __init__(self, num=0, den=None, e: int = 0, *, _raw: bool = False):
        self._hash = None
        if _raw:
            self.num, self.den, self.e = num, den, e
            return
        if isinstance(num, Scalar):
            self.num, self.den, self.e = num.num, num.den, num.e
            return
        if isinstance(num, Fraction):
            num, den = flint.fmpz_poly([num.numerator]), flint.fmpz_poly([num.denominator])
        elif isinstance(num, int):
            num = flint.fmpz_poly([num])
        if den is None:
            den = _ONE
        elif isinstance(den, int):
            den = flint.fmpz_poly([den])
        if den.is_zero():
            raise ZeroDivisionError("zero denominator")
        if num.is_zero():
            self.num, self.den, self.e = _ZERO, _ONE, 0
            return
        self.num, self.den, self.e = _make(num, den, e)

    # constructors
    @staticmethod
    def u_pow(k: int) -> "Scalar":
        return Scalar(_ONE, _ONE, k, _raw=True)

    @staticmethod
    def q_pow(e) -> "Scalar":
        """``q**e`` for a rational exponent ``e`` with ``16 e`` integral."""
        k = Fraction(e) * ROOT_ORDER
        if k.denominator != 1:
            raise ValueError(f"q^{e} is not an integer power of u")
        return Scalar.u_pow(int(k))

    # predicates
    def is_zero(self) -> bool:
        return self.num.is_zero()

    def __bool__(self) -> bool:
        return not self.num.is_zero()

    def is_constant(self) -> bool:
        return self.e == 0 and self.num.is_constant() and self.den.is_constant()

    def is_monomial(self) -> bool:
        return self.den.is_constant() and self.num.is_constant()

    def as_fraction(self) -> Fraction:
        if self.num.is_zero():
            return Fraction(0)
        if not self.is_constant():
            raise ValueError("not a constant")
        return Fraction(int(self.num[0]), int(self.den[0]))

    def numerator_denominator(self):
        """``(n, d)`` as polynomials in ``u`` with ``self = n/d``."""
        if self.e >= 0:
            return self.num * _u_monomial(self.e), self.den
        return self.num, self.den * _u_monomial(-self.e)

    # arithmetic
    @staticmethod
    def _coerce(other) -> "Scalar":
        if isinstance(other, Scalar):
            return other
        if isinstance(other, (int, Fraction)):
            return Scalar(other)
        return NotImplemented

    def __add__(self, o):
        if type(o) is not Scalar:
            o = Scalar._coerce(o)
            if o is NotImplemented:
                return NotImplemented
        if o.num.is_zero():
            return self
        if self.num.is_zero():
            return o
        e = min(self.e, o.e)
        a = self.num if self.e == e else self.num * _u_monomial(self.e - e)
        b = o.num if o.e == e else o.num * _u_monomial(o.e - e)
        if self.den == o.den:
            num, den = a + b, self.den
            if den.is_one():
                if num.is_zero():
                    return ZERO
                if num[0] == 0:
                    v = _valuation(num)
                    return Scalar(num.right_shift(v), _ONE, e + v, _raw=True)
                return Scalar(num, _ONE, e, _raw=True)
        else:
            num, den = a * o.den + b * self.den, self.den * o.den
        if num.is_zero():
            return ZERO
        return Scalar(*_make(num, den, e), _raw=True)

    __radd__ = __add__

    def __neg__(self):
        return Scalar(-self.num, self.den, self.e, _raw=True)

    def __sub__(self, other):
        o = Scalar._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other):
        o = Scalar._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return o + (-self)

    def __mul__(self, o):
        if type(o) is not Scalar:
            o = Scalar._coerce(o)
            if o is NotImplemented:
                return NotImplemented
        if self.num.is_zero() or o.num.is_zero():
            return ZERO
        e = self.e + o.e
        if self.den.is_one() and o.den.is_one():
            return Scalar(self.num * o.num, _ONE, e, _raw=True)
        return Scalar(*_make(self.num * o.num, self.den * o.den, e), _raw=True)

    __rmul__ = __mul__

    def inverse(self) -> "Scalar":
        if self.num.is_zero():
            raise ZeroDivisionError("inverse of zero")
        num, den = self.den, self.num
        if den.leading_coefficient() < 0:
            num, den = -num, -den
        return Scalar(num, den, -self.e, _raw=True)

    def __truediv__(self, other):
        o = Scalar._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return self * o.inverse()

    def __rtruediv__(self, other):
        o = Scalar._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return o * self.inverse()

    def __pow__(self, k: int):
        if not isinstance(k, int):
            return NotImplemented
        if k < 0:
            return self.inverse() ** (-k)
        if k == 0:
            return ONE
        return Scalar(self.num**k, self.den**k, self.e * k, _raw=True)

    def __eq__(self, other):
        o = other if type(other) is Scalar else Scalar._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return self.e == o.e and self.num == o.num and self.den == o.den

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((str(self.num), str(self.den), self.e))
        return self._hash

    def __repr__(self):
        n, d = self.numerator_denominator()
        if d.is_one():
            return f"Scalar({n.str(var='u')})"
        return f"Scalar(({n.str(var='u')})/({d.str(var='u')}))"

    # substitutions
    def invert_q(self) -> "Scalar":
        """Image under ``u -> 1/u`` (equivalently ``q -> 1/q``)."""
        if self.num.is_zero():
            return self
        num = flint.fmpz_poly(list(reversed(self.num.coeffs())))
        den = flint.fmpz_poly(list(reversed(self.den.coeffs())))
        e = -self.e - self.num.degree() + self.den.degree()
        return Scalar(*_make(num, den, e), _raw=True)

    # numerics
    def eval_u(self, u0):
        """Evaluate at ``u = u0`` (any mpmath-compatible number)."""
        with mpmath.workdps(50):
            u0 = mpmath.mpmathify(u0)
            d = mpmath.polyval([int(c) for c in reversed(self.den.coeffs())], u0)
            if d == 0:
                raise PoleError("pole at the requested point")
            n = mpmath.polyval([int(c) for c in reversed(self.num.coeffs())] or [0], u0)
            return n / d * u0**self.e

    def eval(self, q0) -> float:
        return eval_numeric(self, q0)


ZERO = Scalar(0)
ONE = Scalar(1)


def as_scalar(x: Number) -> Scalar:
    return x if isinstance(x, Scalar) else Scalar(x)


def q_pow(e) -> Scalar:
    return Scalar.q_pow(e)


Q = Scalar.q_pow(1)


def eval_numeric(s: Scalar, q0) -> float:
    """Evaluate ``s`` at the numeric deformation parameter ``q0``."""
    q0 = float(q0)
    if q0 <= 0:
        raise ValueError("q must be positive")
    if q0 == 1.0:
        raise ValueError("q = 1 excluded")
    with mpmath.workdps(50):
        u0 = mpmath.root(mpmath.mpf(q0), ROOT_ORDER)
        return float(s.eval_u(u0))


def q_number(l: int, z: Scalar) -> Scalar:
    """``(z**l - 1)/(z - 1)``; equals ``l`` at ``z = 1``."""
    z = as_scalar(z)
    if z == ONE:
        return Scalar(l)
    return (z**l - ONE) / (z - ONE)


def q_factorial(l: int, z: Scalar) -> Scalar:
    out = ONE
    for j in range(1, l + 1):
        out = out * q_number(j, z)
    return out


def q_number_half(twice_l: int, z: Scalar) -> Scalar:
    """``l_z`` for half-integer ``l = twice_l/2``; needs ``z`` a square in Q(u)."""
    w = sqrt_monomial(z)
    return (w**twice_l - ONE) / (z - ONE)


def sqrt_monomial(z: Scalar) -> Scalar:
    """Square root of a monomial ``u**(2k)``."""
    if not (z.den.is_one() and z.num.is_one()) or z.e % 2:
        raise ValueError("not an even power of u")
    return Scalar.u_pow(z.e // 2)


@dataclass(frozen=True)
class StructureConstants:
    """Index set, ``rho`` vector and short-hand constants for a given N."""

    N: int
    n: int = field(init=False)
    indices: tuple = field(init=False)
    rho: dict = field(init=False)
    k: Scalar = field(init=False)
    mu: Scalar = field(init=False)
    mubar: Scalar = field(init=False)

    def __post_init__(self):
        N = self.N
        if N < 3:
            raise ValueError("N must be at least 3")
        n = N // 2
        idx = list(range(-n, 0)) + ([0] if N % 2 else []) + list(range(1, n + 1))
        # listed in index order -n..n, descending from N/2 - 1
        top = [Fraction(N, 2) - 1 - j for j in range(n)]
        vals = top + ([Fraction(0)] if N % 2 else []) + [-v for v in reversed(top)]
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "indices", tuple(idx))
        object.__setattr__(self, "rho", dict(zip(idx, vals)))
        object.__setattr__(self, "k", Q - Q.inverse())
        object.__setattr__(self, "mu", ONE + q_pow(2 - N))
        object.__setattr__(self, "mubar", ONE + q_pow(N - 2))


@lru_cache(maxsize=None)
def structure_constants(N: int) -> StructureConstants:
    return StructureConstants(N)
