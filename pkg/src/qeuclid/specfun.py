"""q-Pochhammer symbols, basic hypergeometric series and q-exponentials.

Series are truncated power series in ``z``; coefficients are exact Scalars when
the parameters are Scalars and mpmath numbers otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import mpmath

from .coeff import ONE, ZERO, Scalar, as_scalar, q_number

Num = Union[Scalar, int, float, complex, "mpmath.mpf", "mpmath.mpc"]

DEFAULT_ORDER = 40
DPS = 40


class ParameterPoleError(ZeroDivisionError):
    """A lower parameter makes a series coefficient singular."""


class SeriesDivergence(ArithmeticError):
    """An infinite product or series does not converge."""


def _is_exact(*xs) -> bool:
    return all(isinstance(x, (Scalar, int)) for x in xs)


def _one(exact):
    return ONE if exact else mpmath.mpf(1)


def _zero(exact):
    return ZERO if exact else mpmath.mpf(0)


def _num(x, exact):
    if exact:
        return as_scalar(x)
    return mpmath.mpmathify(x)


def q_pochhammer(a: Num, q: Num, n) -> Num:
    """``(a; q)_n = prod_{i<n} (1 - a q^i)``; ``n = math.inf`` needs ``|q| < 1``."""
    if n == math.inf:
        with mpmath.workdps(DPS):
            a, q = mpmath.mpmathify(a), mpmath.mpmathify(q)
            if abs(q) >= 1:
                raise SeriesDivergence("(a; q)_inf needs |q| < 1")
            return mpmath.qp(a, q)
    exact = _is_exact(a, q)
    a, q = _num(a, exact), _num(q, exact)
    out = _one(exact)
    qi = _one(exact)
    for _ in range(int(n)):
        out = out * (_one(exact) - a * qi)
        qi = qi * q
    return out


def q_pochhammer_partial(a: float, q: float, n: int) -> float:
    """Finite product evaluated in floating point, for cross-checks."""
    out = 1.0
    for i in range(n):
        out *= 1.0 - a * q**i
    return out


@dataclass
class QSeries:
    """``sum_n coeffs[n] z^n`` truncated at order ``len(coeffs) - 1``."""

    coeffs: list
    base: Num = None
    params: dict = field(default_factory=dict)

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    def __call__(self, z) -> Num:
        with mpmath.workdps(DPS):
            z = mpmath.mpmathify(z)
            return mpmath.fsum(_numeric(c) * z**n for n, c in enumerate(self.coeffs))

    def evaluate(self, z, q0=None):
        """Numeric value; Scalar coefficients are evaluated at ``q0``."""
        with mpmath.workdps(DPS):
            z = mpmath.mpmathify(z)
            vals = [c.eval(q0) if isinstance(c, Scalar) else c for c in self.coeffs]
            return mpmath.fsum(mpmath.mpmathify(c) * z**n for n, c in enumerate(vals))

    def tail_estimate(self, z, q0=None) -> float:
        """Size of the last retained term times the geometric factor of the last two."""
        vals = [abs(complex(c.eval(q0) if isinstance(c, Scalar) else c)) for c in self.coeffs[-2:]]
        az = abs(complex(z))
        last = vals[-1] * az ** self.order
        if len(vals) < 2 or vals[0] == 0:
            return last
        ratio = vals[1] / vals[0] * az
        return last * ratio / (1 - ratio) if ratio < 1 else math.inf

    def __sub__(self, other: "QSeries") -> "QSeries":
        n = min(len(self.coeffs), len(other.coeffs))
        return QSeries([self.coeffs[i] - other.coeffs[i] for i in range(n)], self.base)

    def scale_argument(self, c) -> "QSeries":
        """Series of ``f(c z)``."""
        out, cn = [], None
        for n, a in enumerate(self.coeffs):
            cn = (ONE if isinstance(a, Scalar) else 1) if n == 0 else cn * c
            out.append(a * cn)
        return QSeries(out, self.base)

    def is_zero(self) -> bool:
        return all((not c) if isinstance(c, Scalar) else c == 0 for c in self.coeffs)


def _numeric(c):
    if isinstance(c, Scalar):
        raise TypeError("exact coefficients need q0; use evaluate")
    return mpmath.mpmathify(c)


def basic_hypergeometric(
    a: Sequence[Num], b: Sequence[Num], q: Num, M: int = DEFAULT_ORDER
) -> QSeries:
    """Coefficients of ``_r phi_s(a; b; q, z)`` including ``((-1)^n q^{n(n-1)/2})^{1+s-r}``."""
    r, s = len(a), len(b)
    exact = _is_exact(q, *a, *b)
    q = _num(q, exact)
    a = [_num(x, exact) for x in a]
    b = [_num(x, exact) for x in b]
    power = 1 + s - r
    out = []
    num = _one(exact)
    den = _one(exact)
    qn = _one(exact)  # q^n
    for n in range(M + 1):
        if n:
            for x in a:
                num = num * (_one(exact) - x * qn / q)
            for x in b:
                den = den * (_one(exact) - x * qn / q)
            den = den * (_one(exact) - qn)
        if (not den) if exact else den == 0:
            raise ParameterPoleError(f"lower parameter pole at n = {n}")
        c = num / den
        if power:
            sign = -1 if n % 2 else 1
            c = c * ((q ** (n * (n - 1) // 2)) * sign) ** power
        out.append(c)
        qn = qn * q
    return QSeries(out, q, {"a": a, "b": b})


def product_series(a: Num, q: Num, M: int = DEFAULT_ORDER) -> QSeries:
    """Power series of ``(a z; q)_inf / (z; q)_inf``, i.e. ``sum (a; q)_n z^n / (q; q)_n``.

    With ``a = 0`` this is ``1/(z; q)_inf``, the series written ``_0phi_0(q, z)``
    in the product identities and in the q-exponential.
    """
    return basic_hypergeometric([a], [], q, M)


def phi00(q: Num, M: int = DEFAULT_ORDER) -> QSeries:
    """``sum z^n/(q; q)_n = 1/(z; q)_inf`` (the product form of ``_0phi_0``)."""
    exact = _is_exact(q)
    return product_series(_zero(exact), q, M)


def satisfies_product_equation(series: QSeries, a: Num, q: Num) -> bool:
    """Exact check of ``(1 - z) F(z) = (1 - a z) F(q z)`` with ``F(0) = 1``.

    The infinite product ``(a z; q)_inf/(z; q)_inf`` is the unique power series
    with these properties, so this verifies the product identity coefficientwise
    without summing the series.
    """
    c = series.coeffs
    a, q = as_scalar(a), as_scalar(q)
    if c[0] != ONE:
        return False
    for n in range(1, len(c)):
        lhs = c[n] - c[n - 1]
        rhs = q**n * c[n] - a * q ** (n - 1) * c[n - 1]
        if lhs != rhs:
            return False
    return True


def product_numeric(a: float, q: float, z: float, terms: int = 400) -> float:
    """Truncated ``prod_{i<terms} (1 - a z q^i)/(1 - z q^i)``."""
    with mpmath.workdps(DPS):
        a, q, z = mpmath.mpf(a), mpmath.mpf(q), mpmath.mpf(z)
        out = mpmath.mpf(1)
        for i in range(terms):
            out *= (1 - a * z * q**i) / (1 - z * q**i)
        return out


def hypergeometric_value(a, b, q, z, M: int = 200):
    """Numeric ``_r phi_s`` by direct summation (|z| inside the radius)."""
    with mpmath.workdps(DPS):
        ser = basic_hypergeometric([mpmath.mpmathify(x) for x in a], [mpmath.mpmathify(x) for x in b], mpmath.mpf(q), M)
        return ser(z)


def heine_rhs(a1, a2, b, q, z, M: int = 200):
    """Right side of the Heine transformation of ``_2phi_1(a1, a2; b; q, z)``.

    ``(a2; q)_inf (a1 z; q)_inf / ((b; q)_inf (z; q)_inf) * _2phi_1(b/a2, z; a1 z; q, a2)``.
    The series is summed with ``(b/a2; q)_n a2^n = prod_{i<n} (a2 - b q^i)``,
    which is also its limit ``(-b)^n q^{n(n-1)/2}`` at ``a2 = 0``.
    """
    with mpmath.workdps(DPS):
        a1, a2, b, q, z = (mpmath.mpmathify(x) for x in (a1, a2, b, q, z))
        pref = mpmath.qp(a2, q) * mpmath.qp(a1 * z, q) / (mpmath.qp(b, q) * mpmath.qp(z, q))
        total = mpmath.mpf(0)
        zp = mpmath.mpf(1)  # (z; q)_n
        low = mpmath.mpf(1)  # (a1 z; q)_n (q; q)_n
        up = mpmath.mpf(1)  # (b/a2; q)_n a2^n
        for n in range(M + 1):
            if n:
                zp *= 1 - z * q ** (n - 1)
                low *= (1 - a1 * z * q ** (n - 1)) * (1 - q**n)
                up *= a2 - b * q ** (n - 1)
            total += up * zp / low
        return pref * total


def heine_lhs(a1, a2, b, q, z, M: int = 400):
    return hypergeometric_value([a1, a2], [b], q, z, M)


def eq_exponential(q: Num, M: int = DEFAULT_ORDER) -> QSeries:
    """``e_q(z) = sum z^l / (l)_q!`` with ``(l)_q = (q^l - 1)/(q - 1)``."""
    exact = _is_exact(q)
    q = _num(q, exact)
    out, fact = [], _one(exact)
    for l in range(M + 1):
        if l:
            fact = fact * (q_number(l, q) if exact else (q**l - 1) / (q - 1))
        out.append(_one(exact) / fact)
    return QSeries(out, q)


def phi_J(q: Num, J: int, M: int = DEFAULT_ORDER) -> QSeries:
    """``phi_q^J(z) = sum (-z)^l / [(l)_{q^2}! (l + J)_{q^2}!]``."""
    if J < 0 or int(J) != J:
        raise ValueError("J must be a non-negative integer")
    exact = _is_exact(q)
    q = _num(q, exact)
    q2 = q * q
    facts = [_one(exact)]
    for l in range(1, M + J + 1):
        facts.append(facts[-1] * (q_number(l, q2) if exact else (q2**l - 1) / (q2 - 1)))
    out = []
    for l in range(M + 1):
        sign = -1 if l % 2 else 1
        out.append(_one(exact) * sign / (facts[l] * facts[l + J]))
    return QSeries(out, q, {"J": J})


def q_factorial_value(l: int, q: Num) -> Num:
    exact = _is_exact(q)
    q = _num(q, exact)
    out = _one(exact)
    for k in range(1, l + 1):
        out = out * (q_number(k, q) if exact else (q**k - 1) / (q - 1))
    return out


def eq_as_phi00(q: Scalar, M: int = DEFAULT_ORDER) -> bool:
    """``e_q(z) = _0phi_0(q, (1 - q) z)`` coefficientwise."""
    q = as_scalar(q)
    return (eq_exponential(q, M) - phi00(q, M).scale_argument(ONE - q)).is_zero()


def phi_J_as_2phi1(q: Scalar, J: int, M: int = DEFAULT_ORDER, shift: int = 1) -> bool:
    """``phi_q^J(z) = _2phi_1(0, 0; q^{2(J + shift)}; q^2, -(1 - q^2)^2 z) / (J)_{q^2}!``.

    The coefficients agree for ``shift = 1``; ``shift = 0`` is the variant with
    lower parameter ``q^{2J}``.
    """
    q = as_scalar(q)
    q2 = q * q
    try:
        rhs = basic_hypergeometric([ZERO, ZERO], [q2 ** (J + shift)], q2, M)
    except ParameterPoleError:
        return False
    rhs = rhs.scale_argument(-((ONE - q2) ** 2))
    norm = ONE / q_factorial_value(J, q2)
    rhs = QSeries([c * norm for c in rhs.coeffs], q2)
    return (phi_J(q, J, M) - rhs).is_zero()


def q_gaussian(q: Scalar, M: int = DEFAULT_ORDER) -> QSeries:
    """``e_{q^2}[-r^2] = _0phi_0[q^2, (q^2 - 1) r^2]`` as a series in ``w = r^2``."""
    q = as_scalar(q)
    q2 = q * q
    return phi00(q2, M).scale_argument(q2 - ONE)


def q_gaussian_recursion_holds(q: Scalar, M: int = 20) -> bool:
    """``e_{q^2}[-q^2 r^2] = [1 - (q^2 - 1) r^2] e_{q^2}[-r^2]`` coefficientwise in ``r^2``."""
    q = as_scalar(q)
    q2 = q * q
    G = q_gaussian(q, M)
    lhs = G.scale_argument(q2)
    c = G.coeffs
    rhs = [c[0]] + [c[n] - (q2 - ONE) * c[n - 1] for n in range(1, len(c))]
    return all(lhs.coeffs[n] == rhs[n] for n in range(len(c)))


# pole lattices


@dataclass
class PoleLattice:
    z_poles: list
    radii: list
    phases: list
    on_lattice: bool
    offsets: list


def pole_lattice_of_product(c: float, q: float, gamma: int, kind: str = "q2", beta: float = 0.0, count: int = 8, tol: float = 1e-9) -> PoleLattice:
    """Poles of ``1/(c z; p)_inf`` with ``z = r^gamma`` and ``p = q^2`` (``kind="q2"``) or ``q``.

    The poles sit at ``c z = p^{-m}``, ``m >= 0``.  Membership in the lattice
    ``r = q^{j + beta} e^{i pi (2k+1)/gamma}`` requires ``z`` negative real with
    ``|z| in q^{gamma (Z + beta)}``; ``offsets`` records the distance of
    ``log|r|/log q - beta`` from the nearest integer.
    """
    if not 0 < abs(q) < 1:
        raise ValueError("needs 0 < |q| < 1")
    p = q * q if kind == "q2" else q
    zs, radii, phases, offsets = [], [], [], []
    ok = True
    for m in range(count):
        z = complex(p ** (-m) / c)
        zs.append(z)
        rad = abs(z) ** (1.0 / gamma)
        radii.append(rad)
        phases.append(math.atan2(z.imag, z.real) / gamma)
        x = math.log(rad) / math.log(abs(q)) - beta
        off = abs(x - round(x))
        offsets.append(off)
        if not (z.real < 0 and abs(z.imag) <= tol * abs(z)) or off > tol:
            ok = False
    return PoleLattice(zs, radii, phases, ok, offsets)
