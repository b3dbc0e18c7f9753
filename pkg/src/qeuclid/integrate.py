"""Integration over the quantum Euclidean space with radial measures.

Functions are sums of terms ``c * r^s * prod_n phi_n(q^{j_n} r) * x^X``: exact
harmonic data times products of dilated radial profiles.  Derivatives act on
profiles through the q-difference that extends the rule for ``r^s``, so the
calculus acts exactly on these functions and only the final radial integral
is numeric (or an exact lattice sum).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional

import numpy as np
from scipy import integrate as sp_integrate

from . import algebra as A
from . import rmat
from .coeff import ONE, ZERO, Q, Scalar, q_pow, structure_constants
from .harmonic import (
    HarmonicElement,
    _poly_mul,
    decompose_polynomial,
    function_space,
    harmonic_polynomial,
    spherical_gram,
    x_monomial,
)


class DivergenceError(ArithmeticError):
    """The radial integral does not converge; ``tail`` names the failing end."""

    def __init__(self, tail: str, msg: str = ""):
        self.tail = tail
        super().__init__(msg or f"integral diverges at {tail}")


# measures


@dataclass(frozen=True)
class RadialMeasure:
    """``dr m(r)`` with ``m(qr) = m(r)``.

    ``variant`` is ``"lebesgue"`` (m = 1), ``"jackson"`` (lattice ``r0 q^n``,
    ``r0 = 1`` or ``q^{1/2}``) or ``"fourier"`` (``m`` periodic in ``log r``
    with period ``|log q|`` and real even coefficients ``m_k``).
    """

    variant: str
    r0: str = "1"
    coeffs: tuple = ()

    @staticmethod
    def lebesgue() -> "RadialMeasure":
        return RadialMeasure("lebesgue")

    @staticmethod
    def jackson(r0: str = "1") -> "RadialMeasure":
        if r0 not in ("1", "sqrt_q"):
            raise ValueError("r0 must be '1' or 'sqrt_q'")
        return RadialMeasure("jackson", r0=r0)

    @staticmethod
    def fourier(coeffs: dict) -> "RadialMeasure":
        """``coeffs`` maps ``k >= 0`` to real ``m_k``; ``m_{-k} = m_k`` is implied."""
        for k, v in coeffs.items():
            if k < 0 or not np.isreal(v):
                raise ValueError("fourier coefficients are given for k >= 0 and must be real")
        return RadialMeasure("fourier", coeffs=tuple(sorted((int(k), float(v)) for k, v in coeffs.items())))

    def lattice_origin(self, q0: float) -> float:
        return 1.0 if self.r0 == "1" else math.sqrt(q0)

    def weight(self, r: float, q0: float) -> float:
        """Density of a continuous measure at ``r``."""
        if self.variant == "lebesgue":
            return 1.0
        if self.variant == "fourier":
            y = math.log(r)
            period = abs(math.log(q0))
            out = 0.0
            for k, mk in self.coeffs:
                out += mk if k == 0 else 2.0 * mk * math.cos(2 * math.pi * k * y / period)
            return out
        raise ValueError("the jackson measure has no density")


# radial profiles


@dataclass(frozen=True)
class RadialProfile:
    """A named closure on ``(0, inf)``; ``exact`` maps Fractions to Fractions when given."""

    name: str
    func: Callable[[float], float]
    exact: Optional[Callable[[Fraction], Fraction]] = None


def gaussian_profile(a: float = 1.0) -> RadialProfile:
    return RadialProfile(f"gauss({a})", lambda r: math.exp(-a * r * r))


def rational_profile(k: int = 3) -> RadialProfile:
    """``(1 + r^2)^{-k}``, exact on rational points."""
    return RadialProfile(
        f"lorentz({k})", lambda r: (1.0 + r * r) ** (-k), lambda r: Fraction(1) / (1 + r * r) ** k
    )


def _shift(P, t):
    return tuple((name, j + t) for name, j in P)


def _merge(P1, P2):
    return tuple(sorted(P1 + P2))


class ProfiledFunction:
    """Sum of ``c r^s prod phi(q^j r) x^X xi^Xi`` with exact coefficients.

    ``terms`` maps ``(s, P, X, Xi)`` to a Scalar where ``P`` is a sorted tuple
    of ``(profile name, j)``; ``profiles`` resolves the names.
    """

    def __init__(self, N: int, terms: dict, profiles: dict):
        self.N = N
        self.terms = {k: v for k, v in terms.items() if v}
        self.profiles = dict(profiles)

    @staticmethod
    def from_harmonic(h: HarmonicElement, profile: Optional[RadialProfile] = None) -> "ProfiledFunction":
        P = ((profile.name, 0),) if profile else ()
        profiles = {profile.name: profile} if profile else {}
        return ProfiledFunction(h.N, {(s, P, X, Xi): c for (s, X, Xi), c in h.terms.items()}, profiles)

    @staticmethod
    def monomial(N: int, X, profile: Optional[RadialProfile] = None, s: int = 0) -> "ProfiledFunction":
        """``r^s phi(r) x^X`` with ``X`` normal-ordered."""
        P = ((profile.name, 0),) if profile else ()
        profiles = {profile.name: profile} if profile else {}
        return ProfiledFunction(N, {(s, P, w, ()): c for w, c in x_monomial(N, tuple(X)).items()}, profiles)

    def _new(self, terms, extra_profiles=None):
        prof = dict(self.profiles)
        if extra_profiles:
            prof.update(extra_profiles)
        return ProfiledFunction(self.N, terms, prof)

    def __add__(self, other: "ProfiledFunction") -> "ProfiledFunction":
        out = dict(self.terms)
        for k, v in other.terms.items():
            A._acc(out, k, v)
        return self._new(out, other.profiles)

    def __sub__(self, other):
        return self + other.scale(-ONE)

    def scale(self, c) -> "ProfiledFunction":
        c = c if isinstance(c, Scalar) else Scalar(c)
        return self._new({k: v * c for k, v in self.terms.items()})

    def is_zero(self) -> bool:
        return not self.terms

    def __mul__(self, other: "ProfiledFunction") -> "ProfiledFunction":
        """Pointwise product of two functions (no form part)."""
        if any(Xi for (_, _, _, Xi) in self.terms) or any(Xi for (_, _, _, Xi) in other.terms):
            raise ValueError("products are defined on functions only")
        out = {}
        for (s1, P1, X1, _), c1 in self.terms.items():
            for (s2, P2, X2, _), c2 in other.terms.items():
                for X, c in _poly_mul(self.N, {X1: ONE}, {X2: ONE}).items():
                    A._acc(out, (s1 + s2, _merge(P1, P2), X, ()), c1 * c2 * c)
        return self._new(out, other.profiles)

    def conjugate(self) -> "ProfiledFunction":
        """``f^*`` for real q and real profiles, from ``x^{j*} = g_{-j j} x^{-j}``."""
        g, _ = rmat.metric(self.N)
        out = {}
        for (s, P, X, Xi), c in self.terms.items():
            if Xi:
                raise ValueError("conjugation is implemented on functions only")
            coef = c
            for j in X:
                coef = coef * g[(-j, j)]
            for w, c2 in _poly_mul(self.N, {(): ONE}, {tuple(-j for j in reversed(X)): ONE}).items():
                A._acc(out, (s, P, w, ()), coef * c2)
        return self._new(out)

    # the calculus
    def _fock(self, letter_word, terms, coef, shift):
        fs = function_space(self.N)
        out = {}
        for (s, P, X, Xi), c in terms.items():
            f = coef(s)
            P2 = _shift(P, shift)
            for (X2, Xi2), c2 in fs.fock.act_word(letter_word, (X, Xi)).items():
                A._acc(out, (s, P2, X2, Xi2), c * f * c2)
        return out

    def _letter(self, kind, i, terms):
        fs = function_space(self.N)
        if kind == A.X_:
            return self._fock(((i,), (), (), 0), terms, lambda s: ONE, 0)
        if kind == A.XI_:
            t = Fraction(fs.xi_r.e, 16)
            if t.denominator != 1 or not fs.xi_r.is_monomial():
                raise ValueError("xi does not dilate r by an integer power of q")
            return self._fock(((), (i,), (), 0), terms, lambda s: fs.xi_r**s, int(t))
        if kind == A.L_:
            return self._fock(((), (), (), i), terms, lambda s: q_pow(-s * i), -i)
        # d_a G(r) = mu/(1+q) x_a (G(qr) - G(r)) / ((q-1) r^2) + G(qr) d_a
        out = self._fock(((), (), (i,), 0), terms, lambda s: Q**s, 1)
        xa = -i
        pref = fs.mu / ((ONE + Q) * (Q - ONE)) * fs.g[(i, xa)]
        lowered = {}
        for (s, P, X, Xi), c in terms.items():
            A._acc(lowered, (s - 2, _shift(P, 1), X, Xi), c * pref * Q**s)
            A._acc(lowered, (s - 2, P, X, Xi), -c * pref)
        for k, v in self._fock(((xa,), (), (), 0), lowered, lambda s: ONE, 0).items():
            A._acc(out, k, v)
        return out

    def act(self, e: A.NCElement) -> "ProfiledFunction":
        """Apply a normal-ordered element, rightmost letters first."""
        total = {}
        for w, c in e.terms.items():
            cur = {k: v * c for k, v in self.terms.items()}
            for kind, i in reversed(A.word_letters(w)):
                cur = self._letter(kind, i, cur)
                if not cur:
                    break
            for k, v in cur.items():
                A._acc(total, k, v)
        return self._new(total)

    # angular projection
    def radial_part(self) -> dict:
        """Level-0 part ``{(s, P): Scalar}`` of the function (form part discarded)."""
        grouped = {}
        for (s, P, X, Xi), c in self.terms.items():
            if Xi:
                continue
            A._acc(grouped.setdefault((s, P), {}), X, c)
        out = {}
        for (s, P), poly in grouped.items():
            for k, H in decompose_polynomial(self.N, poly).items():
                c = H.get(())
                if c:
                    A._acc(out, (s + 2 * k, P), c)
        return out


def angular_projection(f) -> dict:
    """Level-0 radial part of a HarmonicElement as a Laurent polynomial ``{s: Scalar}``."""
    if isinstance(f, HarmonicElement):
        out = {}
        for (s, X, Xi), c in f.terms.items():
            if not X and not Xi:
                A._acc(out, s, c)
        return out
    return f.radial_part()


# evaluation helpers


def _profile_value(profiles, P, r, q0):
    v = 1.0
    for name, j in P:
        v *= profiles[name].func(r * q0**j)
    return v


def radial_evaluator(f: ProfiledFunction, q0: float) -> Callable[[float], float]:
    part = f.radial_part()
    coeffs = [(s, P, c.eval(q0)) for (s, P), c in part.items()]
    prof = f.profiles

    def f0(r):
        return sum(c * r**s * _profile_value(prof, P, r, q0) for s, P, c in coeffs)

    return f0


def _rational_root(x: Fraction, k: int) -> Optional[Fraction]:
    def iroot(n):
        if n < 0:
            return None
        r = round(n ** (1.0 / k))
        for c in (r - 1, r, r + 1):
            if c >= 0 and c**k == n:
                return c
        return None

    a, b = iroot(x.numerator), iroot(x.denominator)
    return None if a is None or b is None else Fraction(a, b)


def scalar_at_rational(s: Scalar, q0: Fraction) -> Fraction:
    """Exact value of ``s`` at a rational q, when the needed root of q0 is rational."""
    if not s:
        return Fraction(0)
    n, d = s.numerator_denominator()
    g = 16
    for p in (n, d):
        for e, c in enumerate(p.coeffs()):
            if c:
                g = math.gcd(g, e)
    v0 = _rational_root(Fraction(q0), 16 // g)
    if v0 is None:
        raise ValueError(f"q0^({g}/16) is not rational")
    num = sum(Fraction(int(c)) * v0 ** (e // g) for e, c in enumerate(n.coeffs()) if c)
    den = sum(Fraction(int(c)) * v0 ** (e // g) for e, c in enumerate(d.coeffs()) if c)
    return num / den


# integrals


@dataclass
class IntegrationResult:
    value: float
    error: float
    window: tuple = ()


def _jackson_sum(term, tol, max_steps=20000):
    """Sum ``term(n)`` over all integers with geometric tail bounds."""
    total = term(0)
    err = 0.0
    window = [0, 0]
    for direction, tail in ((1, "n->+inf"), (-1, "n->-inf")):
        n = 0
        prev = abs(term(0))
        small = 0
        for step in range(1, max_steps + 1):
            n += direction
            t = term(n)
            total += t
            a = abs(t)
            if a <= tol * max(1.0, abs(total)):
                small += 1
                ratio = a / prev if prev else 0.0
                if small >= 8 and ratio < 0.999:
                    err += a * ratio / (1 - ratio) if ratio else 0.0
                    break
            else:
                small = 0
            prev = a
        else:
            raise DivergenceError(tail)
        if direction == 1:
            window[1] = n
        else:
            window[0] = n
    return total, err, tuple(window)


def _tail_window(integrand, tol, N):
    """Finite ``log r`` window outside which the integrand stays below ``tol``."""
    ends = []
    ymax = 600.0 / N
    for direction, tail in ((-1, "r->0"), (1, "r->inf")):
        y, quiet = 0.0, 0
        while quiet < 4:
            y += direction
            if abs(y) > ymax:
                raise DivergenceError(tail)
            v = abs(integrand(y))
            if not math.isfinite(v):
                raise DivergenceError(tail)
            quiet = quiet + 1 if v < tol * 1e-3 else 0
        ends.append(y)
    return ends[0], ends[1]


def _quad_chunks(integrand, lo, hi, tol):
    val, err = 0.0, 0.0
    edges = np.arange(math.floor(lo), math.ceil(hi) + 1.0)
    for a, b in zip(edges[:-1], edges[1:]):
        with warnings.catch_warnings():
            # roundoff warnings on chunks whose integral is numerically zero
            warnings.simplefilter("ignore", sp_integrate.IntegrationWarning)
            v, e = sp_integrate.quad(integrand, a, b, epsabs=tol * 1e-3, epsrel=1e-14, limit=200)
        val += v
        err += e
    return val, err


def integrate_q(f: ProfiledFunction, mu: RadialMeasure, q0: float, tol: float = 1e-12) -> IntegrationResult:
    """``int dr m(r) r^{N-1} f_0(r)``."""
    N = f.N
    part = f.radial_part()
    if not part:
        return IntegrationResult(0.0, 0.0)
    if all(P == () for (_, P) in part):
        raise DivergenceError("r->0 and r->inf", "Laurent monomials are not integrable over (0, inf)")
    f0 = radial_evaluator(f, q0)
    if mu.variant == "jackson":
        # r_n = r0 q^n: n -> +inf is r -> 0 for q < 1
        r0 = mu.lattice_origin(q0)
        scale = abs(q0 - 1)

        def term(n):
            r = r0 * q0**n
            return scale * r**N * f0(r)

        total, err, window = _jackson_sum(term, tol)
        if q0 > 1:
            window = window[::-1]
        return IntegrationResult(total, err, window)

    def integrand(y):
        try:
            r = math.exp(y)
            return math.exp(N * y) * mu.weight(r, q0) * f0(r)
        except (OverflowError, ZeroDivisionError):
            return math.inf

    lo, hi = _tail_window(integrand, tol, N)
    val, err = _quad_chunks(integrand, lo, hi, tol)
    return IntegrationResult(val, err)


def jackson_sum_exact(f: ProfiledFunction, q0: Fraction, window: tuple) -> Fraction:
    """``|q-1| sum_{n in window} r_n^N f_0(r_n)`` at ``r_n = q0^n`` in exact arithmetic."""
    q0 = Fraction(q0)
    part = f.radial_part()
    coeffs = [(s, P, scalar_at_rational(c, q0)) for (s, P), c in part.items()]
    total = Fraction(0)
    for n in range(window[0], window[1] + 1):
        r = q0**n
        v = Fraction(0)
        for s, P, c in coeffs:
            w = c * r**s
            for name, j in P:
                ex = f.profiles[name].exact
                if ex is None:
                    raise ValueError(f"profile {name} has no exact evaluation")
                w *= ex(r * q0**j)
            v += w
        total += r ** f.N * v
    return abs(q0 - 1) * total


def check_dilatation_invariance(f: ProfiledFunction, q0: Fraction, window=(-30, 30)) -> bool:
    """Exact lattice identity ``int q^N (Lambda^{-1} f) = int f`` on matching windows.

    ``Lambda^{-1} f`` sampled at ``q^n`` is ``f`` at ``q^{n+1}``, so the dilated
    integrand over ``[a-1, b-1]`` equals the original one over ``[a, b]``.
    """
    dil = f.act(A.lam(f.N, -1)).scale(q_pow(f.N))
    lhs = jackson_sum_exact(dil, q0, (window[0] - 1, window[1] - 1))
    rhs = jackson_sum_exact(f, q0, window)
    return lhs == rhs


# Stokes and scalar products


def verify_stokes(f: ProfiledFunction, mu: RadialMeasure, q0: float, tol: float = 1e-8) -> dict:
    """``int d_i f`` and ``int hat d_i f`` for each i, with pass flags."""
    N = f.N
    out = {}
    for i in structure_constants(N).indices:
        for name, op in (("d", A.d(N, i)), ("d_hat", A.d_hat(N, i))):
            res = integrate_q(f.act(op), mu, q0)
            out[(name, i)] = (abs(res.value), abs(res.value) <= tol)
    return out


def naive_scalar_product(phi: ProfiledFunction, psi: ProfiledFunction, mu: RadialMeasure, q0: float) -> float:
    """``<phi, psi> = int phi^* psi``."""
    return integrate_q(phi.conjugate() * psi, mu, q0).value


def reduced_scalar_product(
    phi: Callable[[float], float], psi: Callable[[float], float], mu: RadialMeasure, q0: float, N: int, form: str = "r"
) -> float:
    """``int dr r^{N-1} m(r) phi(r) psi(r)``, or its ``y = log r`` form."""
    if mu.variant == "jackson":
        r0 = mu.lattice_origin(q0)
        total, _, _ = _jackson_sum(lambda n: abs(q0 - 1) * (r0 * q0**n) ** N * phi(r0 * q0**n) * psi(r0 * q0**n), 1e-14)
        return total
    if form == "r":
        val, _ = sp_integrate.quad(
            lambda r: r ** (N - 1) * mu.weight(r, q0) * phi(r) * psi(r), 0, np.inf, epsabs=1e-13, epsrel=1e-13, limit=400
        )
        return val

    def integrand(y):
        try:
            r = math.exp(y)
            return math.exp(N * y) * mu.weight(r, q0) * phi(r) * psi(r)
        except (OverflowError, ZeroDivisionError):
            return math.inf

    lo, hi = _tail_window(integrand, 1e-14, N)
    val, _ = _quad_chunks(integrand, lo, hi, 1e-14)
    return val


@dataclass
class WaveFunction:
    """``sum_{l, I} r^{-l} X_l^I phi_{l,I}(r)`` with real radial closures."""

    N: int
    components: dict = field(default_factory=dict)

    def to_profiled(self) -> ProfiledFunction:
        total = ProfiledFunction(self.N, {}, {})
        for (l, I), prof in self.components.items():
            terms = {(-l, ((prof.name, 0),), X, ()): c for X, c in harmonic_polynomial(self.N, tuple(I)).items()}
            total = total + ProfiledFunction(self.N, terms, {prof.name: prof})
        return total


def scalar_product_by_levels(phi: WaveFunction, psi: WaveFunction, mu: RadialMeasure, q0: float) -> float:
    """``sum_l sum_{I,J} G^l_{IJ} <phi_{l,I}, psi_{l,J}>'`` with the angular Gram matrix ``G``."""
    N = phi.N
    total = 0.0
    for (l, I), p1 in phi.components.items():
        for (lp, J), p2 in psi.components.items():
            if l != lp:
                continue
            G = spherical_gram(N, l, l)
            gij = G.get((tuple(I), tuple(J)), ZERO)
            if gij:
                total += gij.eval(q0) * reduced_scalar_product(p1.func, p2.func, mu, q0, N)
    return total


def real_basis(N: int, q0: float) -> dict:
    """``V^alpha_i`` with ``x^alpha = V^alpha_i x^i`` real, as ``{alpha: {i: complex}}``."""
    g, _ = rmat.metric(N)
    n = N // 2
    out = {}
    if N % 2:
        out[0] = {0: 1.0 + 0j}
    r2 = math.sqrt(2.0)
    for h in range(1, n + 1):
        gh = g[(-h, h)].eval(q0)
        out[2 * h - 1] = {h: 1 / r2 + 0j, -h: gh / r2 + 0j}
        out[2 * h] = {h: -1j / r2, -h: 1j * gh / r2}
    return out


def verify_adjointness(phi: ProfiledFunction, psi: ProfiledFunction, mu: RadialMeasure, q0: float) -> dict:
    """Adjoint of ``p^alpha = -i V^alpha_i d^i`` against ``hat p^alpha = -i V^alpha_i hat d^i``.

    Returns ``{alpha: (residual, literal_residual)}`` where ``residual`` compares
    ``<phi, p^alpha psi>`` with ``q^{-N} <hat p^alpha phi, psi>`` (the
    normalisation implied by ``d^{i*} = -q^{-N} hat d^j g_{ji}``) and
    ``literal_residual`` drops the ``q^{-N}``.
    """
    N = phi.N
    idx = structure_constants(N).indices
    plain = {i: naive_scalar_product(phi, psi.act(A.d_up(N, i)), mu, q0) for i in idx}
    hatted = {i: naive_scalar_product(phi.act(A.d_hat_up(N, i)), psi, mu, q0) for i in idx}
    out = {}
    for alpha, V in real_basis(N, q0).items():
        lhs = sum(-1j * v * plain[i] for i, v in V.items())
        rhs = sum(np.conj(-1j * v) * hatted[i] for i, v in V.items())
        out[alpha] = (abs(lhs - q0 ** (-N) * rhs), abs(lhs - rhs))
    return out
