"""Radial pseudodifferential operators in the Fourier picture of ``y = log r``.

Operators ``sigma = g(C) q^{a (eta' + b)^2}`` act on a radial profile as
Fourier multipliers on ``F(y) = e^{N y / 2} phi(e^y)``.  Two families of
profiles are supported:

* sampled profiles (``GridFunction``) for the Lebesgue measure, where the
  scalar product is Parseval's integral;
* meromorphic profiles with poles on a lattice (``PoleLatticeFunction``), whose
  spectra follow from residues and whose scalar products with periodic
  measures reduce to a matrix ``M`` sandwiched between residue vectors.
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, lru_cache
from typing import Callable, Optional

import numpy as np

from . import algebra as A
from . import rmat
from .coeff import ONE, Q, Scalar, q_factorial, q_number, q_pow, structure_constants
from .harmonic import (
    NU_TILDE,
    SigmaDescriptor,
    _spanning_indices,
    casimir_value,
    decompose_polynomial,
    harmonic_polynomial,
    spherical_gram,
    x_monomial,
)
from .integrate import (
    DivergenceError,
    ProfiledFunction,
    RadialMeasure,
    RadialProfile,
    _jackson_sum,
    _quad_chunks,
    _tail_window,
    real_basis,
)
from .specfun import pole_lattice_of_product

SQRT2PI = math.sqrt(2.0 * math.pi)
EXP_LIMIT = 700.0


class AliasingError(ValueError):
    """The sampling window or step does not resolve the function."""


class PoleOnContourError(ValueError):
    """A pole of the profile lies on the positive real axis."""


class TruncationError(ArithmeticError):
    """A series or quadrature did not reach its tolerance within its budget."""


class TailBoundError(ArithmeticError):
    """The exponential tail bound of a lattice sum cannot be met."""


def log_q(q0: float) -> float:
    q0 = float(q0)
    if q0 <= 0 or q0 == 1.0:
        raise ValueError("need q > 0, q != 1")
    return math.log(q0)


# sampled profiles


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Samples of ``F(y) = e^{N y/2} phi(e^y)`` on a uniform ``y`` grid.

    The weighted samples are stored because ``phi`` itself grows like
    ``e^{-N y/2}`` where ``F`` is negligible.  ``band`` optionally limits the
    spectrum to ``|omega| <= band``; multipliers leave the outside at zero.
    """

    N: int
    y_min: float
    dy: float
    weighted: np.ndarray
    band: Optional[float] = None

    @staticmethod
    def from_weighted(N, func, y_min=-40.0, y_max=40.0, n=2**14, band=None) -> "GridFunction":
        """Sample ``F(y)`` directly from a vectorised callable."""
        y = np.linspace(y_min, y_max, n, endpoint=False)
        out = GridFunction(N, float(y_min), float(y[1] - y[0]), np.asarray(func(y), dtype=complex))
        return out.band_limited(band) if band else out

    @staticmethod
    def from_profile(N, func, y_min=-40.0, y_max=40.0, n=2**14, band=None) -> "GridFunction":
        """Sample a radial profile ``phi(r)`` (vectorised in ``r``)."""
        return GridFunction.from_weighted(N, lambda y: np.exp(N * y / 2) * func(np.exp(y)), y_min, y_max, n, band)

    @staticmethod
    def from_spectrum(N, y_min, dy, spectrum, band=None) -> "GridFunction":
        spectrum = np.asarray(spectrum, dtype=complex)
        n = spectrum.size
        omega = 2 * np.pi * np.fft.fftfreq(n, dy)
        F = SQRT2PI / dy * np.fft.ifft(spectrum * np.exp(1j * omega * y_min))
        return GridFunction(N, y_min, dy, F, band)

    @property
    def n(self) -> int:
        return self.weighted.size

    @property
    def y(self) -> np.ndarray:
        return self.y_min + self.dy * np.arange(self.n)

    @property
    def y_max(self) -> float:
        return self.y_min + self.dy * self.n

    @property
    def samples(self) -> np.ndarray:
        """``phi(e^y)`` on the grid."""
        with np.errstate(over="ignore"):
            return self.weighted * np.exp(-self.N * self.y / 2)

    @property
    def omega(self) -> np.ndarray:
        return 2 * np.pi * np.fft.fftfreq(self.n, self.dy)

    @property
    def d_omega(self) -> float:
        return 2 * np.pi / (self.n * self.dy)

    @cached_property
    def spectrum(self) -> np.ndarray:
        """``hat phi(omega_m) = dy/sqrt(2 pi) sum_k F(y_k) e^{-i omega_m y_k}``."""
        return self.dy / SQRT2PI * np.exp(-1j * self.omega * self.y_min) * np.fft.fft(self.weighted)

    def with_spectrum(self, spectrum) -> "GridFunction":
        return GridFunction.from_spectrum(self.N, self.y_min, self.dy, spectrum, self.band)

    def band_limited(self, band: float) -> "GridFunction":
        spec = np.where(np.abs(self.omega) <= band, self.spectrum, 0.0)
        out = GridFunction.from_spectrum(self.N, self.y_min, self.dy, spec, band)
        return out

    def aliasing_bound(self) -> float:
        """Relative size of the samples at the window edges and of the spectrum near Nyquist."""
        F = np.abs(self.weighted)
        peak = F.max()
        if peak == 0:
            return 0.0
        k = max(2, self.n // 200)
        edge = max(F[:k].max(), F[-k:].max()) / peak
        S = np.abs(self.spectrum)
        nyq = np.pi / self.dy
        tail = S[np.abs(self.omega) >= 0.9 * nyq]
        spec = tail.max() / S.max() if tail.size else 0.0
        return float(max(edge, spec))

    def check_window(self, tol: float = 1e-10) -> None:
        bound = self.aliasing_bound()
        if bound > tol:
            raise AliasingError(f"aliasing bound {bound:.2e} exceeds {tol:.1e}")

    def norm2(self) -> float:
        return float(np.sum(np.abs(self.weighted) ** 2) * self.dy)

    def inner(self, other: "GridFunction") -> complex:
        """``int dy conj(F) G``, the level-wise Lebesgue product."""
        self._same_grid(other)
        return complex(np.sum(np.conj(self.weighted) * other.weighted) * self.dy)

    def spectral_inner(self, other: "GridFunction", weight=None) -> complex:
        self._same_grid(other)
        w = 1.0 if weight is None else weight
        return complex(np.sum(np.conj(self.spectrum) * w * other.spectrum) * self.d_omega)

    def _same_grid(self, other):
        if self.n != other.n or self.y_min != other.y_min or self.dy != other.dy:
            raise ValueError("grid functions live on different grids")

    def shifted(self, t: float) -> "GridFunction":
        """``F(y + t)``, exact for band-limited samples."""
        return self.with_spectrum(self.spectrum * np.exp(1j * self.omega * t))

    def __add__(self, other: "GridFunction") -> "GridFunction":
        self._same_grid(other)
        return GridFunction(self.N, self.y_min, self.dy, self.weighted + other.weighted, self.band)

    def scale(self, c: complex) -> "GridFunction":
        return GridFunction(self.N, self.y_min, self.dy, c * self.weighted, self.band)

    def evaluate_weighted(self, y, rel: float = 1e-17) -> np.ndarray:
        """Spectral interpolant of ``F``; zero outside the window."""
        y = np.atleast_1d(np.asarray(y, dtype=float))
        spec = self.spectrum
        keep = np.abs(spec) > rel * np.abs(spec).max() if spec.any() else np.zeros(spec.shape, bool)
        om, sp = self.omega[keep], spec[keep]
        out = np.zeros(y.shape, dtype=complex)
        inside = (y >= self.y_min) & (y <= self.y_max - self.dy)
        if inside.any():
            out[inside] = self.d_omega / SQRT2PI * (np.exp(1j * np.outer(y[inside], om)) @ sp)
        return out

    def as_profile(self, name: str) -> RadialProfile:
        """Real part of the interpolated ``phi(r)``; vanishes outside the window."""
        N = self.N

        def func(r):
            y = math.log(r)
            return float((self.evaluate_weighted([y])[0] * math.exp(-N * y / 2)).real)

        return RadialProfile(name, func)


def fourier_transform(phi: GridFunction, tol: float = 1e-10):
    """``(omega, hat phi)`` after the window check."""
    phi.check_window(tol)
    return phi.omega, phi.spectrum


def inverse_fourier_transform(N, y_min, dy, spectrum) -> GridFunction:
    return GridFunction.from_spectrum(N, y_min, dy, spectrum)


def parseval_residual(phi: GridFunction) -> float:
    lhs = phi.norm2()
    rhs = float(np.sum(np.abs(phi.spectrum) ** 2) * phi.d_omega)
    return abs(lhs - rhs) / max(lhs, 1e-300)


def gaussian_grid(N, center=0.0, width=1.0, amplitude=1.0, shift_omega=0.0, **grid) -> GridFunction:
    """``F(y) = A exp(-(y - c)^2 / (2 s^2)) e^{i w0 y}``; its spectrum is Gaussian too."""

    def F(y):
        return amplitude * np.exp(-((y - center) ** 2) / (2 * width**2) + 1j * shift_omega * y)

    return GridFunction.from_weighted(N, F, **grid)


def gaussian_spectrum(omega, center=0.0, width=1.0, amplitude=1.0):
    """Closed-form transform of the real Gaussian of ``gaussian_grid``."""
    return amplitude * width * np.exp(-(width**2) * omega**2 / 2 - 1j * omega * center)


# sigma operators as multipliers


def channel_factor(sigma: SigmaDescriptor, N: int, l: int, q0: float) -> float:
    C = casimir_value(N, l)
    out = float(q0) ** float(-sigma.c * C)
    if sigma.g is not None:
        out *= sigma.g(C).eval(q0)
    return out


def sigma_multiplier(sigma: SigmaDescriptor, omega, N: int, l: int, q0: float) -> np.ndarray:
    """``g[l(l+N-2)] q^{-c l(l+N-2)} q^{-a (omega + i b)^2}`` (complex ``omega`` allowed)."""
    h = log_q(q0)
    a, b = float(sigma.a), float(sigma.b)
    omega = np.asarray(omega, dtype=complex)
    z = -a * h * (omega + 1j * b) ** 2
    if z.size and np.max(z.real) > EXP_LIMIT:
        raise OverflowError("multiplier growth exceeds the float range on this spectral window")
    return channel_factor(sigma, N, l, q0) * np.exp(z)


def adjoint_sigma(sigma: SigmaDescriptor) -> SigmaDescriptor:
    """``sigma^*``: the multiplier conjugated on real ``omega`` (``b -> -b``)."""
    return SigmaDescriptor(sigma.a, -sigma.b, sigma.c, sigma.g)


def apply_sigma_grid(sigma: SigmaDescriptor, phi: GridFunction, l: int, q0: float) -> GridFunction:
    """Pointwise multiplier on the spectrum; zero outside the band when one is set."""
    if sigma.a * log_q(q0) < 0:
        warnings.warn("q^{a eta'^2} grows on the spectrum (a h < 0)", RuntimeWarning, stacklevel=2)
    omega = phi.omega
    inside = np.ones(omega.shape, bool) if phi.band is None else np.abs(omega) <= phi.band
    mult = np.zeros(omega.shape, dtype=complex)
    mult[inside] = sigma_multiplier(sigma, omega[inside], phi.N, l, q0)
    return phi.with_spectrum(phi.spectrum * mult)


def apply_lambda_grid(phi: GridFunction, k: int, q0: float) -> GridFunction:
    """``Lambda^k phi(x) = phi(q^{-k} x)``: multiplier ``e^{k N h/2} e^{-i omega k h}``."""
    h = log_q(q0)
    return phi.with_spectrum(phi.spectrum * np.exp(k * phi.N * h / 2 - 1j * phi.omega * k * h))


def sigma_eigenvalue_numeric(sigma: SigmaDescriptor, N: int, l: int, m: int, q0: float) -> complex:
    """The multiplier continued to ``omega = -i (m + N/2)``."""
    return complex(sigma_multiplier(sigma, np.array([-1j * (m + N / 2)]), N, l, q0)[0])


# Lebesgue scalar products in sigma pictures


def inner_product_m1(phi_s: GridFunction, psi_s: GridFunction, sigma: SigmaDescriptor, l: int, q0: float, tol=1e-12) -> complex:
    """``<phi^[sigma], psi^[sigma]>^[sigma]`` as a weighted spectral integral.

    The weight is ``|multiplier|^{-2} = g^{-2} q^{2 c C} q^{2 a omega^2 - 2 a b^2}``.
    """
    h = log_q(q0)
    a, b = float(sigma.a), float(sigma.b)
    om = phi_s.omega
    bands = [f.band for f in (phi_s, psi_s) if f.band is not None]
    inside = np.abs(om) <= min(bands) if bands else np.ones(om.shape, bool)
    expo = 2 * a * h * (om[inside] ** 2 - b**2)
    if expo.size and np.max(expo) > EXP_LIMIT:
        raise DivergenceError("omega->inf", "weighted spectral integral overflows")
    w = np.zeros(om.shape)
    w[inside] = np.exp(expo) / channel_factor(sigma, phi_s.N, l, q0) ** 2
    integrand = np.abs(phi_s.spectrum) * np.abs(psi_s.spectrum) * w
    total = integrand.sum()
    ring = inside & (np.abs(om) >= 0.9 * np.abs(om[inside]).max())
    if total and integrand[ring].max() > tol * total:
        raise DivergenceError("omega->inf", "weighted spectral integrand does not decay on the window")
    return phi_s.spectral_inner(psi_s, w)


def norm_sigma(phi_s: GridFunction, sigma: SigmaDescriptor, l: int, q0: float) -> float:
    return inner_product_m1(phi_s, phi_s, sigma, l, q0).real


def sigma_product_forms(phi_s: GridFunction, psi_s: GridFunction, sigma: SigmaDescriptor, l: int, q0: float) -> dict:
    """The scalar product in the sigma picture computed four ways.

    ``definition``: ``<sigma^-1 phi, sigma^-1 psi>`` by ``y``-quadrature;
    ``right`` and ``left``: ``(sigma sigma^*)^-1`` applied to one side;
    ``weighted``: the spectral weight formula.
    """
    inv = sigma.inverse()
    inv_star = adjoint_sigma(sigma).inverse()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        a = apply_sigma_grid(inv, phi_s, l, q0)
        b = apply_sigma_grid(inv, psi_s, l, q0)
        right = apply_sigma_grid(inv_star, apply_sigma_grid(inv, psi_s, l, q0), l, q0)
        left = apply_sigma_grid(inv_star, apply_sigma_grid(inv, phi_s, l, q0), l, q0)
    return {
        "definition": a.inner(b),
        "right": phi_s.inner(right),
        "left": left.inner(psi_s),
        "weighted": inner_product_m1(phi_s, psi_s, sigma, l, q0),
    }


# realized momenta on level components


@lru_cache(maxsize=None)
def _level_basis(N: int, l: int, q0: float):
    idx = _spanning_indices(N, l)
    polys = [harmonic_polynomial(N, tuple(I)) for I in idx]
    words = sorted({X for p in polys for X in p})
    B = np.array([[p.get(X, Scalar(0)).eval(q0) if X in p else 0.0 for p in polys] for X in words])
    return idx, words, B


@lru_cache(maxsize=None)
def _level_gram(N: int, l: int, q0: float):
    idx = _spanning_indices(N, l)
    G = spherical_gram(N, l, l)
    return {(I, J): v.eval(q0) for (I, J), v in G.items()}, idx


def _harmonic_coordinates(N, l, poly, q0):
    idx, words, B = _level_basis(N, l, q0)
    pos = {X: i for i, X in enumerate(words)}
    v = np.zeros(len(words))
    for X, c in poly.items():
        if X not in pos:
            raise ValueError("polynomial is not in the span of the level basis")
        v[pos[X]] = c.eval(q0)
    coef, *_ = np.linalg.lstsq(B, v, rcond=None)
    if np.linalg.norm(B @ coef - v) > 1e-9 * max(1.0, np.linalg.norm(v)):
        raise ValueError("polynomial is not harmonic of the expected level")
    return dict(zip(idx, coef))


def decompose_levels(f: ProfiledFunction, q0: float) -> dict:
    """``{(l, I): {(s, P): c}}`` with ``f = sum r^{-l} X_l^I * sum_c c r^s prod P``."""
    N = f.N
    grouped = {}
    for (s, P, X, Xi), c in f.terms.items():
        if Xi:
            raise ValueError("functions only")
        A._acc(grouped.setdefault((s, P, len(X)), {}), X, c)
    out = {}
    for (s, P, _), poly in grouped.items():
        for k, H in decompose_polynomial(N, poly).items():
            if not H:
                continue
            l = len(next(iter(H)))
            for I, c in _harmonic_coordinates(N, l, H, q0).items():
                if abs(c) < 1e-300:
                    continue
                slot = out.setdefault((l, tuple(I)), {})
                key = (s + 2 * k + l, P)
                slot[key] = slot.get(key, 0.0) + c
    return out


def _component_grid(terms: dict, sources: dict, q0: float, template: GridFunction) -> GridFunction:
    """Assemble ``e^{N y/2} sum c r^s phi_P(q^j r)`` on the template grid."""
    h = log_q(q0)
    N, y = template.N, template.y
    total = np.zeros(template.n, dtype=complex)
    cache = {}
    for (s, P), c in terms.items():
        if len(P) != 1:
            raise ValueError("one radial profile per term expected")
        name, j = P[0]
        if (name, j) not in cache:
            cache[(name, j)] = sources[name].shifted(j * h).weighted * math.exp(-N * j * h / 2)
        total += c * np.exp(s * y) * cache[(name, j)]
    out = GridFunction(N, template.y_min, template.dy, total, template.band)
    return out.band_limited(template.band) if template.band else out


def wave_inner(phi: dict, psi: dict, q0: float) -> complex:
    """``<phi, psi>`` for level components ``{(l, I): GridFunction}`` (Lebesgue measure)."""
    total = 0j
    for (l, I), f in phi.items():
        G, _ = _level_gram(f.N, l, q0)
        for (lp, J), g in psi.items():
            if lp != l:
                continue
            gij = G.get((I, J), 0.0)
            if gij:
                total += gij * f.inner(g)
    return total


def apply_sigma_components(sigma: SigmaDescriptor, comps: dict, q0: float) -> dict:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return {(l, I): apply_sigma_grid(sigma, f, l, q0) for (l, I), f in comps.items()}


def apply_realized_momentum(comps: dict, alpha: int, q0: float, nu: SigmaDescriptor = NU_TILDE) -> dict:
    """``p~^alpha = -i V^alpha_i nu^-1 d^i nu`` on level components.

    ``nu`` acts by multipliers; ``d^i`` acts through the exact calculus on
    profiled functions, whose output is split back into level components.
    """
    some = next(iter(comps.values()))
    N = some.N
    inner = apply_sigma_components(nu, comps, q0)
    sources, pf = {}, ProfiledFunction(N, {}, {})
    for n, ((l, I), f) in enumerate(sorted(inner.items())):
        name = f"c{n}"
        sources[name] = f
        prof = RadialProfile(name, lambda r: 0.0)
        terms = {(-l, ((name, 0),), X, ()): c for X, c in harmonic_polynomial(N, tuple(I)).items()}
        pf = pf + ProfiledFunction(N, terms, {name: prof})
    V = real_basis(N, q0)[alpha]
    out = {}
    for i, v in V.items():
        for key, terms in decompose_levels(pf.act(A.d_up(N, i)), q0).items():
            grid = _component_grid(terms, sources, q0, some).scale(-1j * v)
            out[key] = out[key] + grid if key in out else grid
    return apply_sigma_components(nu.inverse(), out, q0)


def momentum_hermiticity(phi_s: dict, psi_s: dict, alpha: int, sigma: SigmaDescriptor, q0: float) -> dict:
    """``<phi^s, p~^[s] psi^s>^[s]`` against ``<p~^[s] phi^s, psi^s>^[s]``.

    Both sides are computed literally in the sigma picture:
    ``p~^[s] = s p~ s^-1`` and ``<f, g>^[s] = <s^-1 f, s^-1 g>``.
    """
    inv = sigma.inverse()

    def realized(c):
        return apply_sigma_components(sigma, apply_realized_momentum(apply_sigma_components(inv, c, q0), alpha, q0), q0)

    def product(f, g):
        return wave_inner(apply_sigma_components(inv, f, q0), apply_sigma_components(inv, g, q0), q0)

    lhs = product(phi_s, realized(psi_s))
    rhs = product(realized(phi_s), psi_s)
    scale = math.sqrt(abs(product(phi_s, phi_s)) * abs(product(psi_s, psi_s)))
    return {"lhs": lhs, "rhs": rhs, "residual": abs(lhs - rhs), "relative": abs(lhs - rhs) / scale}


def band_limited_family(N, seed: int, count: int = 3, band: float = 6.0, q0: float = 0.8, **grid) -> list:
    """Real sums of Gaussians in ``y`` with spectra below ``e^{-1.1 omega^2}``."""
    rng = np.random.default_rng(seed)
    grid = {"y_min": -20.0, "y_max": 20.0, "n": 2**12} | grid
    out = []
    for _ in range(count):
        terms = [(rng.uniform(-1.5, 1.5), rng.uniform(1.5, 2.0), rng.normal()) for _ in range(3)]

        def F(y, terms=terms):
            return sum(c * np.exp(-((y - m) ** 2) / (2 * s**2)) for m, s, c in terms)

        out.append(GridFunction.from_weighted(N, F, band=band, **grid))
    return out


# pole-lattice profiles


def _inv_sin(z):
    """``1/sin(z)`` without overflow for large ``|Im z|``."""
    z = np.asarray(z, dtype=complex)
    out = np.empty(z.shape, dtype=complex)
    neg = z.imag < 0
    e = np.exp(-1j * z[neg])
    out[neg] = 2j * e / (1 - e * e)
    e = np.exp(1j * z[~neg])
    out[~neg] = -2j * e / (1 - e * e)
    return out


@dataclass
class PoleLatticeFunction:
    """``phi(r) = sum_j c_j / (r^gamma + q^{gamma (j + beta)})``.

    The poles of ``phi(e^y)`` sit at ``y_{j,k} = h (j + beta) + i pi (2k+1)/gamma``
    with residue ``R^j = -c_j q^{-gamma (j+beta)} / gamma`` at every ``k``.
    """

    N: int
    gamma: int
    beta: float
    q0: float
    coefficients: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.gamma < 1:
            raise ValueError("gamma must be a positive integer")
        if self.beta not in (0, 0.5):
            raise ValueError("beta must be 0 or 1/2")
        log_q(self.q0)

    @property
    def h(self) -> float:
        return log_q(self.q0)

    def pole_parameter(self, j: int) -> float:
        return self.q0 ** (self.gamma * (j + self.beta))

    @staticmethod
    def from_residues(N, gamma, beta, q0, residues: dict) -> "PoleLatticeFunction":
        f = PoleLatticeFunction(N, gamma, beta, q0)
        f.coefficients = {j: -gamma * R * f.pole_parameter(j) for j, R in residues.items()}
        return f

    @property
    def residues(self) -> dict:
        return {j: -c / (self.gamma * self.pole_parameter(j)) for j, c in self.coefficients.items()}

    def residue_vector(self, J: int) -> np.ndarray:
        R = self.residues
        return np.array([R.get(j, 0.0) for j in range(-J, J + 1)], dtype=complex)

    def poles(self) -> list:
        """``(j, k, r_{j,k})`` for every pole."""
        out = []
        for j in sorted(self.coefficients):
            for k in range(self.gamma):
                r = self.q0 ** (j + self.beta) * cmath.exp(1j * math.pi * (2 * k + 1) / self.gamma)
                out.append((j, k, r))
        return out

    def __call__(self, r):
        r = np.asarray(r, dtype=complex)
        z = r**self.gamma
        direct = sum(c / (z + self.pole_parameter(j)) for j, c in self.coefficients.items())
        pmax = max(self.pole_parameter(j) for j in self.coefficients)
        far = np.abs(z) > 8 * pmax
        if not np.any(far):
            return direct
        # large |z|: expand in 1/z so that cancelled moments are exactly zero
        zf = z[far] if z.ndim else z
        M = self.cancelled_moments()
        terms = int(math.ceil(40 / math.log(8))) + M
        w = 1 / zf
        acc = 0
        for m in range(M, terms):
            mom = sum(c * self.pole_parameter(j) ** m for j, c in self.coefficients.items())
            acc = acc + (-1) ** m * mom * w ** (m + 1)
        if not z.ndim:
            return acc
        out = np.array(direct, dtype=complex)
        out[far] = acc
        return out

    def weighted(self, y):
        y = np.asarray(y, dtype=complex)
        return np.exp(self.N * y / 2) * self(np.exp(y))

    def cancelled_moments(self) -> int:
        """Number ``M`` of vanishing moments ``sum_j c_j p_j^m``, ``m < M``."""
        M = 0
        scale = max(abs(c) for c in self.coefficients.values())
        while M < 8:
            mom = sum(c * self.pole_parameter(j) ** M for j, c in self.coefficients.items())
            ref = sum(abs(c) * self.pole_parameter(j) ** M for j, c in self.coefficients.items())
            if abs(mom) > 1e-12 * max(ref, scale * 1e-300):
                break
            M += 1
        return M

    def is_square_integrable(self) -> bool:
        """``e^{Ny/2} phi`` decays at ``y -> inf`` iff ``gamma (M+1) > N/2``."""
        return self.gamma * (self.cancelled_moments() + 1) > self.N / 2

    def residue_at(self, j: int, k: int, eps: float = 1e-6) -> complex:
        """Numerical residue of ``phi(e^y)`` at ``y_{j,k}`` by a small circle."""
        y0 = self.h * (j + self.beta) + 1j * math.pi * (2 * k + 1) / self.gamma
        t = np.exp(2j * np.pi * np.arange(64) / 64)
        vals = self(np.exp(y0 + eps * t))
        return complex(np.mean(vals * eps * t))

    def check_no_real_poles(self):
        for _, _, r in self.poles():
            if abs(r.imag) < 1e-14 * abs(r) and r.real > 0:
                raise PoleOnContourError(f"pole at r = {r.real}")


def minimal_l2_combination(N, gamma, beta, q0, js, seed: int = 0) -> PoleLatticeFunction:
    """Coefficients on the poles ``js`` with enough vanishing moments for ``L^2``."""
    f = PoleLatticeFunction(N, gamma, beta, q0)
    M = 0
    while gamma * (M + 1) <= N / 2:
        M += 1
    if len(js) < M + 1:
        raise ValueError(f"{M} moment cancellations need at least {M + 1} poles")
    p = np.array([f.pole_parameter(j) for j in js])
    V = np.array([p**m for m in range(M)]) if M else np.zeros((0, len(js)))
    if M:
        _, _, vt = np.linalg.svd(V)
        null = vt[M:]
    else:
        null = np.eye(len(js))
    w = np.random.default_rng(seed).normal(size=null.shape[0]) if null.shape[0] > 1 else np.ones(1)
    c = w @ null
    c = c / np.max(np.abs(c))
    f.coefficients = {j: float(v) for j, v in zip(js, c)}
    return f


def residues_to_spectrum(phi: PoleLatticeFunction, omega) -> np.ndarray:
    """``hat phi(omega) = -sqrt(2 pi)/(2 S(omega)) sum_j R^j e^{(N/2 - i omega) h (j + beta)}``.

    ``S(omega) = sin(pi (N - 2 i omega)/(2 gamma))``.  Valid wherever the
    defining integral converges and by continuation elsewhere.
    """
    phi.check_no_real_poles()
    omega = np.atleast_1d(np.asarray(omega, dtype=complex))
    N, g, h = phi.N, phi.gamma, phi.h
    arg = np.pi * (N - 2j * omega) / (2 * g)
    if np.any(np.abs(np.sin(arg)) < 1e-14):
        raise ZeroDivisionError("omega is a pole of the prefactor (principal value needed)")
    s = sum(R * np.exp((N / 2 - 1j * omega) * h * (j + phi.beta)) for j, R in phi.residues.items())
    return -SQRT2PI / 2 * _inv_sin(arg) * s


def direct_spectrum(phi: PoleLatticeFunction, omega: complex, tol: float = 1e-13) -> complex:
    """Adaptive quadrature of ``(2 pi)^{-1/2} int e^{N y/2} phi(e^y) e^{-i omega y} dy``."""
    phi.check_no_real_poles()

    def integrand(y):
        return complex(phi.weighted(y) * cmath.exp(-1j * omega * y))

    lo, hi = _tail_window(lambda y: abs(integrand(y)), tol, phi.N)
    re, _ = _quad_chunks(lambda y: integrand(y).real, lo, hi, tol)
    im, _ = _quad_chunks(lambda y: integrand(y).imag, lo, hi, tol)
    return complex(re, im) / SQRT2PI


# the M matrix


def measure_modes(mu: RadialMeasure, q0: float, beta: float):
    """``k -> m_k`` for ``m`` written in ``Z = log r - h beta``; ``None`` for all ``k``.

    Returns ``(m0, mk)`` with ``mk`` a callable on nonzero ``k``.
    """
    h = log_q(q0)
    if mu.variant == "lebesgue":
        return 1.0, lambda k: 0.0
    if mu.variant == "jackson":
        mJ = abs(1 - q0) / abs(h)
        beta0 = 0.0 if mu.r0 == "1" else 0.5
        flip = (beta0 - beta) % 1 != 0
        return mJ, lambda k: mJ * (-1) ** abs(int(k)) if flip else mJ
    coeffs = dict(mu.coeffs)
    sign = -1 if beta == 0.5 else 1
    return coeffs.get(0, 0.0), lambda k: coeffs.get(abs(k), 0.0) * sign ** abs(k)


@lru_cache(maxsize=None)
def _gauss_legendre(n: int):
    return np.polynomial.legendre.leggauss(n)


def _panels(breaks, width, order=16):
    x, w = _gauss_legendre(order)
    nodes, weights = [], []
    for a, b in zip(breaks[:-1], breaks[1:]):
        m = max(1, int(math.ceil((b - a) / width)))
        edges = np.linspace(a, b, m + 1)
        half = (edges[1:] - edges[:-1]) / 2
        mid = (edges[1:] + edges[:-1]) / 2
        nodes.append((mid[:, None] + half[:, None] * x[None, :]).ravel())
        weights.append((half[:, None] * w[None, :]).ravel())
    return np.concatenate(nodes), np.concatenate(weights)


def _em1_minus_linear(z):
    """``e^z - 1 - z`` accurately for small ``|z|``."""
    z = np.asarray(z, dtype=complex)
    out = np.exp(z) - 1 - z
    small = np.abs(z) < 0.5
    if small.any():
        zs = z[small]
        term = zs * zs / 2
        acc = term.copy()
        for n in range(3, 25):
            term = term * zs / n
            acc = acc + term
        out[small] = acc
    return out


@dataclass
class MMatrix:
    """Dense ``M^j_{j'}`` for ``j, j' in [-J, J]``."""

    J: int
    params: tuple
    values: np.ndarray
    max_imag: float
    k_terms: int

    def index(self, j: int) -> int:
        return j + self.J

    @property
    def real(self) -> np.ndarray:
        return self.values.real

    def hermiticity_residual(self) -> float:
        return float(np.max(np.abs(self.values - self.values.conj().T)))


def m_matrix(a, b, ap, bp, mu: RadialMeasure, beta: float, gamma: int, N: int, J: int, q0: float, k_budget: int = 400) -> MMatrix:
    """Scalar-product matrix of ``q^{a(eta'+b)^2}`` against ``q^{a'(eta'+b')^2}``.

    The measure's Fourier comb reduces the double spectral integral to
    ``M^j_{j'} = (pi/2) e^{(N/2) h (j+j'+2 beta)} sum_k m_k I_k(j - j')`` with

    ``I_k(D) = int d omega conj(s_{a,b}(omega)) s_{a',b'}(omega_k) e^{i omega h D} / (conj(S(omega)) S(omega_k))``,

    ``omega_k = omega - 2 pi k/h``.  When ``N/gamma`` is even ``S`` vanishes at
    ``omega = 0``: the double pole of the ``k = 0`` term is taken as a
    Hadamard finite part and the simple poles of ``k != 0`` as principal values.
    """
    if N % gamma:
        raise ValueError("gamma must divide N")
    h = log_q(q0)
    a, b, ap, bp = (float(v) for v in (a, b, ap, bp))
    if a * h < 0 or ap * h < 0:
        raise DivergenceError("omega->inf", "a h < 0: the Gaussian factor defeats the 1/sin decay")
    p = N // gamma
    even = p % 2 == 0
    kappa = math.pi / gamma
    m0, mk = measure_modes(mu, q0, beta)
    D = np.arange(-2 * J, 2 * J + 1)
    A0 = h * (a * b * b + ap * bp * bp)

    def exponent(omega, c):
        # conj(s_{a,b}(omega)) * s_{a',b'}(omega - c), without the e^{i omega h D} phase
        return -a * h * (omega - 1j * b) ** 2 - ap * h * (omega - c + 1j * bp) ** 2

    def window(c):
        W = 40.0 / kappa + 2.0
        if a + ap > 0:
            W = min(W, math.sqrt(45.0 / (abs(h) * (a + ap))) + abs(h) * (abs(a * b) + abs(ap * bp)) * 4 + 1.0)
        width = 0.25
        if a + ap > 0:
            width = min(width, 0.25 / math.sqrt(abs(h) * (a + ap)))
        lo, hi = min(0.0, c) - W, max(0.0, c) + W
        breaks = sorted({lo, hi, 0.0, c})
        return _panels(np.array(breaks), width)

    def term(k):
        c = 2 * math.pi * k / h
        w_nodes, w_weights = window(c)
        om = w_nodes
        phase = np.exp(1j * np.outer(D, om) * h)
        E = np.exp(exponent(om, c))
        if not even:
            inv = _inv_sin(np.pi * (N + 2j * om) / (2 * gamma)) * _inv_sin(np.pi * (N - 2j * (om - c)) / (2 * gamma))
            return (phase * (E * inv)) @ w_weights
        if k == 0:
            # E(omega) e^{i omega h D} = e^{A0} exp(alpha1 omega + alpha2 omega^2)
            alpha1 = 1j * h * (2 * a * b - 2 * ap * bp + D)
            alpha2 = -h * (a + ap)
            z = np.outer(alpha1, om) + alpha2 * om**2
            num = math.exp(A0) * _em1_minus_linear(z)
            sh = np.sinh(kappa * om)
            body = num / sh**2
            return body @ w_weights + math.exp(A0) * (-2.0 / kappa)
        sh0 = np.sinh(kappa * om)
        shc = np.sinh(kappa * (om - c))
        E0 = np.exp(exponent(0.0, c))
        Ec = np.exp(exponent(c, c))
        rho0 = E0 / (kappa * math.sinh(-kappa * c))
        rhoc = (Ec * np.exp(1j * D * h * c)) / (kappa * math.sinh(kappa * c))
        body = phase * E / (sh0 * shc) - rho0 * kappa / sh0 - np.outer(rhoc, kappa / shc)
        return body @ w_weights

    total = m0 * term(0) if m0 else np.zeros(D.shape, dtype=complex)
    scale = max(np.max(np.abs(total)), 1e-300)
    k_used = 0
    for k in range(1, k_budget + 1):
        c = 2 * math.pi * k / abs(h)
        # every k-term is bounded by the e^{-kappa |c|} overlap of the two 1/sin factors
        bound = 8 * (c + 100.0 / kappa) * math.exp(A0 - kappa * c + 40.0)
        if bound * max(abs(mk(k)), abs(mk(-k))) < 1e-18 * scale:
            break
        contrib = mk(k) * term(k) + mk(-k) * term(-k)
        total = total + contrib
        k_used = k
    else:
        raise TruncationError("k-sum did not converge within its budget")
    js = np.arange(-J, J + 1)
    pref = (math.pi / 2) * np.exp((N / 2) * h * (js[:, None] + js[None, :] + 2 * beta))
    vals = pref * total[(js[:, None] - js[None, :]) + 2 * J]
    return MMatrix(J, (a, b, ap, bp), vals, float(np.max(np.abs(vals.imag))), k_used)


def reduced_inner_product_lattice(phi: PoleLatticeFunction, psi: PoleLatticeFunction, a, b, ap, bp, mu: RadialMeasure, J: Optional[int] = None) -> complex:
    """``<q^{a(eta'+b)^2} phi, q^{a'(eta'+b')^2} psi>' = R_phi^dag M R_psi``."""
    if (phi.N, phi.gamma, phi.beta, phi.q0) != (psi.N, psi.gamma, psi.beta, psi.q0):
        raise ValueError("both functions must live on the same pole lattice")
    if J is None:
        J = max(abs(j) for j in list(phi.coefficients) + list(psi.coefficients) + [0])
    if not phi.coefficients or not psi.coefficients:
        return 0j
    M = m_matrix(a, b, ap, bp, mu, phi.beta, phi.gamma, phi.N, J, phi.q0)
    return complex(phi.residue_vector(J).conj() @ M.values @ psi.residue_vector(J))


def jackson_sum_direct(phi: PoleLatticeFunction, psi: PoleLatticeFunction, mu: RadialMeasure) -> complex:
    """``|1-q| sum_n r_n^N conj(phi(r_n)) psi(r_n)`` on the measure's lattice."""
    q0 = phi.q0
    r0 = mu.lattice_origin(q0)

    def term(n):
        r = r0 * q0**n
        return complex(abs(1 - q0) * r**phi.N * np.conj(phi(r)) * psi(r))

    total, _, _ = _jackson_sum(term, 1e-17)
    return total


def sigma_on_lattice_direct(phi: PoleLatticeFunction, a, b, y) -> complex:
    """``e^{N y/2} (q^{a(eta'+b)^2} phi)(e^y)`` by spectral quadrature of the residue spectrum."""
    h = phi.h
    if a * h < 0:
        raise DivergenceError("omega->inf")
    x, w = _gauss_legendre(32)
    W = 40.0 * phi.gamma / math.pi + 2
    nodes, weights = _panels(np.array([-W, W]), 0.25)
    spec = residues_to_spectrum(phi, nodes) * np.exp(-a * h * (nodes + 1j * b) ** 2)
    y = np.atleast_1d(y)
    return (np.exp(1j * np.outer(y, nodes)) @ (spec * weights)) / SQRT2PI


def sigma_adjointness(phi, psi, a, b, mu, J=None) -> dict:
    """``<phi, q^{a(eta'+b)^2} psi>'`` against ``<q^{a(eta'-b)^2} phi, psi>'``."""
    lhs = reduced_inner_product_lattice(phi, psi, 0, 0, a, b, mu, J)
    rhs = reduced_inner_product_lattice(phi, psi, a, -b, 0, 0, mu, J)
    return {"lhs": lhs, "rhs": rhs, "residual": abs(lhs - rhs) / max(abs(lhs), 1e-300)}


def sigma_conjugate_symmetry(phi, psi, a, b, mu, J=None) -> dict:
    """``<phi, q^{a(eta'-b)^2} psi>'^* = <psi, q^{a(eta'+b)^2} phi>'``."""
    lhs = np.conj(reduced_inner_product_lattice(phi, psi, 0, 0, a, -b, mu, J))
    rhs = reduced_inner_product_lattice(psi, phi, 0, 0, a, b, mu, J)
    return {"lhs": lhs, "rhs": rhs, "residual": abs(lhs - rhs) / max(abs(lhs), 1e-300)}


# the kernel of the positivity condition


def _inv_C(x, odd: bool):
    """``1/cosh x`` or ``1/sinh x`` through exponentials."""
    x = np.asarray(x, dtype=float)
    e = np.exp(-np.abs(x))
    with np.errstate(divide="ignore"):
        if odd:
            return 2 * e / (1 + e * e)
        return np.sign(x) * 2 * e / (1 - e * e)


def kernel_terms(delta: float, t: float, tol: float = 1e-17, cap: int = 100000) -> int:
    """Index cutoff ``L`` for both sums from their exponential tails."""
    if t < 0:
        raise ValueError("t = a pi^2/h must be nonnegative")
    rate = 2 * delta + 4 * t
    if rate <= 0:
        raise TailBoundError("no exponential decay")
    L = int(math.ceil(-math.log(tol) / rate)) + 2
    if L > cap:
        raise TailBoundError(f"tail bound needs {L} terms")
    return L


def kernel_K(omega, y, delta: float, t: float, odd: bool = True, K_max: Optional[int] = None) -> np.ndarray:
    """``K(omega, y) = sum_l e^{-t(omega+2l)^2}/C[delta(omega+2l)] sum_k cos(k pi y)/C[delta(omega+2(k+l))]``."""
    L = K_max if K_max is not None else kernel_terms(delta, t)
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    ls = np.arange(-L, L + 1)
    Al = np.exp(-t * (omega[:, None] + 2 * ls[None, :]) ** 2) * _inv_C(delta * (omega[:, None] + 2 * ls[None, :]), odd)
    ns = np.arange(-2 * L, 2 * L + 1)
    Bn = _inv_C(delta * (omega[:, None] + 2 * ns[None, :]), odd)
    out = np.zeros((omega.size, y.size))
    for iy, yy in enumerate(y):
        ks = np.arange(-L, L + 1)
        cosk = np.cos(ks * np.pi * yy)
        # inner[o, l] = sum_k cos(k pi y) B_{k+l}
        idx = ls[:, None] + ks[None, :] + 2 * L
        inner = np.einsum("olk,k->ol", Bn[:, idx], cosk)
        out[:, iy] = np.sum(Al * inner, axis=1)
    return out


def kernel_parameters(a, q0, gamma):
    h = log_q(q0)
    return math.pi**2 / (abs(h) * gamma), a * h * math.pi**2 / h**2


def measured_kernel(omega, mu: RadialMeasure, a, q0, gamma, N, beta: float = 0.0) -> np.ndarray:
    """``int_{-1}^{1} dy m(y) K(omega, y) = 2 sum_l A_l sum_k m_k B_{k+l}``."""
    p = N // gamma
    odd = p % 2 == 1
    delta, t = kernel_parameters(a, q0, gamma)
    L = kernel_terms(delta, t)
    m0, mk = measure_modes(mu, q0, beta)
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    ls = np.arange(-L, L + 1)
    Al = np.exp(-t * (omega[:, None] + 2 * ls[None, :]) ** 2) * _inv_C(delta * (omega[:, None] + 2 * ls[None, :]), odd)
    ks = np.arange(-L, L + 1)
    weights = np.array([m0 if k == 0 else mk(k) for k in ks])
    ns = np.arange(-2 * L, 2 * L + 1)
    Bn = _inv_C(delta * (omega[:, None] + 2 * ns[None, :]), odd)
    idx = ls[:, None] + ks[None, :] + 2 * L
    inner = np.einsum("olk,k->ol", Bn[:, idx], weights)
    return 2 * np.sum(Al * inner, axis=1)


@dataclass
class ScanReport:
    omega: np.ndarray
    values: np.ndarray
    minimum: float
    argmin: float
    endpoint: float
    passed: bool


def positivity_scan(mu: RadialMeasure, a, q0, gamma, N, grid: int = 200, beta: float = 0.0) -> ScanReport:
    """Minimum over cell midpoints of ``(-1, 1)`` of the measured kernel.

    For even ``N/gamma`` the kernel is infinite at ``omega = 0`` and vanishes
    at ``omega = 1`` by antisymmetry; the endpoint value is reported
    separately and not part of the pass criterion.
    """
    if a * log_q(q0) <= 0:
        raise ValueError("positivity scan needs a h > 0")
    om = -1 + (np.arange(grid) + 0.5) * (2.0 / grid)
    vals = measured_kernel(om, mu, a, q0, gamma, N, beta)
    end = float(measured_kernel([1.0], mu, a, q0, gamma, N, beta)[0])
    i = int(np.argmin(vals))
    return ScanReport(om, vals, float(vals[i]), float(om[i]), end, bool(np.all(vals > 0)))


def phi_check(phi: PoleLatticeFunction, omega) -> np.ndarray:
    """The ``2``-periodic ``sum_j R^j e^{(N/2) h (j+beta)} e^{-i pi omega j}``."""
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    return sum(R * math.exp(phi.N / 2 * phi.h * (j + phi.beta)) * np.exp(-1j * np.pi * omega * j) for j, R in phi.residues.items())


def kernel_form_value(phi: PoleLatticeFunction, a, mu: RadialMeasure, n: int = 4000) -> float:
    """``(pi^2/(4|h|)) int_{-1}^{1} |phi_check|^2 int m K``, by the midpoint rule (periodic, spectrally exact)."""
    om = -1 + (np.arange(n) + 0.5) * (2.0 / n)
    vals = measured_kernel(om, mu, a, phi.q0, phi.gamma, phi.N, phi.beta)
    return float(math.pi**2 / (4 * abs(phi.h)) * np.sum(np.abs(phi_check(phi, om)) ** 2 * vals) * (2.0 / n))


def asymptotic_small_h(phi: PoleLatticeFunction, a, mu: RadialMeasure) -> dict:
    """Two small-``h`` forms of ``<phi, q^{a eta'^2} phi>'`` (odd ``N/gamma``).

    ``narrow``: ``m_0 pi^{3/2}/(2 sqrt(a h)) |phi_check(0)|^2``, the regime
    ``a h gamma^2 >> pi^2``; ``fixed_a``: ``gamma m_0 |phi_check(0)|^2``, the limit
    at fixed ``a``.
    """
    if (phi.N // phi.gamma) % 2 == 0:
        raise ValueError("the small-h forms need odd N/gamma")
    m0, _ = measure_modes(mu, phi.q0, phi.beta)
    c0 = abs(phi_check(phi, [0.0])[0]) ** 2
    h = phi.h
    return {
        "narrow": m0 * math.pi**1.5 / (2 * math.sqrt(a * h)) * c0,
        "fixed_a": phi.gamma * m0 * c0,
        "regime": a * h * phi.gamma**2 / math.pi**2,
    }


# spectra of the momentum observables


def kappa0_squared(N: int, kappa: float, q0: float) -> float:
    """``kappa_0^2 = kappa^2 q^{2n} (1 + q^{-1})/(1 + q^{N-2})``."""
    n = N // 2
    return kappa**2 * q0 ** (2 * n) * (1 + 1 / q0) / (1 + q0 ** (N - 2))


@dataclass
class EigenReport:
    N: int
    operator: str
    eigenvalue: complex
    order: int
    residual: float
    checked_orders: int
    cutoff_dominated: bool


def _momentum_square(N):
    total = None
    for i in structure_constants(N).indices:
        t = A.lam(N, 1) * A.d_up(N, i) * A.lam(N, 1) * A.d(N, i)
        total = t if total is None else total + t
    return total


def _series_word(N, l):
    """The word of order ``l`` and its exact coefficient: ``(x^0)^l`` or ``(x^1 x_1)^l``."""
    if N % 2:
        return x_monomial(N, (0,) * l), ONE
    g, _ = rmat.metric(N)
    return x_monomial(N, (1, -1) * l), g[(1, -1)] ** l


def _act_on_series(N, op, coeffs, q0):
    fock = A.FockModule(N, 1)
    out = {}
    for l, a in enumerate(coeffs):
        if a == 0:
            continue
        word, pre = _series_word(N, l)
        vec = {(X, ()): c * pre for X, c in word.items()}
        for (X, _), c in fock.act(op, vec).items():
            out[X] = out.get(X, 0) + a * c.eval(q0)
    return out


def _series_coefficients(N, l, vec, q0):
    """Coefficient of the order-``l`` word inside ``vec``."""
    word, pre = _series_word(N, l)
    X, c = next(iter(word.items()))
    return vec.get(X, 0) / (c * pre).eval(q0)


def eigen_residual(N: int, q0: float, kappa: float = 1.0, M_trunc: int = 20, operator: str = "pp") -> EigenReport:
    """Eigen-equations of the momenta on the truncated ground-state series.

    ``N = 3``: ``e_{q^{-1}}[i kappa_0 x^0]``, with ``operator`` ``"p0"``
    (``-i Lambda d_0``, eigenvalue ``kappa_0``) or ``"pp"`` (eigenvalue
    ``kappa^2``).  ``N = 4``: ``sum_l (-w)^l (x^1 x_1)^l / ((l)_{q^{-2}}!)^2``
    with ``w = q kappa^2/(1 + q^{2-N})`` and ``operator = "pp"``.
    Orders the truncation reaches are excluded from the residual.
    """
    if not 0 < q0 < 1:
        raise ValueError("needs 0 < q < 1")
    if N not in (3, 4):
        raise ValueError("N must be 3 or 4")
    Qi = Q.inverse()
    if N == 3:
        k0 = math.sqrt(kappa0_squared(N, kappa, q0))
        coeffs = [(1j * k0) ** l / q_factorial(l, Qi).eval(q0) for l in range(M_trunc + 1)]
        if operator == "p0":
            op = A.lam(N, 1) * A.d(N, 0)
            lam, drop, factor = k0, 1, -1j
        elif operator == "pp":
            op = _momentum_square(N)
            lam, drop, factor = kappa**2, 2, -1.0
        else:
            raise ValueError("operator must be 'p0' or 'pp'")
    else:
        if operator != "pp":
            raise ValueError("only p.p is diagonal on the N = 4 series")
        w = q0 * kappa**2 / (1 + q0 ** (2 - N))
        coeffs = [(-w) ** l / q_factorial(l, Qi * Qi).eval(q0) ** 2 for l in range(M_trunc + 1)]
        op = _momentum_square(N)
        lam, drop, factor = kappa**2, 1, -1.0
    out = _act_on_series(N, op, coeffs, q0)
    checked = M_trunc + 1 - drop
    res = 0.0
    scale = max(abs(c) for c in coeffs)
    for l in range(checked):
        got = factor * _series_coefficients(N, l, out, q0)
        res = max(res, abs(got - lam * coeffs[l]) / scale)
    tail = abs(coeffs[-1]) / scale
    return EigenReport(N, operator, lam, M_trunc, res, checked, tail > 1e-10)


def spectra_table(N: int, kappa: float, q0: float, pis) -> list:
    """``(pi_n, a, kappa_a^2 q^{2 pi_n})`` rows for the total momentum square (``a = n``)."""
    n = N // 2
    return [(p, n, kappa**2 * q0 ** (2 * p)) for p in pis]


@dataclass
class KappaReport:
    exponent: float
    kappa2: float
    passed: bool
    offsets: list
    literal_lattice_passed: bool


def kappa_quantization_check(N: int, q0: float, exponents=(0.0, 2.0, -2.0, 1.0, 0.5, -1.0, 1.5, 4.0), count: int = 8) -> list:
    """Pole radii of the ground-state factor against the lattice ``|r| in q^{Z + 1/2}``.

    With ``K = kappa^2 (1 - q^2)^2/(1 + q^{2-N})^2`` the factor
    ``1/(-(1-q^2)^2 w; q^2)_inf``, ``w = kappa^2 q^{-1} r^2/(1+q^{2-N})^2``, has its
    poles at ``r^2 = -q^{1-2m}/K``: on the rays ``+-i`` (``gamma = 2``), and
    on the radii ``q^{Z+1/2}`` exactly when ``K in q^{2Z}``.  The literal
    lattice ``gamma = 1, beta = 0`` is recorded as well.
    """
    if N % 2:
        raise ValueError("N must be even")
    base = (1 + q0 ** (2 - N)) ** 2 / (1 - q0**2) ** 2
    out = []
    for e in exponents:
        K = q0**e
        lat = pole_lattice_of_product(-K / q0, q0, 2, "q2", beta=0.5, count=count)
        # the literal lattice asks for poles on the negative real r-axis at radii q^Z
        literal = True
        for z in lat.z_poles:
            r = cmath.sqrt(z)
            x = math.log(abs(r)) / math.log(q0)
            if not (abs(r.imag) <= 1e-9 * abs(r) and r.real < 0 and abs(x - round(x)) < 1e-9):
                literal = False
        out.append(KappaReport(e, base * K, lat.on_lattice, lat.offsets, literal))
    return out


def kappa_squared_quantized(N: int, q0: float) -> float:
    return (1 + q0 ** (2 - N)) ** 2 / (1 - q0**2) ** 2


def green_mode_weights(N: int, l: int, pi_n: int, kappa: float, M_mass: float, q0: float) -> float:
    """``q^{l(l+N-2)/2} / (kappa^2 q^{2 pi_n} + M^2)``."""
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    return q0 ** (l * (l + N - 2) / 2) / (kappa**2 * q0 ** (2 * pi_n) + M_mass**2)
