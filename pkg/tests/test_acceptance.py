"""Acceptance criteria, one test per criterion.

Each test prints a single ``PASS``/``FAIL`` line (also collected in the
terminal summary).  Exact checks compare ``Scalar`` values in ``Q(q^(1/16))``;
numeric checks state their tolerance in the line.
"""

import math
import time
import warnings
from fractions import Fraction
from math import comb

import numpy as np
import pytest

from qeuclid import algebra as A
from qeuclid import exterior as E
from qeuclid import harmonic as H
from qeuclid import integrate as I
from qeuclid import pseudo as P
from qeuclid import rmat
from qeuclid import specfun as S
from qeuclid.coeff import Q, ZERO, Scalar, structure_constants
from qeuclid.harmonic import SigmaDescriptor, _spanning_indices


class KnownDeviation(AssertionError):
    """A criterion that does not hold as stated."""


def test_criterion_01_braid_matrix(criterion):
    with criterion(1, "braid matrix identities, N = 3..6") as notes:
        t0 = time.perf_counter()
        for N in (3, 4, 5, 6):
            bd = rmat.calibrate(N)
            R, Rinv = bd.R, bd.Rinv
            assert rmat._ybe_holds(R, N), f"Yang-Baxter N={N}"
            assert rmat._spectral_checks(R, N), f"projector decomposition N={N}"
            assert rmat.projector_matrices(N)[2] == rmat._pt_closed_form(N), f"trace projector N={N}"
            assert rmat._metric_compatible(R, Rinv, N), f"metric compatibility N={N}"
            assert tuple(rmat.projector_ranks(N)) == (N * (N + 1) // 2 - 1, N * (N - 1) // 2, 1)
        elapsed = time.perf_counter() - t0
        notes.append(f"exact; runtime {elapsed:.1f}s <= 60s")
        assert elapsed <= 60


def test_criterion_02_rewriting(criterion):
    with criterion(2, "rewriting engine") as notes:
        t0 = time.perf_counter()
        for N in (3, 4):
            assert A.confluence_check(N, count=1000, max_degree=6, seed=N) == 0, f"confluence N={N}"
            assert A.check_d_squared(N)
            assert A.check_centrality(N) == {"r2": True, "box": True}
        assert A.check_d_hat_squared(3)
        assert A.star_involution_check(3, count=1000, max_degree=4, seed=0) == 0
        elapsed = time.perf_counter() - t0
        notes.append(f"1000 words x 2 N confluent, d^2 = d_hat^2 = 0, central x.x and d.d, 1000 star involutions; runtime {elapsed:.1f}s <= 120s")
        assert elapsed <= 120


@pytest.mark.slow
def test_criterion_03_star_similarity(criterion):
    with criterion(3, "star structure as similarity transformation") as notes:
        for N, L in ((3, 3), (4, 2)):
            rep = H.verify_star_similarity(N, L, 3)
            bad = [k for k, v in rep.items() if not v]
            assert not bad, f"N={N}: {bad}"
            assert "xi_star" in rep
        notes.append("exact on r^m S_l, |m| <= 3, l <= 3 (N = 3), l <= 2 (N = 4)")


def test_criterion_04_radial_identities(criterion):
    with criterion(4, "radial identities and ribbon recursion") as notes:
        for N in (3, 4):
            rep = H.verify_radial_identities(N, 4, 3)
            bad = [k for k, v in rep.items() if not v]
            assert not bad, f"N={N}: {bad}"
            assert H.ribbon_recursion(N, 4)
        notes.append("exact for l <= 4, N = 3, 4")


def test_criterion_05_exterior(criterion):
    with criterion(5, "exterior algebra") as notes:
        for N in (3, 4):
            assert E.check_epsilon_lowering(N) and E.check_epsilon_contraction(N), f"epsilon identities N={N}"
            assert E.check_hodge_involution(N) and E.check_hodge_unit(N), f"Hodge N={N}"
            assert all(E.exterior_dimension(N, p) == comb(N, p) for p in range(N + 1))
            rep = E.laplacian_identity_check(N)
            assert all(rep.values()), f"Laplacian N={N}: {rep}"
        notes.append("exact for N = 3, 4")


def _integration_family(N):
    idx = structure_constants(N).indices
    g = I.gaussian_profile(1.0)
    f = I.ProfiledFunction.monomial(N, (idx[0],), g) + I.ProfiledFunction.monomial(N, (idx[-1], idx[0]), I.gaussian_profile(0.7))
    phi = I.ProfiledFunction.monomial(N, (idx[0],), g) + I.ProfiledFunction.monomial(N, (), g)
    psi = I.ProfiledFunction.monomial(N, (idx[-1],), I.gaussian_profile(0.5))
    return f, phi, psi


def test_criterion_06_integration(criterion):
    measures = (I.RadialMeasure.lebesgue(), I.RadialMeasure.jackson("1"), I.RadialMeasure.jackson("sqrt_q"))
    with criterion(6, "integration") as notes:
        worst_stokes = worst_adj = 0.0
        for N in (3, 4):
            idx = structure_constants(N).indices
            lz = I.rational_profile(4)
            fd = I.ProfiledFunction.monomial(N, (idx[0], idx[-1]), lz) + I.ProfiledFunction.monomial(N, (), lz)
            assert I.check_dilatation_invariance(fd, Fraction(1, 4)), f"dilatation N={N}"
            f, phi, psi = _integration_family(N)
            for mu in measures:
                worst_stokes = max([worst_stokes] + [v[0] for v in I.verify_stokes(f, mu, 0.6).values()])
                worst_adj = max([worst_adj] + [v[0] for v in I.verify_adjointness(phi, psi, mu, 0.6).values()])
        notes.append(f"dilatation exact; Stokes {worst_stokes:.1e} <= 1e-8; adjointness {worst_adj:.1e} <= 1e-8")
        assert worst_stokes <= 1e-8 and worst_adj <= 1e-8


def test_criterion_07_lebesgue_sigma_pictures(criterion):
    sigmas = (
        SigmaDescriptor(a=Fraction(-1, 2), b=Fraction(1, 2)),
        SigmaDescriptor(a=Fraction(-1, 2), b=Fraction(1, 2), c=Fraction(1, 4)),
        SigmaDescriptor(a=Fraction(1, 4), b=Fraction(-1, 3)),
    )
    q0 = 0.8
    with criterion(7, "scalar products and hermitian momenta for m = 1") as notes:
        t0 = time.perf_counter()
        spread = herm = 0.0
        fam = P.band_limited_family(3, seed=3, count=4, q0=q0)
        idx = _spanning_indices(3, 1)
        phi = {(0, ()): fam[0], (1, tuple(idx[0])): fam[1]}
        psi = {(0, ()): fam[2], (1, tuple(idx[-1])): fam[3]}
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            for sig in sigmas:
                for l in (0, 1, 2):
                    e = P.sigma_product_forms(P.apply_sigma_grid(sig, fam[0], l, q0), P.apply_sigma_grid(sig, fam[1], l, q0), sig, l, q0)
                    ref = e["definition"]
                    spread = max(spread, max(abs(v - ref) for v in e.values()) / abs(ref))
                phis = P.apply_sigma_components(sig, phi, q0)
                psis = P.apply_sigma_components(sig, psi, q0)
                for alpha in range(3):
                    herm = max(herm, P.momentum_hermiticity(phis, psis, alpha, sig, q0)["relative"])
        elapsed = time.perf_counter() - t0
        notes.append(f"forms agree {spread:.1e} <= 1e-10; hermiticity {herm:.1e} <= 1e-8; runtime {elapsed:.1f}s <= 60s")
        assert spread <= 1e-10 and herm <= 1e-8 and elapsed <= 60


_RESIDUE_CASES = (
    (3, 1, 0.0, (0, 1, 2)),
    (3, 2, 0.5, (0, 1)),
    (4, 1, 0.0, (-1, 0, 1)),
    (4, 2, 0.5, (0, 2, 3)),
)


@pytest.mark.xfail(raises=KnownDeviation, strict=True, reason="entrywise parameter swap of the M matrix does not hold; its transpose does")
def test_criterion_08_residue_machinery(criterion):
    q0 = 0.5
    mu = I.RadialMeasure.jackson("1")
    with criterion(8, "residue spectra and M-matrix symmetries") as notes:
        worst = 0.0
        cases = 0
        for N, gamma, beta, js in _RESIDUE_CASES:
            f = P.minimal_l2_combination(N, gamma, beta, q0, list(js), seed=cases)
            for w in (-1.5, 0.5, 2.0):
                d = P.direct_spectrum(f, w)
                worst = max(worst, abs(P.residues_to_spectrum(f, w)[0] - d) / abs(d))
                cases += 1
        assert cases == 12
        reality = herm = transposed = literal = 0.0
        for N, gamma, beta in ((3, 1, 0.0), (3, 3, 0.5), (4, 2, 0.0), (4, 1, 0.5)):
            for a, b, ap, bp in ((0, 0, -1, 0.5), (-0.5, 0.25, -0.25, -0.5)):
                M = P.m_matrix(a, b, ap, bp, mu, beta, gamma, N, 3, q0)
                Ms = P.m_matrix(ap, bp, a, b, mu, beta, gamma, N, 3, q0)
                Md = P.m_matrix(a, b, a, b, mu, beta, gamma, N, 3, q0)
                scale = np.max(np.abs(M.values))
                reality = max(reality, M.max_imag / scale)
                herm = max(herm, Md.hermiticity_residual() / np.max(np.abs(Md.values)))
                transposed = max(transposed, np.max(np.abs(M.values.T - Ms.values)) / scale)
                literal = max(literal, np.max(np.abs(M.values - Ms.values)) / scale)
        notes.append(f"12 residue spectra {worst:.1e} <= 1e-8; reality {reality:.1e} <= 1e-12; hermiticity {herm:.1e} <= 1e-10")
        notes.append(f"transposed swap {transposed:.1e} <= 1e-10")
        assert worst <= 1e-8 and reality <= 1e-12 and herm <= 1e-10 and transposed <= 1e-10
        if literal > 1e-10:
            raise KnownDeviation(f"entrywise parameter swap off by {literal:.2g} (relative); only the transposed form holds")


def test_criterion_09_jackson_positivity(criterion):
    with criterion(9, "Jackson measure: adjointness, positivity, small h") as notes:
        adj = 0.0
        for N, gamma, beta, r0, q0, a, b in ((3, 1, 0.0, "1", 0.5, -1.0, 0.5), (4, 2, 0.5, "sqrt_q", 0.5, -0.5, -0.25), (3, 3, 0.0, "1", 2.0, 0.5, 0.5)):
            mu = I.RadialMeasure.jackson(r0)
            f = P.minimal_l2_combination(N, gamma, beta, q0, [-1, 0, 1], seed=1)
            g = P.minimal_l2_combination(N, gamma, beta, q0, [0, 1, 2], seed=2)
            adj = max(adj, P.sigma_adjointness(f, g, a, b, mu)["residual"])
        scans = 0
        for N in (3, 4):
            for gamma in (d for d in range(1, N + 1) if N % d == 0):
                for r0 in ("1", "sqrt_q"):
                    for q0, a in ((0.5, -0.5), (2.0, 0.3)):
                        rep = P.positivity_scan(I.RadialMeasure.jackson(r0), a, q0, gamma, N)
                        assert rep.passed, f"scan N={N} gamma={gamma} r0={r0} q={q0}: min {rep.minimum}"
                        scans += 1
        q0 = math.exp(1e-3)
        mu = I.RadialMeasure.jackson("1")
        worst = 0.0
        for N, gamma in ((3, 1), (3, 3)):
            f = P.PoleLatticeFunction.from_residues(N, gamma, 0, q0, {0: 1.0, 1: -0.5, 3: 0.25})
            a = 100 * math.pi**2 / (math.log(q0) * gamma**2)
            v = P.reduced_inner_product_lattice(f, f, 0, 0, a, 0, mu, J=3).real
            worst = max(worst, abs(v / P.asymptotic_small_h(f, a, mu)["narrow"] - 1))
        notes.append(f"adjointness {adj:.1e} <= 1e-9; {scans} scans positive; small-h deviation {100 * worst:.2f}% <= 5% at h = 1e-3")
        assert adj <= 1e-9 and worst <= 0.05


def test_criterion_10_spectra_and_quantization(criterion):
    with criterion(10, "momentum spectra and kappa quantization") as notes:
        res = max(P.eigen_residual(3, 0.5, kappa=k, M_trunc=20, operator=op).residual for op in ("p0", "pp") for k in (0.7, 1.3))
        exps = (0.0, 2.0, -2.0, 4.0, -4.0, 1.0, -1.0, 0.5, 1.5, 3.0, 0.25)
        for N in (4, 6):
            reps = P.kappa_quantization_check(N, 0.5, exponents=exps)
            passed = {r.exponent for r in reps if r.passed}
            assert passed == {e for e in exps if e % 2 == 0}, f"N={N}: pass class {sorted(passed)}"
        notes.append(f"eigen residual {res:.1e} <= 1e-10; pass class is kappa^2 q^(2Z) for N = 4, 6")
        assert res <= 1e-10


def test_criterion_11_special_functions(criterion):
    with criterion(11, "basic hypergeometric series") as notes:
        three = Scalar(3) * Q
        assert S.satisfies_product_equation(S.phi00(Q, 20), ZERO, Q)
        assert S.satisfies_product_equation(S.product_series(three, Q, 20), three, Q)
        assert S.satisfies_product_equation(S.product_series(Q * Q, Q, 20), Q * Q, Q)
        q0 = 0.4
        heine = max(
            abs(S.heine_lhs(0, 0, q0**2, q0, z) - S.heine_rhs(0, 0, q0**2, q0, z)) / abs(S.heine_lhs(0, 0, q0**2, q0, z))
            for z in (-0.9, -0.3, 0.2, 0.6)
        )
        assert S.q_gaussian_recursion_holds(Q, 20)
        notes.append(f"product identities exact to order 20; Heine {float(heine):.1e} <= 1e-12; q-gaussian recursion exact to order 20")
        assert heine <= 1e-12
