"""Batch driver: ``qeuclid verify|scan|table``.

Suites are lists of check groups.  Each group is a module-level function
returning a list of check records, so groups can run in a process pool;
the report is assembled in the parent in a fixed order.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import csv
import io
import json
import math
import os
import sys
import time
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

SCHEMA_VERSION = 1
SUITES = ("rmat", "algebra", "harmonic", "exterior", "integrate", "specfun", "pseudo-m1", "pseudo-lattice")
TABLE_KINDS = ("spectra", "kernel", "gram")
MAX_N = 16
MAX_DEGREE = 8
MAX_LEVEL = 4


class ConfigError(ValueError):
    """Invalid configuration; maps to exit status 2."""


@dataclass(frozen=True)
class MeasureSpec:
    variant: str = "lebesgue"
    r0: str = "1"
    coeffs: tuple = ()

    def build(self):
        from .integrate import RadialMeasure

        if self.variant == "lebesgue":
            return RadialMeasure.lebesgue()
        if self.variant == "jackson":
            return RadialMeasure.jackson(self.r0)
        return RadialMeasure.fourier(dict(self.coeffs))

    def label(self) -> str:
        if self.variant == "jackson":
            return f"jackson:{self.r0}"
        if self.variant == "fourier":
            return "fourier:" + ",".join(f"{k}={v!r}" for k, v in self.coeffs)
        return self.variant


@dataclass
class SuiteConfig:
    command: str = "verify"
    suite: str = "all"
    N: int = 3
    q: Optional[float] = None
    max_degree: int = 6
    max_level: Optional[int] = None
    measure: MeasureSpec = field(default_factory=MeasureSpec)
    beta: float = 0.0
    gamma: int = 1
    a: Fraction = Fraction(-1, 2)
    b: Fraction = Fraction(1, 2)
    tol: float = 1e-8
    seed: int = 0
    count: int = 1000
    grid: int = 200
    kind: Optional[str] = None
    report: Optional[str] = None
    format: str = "json"
    timing: bool = True

    def q0(self, default: float) -> float:
        return default if self.q is None else self.q

    def params(self) -> dict:
        out = {}
        for k in ("suite", "N", "q", "max_degree", "max_level", "beta", "gamma", "tol", "seed", "count", "grid", "kind"):
            out[k] = getattr(self, k)
        out["a"] = str(self.a)
        out["b"] = str(self.b)
        out["measure"] = self.measure.label()
        return out


# parsing


def parse_measure(text: str) -> MeasureSpec:
    kind, _, arg = text.partition(":")
    if kind == "lebesgue" and not arg:
        return MeasureSpec("lebesgue")
    if kind == "jackson":
        r0 = arg or "1"
        if r0 not in ("1", "sqrt_q"):
            raise ConfigError(f"jackson lattice origin must be 1 or sqrt_q, got {r0!r}")
        return MeasureSpec("jackson", r0=r0)
    if kind == "fourier" and arg:
        return MeasureSpec("fourier", coeffs=_read_fourier(arg))
    raise ConfigError(f"unknown measure {text!r}")


def _read_fourier(path: str) -> tuple:
    """Lines ``k value`` (k >= 0); ``#`` starts a comment."""
    try:
        with open(path) as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError(f"cannot read fourier coefficients: {exc}") from exc
    out = {}
    for n, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.replace(",", " ").split()
        try:
            k, v = int(parts[0]), float(parts[1])
        except (ValueError, IndexError):
            raise ConfigError(f"{path}:{n}: expected 'k value', got {line!r}") from None
        if k < 0:
            raise ConfigError(f"{path}:{n}: mode index must be >= 0")
        out[k] = v
    if 0 not in out or out[0] <= 0:
        raise ConfigError(f"{path}: the mean m_0 must be given and positive")
    return tuple(sorted(out.items()))


def _rational(text) -> Fraction:
    try:
        return Fraction(str(text).strip())
    except (ValueError, ZeroDivisionError):
        raise ConfigError(f"not a rational number: {text!r}") from None


_CONVERTERS = {
    "suite": str,
    "N": int,
    "q": float,
    "max_degree": int,
    "max_level": int,
    "measure": parse_measure,
    "beta": float,
    "gamma": int,
    "a": _rational,
    "b": _rational,
    "tol": float,
    "seed": int,
    "count": int,
    "grid": int,
    "report": str,
    "format": str,
}


def read_config_file(path: str) -> dict:
    """Plain ``key = value`` lines; ``#`` comments; dashes in keys are allowed."""
    try:
        with open(path) as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    out = {}
    for n, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"{path}:{n}: expected 'key = value', got {line!r}")
        key = key.strip().replace("-", "_")
        if key not in _CONVERTERS:
            raise ConfigError(f"{path}:{n}: unknown key {key!r}")
        try:
            out[key] = _CONVERTERS[key](value.strip())
        except ConfigError as exc:
            raise ConfigError(f"{path}:{n}: {exc}") from None
        except ValueError:
            raise ConfigError(f"{path}:{n}: bad value for {key}: {value.strip()!r}") from None
    return out


def validate(cfg: SuiteConfig) -> SuiteConfig:
    if cfg.suite not in SUITES + ("all",):
        raise ConfigError(f"unknown suite {cfg.suite!r}")
    if cfg.N < 3:
        raise ConfigError("N must be at least 3")
    if cfg.N > MAX_N:
        raise ConfigError(f"N={cfg.N} exceeds the guard N <= {MAX_N}")
    if not 1 <= cfg.max_degree <= MAX_DEGREE:
        raise ConfigError(f"max-degree={cfg.max_degree} outside the guard 1..{MAX_DEGREE}")
    if cfg.max_level is not None and not 0 <= cfg.max_level <= MAX_LEVEL:
        raise ConfigError(f"max-level={cfg.max_level} outside the guard 0..{MAX_LEVEL}")
    if cfg.q is not None and (not math.isfinite(cfg.q) or cfg.q <= 0 or cfg.q == 1):
        raise ConfigError("q must be positive and different from 1")
    if cfg.beta not in (0.0, 0.5):
        raise ConfigError("beta must be 0 or 0.5")
    if cfg.gamma < 1:
        raise ConfigError("gamma must be a positive integer")
    if not cfg.tol > 0:
        raise ConfigError("tol must be positive")
    if cfg.count < 1 or cfg.grid < 2:
        raise ConfigError("count and grid must be positive")
    if cfg.format not in ("json", "csv"):
        raise ConfigError("format must be json or csv")
    if cfg.command == "table" and cfg.kind not in TABLE_KINDS:
        raise ConfigError(f"table kind must be one of {', '.join(TABLE_KINDS)}")
    return cfg


# check records


def _check(cid, ref, ok, residual=None, tolerance=0.0, expected_fail=False) -> dict:
    """One report entry.  Exact checks carry residual 0 or 1 and tolerance 0."""
    if residual is None:
        residual = 0.0 if ok else 1.0
    if expected_fail:
        status = "xfail" if not ok else "xpass"
    else:
        status = "pass" if ok else "fail"
    return {"id": cid, "paper_ref": ref, "status": status, "residual": float(residual), "tolerance": float(tolerance)}


def _numeric(cid, ref, residual, tol, **kw) -> dict:
    residual = float(residual)
    return _check(cid, ref, bool(residual <= tol), residual, tol, **kw)


# suite groups (module level so they pickle into worker processes)


def group_rmat(N: int) -> list:
    from . import rmat

    bd = rmat.calibrate(N)
    R, Rinv = bd.R, bd.Rinv
    ranks = rmat.projector_ranks(N)
    want = (N * (N + 1) // 2 - 1, N * (N - 1) // 2, 1)
    labels = rmat.pair_labels(N)
    return [
        _check("rmat.yang_baxter", "braid relation R12 R23 R12 = R23 R12 R23", rmat._ybe_holds(R, N)),
        _check("rmat.minimal_polynomial", "projector decomposition, eigenvalues q, -1/q, q^(1-N)", rmat._spectral_checks(R, N)),
        _check("rmat.trace_projector", "closed form of the trace projector in the metric", rmat.projector_matrices(N)[2] == rmat._pt_closed_form(N)),
        _check("rmat.metric_compatibility", "metric intertwines R and its inverse", rmat._metric_compatible(R, Rinv, N)),
        _check("rmat.inverse", "R R^-1 = 1", R @ Rinv == rmat.SparseMatrix.identity(labels)),
        _check("rmat.projector_ranks", f"ranks {want}", tuple(ranks) == want),
    ]


def group_algebra_rewriting(N: int, max_degree: int, count: int, seed: int) -> list:
    from . import algebra as A

    bad = A.confluence_check(N, count, max_degree, seed)
    cent = A.check_centrality(N)
    return [
        _check("algebra.confluence", f"normal forms agree on {count} random words", bad == 0, bad / count),
        _check("algebra.d_squared", "exterior derivative squares to zero", A.check_d_squared(N)),
        _check("algebra.r2_central", "x.x commutes with the coordinates", cent["r2"]),
        _check("algebra.box_central", "d.d commutes with the derivatives", cent["box"]),
    ]


def group_algebra_hatted(N: int) -> list:
    from . import algebra as A

    return [_check("algebra.d_hat_squared", "hatted exterior derivative squares to zero", A.check_d_hat_squared(N))]


def group_algebra_star(N: int, max_degree: int, count: int, seed: int) -> list:
    from . import algebra as A

    bad = A.star_involution_check(N, count, min(max_degree, 4), seed)
    return [_check("algebra.star_involution", f"star is an involution on {count} random elements", bad == 0, bad / count)]


def group_harmonic(N: int, L: int) -> list:
    from . import harmonic as H

    out = []
    for name, ok in H.verify_radial_identities(N, L, 3).items():
        out.append(_check(f"harmonic.{name}", "action of coordinates and derivatives on harmonic polynomials", ok))
    for name, ok in H.verify_star_similarity(N, L, 3).items():
        out.append(_check(f"harmonic.{name}", "star structure as a similarity transformation", ok))
    return out


def group_exterior(N: int) -> list:
    from . import exterior as E
    from math import comb

    out = [
        _check("exterior.epsilon_lowering", "metric lowering of the epsilon tensor", E.check_epsilon_lowering(N)),
        _check(
            "exterior.epsilon_literal_contraction",
            "lowering contracted with the reversed epsilon (known not to hold)",
            E.check_epsilon_reversed_contraction(N),
            expected_fail=True,
        ),
        _check("exterior.epsilon_contraction", "double epsilon contraction equals an antisymmetrizer", E.check_epsilon_contraction(N)),
        _check("exterior.hodge_involution", "Hodge star squares to the identity", E.check_hodge_involution(N)),
        _check("exterior.hodge_unit", "Hodge star of 1 is the volume form", E.check_hodge_unit(N)),
        _check(
            "exterior.dimensions",
            "dimension of p-forms is binomial(N, p)",
            all(E.exterior_dimension(N, p) == comb(N, p) for p in range(N + 1)),
        ),
    ]
    for name, ok in E.laplacian_identity_check(N).items():
        out.append(_check(f"exterior.{name}", "Laplacian identities", ok))
    return out


def _test_family(N):
    from . import integrate as I
    from .coeff import structure_constants

    idx = structure_constants(N).indices
    g = I.gaussian_profile(1.0)
    f = I.ProfiledFunction.monomial(N, (idx[0],), g) + I.ProfiledFunction.monomial(N, (idx[-1], idx[0]), g)
    phi = I.ProfiledFunction.monomial(N, (idx[0],), g) + I.ProfiledFunction.monomial(N, (), g)
    psi = I.ProfiledFunction.monomial(N, (idx[-1],), I.gaussian_profile(0.5))
    return f, phi, psi


def group_integrate(N: int, q0: float, measure: MeasureSpec, tol: float) -> list:
    from . import integrate as I
    from .coeff import structure_constants

    idx = structure_constants(N).indices
    mu = measure.build()
    # exact lattice values need rational roots of q, so this check runs at q = 1/4 or 4
    qf = Fraction(1, 4) if q0 < 1 else Fraction(4)
    lz = I.rational_profile(4)
    fd = I.ProfiledFunction.monomial(N, (idx[0], idx[-1]), lz) + I.ProfiledFunction.monomial(N, (), lz)
    out = [_check("integrate.dilatation", f"Jackson sum invariant under q-dilatation (q = {qf})", I.check_dilatation_invariance(fd, qf))]
    f, phi, psi = _test_family(N)
    stokes = I.verify_stokes(f, mu, q0, tol)
    out.append(_numeric("integrate.stokes", "integral of a total derivative vanishes", max(v[0] for v in stokes.values()), tol))
    adj = I.verify_adjointness(phi, psi, mu, q0)
    out.append(
        _numeric("integrate.adjointness", "adjoint of p is q^-N times hatted p", max(v[0] for v in adj.values()), tol)
    )
    return out


def group_specfun(q0: float) -> list:
    from . import specfun as S
    from .coeff import Q, ZERO, Scalar

    three = Scalar(3) * Q
    heine = max(
        abs(S.heine_lhs(a1, a2, b, q0, z) - S.heine_rhs(a1, a2, b, q0, z))
        for a1, a2, b, z in ((0, 0, q0**2, 0.3), (0, 0, q0**-1, -0.7), (0.2, 0.3, 0.5, 0.6))
    )
    return [
        _check("specfun.product_0phi0", "0phi0 series equals its infinite product", S.satisfies_product_equation(S.phi00(Q, 20), ZERO, Q)),
        _check("specfun.product_1phi0", "1phi0 series equals its infinite product", S.satisfies_product_equation(S.product_series(three, Q, 20), three, Q)),
        _numeric("specfun.heine", "Heine transformation of 2phi1", heine, 1e-12),
        _check("specfun.q_gaussian_recursion", "q-gaussian dilatation recursion", S.q_gaussian_recursion_holds(Q, 20)),
        _check("specfun.q_exponential", "e_q(z) as a 0phi0 series", S.eq_as_phi00(Q, 20)),
        _check("specfun.phi_J", "phi^J as a 2phi1 series", all(S.phi_J_as_2phi1(Q, J, 20) for J in range(3))),
    ]


def _sigma(a, b):
    from .harmonic import SigmaDescriptor

    return SigmaDescriptor(a=Fraction(a), b=Fraction(b))


def group_pseudo_m1(N: int, q0: float, a: Fraction, b: Fraction, tol: float, seed: int) -> list:
    from . import pseudo as P
    from .harmonic import _spanning_indices

    sig = _sigma(a, b)
    fam = P.band_limited_family(N, seed=seed, count=4, q0=q0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        ps = P.apply_sigma_grid(sig, fam[0], 1, q0)
        qs = P.apply_sigma_grid(sig, fam[1], 1, q0)
    e = P.sigma_product_forms(ps, qs, sig, 1, q0)
    ref = e["definition"]
    spread = max(abs(v - ref) for v in e.values()) / max(abs(ref), 1e-300)
    out = [_numeric("pseudo.m1_scalar_product_forms", "sigma-picture scalar product in three forms", spread, 1e-10)]
    I1 = tuple(_spanning_indices(N, 1))
    phi = {(0, ()): fam[0], (1, tuple(I1[0])): fam[1]}
    psi = {(0, ()): fam[2], (1, tuple(I1[-1])): fam[3]}
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        phis = P.apply_sigma_components(sig, phi, q0)
        psis = P.apply_sigma_components(sig, psi, q0)
        worst = max(P.momentum_hermiticity(phis, psis, alpha, sig, q0)["relative"] for alpha in range(N))
    out.append(_numeric("pseudo.momentum_hermiticity", "improved momenta are hermitian", worst, tol))
    return out


_RESIDUE_CASES = ((0, 1, 2), (-1, 0, 1), (0, 2, 3), (1, 2))


def group_pseudo_lattice(N, q0, gamma, beta, a, b, measure: MeasureSpec, tol, seed) -> list:
    import numpy as np

    from . import pseudo as P

    mu = measure.build()
    out = []
    worst = 0.0
    for n, js in enumerate(_RESIDUE_CASES):
        f = P.minimal_l2_combination(N, gamma, beta, q0, list(js), seed=seed + n)
        for w in (-1.5, 0.5, 2.0):
            r = P.residues_to_spectrum(f, w)[0]
            d = P.direct_spectrum(f, w)
            worst = max(worst, abs(r - d) / abs(d))
    out.append(_numeric("pseudo.residue_spectrum", "residue formula against direct quadrature", worst, tol))
    if mu.variant == "lebesgue":
        return out
    a, b = float(a), float(b)
    h = P.log_q(q0)
    if a * h < 0:
        a = -a
    M = P.m_matrix(0, 0, a, b, mu, beta, gamma, N, 3, q0)
    Ms = P.m_matrix(a, b, 0, 0, mu, beta, gamma, N, 3, q0)
    Md = P.m_matrix(a, b, a, b, mu, beta, gamma, N, 3, q0)
    scale = np.max(np.abs(M.values))
    out.append(_numeric("pseudo.m_reality", "M matrix entries are real", M.max_imag / scale, 1e-12))
    out.append(_numeric("pseudo.m_hermiticity", "M(a,b;a,b) is hermitian", Md.hermiticity_residual(), 1e-10))
    out.append(_numeric("pseudo.m_transposed_symmetry", "M(a,b;a',b')^T = M(a',b';a,b)", np.max(np.abs(M.values.T - Ms.values)) / scale, 1e-10))
    out.append(
        _numeric(
            "pseudo.m_literal_swap",
            "M(a,b;a',b') = M(a',b';a,b) entrywise (known not to hold)",
            np.max(np.abs(M.values - Ms.values)) / scale,
            1e-10,
            expected_fail=True,
        )
    )
    f = P.minimal_l2_combination(N, gamma, beta, q0, [-1, 0, 1], seed=seed + 1)
    g = P.minimal_l2_combination(N, gamma, beta, q0, [0, 1, 2], seed=seed + 2)
    adj = P.sigma_adjointness(f, g, a, b, mu)
    out.append(_numeric("pseudo.sigma_adjointness", "sigma moves across the lattice scalar product", adj["residual"], 1e-9))
    if mu.variant == "jackson" and N % gamma == 0 and a * h > 0:
        scan = P.positivity_scan(mu, a, q0, gamma, N, grid=200, beta=beta)
        out.append(_check("pseudo.positivity_scan", "measured kernel positive on (-1, 1)", scan.passed, max(0.0, -scan.minimum)))
    return out


# suite assembly


def default_q(cfg: SuiteConfig, suite: str) -> float:
    if cfg.q is not None:
        return cfg.q
    if suite == "pseudo-m1":
        return 0.8
    if suite == "pseudo-lattice":
        # keep a h > 0 so that the positivity scan applies
        return 2.0 if cfg.a > 0 else 0.5
    return 0.6


def plan(cfg: SuiteConfig) -> list:
    """``[(suite, function, kwargs)]`` in report order."""
    suites = SUITES if cfg.suite == "all" else (cfg.suite,)
    N = cfg.N
    tasks = []
    for s in suites:
        q0 = default_q(cfg, s)
        if s == "rmat":
            tasks.append((s, group_rmat, {"N": N}))
        elif s == "algebra":
            kw = {"N": N, "max_degree": cfg.max_degree, "count": cfg.count, "seed": cfg.seed}
            tasks.append((s, group_algebra_rewriting, kw))
            tasks.append((s, group_algebra_hatted, {"N": N}))
            tasks.append((s, group_algebra_star, kw))
        elif s == "harmonic":
            L = cfg.max_level if cfg.max_level is not None else (3 if N == 3 else 2)
            tasks.append((s, group_harmonic, {"N": N, "L": L}))
        elif s == "exterior":
            tasks.append((s, group_exterior, {"N": N}))
        elif s == "integrate":
            tasks.append((s, group_integrate, {"N": N, "q0": q0, "measure": cfg.measure, "tol": cfg.tol}))
        elif s == "specfun":
            tasks.append((s, group_specfun, {"q0": q0 if q0 < 1 else 1 / q0}))
        elif s == "pseudo-m1":
            kw = {"N": N, "q0": q0, "a": cfg.a, "b": cfg.b, "tol": cfg.tol, "seed": cfg.seed}
            tasks.append((s, group_pseudo_m1, kw))
        elif s == "pseudo-lattice":
            measure = cfg.measure if cfg.measure.variant != "lebesgue" else MeasureSpec("jackson")
            kw = dict(N=N, q0=q0, gamma=cfg.gamma, beta=cfg.beta, a=cfg.a, b=cfg.b, measure=measure, tol=cfg.tol, seed=cfg.seed)
            tasks.append((s, group_pseudo_lattice, kw))
    return tasks


def worker_count(ntasks: int) -> int:
    env = os.environ.get("QEUCLID_THREADS")
    cap = os.cpu_count() or 1
    if env:
        try:
            cap = int(env)
        except ValueError:
            raise ConfigError(f"QEUCLID_THREADS must be an integer, got {env!r}") from None
        if cap < 1:
            raise ConfigError("QEUCLID_THREADS must be at least 1")
    return max(1, min(cap, ntasks))


def _timed(fn, kw):
    t = time.perf_counter()
    return fn(**kw), time.perf_counter() - t


def calibration_record(N: int, suites) -> dict:
    from . import rmat

    bd = rmat.calibrate(N)
    rec = {"braid_orientation": bd.calibration["heaviside"], "rho_sign": bd.rho_sign}
    g, _ = rmat.metric(N)
    rec["metric"] = {f"{i},{j}": repr(v) for (i, j), v in sorted(g.items())}
    if "exterior" in suites:
        from .exterior import hodge_constants

        rec["hodge_constants"] = {str(p): repr(c) for p, c in sorted(hodge_constants(N).items())}
    if "harmonic" in suites:
        rec["harmonic_normalization"] = "symmetric trace-free projector rows; sphere volume 1"
    return rec


def run(cfg: SuiteConfig) -> tuple:
    """Run the configured suites; returns ``(report, exit_code)``."""
    tasks = plan(cfg)
    workers = worker_count(len(tasks))
    t0 = time.perf_counter()
    if workers == 1:
        results = [_timed(fn, kw) for _, fn, kw in tasks]
    else:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_timed, fn, kw) for _, fn, kw in tasks]
            results = [f.result() for f in futures]
    checks = []
    timing = {}
    for (suite, fn, _), (group, dt) in zip(tasks, results):
        for c in group:
            checks.append({"suite": suite} | c)
        timing[fn.__name__] = round(dt, 3)
    timing["total"] = round(time.perf_counter() - t0, 3)
    suites = sorted({s for s, _, _ in tasks})
    report = {
        "schema_version": SCHEMA_VERSION,
        "suite": cfg.suite,
        "params": cfg.params(),
        "calibration": calibration_record(cfg.N, suites),
        "checks": checks,
    }
    if cfg.timing:
        report["timing"] = timing
    failed = any(c["status"] in ("fail", "xpass") for c in checks)
    return report, 1 if failed else 0


# scans and tables


def run_scan(cfg: SuiteConfig) -> tuple:
    """Positivity scan of the measured kernel; rows ``(omega, value)``."""
    from . import pseudo as P

    if cfg.suite != "pseudo-lattice":
        raise ConfigError("scan is available for the pseudo-lattice suite")
    if cfg.measure.variant == "lebesgue":
        raise ConfigError("the positivity scan needs a jackson or fourier measure")
    q0 = default_q(cfg, "pseudo-lattice")
    a = float(cfg.a)
    if a * P.log_q(q0) <= 0:
        raise ConfigError("the positivity scan needs a log(q) > 0")
    if cfg.N % cfg.gamma:
        raise ConfigError("the positivity scan needs gamma | N")
    s = P.positivity_scan(cfg.measure.build(), a, q0, cfg.gamma, cfg.N, grid=cfg.grid, beta=cfg.beta)
    rows = [(float(w), float(v)) for w, v in zip(s.omega, s.values)]
    summary = {
        "schema_version": SCHEMA_VERSION,
        "suite": cfg.suite,
        "params": cfg.params() | {"q": q0},
        "checks": [_check("pseudo.positivity_scan", "measured kernel positive on (-1, 1)", s.passed, max(0.0, -s.minimum))],
        "minimum": s.minimum,
        "argmin": s.argmin,
        "endpoint": s.endpoint,
    }
    return ("omega", "value"), rows, summary, 0 if s.passed else 1


def emit_table(cfg: SuiteConfig) -> tuple:
    """``(header, rows)`` for the requested table kind."""
    import numpy as np

    from . import pseudo as P

    kind = cfg.kind
    if kind == "spectra":
        q0 = cfg.q0(0.5)
        kappa = 1.0
        rows = P.spectra_table(cfg.N, kappa, q0, range(-2, 3))
        return ("pi_n", "a", "eigenvalue"), [(p, a, float(v)) for p, a, v in rows]
    if kind == "kernel":
        q0 = default_q(cfg, "pseudo-lattice")
        a = float(cfg.a)
        if a * P.log_q(q0) <= 0:
            raise ConfigError("the kernel needs a log(q) > 0")
        delta, t = P.kernel_parameters(a, q0, cfg.gamma)
        odd = (cfg.N // cfg.gamma) % 2 == 1
        n = max(2, int(round(math.sqrt(cfg.grid))))
        om = -1 + (np.arange(n) + 0.5) * (2.0 / n)
        ys = np.linspace(-1.0, 1.0, n)
        K = P.kernel_K(om, ys, delta, t, odd=odd)
        rows = [(float(om[i]), float(ys[j]), float(K[i, j])) for i in range(n) for j in range(n)]
        return ("omega", "y", "K"), rows
    from .harmonic import spherical_gram

    L = cfg.max_level if cfg.max_level is not None else 2
    q0 = cfg.q0(0.6)
    rows = []
    for l in range(L + 1):
        for lp in range(L + 1):
            for (I, J), v in sorted(spherical_gram(cfg.N, l, lp).items()):
                rows.append((l, lp, " ".join(map(str, I)), " ".join(map(str, J)), float(v.eval(q0))))
    return ("l", "l_prime", "I", "I_prime", "value"), rows


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(x) if isinstance(x, float) else x for x in r])
    return buf.getvalue()


def _write(text: str, path: Optional[str]):
    if path:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _checks_csv(report) -> str:
    cols = ("suite", "id", "paper_ref", "status", "residual", "tolerance")
    return _csv(cols, [tuple(c[k] for k in cols) for c in report["checks"]])


def _summary_lines(checks) -> str:
    return "".join(f"{c['status'].upper():5s} {c['id']} residual={c['residual']:.3g} tol={c['tolerance']:.3g}\n" for c in checks)


# argument handling


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qeuclid", description="Verification suites for the q-deformed Euclidean calculus.")
    p.add_argument("command", choices=("verify", "scan", "table"))
    p.add_argument("kind", nargs="?", help="table kind: spectra, kernel or gram")
    p.add_argument("--config", help="key = value file; command-line flags win")
    p.add_argument("--suite")
    p.add_argument("--N", type=int)
    p.add_argument("--q", type=float)
    p.add_argument("--max-degree", type=int)
    p.add_argument("--max-level", type=int)
    p.add_argument("--measure", help="lebesgue | jackson[:1|:sqrt_q] | fourier:PATH")
    p.add_argument("--beta", type=float)
    p.add_argument("--gamma", type=int)
    p.add_argument("--a", help="rational, e.g. -1/2")
    p.add_argument("--b", help="rational, e.g. 1/2")
    p.add_argument("--tol", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--count", type=int, help="random samples for the algebra suite")
    p.add_argument("--grid", type=int, help="scan and kernel grid size")
    p.add_argument("--report", help="output path (default stdout)")
    p.add_argument("--format", choices=("json", "csv"))
    p.add_argument("--no-timing", action="store_true", help="omit the timing block for byte-stable reports")
    return p


def config_from_args(argv) -> SuiteConfig:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        if exc.code == 0:
            raise
        raise ConfigError("invalid command line") from None
    values = read_config_file(ns.config) if ns.config else {}
    flag_map = {
        "suite": ns.suite,
        "N": ns.N,
        "q": ns.q,
        "max_degree": ns.max_degree,
        "max_level": ns.max_level,
        "measure": parse_measure(ns.measure) if ns.measure else None,
        "beta": ns.beta,
        "gamma": ns.gamma,
        "a": _rational(ns.a) if ns.a is not None else None,
        "b": _rational(ns.b) if ns.b is not None else None,
        "tol": ns.tol,
        "seed": ns.seed,
        "count": ns.count,
        "grid": ns.grid,
        "report": ns.report,
        "format": ns.format,
    }
    values.update({k: v for k, v in flag_map.items() if v is not None})
    cfg = SuiteConfig(command=ns.command, kind=ns.kind, timing=not ns.no_timing, **values)
    if ns.command == "scan" and ns.suite is None and "suite" not in values:
        cfg.suite = "pseudo-lattice"
    if ns.command == "table" and ns.format is None and "format" not in values:
        cfg.format = "csv"
    if ns.command == "scan" and ns.measure is None and "measure" not in values:
        cfg.measure = MeasureSpec("jackson")
    return validate(cfg)


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        cfg = config_from_args(argv)
        if cfg.command == "verify":
            report, code = run(cfg)
            text = _checks_csv(report) if cfg.format == "csv" else json.dumps(report, indent=2) + "\n"
            _write(text, cfg.report)
            if cfg.report:
                sys.stderr.write(_summary_lines(report["checks"]))
            return code
        if cfg.command == "scan":
            header, rows, summary, code = run_scan(cfg)
            if cfg.format == "csv":
                _write(_csv(header, rows), cfg.report)
            else:
                _write(json.dumps(summary | {"rows": rows}, indent=2) + "\n", cfg.report)
            sys.stderr.write(_summary_lines(summary["checks"]))
            return code
        header, rows = emit_table(cfg)
        if cfg.format == "json":
            _write(json.dumps({"schema_version": SCHEMA_VERSION, "kind": cfg.kind, "columns": header, "rows": rows}, indent=2) + "\n", cfg.report)
        else:
            _write(_csv(header, rows), cfg.report)
        return 0
    except ConfigError as exc:
        sys.stderr.write(f"qeuclid: config error: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
