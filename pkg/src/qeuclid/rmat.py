"""SO_q(N) vector-representation data: metric, braid matrix, projectors.

Matrices are stored sparsely as nested dicts ``{row: {col: Scalar}}``; rows and
columns are tuples of indices from the set ``-n..n`` (0 only for odd N).
A rank-4 tensor ``T^{ij}_{kl}`` is the matrix with row ``(i, j)`` and column
``(k, l)``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .coeff import ONE, ZERO, Q, Scalar, eval_numeric, q_pow, structure_constants

MAX_N = 16


class CalibrationError(RuntimeError):
    """No braid-matrix entry convention passed the identity suite."""


@dataclass(frozen=True)
class IndexSet:
    N: int

    @property
    def indices(self) -> tuple:
        return structure_constants(self.N).indices

    @property
    def n(self) -> int:
        return self.N // 2

    def pair(self, i: int) -> int:
        return -i

    def position(self, i: int) -> int:
        return self.indices.index(i)

    def __len__(self) -> int:
        return self.N

    def __iter__(self):
        return iter(self.indices)


class SparseMatrix:
    """Sparse matrix over Scalar keyed by arbitrary hashable labels."""

    __slots__ = ("rows",)

    def __init__(self, rows=None):
        self.rows = {}
        if rows:
            for r, cols in rows.items():
                cc = {c: v for c, v in cols.items() if v}
                if cc:
                    self.rows[r] = cc

    @staticmethod
    def identity(labels) -> "SparseMatrix":
        return SparseMatrix({l: {l: ONE} for l in labels})

    def get(self, r, c) -> Scalar:
        return self.rows.get(r, {}).get(c, ZERO)

    def items(self):
        for r, cols in self.rows.items():
            for c, v in cols.items():
                yield r, c, v

    def __matmul__(self, other: "SparseMatrix") -> "SparseMatrix":
        out = {}
        orows = other.rows
        for r, cols in self.rows.items():
            acc = {}
            for m, a in cols.items():
                for c, b in orows.get(m, {}).items():
                    acc[c] = acc.get(c, ZERO) + a * b
            out[r] = acc
        return SparseMatrix(out)

    def __add__(self, other: "SparseMatrix") -> "SparseMatrix":
        out = {r: dict(c) for r, c in self.rows.items()}
        for r, c, v in other.items():
            row = out.setdefault(r, {})
            row[c] = row.get(c, ZERO) + v
        return SparseMatrix(out)

    def __neg__(self):
        return self.scale(-ONE)

    def __sub__(self, other):
        return self + (-other)

    def scale(self, s) -> "SparseMatrix":
        return SparseMatrix({r: {c: v * s for c, v in cols.items()} for r, cols in self.rows.items()})

    def shift(self, s, labels) -> "SparseMatrix":
        """``self + s * identity``."""
        return self + SparseMatrix.identity(labels).scale(s)

    def transpose(self) -> "SparseMatrix":
        out = {}
        for r, c, v in self.items():
            out.setdefault(c, {})[r] = v
        return SparseMatrix(out)

    def is_zero(self) -> bool:
        return not self.rows

    def __eq__(self, other) -> bool:
        return (self - other).is_zero()

    def trace(self) -> Scalar:
        t = ZERO
        for r, cols in self.rows.items():
            if r in cols:
                t = t + cols[r]
        return t

    def nnz(self) -> int:
        return sum(len(c) for c in self.rows.values())

    def to_numpy(self, labels, q0: float) -> np.ndarray:
        pos = {l: p for p, l in enumerate(labels)}
        a = np.zeros((len(labels), len(labels)))
        for r, c, v in self.items():
            a[pos[r], pos[c]] = eval_numeric(v, q0)
        return a


class LabeledTensor:
    """Multi-index array over Scalar on the index set -n..n (zero included for odd N).

    Entries are addressed by a flat tuple of ``upper + lower`` indices; only
    nonzero entries are stored, every other entry reads as zero.
    """

    def __init__(self, N: int, n_upper: int, n_lower: int, entries: dict):
        self.N = N
        self.n_upper = n_upper
        self.n_lower = n_lower
        self.entries = {k: v for k, v in entries.items() if v}

    @property
    def rank(self) -> int:
        return self.n_upper + self.n_lower

    def __getitem__(self, idx) -> Scalar:
        return self.entries.get(tuple(idx), ZERO)

    def as_matrix(self) -> SparseMatrix:
        rows = {}
        for k, v in self.entries.items():
            rows.setdefault(k[: self.n_upper], {})[k[self.n_upper :]] = v
        return SparseMatrix(rows)

    @staticmethod
    def from_matrix(N, n_upper, n_lower, m: SparseMatrix) -> "LabeledTensor":
        return LabeledTensor(N, n_upper, n_lower, {tuple(r) + tuple(c): v for r, c, v in m.items()})

    def dense(self):
        idx = structure_constants(self.N).indices
        out = {}
        for k in itertools.product(idx, repeat=self.rank):
            out[k] = self[k]
        return out


def pair_labels(N: int, p: int = 2):
    return list(itertools.product(structure_constants(N).indices, repeat=p))


# metric and U


@lru_cache(maxsize=None)
def metric(N: int):
    """Return ``(g_lower, g_upper)`` as dicts ``{(i, j): Scalar}``.

    Both equal ``q^{-rho_i} delta_{i,-j}``.
    """
    sc = structure_constants(N)
    g = {(i, -i): q_pow(-sc.rho[i]) for i in sc.indices}
    return g, dict(g)


def metric_tensor(N: int) -> LabeledTensor:
    g, _ = metric(N)
    return LabeledTensor(N, 0, 2, g)


def metric_trace(N: int) -> Scalar:
    """``g^{sm} g_{sm}``."""
    g, gu = metric(N)
    return sum((gu[k] * g[k] for k in g), ZERO)


@lru_cache(maxsize=None)
def u_matrix(N: int) -> LabeledTensor:
    """``U^i_j = g^{ik} g_{jk}``."""
    g, gu = metric(N)
    idx = structure_constants(N).indices
    ent = {}
    for i in idx:
        for j in idx:
            s = ZERO
            for k in idx:
                s = s + gu.get((i, k), ZERO) * g.get((j, k), ZERO)
            ent[(i, j)] = s
    return LabeledTensor(N, 1, 1, ent)


# braid matrix


def _braid_variant(N: int, orientation: int, rho_sign: int) -> SparseMatrix:
    sc = structure_constants(N)
    idx = sc.indices
    rho = {i: rho_sign * sc.rho[i] for i in idx}
    k = sc.k
    rows: dict = {}

    def add(i, j, a, b, v):
        row = rows.setdefault((i, j), {})
        row[(a, b)] = row.get((a, b), ZERO) + v

    for i in idx:
        for j in idx:
            e = (1 if i == j else 0) - (1 if i == -j else 0)
            add(i, j, j, i, Q**e)
            if i != j and orientation * (j - i) > 0:
                add(i, j, i, j, k)
    for a in idx:
        for b in idx:
            if orientation * (a - b) > 0:
                add(-a, a, b, -b, -k * q_pow(rho[a] - rho[b]))
    return SparseMatrix(rows)


def _ybe_holds(R: SparseMatrix, N: int) -> bool:
    idx = structure_constants(N).indices
    R12 = _embed(R, N, 0, 3)
    R23 = _embed(R, N, 1, 3)
    return R12 @ R23 @ R12 == R23 @ R12 @ R23


def _embed(R: SparseMatrix, N: int, pos: int, length: int) -> SparseMatrix:
    """Act with a two-site matrix on sites ``pos, pos+1`` of ``length`` sites."""
    idx = structure_constants(N).indices
    rows = {}
    for left in itertools.product(idx, repeat=pos):
        for right in itertools.product(idx, repeat=length - pos - 2):
            for r, cols in R.rows.items():
                rows[left + r + right] = {left + c + right: v for c, v in cols.items()}
    return SparseMatrix(rows)


def _spectral_checks(R: SparseMatrix, N: int) -> bool:
    labels = pair_labels(N)
    lam = [Q, -Q.inverse(), q_pow(1 - N)]
    prod = R.shift(-lam[0], labels) @ R.shift(-lam[1], labels) @ R.shift(-lam[2], labels)
    return prod.is_zero()


def _metric_compatible(R: SparseMatrix, Rinv: SparseMatrix, N: int) -> bool:
    """Both identities of the metric/braid compatibility relation."""
    idx = structure_constants(N).indices
    g, gu = metric(N)
    for sgn in (0, 1):
        A, B = (R, Rinv) if sgn == 0 else (Rinv, R)
        for i, j, kk, h in itertools.product(idx, repeat=4):
            # g_{il} A^{lh}_{jk} = B^{hl}_{ij} g_{lk}
            l1 = -i
            lhs = g[(i, l1)] * A.get((l1, h), (j, kk))
            l2 = -kk
            rhs = B.get((h, l2), (i, j)) * g[(l2, kk)]
            if lhs != rhs:
                return False
            # g^{il} A^{jk}_{lh} = B^{ij}_{hl} g^{lk}
            lhs = gu[(i, l1)] * A.get((j, kk), (l1, h))
            rhs = B.get((i, j), (h, l2)) * gu[(l2, kk)]
            if lhs != rhs:
                return False
    return True


def _pt_closed_form(N: int) -> SparseMatrix:
    g, gu = metric(N)
    c = (Q**2 - ONE) / ((Q**N - ONE) * (ONE + q_pow(2 - N)))
    rows = {}
    for (i, j), a in gu.items():
        rows[(i, j)] = {(kk, l): c * a * b for (kk, l), b in g.items()}
    return SparseMatrix(rows)


@dataclass(frozen=True)
class BraidData:
    N: int
    R: SparseMatrix
    Rinv: SparseMatrix
    orientation: int
    rho_sign: int

    @property
    def calibration(self) -> dict:
        return {
            "heaviside": "index(k) > index(i)" if self.orientation > 0 else "index(k) < index(i)",
            "rho_sign": self.rho_sign,
        }


def _inverse_from_spectrum(R: SparseMatrix, N: int) -> SparseMatrix:
    """R^{-1} from the cubic minimal polynomial."""
    labels = pair_labels(N)
    a, b, c = Q, -Q.inverse(), q_pow(1 - N)
    # R^3 - e1 R^2 + e2 R - e3 = 0  =>  R^{-1} = (R^2 - e1 R + e2) / e3
    e1 = a + b + c
    e2 = a * b + a * c + b * c
    e3 = a * b * c
    R2 = R @ R
    return (R2 - R.scale(e1)).shift(e2, labels).scale(e3.inverse())


@lru_cache(maxsize=None)
def calibrate(N: int) -> BraidData:
    """Select the entry convention passing the full identity suite.

    Variants cover both Heaviside orientations and both signs of rho in the
    trace term.  Ties are broken in favour of the listed rho ordering.
    """
    if N < 3:
        raise ValueError("N must be at least 3")
    if N > MAX_N:
        raise ValueError(f"N={N} exceeds guard {MAX_N}")
    passing = []
    for rho_sign in (1, -1):
        for orientation in (1, -1):
            R = _braid_variant(N, orientation, rho_sign)
            if not _spectral_checks(R, N):
                continue
            Rinv = _inverse_from_spectrum(R, N)
            if not (R @ Rinv == SparseMatrix.identity(pair_labels(N))):
                continue
            if not _metric_compatible(R, Rinv, N):
                continue
            if not (_spectral_projectors(R, N)[2] == _pt_closed_form(N)):
                continue
            if not _ybe_holds(R, N):
                continue
            passing.append(BraidData(N, R, Rinv, orientation, rho_sign))
    if not passing:
        raise CalibrationError(f"no braid-matrix variant passes for N={N}")
    return passing[0]


def braid_matrix(N: int) -> LabeledTensor:
    return LabeledTensor.from_matrix(N, 2, 2, calibrate(N).R)


def braid_matrix_inverse(N: int) -> LabeledTensor:
    return LabeledTensor.from_matrix(N, 2, 2, calibrate(N).Rinv)


def _spectral_projectors(R: SparseMatrix, N: int):
    labels = pair_labels(N)
    lam = {"s": Q, "a": -Q.inverse(), "t": q_pow(1 - N)}
    out = []
    for name in ("s", "a", "t"):
        P = SparseMatrix.identity(labels)
        for other, mu in lam.items():
            if other == name:
                continue
            P = P @ R.shift(-mu, labels).scale((lam[name] - mu).inverse())
        out.append(P)
    return tuple(out)


@lru_cache(maxsize=None)
def projector_matrices(N: int):
    """``(P_s, P_a, P_t)`` as sparse matrices on index pairs."""
    return _spectral_projectors(calibrate(N).R, N)


def projectors(N: int):
    return tuple(LabeledTensor.from_matrix(N, 2, 2, P) for P in projector_matrices(N))


def projector_ranks(N: int):
    """Integer traces of the three projectors."""
    out = []
    for P in projector_matrices(N):
        t = P.trace()
        out.append(int(t.as_fraction()))
    return tuple(out)


# real coordinates


def real_coordinate_matrix(N: int, q0: float) -> np.ndarray:
    """Numeric ``V^alpha_i``; rows ordered alpha = 0 (odd N), 1, ..., 2n."""
    sc = structure_constants(N)
    idx = sc.indices
    g, _ = metric(N)
    pos = {i: p for p, i in enumerate(idx)}
    alphas = ([0] if N % 2 else []) + list(range(1, 2 * sc.n + 1))
    V = np.zeros((N, N), dtype=complex)
    s2 = math.sqrt(2.0)
    for ra, alpha in enumerate(alphas):
        for i in idx:
            if alpha == 0:
                V[ra, pos[i]] = 1.0 if i == 0 else 0.0
                continue
            h = (alpha + 1) // 2
            d = 1.0 if i == h else 0.0
            gih = eval_numeric(g[(i, h)], q0) if (i, h) in g else 0.0
            if alpha % 2 == 1:
                V[ra, pos[i]] = (d + gih) / s2
            else:
                V[ra, pos[i]] = -1j * (d - gih) / s2
    return V
