"""Exact sparse linear algebra over Scalar (row reduction, null spaces)."""

from __future__ import annotations

from .coeff import ONE, ZERO, Scalar


class DegenerateSystem(ValueError):
    pass


def rref(rows, pivot_columns):
    """Fully reduce ``rows`` (dicts col -> Scalar) choosing pivots in order.

    Returns ``(pivots, leftover)``: ``pivots`` maps a pivot column to its
    normalised row; ``leftover`` holds rows with no entry in any candidate
    pivot column.
    """
    rows = [dict(r) for r in rows if r]
    pivots = {}
    for col in pivot_columns:
        sel = None
        for idx, r in enumerate(rows):
            if r.get(col):
                sel = idx
                break
        if sel is None:
            continue
        prow = rows.pop(sel)
        inv = prow[col].inverse()
        prow = {c: v * inv for c, v in prow.items()}
        rows = [_eliminate(r, prow, col) for r in rows]
        rows = [r for r in rows if r]
        for pc in list(pivots):
            pivots[pc] = _eliminate(pivots[pc], prow, col)
        pivots[col] = prow
    return pivots, rows


def _eliminate(row, prow, col):
    f = row.get(col)
    if not f:
        return row
    out = dict(row)
    for c, v in prow.items():
        nv = out.get(c, ZERO) - f * v
        if nv:
            out[c] = nv
        else:
            out.pop(c, None)
    return out


def nullspace(rows, columns):
    """Basis of ``{v : row . v = 0 for every row}`` over the given columns."""
    pivots, left = rref(rows, columns)
    if left:
        raise DegenerateSystem("unreduced rows remain")
    free = [c for c in columns if c not in pivots]
    basis = []
    for f in free:
        v = {f: ONE}
        for pc, prow in pivots.items():
            coef = prow.get(f)
            if coef:
                v[pc] = -coef
        basis.append(v)
    return basis


def solve(columns_vectors, target, columns):
    """Solve ``sum_k a_k v_k = target``; return coefficients or raise."""
    # rows are the coordinates, unknowns indexed by k
    n = len(columns_vectors)
    rows = []
    for c in columns:
        row = {}
        for k, v in enumerate(columns_vectors):
            e = v.get(c)
            if e:
                row[k] = e
        t = target.get(c)
        if t:
            row["rhs"] = t
        if row:
            rows.append(row)
    pivots, left = rref(rows, list(range(n)))
    for r in left:
        if r:
            raise DegenerateSystem("target not in span")
    sol = [ZERO] * n
    for k, prow in pivots.items():
        if any(c != k and c != "rhs" and prow[c] for c in prow):
            raise DegenerateSystem("underdetermined system")
        sol[k] = prow.get("rhs", ZERO)
    return sol


def inverse(matrix, labels):
    """Inverse of a square matrix given as ``{(row, col): Scalar}``."""
    n = len(labels)
    rows = []
    for a in labels:
        row = {("c", b): matrix[(a, b)] for b in labels if matrix.get((a, b))}
        row[("e", a)] = ONE
        rows.append(row)
    pivots, left = rref(rows, [("c", b) for b in labels])
    if left or len(pivots) != n:
        raise DegenerateSystem("singular matrix")
    out = {}
    for b in labels:
        prow = pivots[("c", b)]
        for key, v in prow.items():
            if key[0] == "e":
                out[(b, key[1])] = v
    return out
