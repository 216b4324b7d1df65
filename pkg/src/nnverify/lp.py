"""Exact feasibility of mixed strict/non-strict linear systems.

The main route is a primal simplex with Bland's rule over ``gmpy2.mpq``,
with tableau rows kept sparse. Strict rows share one slack ``t`` capped at 1; the system is
feasible iff the optimum ``t*`` is positive. :func:`fm_feasible` is an
independent Fourier-Motzkin check for small systems.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence

from gmpy2 import mpq

from .linspec import LinRow, LinSpec, Rel

__all__ = ["feasible", "fm_feasible", "max_slack", "solve_rows", "simplex_max", "Unbounded"]

Q0 = mpq(0)
Q1 = mpq(1)


class Unbounded(Exception):
    pass


def simplex_max(A: list[list], b: list, c: list):
    """Maximize ``c.v`` subject to ``A v <= b``, ``v >= 0`` where ``b >= 0``.

    The origin is feasible by assumption, so no phase one is needed.
    Returns ``(value, v)``; raises :class:`Unbounded`.
    """
    rows = [{j: mpq(a) for j, a in enumerate(row) if a} for row in A]
    cost = {j: mpq(a) for j, a in enumerate(c) if a}
    return _sparse_max(rows, [mpq(x) for x in b], cost, len(c))


def _sparse_max(A: list[dict], b: list, c: dict, n: int):
    """:func:`simplex_max` on rows stored as ``{column: coefficient}``.

    Pivots touch only the rows holding the entering column and only the
    nonzeros of the pivot row. Entering and leaving choices follow Bland's
    rule on the variable labels, so the pivot sequence is the dense one.
    """
    m = len(A)
    b = list(b)
    c = dict(c)
    z = Q0
    nonbasic = list(range(n))
    basic = list(range(n, n + m))
    while True:
        s, best = -1, None
        for j, a in c.items():
            if a > 0 and (best is None or nonbasic[j] < best):
                s, best = j, nonbasic[j]
        if s < 0:
            break
        r, ratio = -1, None
        for i in range(m):
            a = A[i].get(s)
            if a is not None and a > 0:
                q = b[i] / a
                if ratio is None or q < ratio or (q == ratio and basic[i] < basic[r]):
                    r, ratio = i, q
        if r < 0:
            raise Unbounded
        row = A[r]
        inv = Q1 / row[s]
        row[s] = Q1
        rn = {j: a * inv for j, a in row.items()}
        br = b[r] * inv
        A[r], b[r] = rn, br
        for i in range(m):
            if i == r:
                continue
            Ai = A[i]
            f = Ai.get(s)
            if f is None:
                continue
            Ai[s] = Q0
            for j, x in rn.items():
                v = Ai.get(j, Q0) - f * x
                if v:
                    Ai[j] = v
                else:
                    Ai.pop(j, None)
            b[i] -= f * br
        f = c.get(s)
        if f is not None:
            c[s] = Q0
            for j, x in rn.items():
                v = c.get(j, Q0) - f * x
                if v:
                    c[j] = v
                else:
                    c.pop(j, None)
            z += f * br
        nonbasic[s], basic[r] = basic[r], nonbasic[s]
    v = [Q0] * n
    for i, label in enumerate(basic):
        if label < n:
            v[label] = b[i]
    return z, v


def _split_free(a, n, t_coeff):
    """Sparse row over ``(x+, x-, t)`` for ``a.x + t_coeff * t``."""
    row = {}
    for j, x in enumerate(a):
        if x:
            row[j] = x
            row[n + j] = -x
    if t_coeff:
        row[2 * n] = t_coeff
    return row


def _find_point(rows, n):
    """Maximize ``t <= 1`` with ``a.x + t <= b`` on every row; x is free.

    Returns ``(t*, x*)``. ``t* >= 0`` iff the closed system is feasible,
    ``t* > 0`` iff every row can hold strictly.
    """
    t0 = min([Q0] + [r[1] for r in rows])
    A = []
    b = []
    for a, rhs, _ in rows:
        A.append(_split_free(a, n, Q1))
        b.append(rhs - t0)
    A.append({2 * n: Q1})
    b.append(Q1 - t0)
    value, v = _sparse_max(A, b, {2 * n: Q1}, 2 * n + 1)
    return t0 + value, [v[i] - v[n + i] for i in range(n)]


def _shifted(rows, x0):
    return [(a, rhs - sum((ai * xi for ai, xi in zip(a, x0) if ai), Q0), strict)
            for a, rhs, strict in rows]


def _strict_phase(rows, n, x0):
    """Maximize the shared strict slack starting from a point of the closure."""
    rows = _shifted(rows, x0)
    t_init = min([Q0] + [rhs for _, rhs, strict in rows if strict])
    A, b = [], []
    for a, rhs, strict in rows:
        A.append(_split_free(a, n, Q1 if strict else Q0))
        b.append(rhs - t_init if strict else rhs)
    A.append({2 * n: Q1})
    b.append(Q1 - t_init)
    value, v = _sparse_max(A, b, {2 * n: Q1}, 2 * n + 1)
    return t_init + value, [x0[i] + v[i] - v[n + i] for i in range(n)]


def solve_rows(rows, n: int):
    """Feasibility of ``[(coeffs, rhs, strict), ...]`` meaning ``a.x <= b``
    (or ``<`` when strict) over ``n`` free variables, all in mpq.

    Returns a witness list or ``None``.
    """
    if not rows:
        return [Q0] * n
    if all(rhs > 0 or (rhs == 0 and not strict) for _, rhs, strict in rows):
        return [Q0] * n
    t, x = _find_point(rows, n)
    if t > 0:
        return x
    if t < 0:
        return None
    if not any(strict for _, _, strict in rows):
        return x
    t, x = _strict_phase(rows, n, x)
    return x if t > 0 else None


def _to_rows(spec: LinSpec):
    rows = []
    for row in spec.rows:
        a = [mpq(c) for c in row.coeffs]
        rhs = mpq(row.rhs)
        if row.rel is Rel.EQ:
            rows.append((a, rhs, False))
            rows.append(([-x for x in a], -rhs, False))
        else:
            rows.append((a, rhs, row.rel is Rel.LT))
    return rows


def _frac(q) -> Fraction:
    return Fraction(int(q.numerator), int(q.denominator))


def feasible(spec: LinSpec) -> tuple[Fraction, ...] | None:
    """Exact rational point satisfying every row, or ``None``."""
    x = solve_rows(_to_rows(spec), spec.dim)
    return None if x is None else tuple(_frac(v) for v in x)


def max_slack(spec: LinSpec) -> Fraction | None:
    """Optimum of ``max t`` s.t. non-strict rows, strict rows relaxed to
    ``a.x + t <= b``, and ``t <= 1``.

    ``None`` when the non-strict rows alone are infeasible.
    """
    rows = _to_rows(spec)
    n = spec.dim
    loose = [r for r in rows if not r[2]]
    x0 = [Q0] * n
    if loose:
        t, x0 = _find_point(loose, n)
        if t < 0:
            return None
    t, _ = _strict_phase(rows, n, x0)
    return _frac(t)


def fm_feasible(spec: LinSpec, max_dim: int = 6) -> bool:
    """Fourier-Motzkin elimination tracking strictness (verdict only)."""
    if spec.dim > max_dim:
        raise ValueError(f"Fourier-Motzkin guard: dim {spec.dim} > {max_dim}")
    rows = set()
    for row in spec.rows:
        a = tuple(Fraction(c) for c in row.coeffs)
        if row.rel is Rel.EQ:
            rows.add((a, row.rhs, False))
            rows.add((tuple(-c for c in a), -row.rhs, False))
        else:
            rows.add((a, row.rhs, row.rel is Rel.LT))
    for k in range(spec.dim - 1, -1, -1):
        pos, neg, keep = [], [], set()
        for a, rhs, strict in rows:
            if a[k] > 0:
                pos.append((a, rhs, strict))
            elif a[k] < 0:
                neg.append((a, rhs, strict))
            else:
                keep.add((a[:k], rhs, strict))
        for ap, bp, sp in pos:
            for an, bn, sn in neg:
                fp, fn = 1 / ap[k], -1 / an[k]
                a = tuple(x * fp + y * fn for x, y in zip(ap[:k], an[:k]))
                keep.add(_normalize(a, bp * fp + bn * fn, sp or sn))
        rows = set()
        for a, rhs, strict in keep:
            if not any(a):
                if rhs < 0 or (strict and rhs == 0):
                    return False
                continue
            rows.add((a, rhs, strict))
    return True


def _normalize(a, rhs, strict):
    # scale so the first nonzero coefficient has magnitude 1, for dedup
    for x in a:
        if x:
            s = abs(x)
            return tuple(y / s for y in a), rhs / s, strict
    return a, rhs, strict
