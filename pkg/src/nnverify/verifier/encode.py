"""Turn a problem instance into a search encoding.

An :class:`Encoding` describes the set we look for a point in:

* ``net``: one network (multi-copy problems are stacked beforehand),
* ``base_dim`` base variables: the network inputs first, then auxiliaries,
* ``rows`` over ``z = (base variables, network outputs)``,
* ``branches``: labelled row lists; the target set is
  ``rows & (branch_1 | branch_2 | ...)``.

For the universally quantified problems the branches are the ways the
property can be violated, so "found" means "fails". For reachability the
single branch is the output spec and "found" means "holds".
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from ..exact import INF, Metric, as_fraction
from ..linspec import LinRow, LinSpec, Rel, ball_spec, le, lt, negate_row
from ..network import Network, append_abs_sum, evaluate, shift_outputs, stack_parallel

__all__ = ["Encoding", "encode", "trivially_true"]

ZERO = Fraction(0)
ONE = Fraction(1)


@dataclass(frozen=True)
class Encoding:
    net: Network
    base_dim: int
    rows: tuple[LinRow, ...]
    branches: tuple[tuple[tuple, tuple[LinRow, ...]], ...]
    bounds: tuple | None = None      # optional implied box (lo, hi) per base variable
    existential: bool = False

    @property
    def dim(self) -> int:
        return self.base_dim + self.net.m

    def branch(self, label) -> tuple[LinRow, ...]:
        label = tuple(label)
        for lab, rows in self.branches:
            if lab == label:
                return rows
        raise ValueError(f"no branch labelled {list(label)}")


class _Z:
    """Row builder over ``(base vars, outputs)``."""

    def __init__(self, base_dim: int, m: int):
        self.nb, self.m = base_dim, m

    def vec(self, base: dict | None = None, out: dict | None = None) -> tuple[Fraction, ...]:
        v = [ZERO] * (self.nb + self.m)
        for i, c in (base or {}).items():
            v[i] += c
        for i, c in (out or {}).items():
            v[self.nb + i] += c
        return tuple(v)

    def lift(self, row: LinRow, offset: int) -> LinRow:
        """Place a row written over some block of variables into ``z``."""
        v = [ZERO] * (self.nb + self.m)
        v[offset:offset + row.dim] = row.coeffs
        return LinRow(tuple(v), row.rel, row.rhs)


def _ball_bounds(center, eps, extra: int = 0):
    if eps is INF:
        return None
    return tuple((c - eps, c + eps) for c in center) + ((ZERO, eps),) * extra


def trivially_true(inst) -> bool:
    """Instances that hold without any search: an infinite output tolerance,
    or a zero radius for the distance problems (the only admissible pair of
    inputs is a point and itself, at output distance 0)."""
    if getattr(inst, "delta", None) is INF:
        return True
    return inst.kind in ("sr", "lr", "gsr", "glr") and inst.eps is not INF and inst.eps == 0


def encode(inst) -> Encoding:
    kind = inst.kind
    if kind == "nnr":
        return _encode_reach(inst, existential=True)
    if kind == "vip":
        return _encode_reach(inst, existential=False)
    if kind == "ne":
        return _encode_ne(inst)
    if kind == "sr":
        return _encode_sr(inst)
    if kind == "cr":
        return _encode_cr(inst, inst.label)
    if kind == "lr":
        return _encode_lr(inst)
    if kind == "gsr":
        return _encode_gsr(inst)
    if kind == "glr":
        return _encode_glr(inst)
    raise ValueError(f"no direct encoding for {kind}")


def _encode_reach(inst, existential: bool) -> Encoding:
    net, A, B = inst.net, inst.inspec, inst.outspec
    z = _Z(A.dim, net.m)
    rows = tuple(z.lift(r, 0) for r in A.rows)
    out_rows = [z.lift(r, A.dim) for r in B.rows]
    if existential:
        branches = (((), tuple(out_rows)),)
    else:
        branches = []
        for r, row in enumerate(out_rows, start=1):
            negs = negate_row(row)
            sides = (1,) if len(negs) == 1 else (-1, 1)
            for side, neg in zip(sides, negs):
                branches.append(((r, side), (neg,)))
        branches = tuple(branches)
    bounds = None
    if A.ball is not None:
        bounds = _ball_bounds(A.ball.center, A.ball.eps, A.aux)
    return Encoding(net, A.dim, rows, branches, bounds, existential)


def _encode_ne(inst) -> Encoding:
    net = stack_parallel(inst.net, inst.net2, share_input=True)
    n, m = inst.net.n, inst.net.m
    z = _Z(n, 2 * m)
    branches = []
    for k in range(m):
        diff = {k: ONE, m + k: -ONE}
        neg = {k: -ONE, m + k: ONE}
        branches.append(((k + 1, 1), (lt(z.vec(out=neg), 0),)))      # N1_k > N2_k
        branches.append(((k + 1, -1), (lt(z.vec(out=diff), 0),)))     # N1_k < N2_k
    return Encoding(net, n, (), tuple(branches))


def _local_ball(inst, z: _Z):
    spec = ball_spec(inst.metric, inst.center, inst.eps)
    rows = tuple(z.lift(r, 0) for r in spec.rows)
    return spec, rows, _ball_bounds(inst.center, inst.eps, spec.aux)


def _encode_sr(inst) -> Encoding:
    y0 = evaluate(inst.net, inst.center)
    if inst.metric is Metric.LINF:
        net = inst.net
        spec = ball_spec(inst.metric, inst.center, inst.eps)
        z = _Z(spec.dim, net.m)
        _, rows, bounds = _local_ball(inst, z)
        branches = []
        for i in range(net.m):
            # y_i - y0_i > delta  and  y0_i - y_i > delta
            branches.append(((i + 1, 1), (lt(z.vec(out={i: -ONE}), -(y0[i] + inst.delta)),)))
            branches.append(((i + 1, -1), (lt(z.vec(out={i: ONE}), y0[i] - inst.delta),)))
        return Encoding(net, spec.dim, rows, tuple(branches), bounds)
    net = append_abs_sum(shift_outputs(inst.net, [-v for v in y0]))
    spec = ball_spec(inst.metric, inst.center, inst.eps)
    z = _Z(spec.dim, 1)
    _, rows, bounds = _local_ball(inst, z)
    branches = (((1,), (lt(z.vec(out={0: -ONE}), -inst.delta),)),)
    return Encoding(net, spec.dim, rows, branches, bounds)


def _encode_cr(inst, label: int) -> Encoding:
    net = inst.net
    spec = ball_spec(inst.metric, inst.center, inst.eps)
    z = _Z(spec.dim, net.m)
    _, rows, bounds = _local_ball(inst, z)
    j = label - 1
    branches = []
    for i in range(net.m):
        if i == j:
            continue
        # N_i > N_j, or N_i >= N_j when the label must be the unique maximum
        coeffs = z.vec(out={j: ONE, i: -ONE})
        row = le(coeffs, 0) if inst.strict else lt(coeffs, 0)
        branches.append(((i + 1,), (row,)))
    return Encoding(net, spec.dim, rows, tuple(branches), bounds)


def _require_linf(inst):
    if inst.metric is not Metric.LINF:
        raise ValueError(f"{inst.kind} is only supported under the linf metric")


def _slope_branches(z: _Z, n: int, m: int, lip: Fraction, xs: Sequence[int], cs: dict,
                    ys: Sequence[int], ycs: dict):
    """Branches ``(k, sigma, i, tau)`` for Lipschitz violations under linf.

    With ``s = sigma * (x_k - c_k)`` as the input distance, the rows are
    ``|x_k' - c_k'| <= s`` for every ``k'`` and
    ``tau * (y_i - d_i) > lip * s``. Here ``x_k - c_k`` is given by the base
    indices ``xs`` and constant or base-index offsets ``cs``; outputs
    likewise by ``ys`` and ``ycs``.
    """
    branches = []
    for k in range(n):
        for sigma in (1, -1):
            s_base = _diff(xs[k], cs[k], sigma)
            guards = []
            for k2 in range(n):
                for sign in (1, -1):
                    d_base = _diff(xs[k2], cs[k2], sign)
                    # sign*(x_k2 - c_k2) - s <= 0
                    lhs, rhs = _combine(d_base, s_base, -1)
                    guards.append(le(z.vec(base=lhs), -rhs))
            for i in range(m):
                for tau in (1, -1):
                    # lip*s - tau*(y_i - d_i) < 0
                    lhs_base, const = _scale(s_base, lip)
                    out = {ys[i]: Fraction(-tau)}
                    d_i = ycs[i]
                    if isinstance(d_i, tuple):          # offset is another output
                        out[d_i[0]] = out.get(d_i[0], ZERO) + tau
                        rhs = -const
                    else:
                        rhs = -const - tau * d_i
                    row = lt(z.vec(base=lhs_base, out=out), rhs)
                    branches.append(((k + 1, sigma, i + 1, tau), tuple(guards) + (row,)))
    return branches


def _diff(index: int, offset, sign: int):
    """``sign * (x_index - offset)`` as ``(coeffs, constant)``."""
    coeffs = {index: Fraction(sign)}
    if isinstance(offset, tuple):
        coeffs[offset[0]] = coeffs.get(offset[0], ZERO) - sign
        return coeffs, ZERO
    return coeffs, -sign * offset


def _combine(a, b, factor):
    coeffs = dict(a[0])
    for k, v in b[0].items():
        coeffs[k] = coeffs.get(k, ZERO) + factor * v
    return coeffs, a[1] + factor * b[1]


def _scale(a, factor):
    return {k: factor * v for k, v in a[0].items()}, factor * a[1]


def _encode_lr(inst) -> Encoding:
    _require_linf(inst)
    net, n, m = inst.net, inst.net.n, inst.net.m
    y0 = evaluate(net, inst.center)
    z = _Z(n, m)
    _, rows, bounds = _local_ball(inst, z)
    branches = _slope_branches(z, n, m, inst.lip, list(range(n)), dict(enumerate(inst.center)),
                               list(range(m)), dict(enumerate(y0)))
    return Encoding(net, n, rows, tuple(branches), bounds)


def _linking_rows(z: _Z, n: int, eps):
    if eps is INF:
        return ()
    rows = []
    for k in range(n):
        rows.append(le(z.vec(base={k: ONE, n + k: -ONE}), eps))
        rows.append(le(z.vec(base={k: -ONE, n + k: ONE}), eps))
    return tuple(rows)


def _encode_gsr(inst) -> Encoding:
    _require_linf(inst)
    n, m = inst.net.n, inst.net.m
    net = stack_parallel(inst.net, inst.net, share_input=False)
    z = _Z(2 * n, 2 * m)
    rows = _linking_rows(z, n, inst.eps)
    branches = []
    for i in range(m):
        branches.append(((i + 1, 1), (lt(z.vec(out={i: -ONE, m + i: ONE}), -inst.delta),)))
        branches.append(((i + 1, -1), (lt(z.vec(out={i: ONE, m + i: -ONE}), -inst.delta),)))
    return Encoding(net, 2 * n, rows, tuple(branches))


def _encode_glr(inst) -> Encoding:
    _require_linf(inst)
    n, m = inst.net.n, inst.net.m
    net = stack_parallel(inst.net, inst.net, share_input=False)
    z = _Z(2 * n, 2 * m)
    rows = _linking_rows(z, n, inst.eps)
    branches = _slope_branches(z, n, m, inst.lip, list(range(n)), {k: (n + k,) for k in range(n)},
                               list(range(m)), {i: (m + i,) for i in range(m)})
    return Encoding(net, 2 * n, rows, tuple(branches))
