"""Activation-pattern search over an :class:`Encoding`.

``dfs_search`` branches on ReLU phases in topological order, inactive first.
Inactive means a strictly negative pre-activation and active a
non-negative one, so the regions partition the input space exactly as
:func:`pattern_of` does. A partial pattern is relaxed by giving every
undecided ReLU output its own variable ``y`` with ``y >= 0``,
``y >= pre`` and, when the pre-activation has finite interval bounds
``l < 0 < u``, the chord ``y <= u (pre - l) / (u - l)``. Nodes whose
interval has a fixed sign are decided as soon as the bounds show it, and
never branched on.

``enumerate_search`` is the independent oracle: every one of the ``2^R``
patterns gets its own region LP and then one LP per branch.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from gmpy2 import mpq

from ..linspec import LinRow, Rel
from ..lp import solve_rows
from ..network import Act
from .encode import Encoding

__all__ = ["SearchResult", "Stats", "dfs_search", "enumerate_search", "leaf_feasible", "region_rows"]

Q0 = mpq(0)
Q1 = mpq(1)


@dataclass
class Stats:
    lps: int = 0
    patterns: int = 0
    nodes: int = 0

    def add(self, other: "Stats"):
        self.lps += other.lps
        self.patterns += other.patterns
        self.nodes += other.nodes

    def as_dict(self) -> dict:
        return {"lps": self.lps, "patterns": self.patterns, "nodes": self.nodes}


@dataclass
class SearchResult:
    found: bool
    point: tuple[Fraction, ...] | None = None    # base variables
    pattern: tuple[bool, ...] | None = None
    label: tuple | None = None
    stats: Stats = field(default_factory=Stats)


def _frac(q) -> Fraction:
    return Fraction(int(q.numerator), int(q.denominator))


# -- sparse affine expressions: (coeff dict, constant) ----------------------

def _interval(expr, bounds):
    coeffs, const = expr
    lo = hi = const
    for var, a in coeffs.items():
        l, u = bounds[var]
        if a > 0:
            lo = None if lo is None or l is None else lo + a * l
            hi = None if hi is None or u is None else hi + a * u
        else:
            lo = None if lo is None or u is None else lo + a * u
            hi = None if hi is None or l is None else hi + a * l
    return lo, hi


class _Problem:
    """Encoding converted to mpq once, shared by every search step."""

    def __init__(self, enc: Encoding):
        self.enc = enc
        self.nb = enc.base_dim
        self.m = enc.net.m
        self.layers = []
        for layer in enc.net.layers:
            self.layers.append([(node.act is Act.RELU, mpq(node.bias), [mpq(w) for w in node.weights])
                                for node in layer])
        self.R = enc.net.relu_count
        self.rows = [r for row in enc.rows for r in self._split(row)]
        self.branches = [(label, [r for row in rows for r in self._split(row)])
                         for label, rows in enc.branches]
        self.box = self._root_box()

    def _split(self, row: LinRow):
        """``(base coeffs dict, output coeffs dict, rhs, strict)`` rows."""
        base = {i: mpq(c) for i, c in enumerate(row.coeffs[:self.nb]) if c}
        out = {i: mpq(c) for i, c in enumerate(row.coeffs[self.nb:]) if c}
        rhs = mpq(row.rhs)
        if row.rel is Rel.EQ:
            return [(base, out, rhs, False),
                    ({i: -c for i, c in base.items()}, {i: -c for i, c in out.items()}, -rhs, False)]
        return [(base, out, rhs, row.rel is Rel.LT)]

    def _root_box(self):
        box = [[None, None] for _ in range(self.nb)]
        if self.enc.bounds is not None:
            for i, (l, u) in enumerate(self.enc.bounds):
                box[i] = [mpq(l), mpq(u)]
        for base, out, rhs, _ in self.rows:
            if not out and len(base) == 1:
                _tighten(box, base, rhs)
        return [tuple(b) for b in box]


def _tighten(box, coeffs, rhs):
    """Tighten ``box`` with the closure of ``a * x_i <= rhs``."""
    (i, a), = coeffs.items()
    v = rhs / a
    if a > 0:
        if box[i][1] is None or v < box[i][1]:
            box[i][1] = v
    else:
        if box[i][0] is None or v > box[i][0]:
            box[i][0] = v


@dataclass
class _State:
    phases: tuple          # one entry per ReLU: True, False or None (undecided)
    forced: frozenset      # decided by interval bounds, no region row needed
    box: tuple
    fw: tuple | None = None

    @property
    def complete(self) -> bool:
        return None not in self.phases


def _forward(prob: _Problem, state: _State):
    """Forward pass under a partial pattern, cached on ``state``.

    Returns ``(fixed, next_pre, rows, width, outputs)``: the undecided
    ReLUs whose interval has a fixed sign (index -> phase), the first other
    undecided ReLU as ``(index, pre-activation)`` over base variables (None
    when there is none), the region and relaxation rows over base plus
    relaxation variables, the total variable count and the output
    expressions.
    """
    if state.fw is not None:
        return state.fw
    nb = prob.nb
    bounds = dict(enumerate(state.box))
    vals = [({i: Q1}, Q0) for i in range(nb)]
    rows = []
    fixed = {}
    k = 0
    ny = 0
    next_pre = None
    for layer in prob.layers:
        out = []
        for is_relu, bias, weights in layer:
            if not weights:
                expr = ({}, bias)
            else:
                expr = _affine(bias, weights, vals)
            if not is_relu:
                out.append(expr)
                continue
            phase = state.phases[k]
            if phase is not None:
                coeffs, const = expr
                if phase:
                    if k not in state.forced:
                        rows.append(({v: -a for v, a in coeffs.items()}, const, False))   # pre >= 0
                    out.append(expr)
                else:
                    if k not in state.forced:
                        rows.append((coeffs, -const, True))                                 # pre < 0
                    out.append(({}, Q0))
            else:
                lo, hi = _interval(expr, bounds)
                if hi is not None and hi < 0:
                    fixed[k] = False
                    out.append(({}, Q0))
                elif lo is not None and lo >= 0:
                    fixed[k] = True
                    out.append(expr)
                else:
                    if next_pre is None:
                        next_pre = (k, expr)
                    var = nb + ny
                    ny += 1
                    coeffs, const = expr
                    rows.append(({var: -Q1}, Q0, False))                       # y >= 0
                    c = dict(coeffs)
                    c[var] = -Q1
                    rows.append((c, -const, False))                            # pre - y <= 0
                    if lo is not None and hi is not None:
                        # y - u/(u-l) * pre <= -u*l/(u-l)
                        f = hi / (hi - lo)
                        c = {v: -f * a for v, a in coeffs.items()}
                        c[var] = Q1
                        rows.append((c, f * const - f * lo, False))
                    bounds[var] = (Q0, hi)
                    out.append(({var: Q1}, Q0))
            k += 1
        vals = out
    state.fw = (fixed, next_pre, rows, nb + ny, vals)
    return state.fw


def _settle(prob: _Problem, state: _State) -> _State:
    """Decide every undecided ReLU whose sign the interval bounds fix.

    Bounds only shrink along a search path, so such a node keeps its sign
    in every descendant. The forward pass is unchanged by this, so it is
    carried over after recomputing which node to branch on next.
    """
    fixed = _forward(prob, state)[0]
    if not fixed:
        return state
    phases = list(state.phases)
    for k, phase in fixed.items():
        phases[k] = phase
    settled = _State(tuple(phases), state.forced | set(fixed), state.box)
    _, next_pre, rows, width, outputs = state.fw
    settled.fw = ({}, next_pre, rows, width, outputs)
    return settled


def _affine(bias, weights, vals):
    coeffs: dict = {}
    const = bias
    for w, (c, k) in zip(weights, vals):
        if not w:
            continue
        if k:
            const += w * k
        for var, a in c.items():
            coeffs[var] = coeffs.get(var, Q0) + w * a
    return {v: a for v, a in coeffs.items() if a}, const


def _substitute(prob: _Problem, row, outputs):
    """Row over (base, outputs) rewritten over (base, relaxation vars)."""
    base, out, rhs, strict = row
    coeffs = dict(base)
    for i, a in out.items():
        c, k = outputs[i]
        rhs -= a * k
        for var, b in c.items():
            coeffs[var] = coeffs.get(var, Q0) + a * b
    return coeffs, rhs, strict


def _dense(rows, width):
    dense = []
    for coeffs, rhs, strict in rows:
        v = [Q0] * width
        for var, a in coeffs.items():
            v[var] = a
        dense.append((v, rhs, strict))
    return dense


def _check(prob: _Problem, state: _State, alive, stats: Stats, stop_at_first=True):
    """LP test of the branches in ``alive`` under ``state``.

    Returns ``(still_alive, hit)`` where ``hit`` is ``(label, point)`` for
    the first feasible branch. Branches after the first feasible one are
    kept without testing.
    """
    _, _, rows, width, outputs = _forward(prob, state)
    common = rows + [_substitute(prob, r, outputs) for r in prob.rows]
    survivors = []
    hit = None
    for idx in alive:
        if hit is not None and stop_at_first:
            survivors.append(idx)
            continue
        label, brows = prob.branches[idx]
        system = common + [_substitute(prob, r, outputs) for r in brows]
        stats.lps += 1
        point = solve_rows(_dense(system, width), width)
        if point is not None:
            survivors.append(idx)
            if hit is None:
                hit = (label, tuple(_frac(v) for v in point[:prob.nb]))
    return survivors, hit


def _children(prob: _Problem, state: _State):
    """Both phases of the next undecided ReLU of a settled state, inactive
    first, each with the fixed-sign nodes it implies decided as well."""
    k, (coeffs, const) = _forward(prob, state)[1]
    out = []
    for phase in (False, True):
        box = state.box
        if len(coeffs) == 1:
            b = [list(x) for x in box]
            if phase:
                _tighten(b, {v: -a for v, a in coeffs.items()}, const)
            else:
                _tighten(b, coeffs, -const)
            box = tuple(tuple(x) for x in b)
        phases = state.phases[:k] + (phase,) + state.phases[k + 1:]
        out.append(_settle(prob, _State(phases, state.forced, box)))
    return out


def _dfs(prob: _Problem, state: _State, alive, stats: Stats):
    stats.nodes += 1
    if state.complete:
        stats.patterns += 1
        _, hit = _check(prob, state, alive, stats)
        if hit is not None:
            return SearchResult(True, hit[1], state.phases, hit[0])
        return None
    for child in _children(prob, state):
        child_alive = alive
        if not child.complete:
            child_alive, _ = _check(prob, child, alive, stats)
            if not child_alive:
                stats.nodes += 1
                continue
        found = _dfs(prob, child, child_alive, stats)
        if found is not None:
            return found
    return None


def _root(prob: _Problem) -> _State:
    return _settle(prob, _State((None,) * prob.R, frozenset(), tuple(prob.box)))


def dfs_search(enc: Encoding) -> SearchResult:
    prob = _Problem(enc)
    stats = Stats()
    found = _dfs(prob, _root(prob), list(range(len(prob.branches))), stats)
    if found is None:
        return SearchResult(False, stats=stats)
    found.stats = stats
    return found


def frontier(enc: Encoding, depth: int):
    """Partial states after ``depth`` branching levels, in DFS order.

    Used by the parallel driver; each entry is ``(phases, forced, box,
    alive)``. States whose relaxation is already infeasible are dropped.
    """
    prob = _Problem(enc)
    stats = Stats()
    level = [(_root(prob), list(range(len(prob.branches))))]
    for _ in range(depth):
        nxt = []
        for state, alive in level:
            if state.complete:
                nxt.append((state, alive))
                continue
            for child in _children(prob, state):
                child_alive = alive
                if not child.complete:
                    child_alive, _ = _check(prob, child, alive, stats)
                    if not child_alive:
                        continue
                nxt.append((child, child_alive))
        level = nxt
    return [(s.phases, s.forced, s.box, a) for s, a in level], stats


def dfs_from(enc: Encoding, phases, forced, box, alive) -> SearchResult:
    prob = _Problem(enc)
    stats = Stats()
    found = _dfs(prob, _State(tuple(phases), frozenset(forced), tuple(box)), list(alive), stats)
    if found is None:
        return SearchResult(False, stats=stats)
    found.stats = stats
    return found


# -- single-pattern systems and the enumeration oracle ----------------------

def _pattern_system(enc: Encoding, pattern):
    """Dense forward pass under a full pattern, independent of the search code.

    Returns ``(region, outputs)``: region rows ``(coeffs, rhs, strict)``
    over the base variables and each output as ``(coeffs, constant)``,
    all in mpq.
    """
    net, nb = enc.net, enc.base_dim
    if len(pattern) != net.relu_count:
        raise ValueError(f"pattern has {len(pattern)} phases, network has {net.relu_count} ReLUs")
    vals = [([Q1 if j == i else Q0 for j in range(nb)], Q0) for i in range(net.n)]
    rows = []
    phases = iter(pattern)
    for layer in net.layers:
        out = []
        for node in layer:
            coeffs = [Q0] * nb
            const = mpq(node.bias)
            for w, (c, k) in zip(node.weights, vals):
                if w:
                    w = mpq(w)
                    const += w * k
                    coeffs = [x + w * y for x, y in zip(coeffs, c)]
            if node.act is Act.RELU:
                if next(phases):
                    rows.append(([-x for x in coeffs], const, False))     # pre >= 0
                    out.append((coeffs, const))
                else:
                    rows.append((coeffs, -const, True))                  # pre < 0
                    out.append(([Q0] * nb, Q0))
            else:
                out.append((coeffs, const))
        vals = out
    return rows, vals


def _lin_rows(row: LinRow, nb: int, outputs):
    """A ``z`` row rewritten over the base variables, EQ split in two."""
    coeffs = [mpq(c) for c in row.coeffs[:nb]]
    rhs = mpq(row.rhs)
    for i, a in enumerate(row.coeffs[nb:]):
        if a:
            a = mpq(a)
            c, k = outputs[i]
            rhs -= a * k
            coeffs = [x + a * y for x, y in zip(coeffs, c)]
    if row.rel is Rel.EQ:
        return [(coeffs, rhs, False), ([-x for x in coeffs], -rhs, False)]
    return [(coeffs, rhs, row.rel is Rel.LT)]


def region_rows(enc: Encoding, pattern) -> list[LinRow]:
    """Rows over the base variables that pin ``pattern``."""
    rows, _ = _pattern_system(enc, pattern)
    return [LinRow(tuple(_frac(c) for c in a), Rel.LT if strict else Rel.LE, _frac(b))
            for a, b, strict in rows]


def leaf_feasible(enc: Encoding, pattern, label):
    """The single LP behind a certificate; a base point or ``None``."""
    region, outputs = _pattern_system(enc, pattern)
    rows = list(region)
    for r in enc.rows + enc.branch(label):
        rows += _lin_rows(r, enc.base_dim, outputs)
    point = solve_rows(rows, enc.base_dim)
    return None if point is None else tuple(_frac(v) for v in point)


def _all_systems(enc: Encoding):
    """``(pattern, region, outputs)`` for every full pattern, in the order of
    ``itertools.product((False, True), ...)``. Same rows as
    :func:`_pattern_system`, but each node's affine form is computed once
    per pattern prefix instead of once per pattern."""
    net, nb = enc.net, enc.base_dim
    layers = net.layers
    zero = ([Q0] * nb, Q0)

    def affine(node, vals):
        coeffs = [Q0] * nb
        const = mpq(node.bias)
        for w, (c, k) in zip(node.weights, vals):
            if w:
                w = mpq(w)
                const += w * k
                coeffs = [x + w * y for x, y in zip(coeffs, c)]
        return coeffs, const

    def walk(l, i, vals, out, rows, pattern):
        if l == len(layers):
            yield pattern, rows, vals
            return
        if i == len(layers[l]):
            yield from walk(l + 1, 0, out, [], rows, pattern)
            return
        node = layers[l][i]
        coeffs, const = affine(node, vals)
        if node.act is not Act.RELU:
            yield from walk(l, i + 1, vals, out + [(coeffs, const)], rows, pattern)
            return
        yield from walk(l, i + 1, vals, out + [zero], rows + [(coeffs, -const, True)], pattern + (False,))
        yield from walk(l, i + 1, vals, out + [(coeffs, const)],
                        rows + [([-x for x in coeffs], const, False)], pattern + (True,))

    start = [([Q1 if j == i else Q0 for j in range(nb)], Q0) for i in range(net.n)]
    return walk(0, 0, start, [], [], ())


def enumerate_search(enc: Encoding) -> SearchResult:
    stats = Stats()
    nb = enc.base_dim
    for pattern, region, outputs in _all_systems(enc):
        stats.nodes += 1
        common = region + [r for row in enc.rows for r in _lin_rows(row, nb, outputs)]
        stats.lps += 1
        if solve_rows(common, nb) is None:
            continue
        stats.patterns += 1
        for label, brows in enc.branches:
            stats.lps += 1
            point = solve_rows(common + [r for row in brows for r in _lin_rows(row, nb, outputs)], nb)
            if point is not None:
                return SearchResult(True, tuple(_frac(v) for v in point), pattern, label, stats)
    return SearchResult(False, stats=stats)
