"""Instance transformations between the verification problems.

Every function returns a genuine instance of the target problem whose
verdict equals the verdict of its input. Pass ``pure_relu=True`` to rewrite
hidden identity nodes of the emitted networks as ReLU pairs.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .exact import INF, Metric, vector
from .linspec import LinSpec, eq, le
from .network import (Act, Network, Node, append_abs_sum, append_layer, chain, evaluate, freeze_input,
                      id_to_relu, ident, relu, shift_outputs, stack_parallel, zero_network)
from .verifier.problems import ACR, CR, GLR, GSR, LR, NE, SR, VIP

__all__ = [
    "CNF3", "acr_to_cr", "cr_to_acr", "cr_to_sr", "cr_to_vip", "gsr_to_ne", "metric_retraction",
    "ne_to_cr", "parse_dimacs", "retraction_network", "sat3_network", "sat3_to_glr", "sat3_to_gsr", "sat3_to_lr",
    "satisfiable", "sr_to_cr", "sr_to_vip",
]

ZERO = Fraction(0)
ONE = Fraction(1)
HALF = Fraction(1, 2)


def _unit(n, i, scale=ONE):
    return tuple(Fraction(scale) if j == i else ZERO for j in range(n))


def _gap(m, i, j):
    """Coefficients of ``y_i - y_j`` over ``m`` outputs (all zero when ``i == j``)."""
    if i == j:
        return (ZERO,) * m
    return tuple(ONE if k == i else -ONE if k == j else ZERO for k in range(m))


def _pure(net: Network, pure_relu: bool) -> Network:
    return id_to_relu(net) if pure_relu else net


def _require_linf(inst, what):
    if inst.metric is not Metric.LINF:
        raise ValueError(f"{what} needs the linf metric")


def _reject_strict(inst):
    if getattr(inst, "strict", False):
        raise ValueError("reductions are defined for weak maximality only")


# -- into VIP -----------------------------------------------------------------

def sr_to_vip(inst: SR, pure_relu: bool = False) -> VIP:
    """Two copies on input ``(x', x)``; ``x'`` is pinned to the center and
    ``x`` ranges over the ball; the outputs must stay within ``delta``."""
    _require_linf(inst, "sr_to_vip")
    net, n, m = inst.net, inst.net.n, inst.net.m
    big = _pure(stack_parallel(net, net, share_input=False), pure_relu)
    rows = []
    for i, c in enumerate(inst.center):
        rows.append(eq(_unit(2 * n, i), c))
        if inst.eps is not INF:
            rows.append(le(_unit(2 * n, n + i), c + inst.eps))
            rows.append(le(_unit(2 * n, n + i, -1), inst.eps - c))
    out = []
    if inst.delta is not INF:
        for i in range(m):
            diff = tuple(ONE if k == i else -ONE if k == m + i else ZERO for k in range(2 * m))
            out.append(le(diff, inst.delta))
            out.append(le(tuple(-v for v in diff), inst.delta))
    return VIP(big, LinSpec(2 * n, tuple(rows)), LinSpec(2 * m, tuple(out)))


def cr_to_vip(inst: CR, pure_relu: bool = False) -> VIP:
    """Same network, box input spec, rows ``N_i <= N_j``."""
    _require_linf(inst, "cr_to_vip")
    _reject_strict(inst)
    net, n, m = inst.net, inst.net.n, inst.net.m
    rows = []
    if inst.eps is not INF:
        for i, c in enumerate(inst.center):
            rows.append(le(_unit(n, i), c + inst.eps))
            rows.append(le(_unit(n, i, -1), inst.eps - c))
    j = inst.label - 1
    out = tuple(le(tuple(ONE if k == i else -ONE if k == j else ZERO for k in range(m)), 0)
                for i in range(m) if i != j)
    return VIP(_pure(net, pure_relu), LinSpec(n, tuple(rows)), LinSpec(m, out))


# -- between SR and CR ----------------------------------------------------------

def sr_to_cr(inst: SR, pure_relu: bool = False) -> CR:
    """Outputs ``(N(x) - N(c), N(c) - N(x), delta)``; the label is the last one.

    Under l1 with several outputs the first output is instead the summed
    distance ``sum_i |N(x)_i - N(c)_i|`` and the label is 2.
    """
    net, n, m = inst.net, inst.net.n, inst.net.m
    if inst.delta is INF:
        return CR(Network(n, ((ident(0),),)), inst.metric, inst.eps, inst.center, 1)
    both = stack_parallel(freeze_input(net, inst.center), net, share_input=True)
    rows = []
    for i in range(m):                      # N(x)_i - N(c)_i
        rows.append(tuple(-ONE if k == i else ONE if k == m + i else ZERO for k in range(2 * m)))
    for i in range(m):                      # N(c)_i - N(x)_i
        rows.append(tuple(ONE if k == i else -ONE if k == m + i else ZERO for k in range(2 * m)))
    if inst.metric is Metric.L1 and m > 1:
        # the l1 output distance is a sum, not the largest coordinate:
        # outputs (sum_i |N(x)_i - N(c)_i|, delta), label 2
        total = append_abs_sum(append_layer(both, [Node(Act.ID, 0, r) for r in rows[:m]]))
        out = _pure(append_layer(total, [ident(0, (ONE,)), ident(inst.delta)]), pure_relu)
        return CR(out, inst.metric, inst.eps, inst.center, 2)
    layer = [Node(Act.ID, 0, r) for r in rows] + [ident(inst.delta)]
    out = _pure(append_layer(both, layer), pure_relu)
    return CR(out, inst.metric, inst.eps, inst.center, 2 * m + 1)


def _distance_net(n: int, center) -> list[Node]:
    """ReLU pairs whose sum is ``sum_i |x_i - c_i|``."""
    nodes = []
    for i, c in enumerate(center):
        nodes.append(relu(-c, _unit(n, i)))
        nodes.append(relu(c, _unit(n, i, -1)))
    return nodes


def cr_to_sr(inst: CR, pure_relu: bool = False) -> SR:
    """Merged network ``(beta(x), g(x))`` with ``delta = 0``.

    ``beta = ReLU(sum_i ReLU(N_i - N_j))`` vanishes on the ball iff the
    label is robust, and ``g = ReLU(beta - sum_i |x_i - c_i|)`` catches the
    case where ``beta`` is a positive constant on the ball.

    When the ball is a single point (``eps = 0`` or no inputs) that second
    gadget cannot see anything, so the answer is computed at the center and
    a fixed instance with the same verdict is emitted.
    """
    _reject_strict(inst)
    net, n, m = inst.net, inst.net.n, inst.net.m
    j = inst.label - 1
    if inst.eps == 0 or n == 0:
        y = evaluate(net, inst.center)
        robust = all(y[i] <= y[j] for i in range(m))
        if robust:
            return SR(Network(n, ((ident(0),),)), inst.metric, 0, inst.center, 0)
        probe = Network(n, ((ident(0, _unit(n, 0)),),)) if n else None
        if probe is None:
            raise ValueError("no robustness instance over zero inputs can fail")
        return SR(probe, inst.metric, 1, inst.center, 0)
    # hidden: alpha_i = ReLU(N_i - N_j), then beta, then carry beta and
    # subtract the distance gadget computed alongside
    alphas = [relu(0, _gap(m, i, j)) for i in range(m)]
    with_beta = append_layer(append_layer(net, alphas), [relu(0, (ONE,) * m)])
    dist_net = Network(n, (tuple(_distance_net(n, inst.center)),))
    dist_net = append_layer(dist_net, [ident(0, (ONE,) * (2 * n))])
    both = stack_parallel(with_beta, dist_net, share_input=True)
    out = append_layer(both, [ident(0, (ONE, ZERO)), relu(0, (ONE, -ONE))])
    return SR(_pure(out, pure_relu), inst.metric, inst.eps, inst.center, 0)


# -- between ACR and CR ---------------------------------------------------------

def acr_to_cr(inst: ACR) -> list[CR]:
    """One instance per label; the original holds iff one of them does."""
    _reject_strict(inst)
    return [CR(inst.net, inst.metric, inst.eps, inst.center, j) for j in range(1, inst.net.m + 1)]


def cr_to_acr(inst: CR, pure_relu: bool = False) -> ACR:
    """Three outputs ``(0, g - (2/s) ReLU(x_1 - c_1), g - (2/s) ReLU(c_1 - x_1))``.

    ``g`` clamps ``f = sum_i ReLU(N_i - N_j)`` to ``[0, 1]`` and the shift
    ``s`` is ``eps / 2`` (or 1 for an unbounded ball), so the points
    ``c +- s e_1`` lie in the ball and push outputs 2 and 3 to ``-1``.
    """
    _reject_strict(inst)
    net, n, m = inst.net, inst.net.n, inst.net.m
    if inst.eps == 0:
        raise ValueError("cr_to_acr needs eps > 0")
    if n == 0:
        raise ValueError("cr_to_acr needs at least one input")
    s = ONE if inst.eps is INF else inst.eps / 2
    j = inst.label - 1
    c1 = inst.center[0]
    diffs = [relu(0, _gap(m, i, j)) for i in range(m)]
    f_net = append_layer(append_layer(net, diffs), [ident(0, (ONE,) * m)])
    # g = f - ReLU(f - 1), as ReLU(f) - ReLU(f - 1) since f >= 0
    g_net = append_layer(f_net, [relu(0, (ONE,)), relu(-1, (ONE,))])
    g_net = append_layer(g_net, [ident(0, (ONE, -ONE))])
    side = Network(n, ((relu(-c1, _unit(n, 0)), relu(c1, _unit(n, 0, -1))),))
    both = stack_parallel(g_net, side, share_input=True)
    k = 2 / s
    out = append_layer(both, [ident(0), ident(0, (ONE, -k, ZERO)), ident(0, (ONE, ZERO, -k))])
    return ACR(_pure(out, pure_relu), inst.metric, inst.eps, inst.center)


# -- NE into CR, GSR into NE ------------------------------------------------------

def ne_to_cr(inst: NE, metric: Metric | str = Metric.LINF, pure_relu: bool = False) -> CR:
    """Outputs ``(N - N', N' - N, 0)`` over the whole space, label ``2m + 1``."""
    a, b = inst.net, inst.net2
    n, m = a.n, a.m
    both = stack_parallel(a, b, share_input=True)
    rows = [tuple(ONE if k == i else -ONE if k == m + i else ZERO for k in range(2 * m)) for i in range(m)]
    rows += [tuple(-v for v in r) for r in rows]
    layer = [Node(Act.ID, 0, r) for r in rows] + [ident(0)]
    out = _pure(append_layer(both, layer), pure_relu)
    return CR(out, metric, INF, (ZERO,) * n, 2 * m + 1)


def gsr_to_ne(inst: GSR, pure_relu: bool = False) -> NE:
    """A network that is constantly zero iff ``inst`` holds, paired with zero.

    Input is ``(x, y)``. Each ``y_i`` is squashed to
    ``t_i = 2 eps (Psi(y_i) - 1/2)`` in ``[-eps, eps]``, with
    ``Psi(t) = ReLU(t) - ReLU(t - 1)``, and the second copy of the network
    runs on ``x + t``. Outputs are ``ReLU(+-(N(x + t)_i - N(x)_i) - delta)``.
    For an unbounded ``eps`` the second copy reads ``y`` directly.
    """
    _require_linf(inst, "gsr_to_ne")
    net, n, m = inst.net, inst.net.n, inst.net.m
    if inst.delta is INF:
        return NE(zero_network(2 * n, 2 * m), zero_network(2 * n, 2 * m))
    pair = stack_parallel(net, net, share_input=False)
    if inst.eps is INF:
        body = pair
    else:
        eps = inst.eps
        first = [ident(0, _unit(2 * n, i)) for i in range(n)]
        for i in range(n):
            first += [relu(0, _unit(2 * n, n + i)), relu(-1, _unit(2 * n, n + i))]
        width = 3 * n
        second = [ident(0, _unit(width, i)) for i in range(n)]
        for i in range(n):
            w = [ZERO] * width
            w[i] = ONE
            w[n + 2 * i] = 2 * eps
            w[n + 2 * i + 1] = -2 * eps
            second.append(ident(-eps, w))
        body = chain(Network(2 * n, (tuple(first), tuple(second))), pair)
    out = []
    for i in range(m):
        up = tuple(-ONE if k == i else ONE if k == m + i else ZERO for k in range(2 * m))
        out.append(relu(-inst.delta, up))                       # N(xbar)_i - N(x)_i - delta
        out.append(relu(-inst.delta, tuple(-v for v in up)))    # N(x)_i - N(xbar)_i - delta
    big = _pure(append_layer(body, out), pure_relu)
    return NE(big, zero_network(2 * n, 2 * m))


# -- 3-SAT gadgets ----------------------------------------------------------------

@dataclass(frozen=True)
class CNF3:
    """Clauses of exactly three nonzero literals over variables ``1..num_vars``."""

    num_vars: int
    clauses: tuple[tuple[int, int, int], ...]

    def __post_init__(self):
        clauses = tuple(tuple(c) for c in self.clauses)
        object.__setattr__(self, "clauses", clauses)
        if not clauses:
            raise ValueError("empty formula")
        for c in clauses:
            if len(c) != 3:
                raise ValueError(f"clause {list(c)} does not have exactly three literals")
            for lit in c:
                if lit == 0 or abs(lit) > self.num_vars:
                    raise ValueError(f"literal {lit} out of range 1..{self.num_vars}")

    def value(self, assignment: Sequence[bool]) -> bool:
        return all(any(assignment[abs(l) - 1] == (l > 0) for l in c) for c in self.clauses)


def satisfiable(cnf: CNF3) -> bool:
    """Truth-table check over all assignments."""
    from itertools import product
    return any(cnf.value(a) for a in product((False, True), repeat=cnf.num_vars))


def parse_dimacs(text: str) -> CNF3:
    num_vars = None
    declared = None
    lits: list[int] = []
    clauses = []
    for raw in text.splitlines():
        line = raw.strip()
        if line.startswith("%"):
            break
        if not line or line.startswith("c"):
            continue
        if line.startswith("p"):
            parts = line.split()
            if len(parts) != 4 or parts[1] != "cnf":
                raise ValueError(f"bad problem line {line!r}")
            num_vars, declared = int(parts[2]), int(parts[3])
            continue
        for tok in line.split():
            try:
                v = int(tok)
            except ValueError:
                raise ValueError(f"bad literal {tok!r}") from None
            if v == 0:
                clauses.append(tuple(lits))
                lits = []
            else:
                lits.append(v)
    if lits:
        clauses.append(tuple(lits))
    if num_vars is None:
        num_vars = max((abs(l) for c in clauses for l in c), default=0)
    if declared is not None and declared != len(clauses):
        raise ValueError(f"header declares {declared} clauses, found {len(clauses)}")
    return CNF3(num_vars, tuple(clauses))


def _literal_layers(cnf: CNF3):
    """Layers up to the literal values.

    Per variable: ``ReLU(x), ReLU(x - 1)``; then ``a = Psi(x)`` (id); then
    ``a`` and ``b = 1 - a`` (id); then ``2 ReLU(a - 1/2)`` and
    ``2 ReLU(b - 1/2)``, written as ``ReLU(2a - 1)`` and ``ReLU(2b - 1)``.
    Literal ``v`` sits at index ``2(v - 1)``, ``-v`` at ``2(v - 1) + 1``.
    """
    k = cnf.num_vars
    w = 2 * k
    l1 = []
    for v in range(k):
        l1 += [relu(0, _unit(k, v)), relu(-1, _unit(k, v))]
    l2 = []
    for v in range(k):
        c = [ZERO] * w
        c[2 * v], c[2 * v + 1] = ONE, -ONE
        l2.append(ident(0, c))
    l3 = []
    for v in range(k):
        l3 += [ident(0, _unit(k, v)), ident(1, _unit(k, v, -1))]
    l4 = []
    for v in range(k):
        l4 += [relu(-1, _unit(w, 2 * v, 2)), relu(-1, _unit(w, 2 * v + 1, 2))]
    return [tuple(l1), tuple(l2), tuple(l3), tuple(l4)]


def _lit_index(lit: int) -> int:
    return 2 * (abs(lit) - 1) + (0 if lit > 0 else 1)


def sat3_network(cnf: CNF3, clause: str = "sum", pure_relu: bool = False) -> Network:
    """The 3-SAT gadget network ``N_phi`` with one input per variable.

    ``clause="sum"`` scores a clause as ``Psi(a + b + c)``; ``clause="max"``
    as ``max(a, b, c)`` built from ``max(a, b) = a + ReLU(b - a)``. The
    output is the sum of the clause scores.
    """
    layers = _literal_layers(cnf)
    w = 2 * cnf.num_vars
    c = len(cnf.clauses)
    if clause == "sum":
        l5 = []
        for cl in cnf.clauses:
            s = [ZERO] * w
            for lit in cl:
                s[_lit_index(lit)] += 1
            l5 += [relu(0, s), relu(-1, s)]
        l6 = [ident(0, tuple(ONE if k == 2 * i else -ONE if k == 2 * i + 1 else ZERO for k in range(2 * c)))
              for i in range(c)]
        layers += [tuple(l5), tuple(l6), (ident(0, (ONE,) * c),)]
    elif clause == "max":
        l5 = []
        for p, q, r in cnf.clauses:
            a = _unit(w, _lit_index(p))
            b = [ZERO] * w
            b[_lit_index(q)] += 1
            b[_lit_index(p)] -= 1
            l5 += [relu(0, a), relu(0, b), relu(0, _unit(w, _lit_index(r)))]
        l6 = []
        for i in range(c):
            # first = a + ReLU(b - a) >= 0; then ReLU(c - first)
            first = [ZERO] * (3 * c)
            first[3 * i] = first[3 * i + 1] = ONE
            rest = [ZERO] * (3 * c)
            rest[3 * i], rest[3 * i + 1], rest[3 * i + 2] = -ONE, -ONE, ONE
            l6 += [relu(0, first), relu(0, rest)]
        layers += [tuple(l5), tuple(l6), (ident(0, (ONE,) * (2 * c)),)]
    else:
        raise ValueError(f"unknown clause gadget {clause!r}")
    return _pure(Network(cnf.num_vars, tuple(layers)), pure_relu)


def sat3_to_gsr(cnf: CNF3, pure_relu: bool = False) -> GSR:
    """``(N_phi, inf, c - 1/2)`` for ``c`` clauses; holds iff ``cnf`` is unsatisfiable."""
    c = len(cnf.clauses)
    return GSR(sat3_network(cnf, "sum", pure_relu), Metric.LINF, INF, c - HALF)


def sat3_to_lr(cnf: CNF3, pure_relu: bool = False, legacy: bool = False) -> LR:
    """``(N_phi, 1/2, 2c - 1, (1/2, ..., 1/2))``.

    The default uses the max clause gadget, under which every clause score
    is 2-Lipschitz and an unsatisfiable formula keeps one clause flat
    around any generic point. ``legacy=True`` uses the sum gadget, which can
    be steeper than ``2c - 1`` near the center even for unsatisfiable
    formulas.
    """
    c = len(cnf.clauses)
    net = sat3_network(cnf, "sum" if legacy else "max", pure_relu)
    return LR(net, Metric.LINF, HALF, (HALF,) * cnf.num_vars, 2 * c - 1)


def sat3_to_glr(cnf: CNF3, pure_relu: bool = False, legacy: bool = False) -> GLR:
    """``(N_phi, 1/2, 2c - 1)``; see :func:`sat3_to_lr` for the clause gadget."""
    c = len(cnf.clauses)
    net = sat3_network(cnf, "sum" if legacy else "max", pure_relu)
    return GLR(net, Metric.LINF, HALF, 2 * c - 1)


# -- metric retraction ------------------------------------------------------------

def retraction_network(n: int, metric: Metric | str, center: Sequence, eps, legacy: bool = False) -> Network:
    """``T: R^n -> R^n`` that fixes the closed ball and maps everything into it.

    For l1 the coordinates are clamped one at a time to the budget left by
    the previous ones, ``T_i = clamp(x_i - c_i, +-(eps - sum_{j<i} |T_j|))``,
    each clamp as ``ReLU(d) - ReLU(d - r) - ReLU(-d) + ReLU(-d - r)``.
    ``legacy=True`` adds the last term instead of subtracting it, which
    leaves the ball for points far below the center. For linf every
    coordinate is clamped to ``+-eps``.
    """
    metric = Metric.parse(metric)
    center = vector(center)
    if eps is INF:
        raise ValueError("the retraction needs a finite radius")
    eps = Fraction(eps)
    if len(center) != n:
        raise ValueError("center dimension mismatch")
    if n == 0:
        raise ValueError("the retraction needs at least one input")
    if metric is Metric.LINF:
        first = []
        for i, c in enumerate(center):
            d = _unit(n, i)
            nd = _unit(n, i, -1)
            first += [relu(-c, d), relu(-c - eps, d), relu(c, nd), relu(c - eps, nd)]
        out = [ident(c, tuple(ONE if k == 4 * i else -ONE if k in (4 * i + 1, 4 * i + 2)
                              else ONE if k == 4 * i + 3 else ZERO for k in range(4 * n)))
               for i, c in enumerate(center)]
        return Network(n, (tuple(first), tuple(out)))
    # Running layout after stage i: [d_{i+1}..d_n raw (id), p_1, q_1, ..., p_i, q_i]
    # with p_j = ReLU(T_j), q_j = ReLU(-T_j), so |T_j| = p_j + q_j and T_j = p_j - q_j.
    layers = []
    # raw differences d = x - c
    layers.append(tuple(ident(-c, _unit(n, i)) for i, c in enumerate(center)))
    width = n
    done = 0                      # coordinates already clamped
    for i in range(n):
        raw = n - done            # raw coordinates still in front
        budget = [ZERO] * width   # sum of |T_j| for j < i
        for t in range(done):
            budget[raw + 2 * t] = ONE
            budget[raw + 2 * t + 1] = ONE
        d = list(_unit(width, 0))
        nd = [-v for v in d]
        a = [relu(0, d), relu(-eps, [x + y for x, y in zip(d, budget)]),
             relu(0, nd), relu(-eps, [x + y for x, y in zip(nd, budget)])]
        keep = [ident(0, _unit(width, k)) for k in range(1, width)]
        layers.append(tuple(a + keep))
        w2 = len(a) + len(keep)
        sign4 = ONE if legacy else -ONE      # legacy: -(r3 + r4); symmetric: -(r3 - r4)
        t_row = [ONE, -ONE, -ONE, -sign4] + [ZERO] * len(keep)
        b = [ident(0, t_row)] + [ident(0, _unit(w2, 4 + k)) for k in range(len(keep))]
        layers.append(tuple(b))
        w3 = len(b)
        c_layer = [ident(0, _unit(w3, k)) for k in range(1, raw)]          # remaining raw
        c_layer += [ident(0, _unit(w3, k)) for k in range(raw, w3)]       # earlier p, q
        c_layer += [relu(0, _unit(w3, 0)), relu(0, _unit(w3, 0, -1))]     # p_i, q_i
        layers.append(tuple(c_layer))
        done += 1
        width = len(c_layer)
    out = [ident(center[t], tuple(ONE if k == 2 * t else -ONE if k == 2 * t + 1 else ZERO
                                  for k in range(width))) for t in range(n)]
    layers.append(tuple(out))
    return Network(n, tuple(layers))


def metric_retraction(net: Network, metric: Metric | str, center: Sequence, eps, target: str = "cr",
                      legacy: bool = False, pure_relu: bool = False) -> Network:
    """``net`` composed after the retraction onto the ``metric`` ball.

    With ``target="sr"`` the result also maps to the single output
    ``sum_i |net(T x)_i - net(c)_i|``, so output distances agree in every
    metric.
    """
    t = retraction_network(net.n, metric, center, eps, legacy)
    out = chain(t, net)
    if target == "sr":
        y0 = evaluate(net, vector(center))
        out = append_abs_sum(shift_outputs(out, [-v for v in y0]))
    elif target not in ("cr", "acr"):
        raise ValueError(f"unknown retraction target {target!r}")
    return _pure(out, pure_relu)
