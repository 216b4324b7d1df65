"""Node necessity: does deleting a set of hidden nodes change the function?"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Iterable

from .network import Network, Node, NodeRef, append_layer, delete_nodes, ident, relu, stack_parallel, zero_network
from .verifier.decide import Verdict, decide_ne
from .verifier.problems import NE
from .verifier.search import Stats

__all__ = ["AneceVerdict", "constant_zero_nodes", "decide_anece", "decide_nece", "ne_to_anece", "ne_to_nece"]

ONE = Fraction(1)


def _refs(net: Network, refs: Iterable) -> list[NodeRef]:
    out = []
    hidden = set(net.hidden_refs())
    for r in refs:
        if not isinstance(r, NodeRef):
            r = NodeRef.parse(r) if isinstance(r, str) else NodeRef(*r)
        if r not in hidden:
            raise ValueError(f"{r} is not a hidden node")
        out.append(r)
    return sorted(set(out))


def decide_nece(net: Network, nodes: Iterable, engine="dfs", parallel=None) -> Verdict:
    """``holds`` iff deleting ``nodes`` changes the computed function.

    The witness is an input where the two networks differ.
    """
    refs = _refs(net, nodes)
    if not refs:
        raise ValueError("the node set must be non-empty")
    v = decide_ne(NE(net, delete_nodes(net, refs)), engine, parallel)
    return Verdict(not v.holds, v.witness, v.certificate, v.stats)


@dataclass
class AneceVerdict:
    holds: bool
    unnecessary: tuple[NodeRef, ...] | None = None   # a smallest unnecessary set on failure
    checked: int = 0
    stats: Stats = field(default_factory=Stats)

    def to_dict(self) -> dict:
        return {"holds": self.holds,
                "unnecessary": None if self.unnecessary is None else [str(r) for r in self.unnecessary],
                "checked": self.checked, "stats": self.stats.as_dict()}


def decide_anece(net: Network, cap: int = 16, engine="dfs", parallel=None) -> AneceVerdict:
    """Every non-empty set of hidden nodes is necessary.

    Sets are tried by increasing size, so a failure reports a smallest
    unnecessary set. Networks with more than ``cap`` hidden nodes are
    refused.
    """
    hidden = net.hidden_refs()
    if len(hidden) > cap:
        raise ValueError(f"{len(hidden)} hidden nodes exceed the cap of {cap}")
    stats = Stats()
    checked = 0
    for size in range(1, len(hidden) + 1):
        for subset in combinations(hidden, size):
            checked += 1
            v = decide_ne(NE(net, delete_nodes(net, subset)), engine, parallel)
            stats.add(v.stats)
            if v.holds:
                return AneceVerdict(False, tuple(subset), checked, stats)
    return AneceVerdict(True, None, checked, stats)


def _difference(a: Network, b: Network) -> tuple[Network, list[NodeRef]]:
    """Network whose last hidden layer holds ``a(x) - b(x)`` and whose
    outputs copy it; also returns the refs of that hidden layer."""
    if (a.n, a.m) != (b.n, b.m):
        raise ValueError("networks must agree on input and output widths")
    m = a.m
    both = stack_parallel(a, b, share_input=True)
    diff = [ident(0, tuple(ONE if k == i else -ONE if k == m + i else 0 for k in range(2 * m)))
            for i in range(m)]
    net = append_layer(both, diff)
    net = append_layer(net, [ident(0, tuple(ONE if k == i else 0 for k in range(m))) for i in range(m)])
    last = len(net.layers) - 1
    return net, [NodeRef(last, i) for i in range(m)]


def ne_to_nece(a: Network, b: Network) -> tuple[Network, list[NodeRef]]:
    """``(P, [y])`` with ``NECE(P, {y})`` iff the networks differ.

    ``y`` sits in the last hidden layer and the single output copies it.
    With one output ``y = a(x) - b(x)``; with several it is
    ``sum_k ReLU(d_k) + ReLU(-d_k)`` over the differences ``d_k``, which
    vanishes exactly where all outputs agree. Deleting ``y`` leaves the
    output without incoming edges, so ``P`` minus ``y`` is constantly zero.
    """
    net, diff_refs = _difference(a, b)
    m = a.m
    if m == 1:
        return net, diff_refs
    base = Network(net.n, net.layers[:-1])
    parts = []
    for k in range(m):
        unit = tuple(ONE if i == k else 0 for i in range(m))
        parts += [relu(0, unit), relu(0, tuple(-w for w in unit))]
    net = append_layer(base, parts)
    net = append_layer(net, [ident(0, (ONE,) * (2 * m))])
    net = append_layer(net, [ident(0, (ONE,))])
    return net, [NodeRef(len(net.layers) - 1, 0)]


def _ancestors(net: Network, ref: NodeRef) -> Network:
    """Subnetwork of ``ref`` and the nodes feeding it, with ``ref`` as output."""
    keep = {ref.layer: {ref.index}}
    for l in range(ref.layer, 1, -1):
        prev = set()
        for i in keep.get(l, ()):
            node = net.layers[l - 1][i]
            prev |= {j for j, w in enumerate(node.weights) if w}
        keep[l - 1] = prev
    layers = []
    for l in range(1, ref.layer + 1):
        idx = sorted(keep.get(l, ()))
        prev_idx = sorted(keep.get(l - 1, ())) if l > 1 else None
        nodes = []
        for i in idx:
            node = net.layers[l - 1][i]
            if node.weights and prev_idx is not None:
                node = Node(node.act, node.bias, tuple(node.weights[j] for j in prev_idx))
                if not node.weights:
                    node = Node(node.act, node.bias)
            nodes.append(node)
        layers.append(tuple(nodes))
    # empty intermediate layers are fine; the last one holds just ``ref``
    return Network(net.n, tuple(layers))


def constant_zero_nodes(net: Network, engine="dfs") -> list[NodeRef]:
    """Hidden nodes whose value is zero at every input, found layer by layer
    with an exact equivalence check against the zero network."""
    zero = zero_network(net.n, 1)
    found = []
    for ref in net.hidden_refs():
        sub = _ancestors(net, ref)
        if decide_ne(NE(sub, zero), engine).holds:
            found.append(ref)
    return found


def ne_to_anece(a: Network, b: Network, engine="dfs") -> Network:
    """A network ``Z`` with ``ANECE(Z)`` iff ``a`` and ``b`` are equivalent.

    The outputs of the two networks are subtracted and every hidden node
    that is constantly zero is deleted. If the difference itself is
    constantly zero, everything is deleted and ``Z`` is the zero network
    without hidden nodes, for which every (there are none) hidden set is
    necessary. Otherwise a cancelling pair ``ReLU(1) - ReLU(1)`` is added
    to the first output, which makes that pair an unnecessary set.
    """
    net, diff_refs = _difference(a, b)
    zeros = constant_zero_nodes(net, engine)
    if set(diff_refs) <= set(zeros):
        return zero_network(a.n, a.m)
    net = delete_nodes(net, zeros)
    layers = [list(layer) for layer in net.layers]
    layers[-2] += [relu(1), relu(1)]
    out = []
    for k, node in enumerate(layers[-1]):
        extra = (ONE, -ONE) if k == 0 else (0, 0)
        if node.weights:
            node = Node(node.act, node.bias, node.weights + extra)
        elif k == 0:
            node = Node(node.act, node.bias, (0,) * (len(layers[-2]) - 2) + extra)
        out.append(node)
    layers[-1] = out
    return Network(net.n, tuple(tuple(l) for l in layers))
