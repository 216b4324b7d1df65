"""Feedforward ReLU/identity networks with exact rational weights.

A :class:`Network` stores its input width ``n`` and the computation layers
(hidden layers followed by the output layer). Layer numbering follows the
usual convention: layer 0 is the input layer, so ``net.layer(l)`` for
``l >= 1`` is ``net.layers[l - 1]``.

A node either has one weight per node of the preceding layer or no weights
at all. A node without weights is *detached*: it computes ``act(bias)`` (the
empty sum is zero).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Iterable, Sequence

from .exact import as_fraction, format_rational, parse_rational, vector

__all__ = [
    "Act",
    "Node",
    "NodeRef",
    "Network",
    "affine_layer",
    "affine_map",
    "append_abs_sum",
    "append_layer",
    "chain",
    "constant_network",
    "delete_nodes",
    "evaluate",
    "freeze_input",
    "id_to_relu",
    "ident",
    "identity_network",
    "linear_outputs",
    "pattern_of",
    "relu",
    "relu_nodes",
    "shift_outputs",
    "stack_parallel",
    "zero_network",
]

ZERO = Fraction(0)
ONE = Fraction(1)


class Act(str, Enum):
    RELU = "relu"
    ID = "id"

    def __call__(self, t: Fraction) -> Fraction:
        if self is Act.RELU:
            return t if t > 0 else ZERO
        return t


@dataclass(frozen=True)
class Node:
    act: Act
    bias: Fraction = ZERO
    weights: tuple[Fraction, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "act", Act(self.act))
        object.__setattr__(self, "bias", as_fraction(self.bias))
        object.__setattr__(self, "weights", vector(self.weights))

    @property
    def detached(self) -> bool:
        return not self.weights

    def pre(self, inputs: Sequence[Fraction]) -> Fraction:
        if not self.weights:
            return self.bias
        return self.bias + sum((w * y for w, y in zip(self.weights, inputs) if w), ZERO)


def relu(bias=0, weights=()) -> Node:
    return Node(Act.RELU, bias, weights)


def ident(bias=0, weights=()) -> Node:
    return Node(Act.ID, bias, weights)


@dataclass(frozen=True, order=True)
class NodeRef:
    """Address of a node; ``layer >= 1`` counts the input layer as 0."""

    layer: int
    index: int

    @classmethod
    def parse(cls, text: str) -> "NodeRef":
        try:
            layer, index = text.split(":")
            return cls(int(layer), int(index))
        except ValueError:
            raise ValueError(f"node reference must look like 'layer:index', got {text!r}") from None

    def __str__(self):
        return f"{self.layer}:{self.index}"


@dataclass(frozen=True)
class Network:
    n: int
    layers: tuple[tuple[Node, ...], ...]
    _relu_count: int = field(default=-1, init=False, repr=False, compare=False)

    def __post_init__(self):
        layers = tuple(tuple(layer) for layer in self.layers)
        object.__setattr__(self, "layers", layers)
        if self.n < 0:
            raise ValueError("input width must be non-negative")
        if not layers:
            raise ValueError("a network needs at least an output layer")
        if not layers[-1]:
            raise ValueError("the output layer must not be empty")
        width = self.n
        for depth, layer in enumerate(layers, start=1):
            for i, node in enumerate(layer):
                if node.weights and len(node.weights) != width:
                    raise ValueError(
                        f"node {depth}:{i} has {len(node.weights)} weights, "
                        f"previous layer has {width} nodes")
            width = len(layer)
        count = sum(1 for layer in layers for node in layer if node.act is Act.RELU)
        object.__setattr__(self, "_relu_count", count)

    @property
    def m(self) -> int:
        return len(self.layers[-1])

    @property
    def depth(self) -> int:
        """Number of layers including the input layer (the L of the model)."""
        return len(self.layers) + 1

    @property
    def relu_count(self) -> int:
        return self._relu_count

    @property
    def node_count(self) -> int:
        return sum(len(layer) for layer in self.layers)

    @property
    def activations(self) -> frozenset:
        return frozenset(node.act for layer in self.layers for node in layer)

    def layer(self, index: int) -> tuple[Node, ...]:
        if index < 1 or index > len(self.layers):
            raise IndexError(f"no computation layer {index}")
        return self.layers[index - 1]

    def hidden_refs(self) -> list[NodeRef]:
        return [NodeRef(l, i)
                for l in range(1, len(self.layers))
                for i in range(len(self.layers[l - 1]))]

    def __call__(self, x: Sequence) -> tuple[Fraction, ...]:
        return evaluate(self, x)

    # -- serialization ---------------------------------------------------

    def to_dict(self) -> dict:
        layers = [[{"act": "input"} for _ in range(self.n)]]
        for layer in self.layers:
            layers.append([
                {"act": node.act.value,
                 "bias": format_rational(node.bias),
                 "weights": [format_rational(w) for w in node.weights]}
                for node in layer])
        return {"layers": layers}

    @classmethod
    def from_dict(cls, data: dict) -> "Network":
        try:
            raw = data["layers"]
        except (KeyError, TypeError):
            raise ValueError("network JSON needs a 'layers' list") from None
        if not isinstance(raw, list) or len(raw) < 2:
            raise ValueError("network JSON needs an input layer and at least one more layer")
        layers = []
        for layer in raw[1:]:
            nodes = []
            for node in layer:
                act = node.get("act", "id")
                if act not in ("relu", "id"):
                    raise ValueError(f"unsupported activation {act!r}")
                bias = node.get("bias", "0")
                nodes.append(Node(Act(act), _rat(bias), tuple(_rat(w) for w in node.get("weights", []))))
            layers.append(tuple(nodes))
        return cls(len(raw[0]), tuple(layers))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "Network":
        return cls.from_dict(json.loads(text))


def _rat(value) -> Fraction:
    if isinstance(value, str):
        return parse_rational(value)
    if isinstance(value, int) and not isinstance(value, bool):
        return Fraction(value)
    raise ValueError(f"rationals must be written as strings like '3/4', got {value!r}")


# -- evaluation -------------------------------------------------------------

def _check_input(net: Network, x: Sequence) -> tuple[Fraction, ...]:
    if len(x) != net.n:
        raise ValueError(f"network expects {net.n} inputs, got {len(x)}")
    return vector(x)


def evaluate(net: Network, x: Sequence) -> tuple[Fraction, ...]:
    """Exact forward pass."""
    values = _check_input(net, x)
    for layer in net.layers:
        values = tuple(node.act(node.pre(values)) for node in layer)
    return values


def relu_nodes(net: Network) -> list[NodeRef]:
    """ReLU nodes in topological order (layer by layer, then by index)."""
    return [NodeRef(l, i)
            for l, layer in enumerate(net.layers, start=1)
            for i, node in enumerate(layer) if node.act is Act.RELU]


def pattern_of(net: Network, x: Sequence) -> tuple[bool, ...]:
    """Phase of every ReLU node at ``x``; ``True`` is active.

    A pre-activation of exactly zero counts as active.
    """
    values = _check_input(net, x)
    phases = []
    for layer in net.layers:
        out = []
        for node in layer:
            t = node.pre(values)
            if node.act is Act.RELU:
                phases.append(t >= 0)
            out.append(node.act(t))
        values = tuple(out)
    return tuple(phases)


def affine_map(net: Network, pattern: Sequence[bool]):
    """Affine map ``x -> W x + b`` the network computes on a pattern's region.

    Returns ``(W, b)`` with ``W`` as a tuple of rows (one per output).
    """
    if len(pattern) != net.relu_count:
        raise ValueError(f"pattern has {len(pattern)} phases, network has {net.relu_count} ReLUs")
    n = net.n
    exprs = [tuple(ONE if j == i else ZERO for j in range(n)) + (ZERO,) for i in range(n)]
    phases = iter(pattern)
    for layer in net.layers:
        out = []
        for node in layer:
            acc = [ZERO] * n + [node.bias]
            for w, e in zip(node.weights, exprs):
                if w:
                    for k in range(n + 1):
                        acc[k] += w * e[k]
            if node.act is Act.RELU and not next(phases):
                acc = [ZERO] * (n + 1)
            out.append(tuple(acc))
        exprs = out
    return tuple(e[:n] for e in exprs), tuple(e[n] for e in exprs)


# -- builders ---------------------------------------------------------------

def identity_network(n: int) -> Network:
    """Single id layer computing ``x -> x``."""
    return Network(n, (tuple(ident(0, _unit(n, i)) for i in range(n)),))


def zero_network(n: int, m: int = 1) -> Network:
    """Output layer of detached id nodes with bias 0."""
    return Network(n, (tuple(ident(0) for _ in range(m)),))


def constant_network(n: int, values: Sequence) -> Network:
    return Network(n, (tuple(ident(v) for v in values),))


def affine_layer(weights: Sequence[Sequence], biases: Sequence, act: Act = Act.ID,
                 n: int | None = None) -> Network:
    """One-layer network ``x -> act(W x + b)``."""
    if n is None:
        if not weights or not weights[0]:
            raise ValueError("pass n explicitly when the weight matrix is empty")
        n = len(weights[0])
    return Network(n, (tuple(Node(act, b, tuple(w)) for w, b in zip(weights, biases)),))


def _unit(n: int, i: int, scale=ONE) -> tuple[Fraction, ...]:
    return tuple(scale if j == i else ZERO for j in range(n))


def _id_layer(width: int) -> tuple[Node, ...]:
    return tuple(ident(0, _unit(width, i)) for i in range(width))


def append_layer(net: Network, layer: Iterable[Node]) -> Network:
    """Add a layer on top; the old output layer becomes hidden."""
    return Network(net.n, net.layers + (tuple(layer),))


def chain(first: Network, second: Network) -> Network:
    """Network computing ``second(first(x))``.

    The input layer of ``second`` is a pass-through, so its first
    computation layer simply reads the outputs of ``first``.
    """
    if first.m != second.n:
        raise ValueError(f"cannot chain: {first.m} outputs into {second.n} inputs")
    return Network(first.n, first.layers + second.layers)


def _pad_depth(net: Network, depth: int) -> Network:
    layers = net.layers
    while len(layers) < depth:
        layers = layers + (_id_layer(len(layers[-1])),)
    return Network(net.n, layers)


def _shift(node: Node, before: int, after: int) -> Node:
    if not node.weights:
        return node
    return Node(node.act, node.bias, (ZERO,) * before + node.weights + (ZERO,) * after)


def stack_parallel(a: Network, b: Network, share_input: bool = True,
                   relu_only: bool = False) -> Network:
    """Run two networks side by side; outputs are ``a``'s then ``b``'s.

    With ``share_input`` both read the same ``x``; otherwise the input is
    the concatenation ``(x_a, x_b)``. The shallower network is padded with
    identity layers. ``relu_only`` rewrites the hidden id nodes afterwards.
    """
    if share_input and a.n != b.n:
        raise ValueError(f"shared input needs equal widths, got {a.n} and {b.n}")
    depth = max(len(a.layers), len(b.layers))
    a, b = _pad_depth(a, depth), _pad_depth(b, depth)
    layers = []
    for l, (la, lb) in enumerate(zip(a.layers, b.layers)):
        if l == 0 and share_input:
            layer = la + lb
        elif l == 0:
            layer = tuple(_shift(node, 0, b.n) for node in la) + \
                tuple(_shift(node, a.n, 0) for node in lb)
        else:
            wa, wb = len(a.layers[l - 1]), len(b.layers[l - 1])
            layer = tuple(_shift(node, 0, wb) for node in la) + \
                tuple(_shift(node, wa, 0) for node in lb)
        layers.append(layer)
    net = Network(a.n if share_input else a.n + b.n, tuple(layers))
    return id_to_relu(net) if relu_only else net


def freeze_input(net: Network, point: Sequence) -> Network:
    """Network with the same input width that constantly outputs ``net(point)``.

    The old input layer becomes a hidden layer of detached id nodes whose
    biases are the coordinates of ``point``.
    """
    point = _check_input(net, point)
    frozen = tuple(ident(p) for p in point)
    return Network(net.n, (frozen,) + net.layers)


def id_to_relu(net: Network) -> Network:
    """Replace every hidden id node ``t`` by ``relu(t)`` and ``relu(-t)``.

    The following layer reads ``relu(t) - relu(-t)``. Output nodes keep
    their activation.
    """
    layers = [list(layer) for layer in net.layers]
    for l in range(len(layers) - 1):
        layer, nxt = layers[l], layers[l + 1]
        if all(node.act is Act.RELU for node in layer):
            continue
        new_layer, columns = [], []
        for node in layer:
            if node.act is Act.ID:
                neg = Node(Act.RELU, -node.bias, tuple(-w for w in node.weights))
                new_layer += [Node(Act.RELU, node.bias, node.weights), neg]
                columns.append((ONE, -ONE))
            else:
                new_layer.append(node)
                columns.append((ONE,))
        rewired = []
        for node in nxt:
            if not node.weights:
                rewired.append(node)
                continue
            weights = []
            for w, col in zip(node.weights, columns):
                weights.extend(w * c for c in col)
            rewired.append(Node(node.act, node.bias, tuple(weights)))
        layers[l], layers[l + 1] = new_layer, rewired
    return Network(net.n, tuple(tuple(layer) for layer in layers))


def delete_nodes(net: Network, refs: Iterable[NodeRef]) -> Network:
    """Induced subnetwork without the given hidden nodes.

    Surviving weights, biases and activations are unchanged; a node whose
    predecessors are all gone becomes detached.
    """
    doomed: dict[int, set[int]] = {}
    last = len(net.layers)
    for ref in refs:
        if not isinstance(ref, NodeRef):
            ref = NodeRef.parse(ref) if isinstance(ref, str) else NodeRef(*ref)
        if ref.layer < 1 or ref.layer >= last:
            raise ValueError(f"{ref} is not a hidden node")
        if not 0 <= ref.index < len(net.layers[ref.layer - 1]):
            raise ValueError(f"{ref} is out of range")
        doomed.setdefault(ref.layer, set()).add(ref.index)
    if not doomed:
        return net
    layers = []
    for l, layer in enumerate(net.layers, start=1):
        gone_before = doomed.get(l - 1, set())
        kept = []
        for i, node in enumerate(layer):
            if i in doomed.get(l, ()):
                continue
            if node.weights and gone_before:
                node = Node(node.act, node.bias,
                            tuple(w for j, w in enumerate(node.weights) if j not in gone_before))
            kept.append(node)
        layers.append(tuple(kept))
    return Network(net.n, tuple(layers))


def append_abs_sum(net: Network) -> Network:
    """Network computing ``sum_i |net(x)_i|`` built from ReLU pairs."""
    m = net.m
    pairs = []
    for i in range(m):
        pairs += [relu(0, _unit(m, i)), relu(0, _unit(m, i, -ONE))]
    total = ident(0, (ONE,) * (2 * m))
    return append_layer(append_layer(net, pairs), [total])


def shift_outputs(net: Network, offset: Sequence) -> Network:
    """Network computing ``net(x) + offset`` (an id layer is appended)."""
    offset = vector(offset)
    if len(offset) != net.m:
        raise ValueError("offset must match the output width")
    m = net.m
    return append_layer(net, [ident(offset[i], _unit(m, i)) for i in range(m)])


def linear_outputs(net: Network, rows: Sequence[Sequence], biases: Sequence | None = None,
                   act: Act = Act.ID) -> Network:
    """Append an output layer ``act(rows @ net(x) + biases)``."""
    if biases is None:
        biases = [ZERO] * len(rows)
    return append_layer(net, [Node(act, b, tuple(r)) for r, b in zip(rows, biases)])
