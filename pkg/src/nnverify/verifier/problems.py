"""Problem instances and their JSON form.

Labels ``j`` for classification robustness are 1-based, as in the usual
``arg max_i N_i(x) = j`` notation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields
from fractions import Fraction
from typing import Union

from ..exact import INF, ExtRational, Metric, as_fraction, format_ext, format_rational, parse_ext, parse_rational, vector
from ..linspec import LinSpec
from ..network import Network

__all__ = [
    "ACR", "CR", "GLR", "GSR", "LR", "NE", "NNR", "SR", "VIP",
    "Instance", "PROBLEMS", "instance_from_dict", "instance_to_dict", "load_instance", "dump_instance",
]


def _ext(value) -> ExtRational:
    return parse_ext(value) if isinstance(value, str) else (INF if value is INF else as_fraction(value))


def _nonneg(name, value):
    if value is not INF and value < 0:
        raise ValueError(f"{name} must be non-negative")


@dataclass(frozen=True)
class NNR:
    """Does some ``x`` with ``inspec(x)`` reach ``outspec(net(x))``?"""

    net: Network
    inspec: LinSpec
    outspec: LinSpec
    kind = "nnr"

    def __post_init__(self):
        _check_specs(self)


@dataclass(frozen=True)
class VIP:
    """Does every ``x`` with ``inspec(x)`` satisfy ``outspec(net(x))``?"""

    net: Network
    inspec: LinSpec
    outspec: LinSpec
    kind = "vip"

    def __post_init__(self):
        _check_specs(self)
        if self.outspec.aux:
            raise ValueError("output specs of VIP cannot use auxiliary variables")


def _check_specs(inst):
    if inst.inspec.real_dim != inst.net.n:
        raise ValueError(f"input spec has dim {inst.inspec.real_dim}, network has {inst.net.n} inputs")
    if inst.outspec.real_dim != inst.net.m:
        raise ValueError(f"output spec has dim {inst.outspec.real_dim}, network has {inst.net.m} outputs")


@dataclass(frozen=True)
class NE:
    net: Network
    net2: Network
    kind = "ne"

    def __post_init__(self):
        if (self.net.n, self.net.m) != (self.net2.n, self.net2.m):
            raise ValueError("networks must agree on input and output widths")


@dataclass(frozen=True)
class _Local:
    net: Network
    metric: Metric
    eps: ExtRational
    center: tuple[Fraction, ...]

    def __post_init__(self):
        object.__setattr__(self, "metric", Metric.parse(self.metric))
        object.__setattr__(self, "eps", _ext(self.eps))
        object.__setattr__(self, "center", vector(self.center))
        _nonneg("eps", self.eps)
        if len(self.center) != self.net.n:
            raise ValueError(f"center has {len(self.center)} coordinates, network has {self.net.n} inputs")


@dataclass(frozen=True)
class SR(_Local):
    delta: ExtRational = Fraction(0)
    kind = "sr"

    def __post_init__(self):
        super().__post_init__()
        object.__setattr__(self, "delta", _ext(self.delta))
        _nonneg("delta", self.delta)


@dataclass(frozen=True)
class CR(_Local):
    label: int = 1
    strict: bool = False
    kind = "cr"

    def __post_init__(self):
        super().__post_init__()
        if not 1 <= self.label <= self.net.m:
            raise ValueError(f"label {self.label} outside 1..{self.net.m}")


@dataclass(frozen=True)
class ACR(_Local):
    strict: bool = False
    kind = "acr"


@dataclass(frozen=True)
class LR(_Local):
    lip: Fraction = Fraction(1)
    kind = "lr"

    def __post_init__(self):
        super().__post_init__()
        if self.lip is INF:
            raise ValueError("the Lipschitz constant must be finite")
        object.__setattr__(self, "lip", as_fraction(self.lip))
        _nonneg("lip", self.lip)


@dataclass(frozen=True)
class _Global:
    net: Network
    metric: Metric
    eps: ExtRational

    def __post_init__(self):
        object.__setattr__(self, "metric", Metric.parse(self.metric))
        object.__setattr__(self, "eps", _ext(self.eps))
        _nonneg("eps", self.eps)


@dataclass(frozen=True)
class GSR(_Global):
    delta: ExtRational = Fraction(0)
    kind = "gsr"

    def __post_init__(self):
        super().__post_init__()
        object.__setattr__(self, "delta", _ext(self.delta))
        _nonneg("delta", self.delta)


@dataclass(frozen=True)
class GLR(_Global):
    lip: Fraction = Fraction(1)
    kind = "glr"

    def __post_init__(self):
        super().__post_init__()
        if self.lip is INF:
            raise ValueError("the Lipschitz constant must be finite")
        object.__setattr__(self, "lip", as_fraction(self.lip))
        _nonneg("lip", self.lip)


Instance = Union[NNR, VIP, NE, SR, CR, ACR, LR, GSR, GLR]
PROBLEMS = {cls.kind: cls for cls in (NNR, VIP, NE, SR, CR, ACR, LR, GSR, GLR)}


def instance_to_dict(inst: Instance) -> dict:
    out = {"problem": inst.kind}
    for f in fields(inst):
        value = getattr(inst, f.name)
        if f.name in ("net", "net2"):
            out[f.name] = value.to_dict()
        elif f.name in ("inspec", "outspec"):
            out[f.name] = value.to_dict()
        elif f.name == "metric":
            out["metric"] = value.value
        elif f.name in ("eps", "delta"):
            out[f.name] = format_ext(value)
        elif f.name == "lip":
            out["lip"] = format_rational(value)
        elif f.name == "center":
            out["center"] = [format_rational(c) for c in value]
        elif f.name in ("label", "strict"):
            out[f.name] = value
    return out


def instance_from_dict(data: dict) -> Instance:
    try:
        kind = data["problem"]
        cls = PROBLEMS[kind]
    except KeyError:
        raise ValueError(f"unknown or missing problem kind {data.get('problem')!r}") from None
    kwargs = {}
    try:
        for f in fields(cls):
            name = f.name
            if name in ("net", "net2"):
                kwargs[name] = Network.from_dict(data[name])
            elif name in ("inspec", "outspec"):
                kwargs[name] = LinSpec.from_dict(data[name])
            elif name == "metric":
                kwargs[name] = Metric.parse(data.get("metric", "linf"))
            elif name in ("eps", "delta"):
                if name in data:
                    kwargs[name] = parse_ext(str(data[name]))
            elif name == "lip":
                kwargs[name] = parse_rational(str(data["lip"]))
            elif name == "center":
                kwargs[name] = tuple(parse_rational(str(c)) for c in data["center"])
            elif name == "label":
                kwargs[name] = int(data["label"])
            elif name == "strict":
                kwargs[name] = bool(data.get("strict", False))
    except KeyError as exc:
        raise ValueError(f"{kind} instance is missing field {exc.args[0]!r}") from None
    return cls(**kwargs)


def dump_instance(inst: Instance) -> str:
    return json.dumps(instance_to_dict(inst))


def load_instance(text: str) -> Instance:
    return instance_from_dict(json.loads(text))
