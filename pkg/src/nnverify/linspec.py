"""Conjunctions of linear rows over exact rationals, plus metric balls."""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Iterable, Sequence

from .exact import INF, ExtRational, Metric, as_fraction, dist, format_rational, parse_rational, vector

__all__ = [
    "Ball",
    "LinRow",
    "LinSpec",
    "Rel",
    "ball_spec",
    "box_spec",
    "eq",
    "ge",
    "gt",
    "le",
    "lt",
    "negate_row",
    "satisfied_by",
]

ZERO = Fraction(0)


class Rel(str, Enum):
    LE = "<="
    LT = "<"
    EQ = "="


@dataclass(frozen=True)
class LinRow:
    coeffs: tuple[Fraction, ...]
    rel: Rel
    rhs: Fraction

    def __post_init__(self):
        object.__setattr__(self, "coeffs", vector(self.coeffs))
        object.__setattr__(self, "rel", Rel(self.rel))
        object.__setattr__(self, "rhs", as_fraction(self.rhs))

    @property
    def dim(self) -> int:
        return len(self.coeffs)

    def lhs(self, x: Sequence[Fraction]) -> Fraction:
        return sum((a * v for a, v in zip(self.coeffs, x) if a), ZERO)

    def holds(self, x: Sequence[Fraction]) -> bool:
        value = self.lhs(x)
        if self.rel is Rel.LE:
            return value <= self.rhs
        if self.rel is Rel.LT:
            return value < self.rhs
        return value == self.rhs

    def __str__(self):
        terms = " + ".join(f"{format_rational(a)}*x{i}" for i, a in enumerate(self.coeffs) if a) or "0"
        return f"{terms} {self.rel.value} {format_rational(self.rhs)}"


def le(coeffs, rhs) -> LinRow:
    return LinRow(coeffs, Rel.LE, rhs)


def lt(coeffs, rhs) -> LinRow:
    return LinRow(coeffs, Rel.LT, rhs)


def ge(coeffs, rhs) -> LinRow:
    return LinRow(tuple(-as_fraction(c) for c in coeffs), Rel.LE, -as_fraction(rhs))


def gt(coeffs, rhs) -> LinRow:
    return LinRow(tuple(-as_fraction(c) for c in coeffs), Rel.LT, -as_fraction(rhs))


def eq(coeffs, rhs) -> LinRow:
    return LinRow(coeffs, Rel.EQ, rhs)


@dataclass(frozen=True)
class Ball:
    metric: Metric
    center: tuple[Fraction, ...]
    eps: ExtRational


@dataclass(frozen=True)
class LinSpec:
    """Conjunction of rows over ``dim`` variables.

    The last ``aux`` variables are auxiliaries (used by d1 balls); ``ball``
    records where a spec came from so membership can be tested on the
    real variables alone.
    """

    dim: int
    rows: tuple[LinRow, ...] = ()
    aux: int = 0
    ball: Ball | None = None

    def __post_init__(self):
        rows = tuple(self.rows)
        object.__setattr__(self, "rows", rows)
        for row in rows:
            if row.dim != self.dim:
                raise ValueError(f"row has {row.dim} coefficients, spec has dim {self.dim}")
        if not 0 <= self.aux <= self.dim:
            raise ValueError("aux count out of range")

    @property
    def real_dim(self) -> int:
        return self.dim - self.aux

    def __and__(self, other: "LinSpec") -> "LinSpec":
        if other.dim != self.dim or self.aux or other.aux:
            raise ValueError("can only intersect specs of equal dimension without auxiliaries")
        return LinSpec(self.dim, self.rows + other.rows)

    def contains(self, x: Sequence) -> bool:
        return satisfied_by(self, x)

    def to_dict(self) -> dict:
        return {"dim": self.dim,
                "rows": [{"coeffs": [format_rational(c) for c in r.coeffs],
                          "rel": r.rel.value, "rhs": format_rational(r.rhs)} for r in self.rows]}

    @classmethod
    def from_dict(cls, data: dict) -> "LinSpec":
        try:
            dim = int(data["dim"])
            rows = []
            for row in data.get("rows", []):
                rel = {"<=": Rel.LE, "<": Rel.LT, "=": Rel.EQ, "==": Rel.EQ}[row["rel"]]
                rows.append(LinRow(tuple(_rat(c) for c in row["coeffs"]), rel, _rat(row["rhs"])))
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed spec JSON: {exc}") from None
        return cls(dim, tuple(rows))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "LinSpec":
        return cls.from_dict(json.loads(text))


def _rat(value) -> Fraction:
    if isinstance(value, str):
        return parse_rational(value)
    if isinstance(value, int) and not isinstance(value, bool):
        return Fraction(value)
    raise ValueError(f"rationals must be written as strings, got {value!r}")


def _unit(n: int, i: int, scale) -> tuple[Fraction, ...]:
    return tuple(Fraction(scale) if j == i else ZERO for j in range(n))


def box_spec(lower: Sequence, upper: Sequence) -> LinSpec:
    lower, upper = vector(lower), vector(upper)
    n = len(lower)
    rows = []
    for i in range(n):
        rows += [le(_unit(n, i, 1), upper[i]), le(_unit(n, i, -1), -lower[i])]
    return LinSpec(n, tuple(rows))


def ball_spec(metric: "Metric | str", center: Sequence, eps: ExtRational) -> LinSpec:
    """Closed ball as a linear spec.

    dinf gives ``2n`` rows ``-eps <= x_i - c_i <= eps``. d1 appends ``n``
    auxiliaries ``u`` with ``u_i >= |x_i - c_i|`` and ``sum u <= eps``.
    ``eps = INF`` gives the empty (always true) spec.
    """
    metric = Metric.parse(metric)
    center = vector(center)
    n = len(center)
    ball = Ball(metric, center, eps)
    if eps is INF:
        return LinSpec(n, (), 0, ball)
    eps = as_fraction(eps)
    if eps < 0:
        raise ValueError("radius must be non-negative")
    if metric is Metric.LINF:
        rows = []
        for i in range(n):
            rows += [le(_unit(n, i, 1), center[i] + eps), le(_unit(n, i, -1), eps - center[i])]
        return LinSpec(n, tuple(rows), 0, ball)
    dim = 2 * n
    rows = []
    for i in range(n):
        x, u = _unit(dim, i, 1), _unit(dim, n + i, 1)
        # x_i - u_i <= c_i  and  -x_i - u_i <= -c_i
        rows.append(le(tuple(a - b for a, b in zip(x, u)), center[i]))
        rows.append(le(tuple(-a - b for a, b in zip(x, u)), -center[i]))
    rows.append(le((ZERO,) * n + (Fraction(1),) * n, eps))
    return LinSpec(dim, tuple(rows), n, ball)


def negate_row(row: LinRow) -> list[LinRow]:
    """Branches whose disjunction is the complement of ``row``."""
    neg = tuple(-c for c in row.coeffs)
    if row.rel is Rel.LE:
        return [LinRow(neg, Rel.LT, -row.rhs)]
    if row.rel is Rel.LT:
        return [LinRow(neg, Rel.LE, -row.rhs)]
    return [LinRow(row.coeffs, Rel.LT, row.rhs), LinRow(neg, Rel.LT, -row.rhs)]


def satisfied_by(spec: LinSpec, x: Sequence) -> bool:
    """Exact membership test.

    For ball specs ``x`` may omit the auxiliaries; membership is then
    decided by the distance to the center.
    """
    x = vector(x)
    if len(x) == spec.dim:
        return all(row.holds(x) for row in spec.rows)
    if spec.aux and len(x) == spec.real_dim:
        if spec.ball is not None:
            b = spec.ball
            return b.eps is INF or dist(b.metric, x, b.center) <= b.eps
        # the tightest auxiliaries are only known for balls
        raise ValueError("auxiliary values required for this spec")
    raise ValueError(f"point has {len(x)} coordinates, spec has dim {spec.dim}")


def rows_hold(rows: Iterable[LinRow], x: Sequence) -> bool:
    return all(r.holds(x) for r in rows)
