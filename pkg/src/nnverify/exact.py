"""Exact rational scalars, the +inf extension and the d1/dinf metrics.

Rationals are plain :class:`fractions.Fraction` values, which are kept in
lowest terms with a positive denominator after every operation.
"""

from __future__ import annotations

import re
from enum import Enum
from fractions import Fraction
from typing import Iterable, Sequence, Union

__all__ = [
    "INF",
    "ExtRational",
    "Metric",
    "as_fraction",
    "dist",
    "format_ext",
    "format_rational",
    "is_inf",
    "parse_ext",
    "parse_rational",
    "vector",
]

_RATIONAL_RE = re.compile(r"^\s*([+-]?\d+)\s*(?:/\s*(\d+))?\s*$")
_DECIMAL_RE = re.compile(r"^\s*([+-]?)(\d*)\.(\d*)\s*$")


class _Infinity:
    """Positive infinity; only used for radii such as ``eps``."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "INF"

    def __str__(self):
        return "inf"

    def __reduce__(self):
        return (_Infinity, ())

    def __hash__(self):
        return hash("nnverify.INF")

    def __eq__(self, other):
        return other is self

    def __lt__(self, other):
        return False

    def __le__(self, other):
        return other is self

    def __gt__(self, other):
        return other is not self

    def __ge__(self, other):
        return True


INF = _Infinity()

ExtRational = Union[Fraction, _Infinity]


def is_inf(value) -> bool:
    return value is INF


class Metric(str, Enum):
    L1 = "l1"
    LINF = "linf"

    @classmethod
    def parse(cls, text: "str | Metric") -> "Metric":
        if isinstance(text, Metric):
            return text
        key = str(text).strip().lower()
        aliases = {"l1": cls.L1, "d1": cls.L1, "1": cls.L1,
                   "linf": cls.LINF, "dinf": cls.LINF, "inf": cls.LINF}
        try:
            return aliases[key]
        except KeyError:
            raise ValueError(f"unknown metric {text!r}") from None


def parse_rational(text: str) -> Fraction:
    """Parse ``"p"``, ``"p/q"`` or a signed decimal such as ``"-0.25"``.

    Decimals are converted digit by digit, never through a float.
    """
    if not isinstance(text, str):
        raise TypeError(f"expected a string, got {type(text).__name__}")
    m = _RATIONAL_RE.match(text)
    if m:
        num = int(m.group(1))
        if m.group(2) is None:
            return Fraction(num)
        den = int(m.group(2))
        if den == 0:
            raise ZeroDivisionError(f"zero denominator in {text!r}")
        return Fraction(num, den)
    m = _DECIMAL_RE.match(text)
    if m and (m.group(2) or m.group(3)):
        sign, whole, frac = m.groups()
        value = Fraction(int(whole or "0")) + Fraction(int(frac or "0"), 10 ** len(frac))
        return -value if sign == "-" else value
    raise ValueError(f"malformed rational {text!r}")


def format_rational(value: Fraction) -> str:
    value = Fraction(value)
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def parse_ext(text: "str | int | Fraction") -> ExtRational:
    """Like :func:`parse_rational` but also accepts ``"inf"``."""
    if text is INF:
        return INF
    if isinstance(text, (int, Fraction)):
        return Fraction(text)
    if isinstance(text, str) and text.strip().lower() in ("inf", "+inf", "infinity", "∞"):
        return INF
    return parse_rational(text)


def format_ext(value: ExtRational) -> str:
    return "inf" if value is INF else format_rational(value)


def as_fraction(value) -> Fraction:
    """Coerce ints, Fractions, mpq values and rational strings exactly."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return parse_rational(value)
    if isinstance(value, float):
        raise TypeError("floats are not accepted; pass a string or Fraction")
    num, den = getattr(value, "numerator", None), getattr(value, "denominator", None)
    if num is None or den is None:
        raise TypeError(f"cannot convert {value!r} to a rational")
    return Fraction(int(num), int(den))


def vector(values: Iterable) -> tuple[Fraction, ...]:
    return tuple(as_fraction(v) for v in values)


def dist(metric: "Metric | str", x: Sequence[Fraction], y: Sequence[Fraction]) -> Fraction:
    """Exact d1 (sum) or dinf (max) distance between two vectors."""
    metric = Metric.parse(metric)
    if len(x) != len(y):
        raise ValueError(f"dimension mismatch: {len(x)} vs {len(y)}")
    diffs = [abs(Fraction(a) - Fraction(b)) for a, b in zip(x, y)]
    if metric is Metric.L1:
        return sum(diffs, Fraction(0))
    return max(diffs, default=Fraction(0))
