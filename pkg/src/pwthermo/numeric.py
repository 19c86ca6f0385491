"""Number parsing, exact/float helpers and log-domain summation."""

from __future__ import annotations

import math
from decimal import Decimal, localcontext
from fractions import Fraction
from typing import Iterable, Optional, Union

Number = Union[Fraction, float, int]

#: Geometric tolerance used for containment and emptiness tests on float data.
EPS_GEOM = 1e-12

#: Sentinel for pressures whose per-n sums vanish.
MINUS_INFINITY = -math.inf


def parse_number(value) -> Number:
    """Parse ``"p/q"``, decimal strings and ints exactly; floats stay floats."""
    if isinstance(value, bool):
        raise TypeError("booleans are not numbers here")
    if isinstance(value, (Fraction, int)):
        return Fraction(value)
    if isinstance(value, float):
        return value
    if isinstance(value, str):
        text = value.strip().lower()
        if text in ("inf", "+inf", "infinity"):
            return math.inf
        try:
            return Fraction(text)
        except ValueError:
            return float(text)
    raise TypeError(f"cannot parse number from {value!r}")


def is_exact(value) -> bool:
    return isinstance(value, (Fraction, int)) and not isinstance(value, bool)


def all_exact(values: Iterable) -> bool:
    return all(is_exact(v) for v in values)


def as_integer(value) -> Optional[int]:
    """Return ``value`` as an int when it is an exact (or float) integer."""
    if isinstance(value, int):
        return value
    if isinstance(value, Fraction):
        return int(value) if value.denominator == 1 else None
    if isinstance(value, float) and math.isfinite(value) and value.is_integer():
        return int(value)
    return None


def log_abs(value: Number) -> float:
    """Natural log of ``|value|``, exact-safe for huge Fractions; -inf at zero."""
    if value == 0:
        return MINUS_INFINITY
    if isinstance(value, Fraction):
        v = abs(value)
        return math.log(v.numerator) - math.log(v.denominator)
    return math.log(abs(value))


def logsumexp(logs: Iterable[float]) -> float:
    """Compensated log-sum-exp; returns -inf for an empty or all -inf input."""
    values = [x for x in logs if x != MINUS_INFINITY]
    if not values:
        return MINUS_INFINITY
    top = max(values)
    if top == math.inf:
        return math.inf
    return top + math.log(math.fsum(math.exp(x - top) for x in values))


def fmt_number(value, digits: int = 30) -> str:
    """Decimal rendering with ``digits`` significant digits (exact for Fractions)."""
    if isinstance(value, Fraction):
        if value == 0:
            return "0"
        with localcontext() as ctx:
            ctx.prec = digits
            return str(Decimal(value.numerator) / Decimal(value.denominator))
    if isinstance(value, float):
        if value == MINUS_INFINITY:
            return "-inf"
        return repr(value)
    return str(value)


def exact_str(value) -> str:
    """Exact rational string ``p/q`` or empty when the value is a float."""
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, int):
        return str(value)
    return ""


def to_float(value) -> float:
    return float(value)
