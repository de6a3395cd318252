"""Exact rational parsing and formatting helpers."""

from __future__ import annotations

from fractions import Fraction
from math import gcd

from .exceptions import ArgumentError

__all__ = ["as_fraction", "format_fraction", "common_denominator"]


def as_fraction(value) -> Fraction:
    """Convert ``value`` to an exact :class:`~fractions.Fraction`.

    Strings may be ``"p/q"`` or decimal literals (``"0.2"``, ``"1e-3"``) and are
    converted exactly. Floats are rejected unless they are integral, because a
    binary float rarely means the rational the caller had in mind.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise ArgumentError(f"not a rational: {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        if value.is_integer():
            return Fraction(int(value))
        # decimal repr is what users typed, e.g. 0.2 -> 1/5
        return Fraction(repr(value))
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise ArgumentError(f"malformed rational {value!r}") from exc
    raise ArgumentError(f"not a rational: {value!r}")


def format_fraction(value: Fraction) -> str:
    """Serialize as ``"p/q"`` (``"p"`` when the denominator is 1)."""
    value = Fraction(value)
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def common_denominator(values, limit: int = 1 << 40) -> int | None:
    """Least common denominator of ``values`` or ``None`` once it exceeds ``limit``."""
    den = 1
    for v in values:
        d = v.denominator
        den = den // gcd(den, d) * d
        if den > limit:
            return None
    return den
