"""Exact rational parsing/formatting used by every serialization surface.

All wire formats carry rationals as "num/den" strings (or plain integers as
"num").  CLI inputs additionally accept decimals, converted exactly via
power-of-ten denominators.
"""

from __future__ import annotations

from fractions import Fraction

from .errors import ValidationError


def frac(value) -> Fraction:
    """Coerce ints, Fractions, strings and floats to an exact Fraction.

    Floats are converted exactly (every float is a dyadic rational); use
    `parse_rational` for user-facing strings.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, float, str)):
        return Fraction(value)
    raise ValidationError(f"cannot interpret {value!r} as a rational")


def parse_rational(text: str) -> Fraction:
    """Parse "3/7", "-2", or "0.25" (decimals converted exactly)."""
    text = text.strip()
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise ValidationError(f"not a rational number: {text!r}") from exc


def format_rational(q: Fraction) -> str:
    """Canonical "num/den" string; integers render without the "/1"."""
    q = Fraction(q)
    if q.denominator == 1:
        return str(q.numerator)
    return f"{q.numerator}/{q.denominator}"


def rational_vector(values) -> tuple[Fraction, ...]:
    return tuple(frac(v) for v in values)


def format_vector(values) -> list[str]:
    return [format_rational(v) for v in values]


def parse_vector(values) -> tuple[Fraction, ...]:
    return tuple(parse_rational(v) if isinstance(v, str) else frac(v) for v in values)
