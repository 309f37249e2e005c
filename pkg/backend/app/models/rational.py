"""
Exact rational numbers for pydantic models.

Magnitudes, unit factors and day offsets are kept as ``fractions.Fraction`` so
unit conversion and value comparison never go through binary floating point.
"""
import math
from decimal import Decimal
from fractions import Fraction
from typing import Annotated, Any

from pydantic import BeforeValidator, PlainSerializer

__all__ = ["Rational", "to_fraction", "format_rational"]


def to_fraction(value: Any) -> Fraction:
    """
    Coerce numbers and numeric strings to an exact Fraction.

    Floats go through their shortest repr so ``8.2`` becomes ``41/5`` rather
    than the binary approximation.

    Raises:
        ValueError: for booleans, non-finite floats and unparseable strings
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise ValueError("booleans are not rationals")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ValueError(f"non-finite number: {value}")
        return Fraction(repr(value))
    if isinstance(value, Decimal):
        if not value.is_finite():
            raise ValueError(f"non-finite number: {value}")
        return Fraction(value)
    if isinstance(value, str):
        text = value.strip()
        try:
            return Fraction(text)
        except (ValueError, ZeroDivisionError) as e:
            raise ValueError(f"not a rational number: '{value}'") from e
    raise ValueError(f"cannot interpret {type(value).__name__} as a rational")


def format_rational(value: Fraction) -> str:
    """Render exactly: finite decimals as ``8.2``, everything else as ``p/q``."""
    num, den = value.numerator, value.denominator
    if den == 1:
        return str(num)
    k = 0
    while (10 ** k) % den != 0:
        k += 1
        if k > 64:
            return f"{num}/{den}"
    digits = str(abs(num) * (10 ** k // den)).rjust(k + 1, "0")
    sign = "-" if num < 0 else ""
    return f"{sign}{digits[:-k]}.{digits[-k:]}"


Rational = Annotated[
    Fraction,
    BeforeValidator(to_fraction),
    PlainSerializer(format_rational, return_type=str, when_used="json"),
]
