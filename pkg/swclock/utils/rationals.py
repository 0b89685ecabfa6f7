"""
Helpers for the "p/q" string form of exact rationals used in configs and artifacts.
"""
import re
from fractions import Fraction
from typing import Union

RATIONAL_PATTERN = re.compile(r"^\s*-?\d+(\s*/\s*\d+)?\s*$")

Rational = Union[Fraction, int, str]


def parse_rational(value: Rational) -> Fraction:
    """
    Parse an exact rational from an int, a Fraction or a "p/q" string.

    Floats are rejected: a float config value would silently lose exactness.

    Raises:
        ValueError: if the value is not an exact rational or has a zero denominator
    """
    if isinstance(value, bool):
        raise ValueError(f"Not a rational: {value!r}")
    if isinstance(value, (Fraction, int)):
        return Fraction(value)
    if isinstance(value, str):
        if not RATIONAL_PATTERN.match(value):
            raise ValueError(f"Rational must look like 'p/q', got {value!r}")
        try:
            return Fraction(value.replace(" ", ""))
        except ZeroDivisionError:
            raise ValueError(f"Zero denominator in {value!r}") from None
    raise ValueError(f"Not a rational: {value!r}")


def format_rational(value: Fraction) -> str:
    """Format a rational as "p/q" ("p" alone when the denominator is 1)."""
    return str(Fraction(value))
