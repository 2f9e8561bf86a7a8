"""Exact parsing and formatting of rational literals.

Accepted literals are integers, finite decimals (optionally with an
exponent) and ``p/q`` fractions. Values never pass through binary floats.
"""

from __future__ import annotations

import re
from fractions import Fraction

_DECIMAL = re.compile(r"[+-]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?")
_RATIO = re.compile(r"[+-]?\d+/\d+")


def parse_rational(token: str) -> Fraction:
    """Convert ``token`` to a Fraction, raising ValueError if it is malformed."""
    if _DECIMAL.fullmatch(token):
        return Fraction(token)
    if _RATIO.fullmatch(token):
        num, den = token.split("/")
        if int(den) == 0:
            raise ValueError(f"zero denominator in {token!r}")
        return Fraction(int(num), int(den))
    raise ValueError(f"malformed number {token!r}")


def _terminates(den: int) -> bool:
    for p in (2, 5):
        while den % p == 0:
            den //= p
    return den == 1


def format_rational(value: Fraction | int) -> str:
    """Shortest exact text for ``value``: integer, finite decimal, or ``p/q``."""
    value = Fraction(value)
    if value.denominator == 1:
        return str(value.numerator)
    if not _terminates(value.denominator):
        return f"{value.numerator}/{value.denominator}"
    sign = "-" if value < 0 else ""
    value = abs(value)
    digits = 0
    while (value * 10**digits).denominator != 1:
        digits += 1
    scaled = str((value * 10**digits).numerator).rjust(digits + 1, "0")
    return f"{sign}{scaled[:-digits]}.{scaled[-digits:]}"


def to_json_value(value: Fraction | int) -> str:
    """Rationals travel through JSON as ``p/q`` (or plain integer) strings."""
    return str(Fraction(value))
