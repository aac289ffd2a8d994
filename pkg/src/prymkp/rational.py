"""Exact rationals (gmpy2 ``mpq``) plus parsing, formatting and binomials."""

from __future__ import annotations

import re
from functools import lru_cache

from gmpy2 import mpq

Q = mpq
ZERO = mpq(0)
ONE = mpq(1)

_RAT = re.compile(r"^\s*([+-]?\d+)(?:\s*/\s*(\d+))?\s*$")


def parse_rational(text: str) -> mpq:
    m = _RAT.match(text)
    if not m:
        raise ValueError(f"not a rational: {text!r}")
    num = int(m.group(1))
    den = int(m.group(2)) if m.group(2) else 1
    if den == 0:
        raise ValueError("zero denominator")
    return mpq(num, den)


def fmt_rational(q, always_den: bool = True) -> str:
    q = mpq(q)
    if always_den or q.denominator != 1:
        return f"{q.numerator}/{q.denominator}"
    return str(q.numerator)


def fmt_exponent(e) -> str:
    e = mpq(e)
    if e.denominator == 1:
        return str(e.numerator)
    return f"{e.numerator}/{e.denominator}"


@lru_cache(maxsize=None)
def binom(k: int, i: int) -> mpq:
    """Generalized binomial C(k, i) for any integer k and i >= 0."""
    if i < 0:
        return ZERO
    out = ONE
    for t in range(i):
        out = out * (k - t) / (t + 1)
    return out


@lru_cache(maxsize=None)
def falling(k: int, i: int) -> mpq:
    """Falling factorial k (k-1) ... (k-i+1)."""
    out = ONE
    for t in range(i):
        out *= k - t
    return out


@lru_cache(maxsize=None)
def factorial(i: int) -> mpq:
    return falling(i, i)
