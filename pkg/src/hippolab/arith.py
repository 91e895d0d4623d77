"""Exact bit strings and dyadic rationals.

Bit strings are plain ``str`` objects over the alphabet ``{'0', '1'}``; the
empty string is the root of the binary tree.  Every mass, threshold and code
interval in the package is a :class:`Dyadic`, so all order comparisons are
integer comparisons.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from functools import total_ordering
from itertools import product
from typing import Iterator, NamedTuple

BitString = str

_BITS = re.compile(r"[01]*\Z")
_DYADIC = re.compile(r"\s*(\d+)\s*/\s*2\^(\d+)\s*\Z")


def check_bits(s: str) -> BitString:
    if not isinstance(s, str) or not _BITS.match(s):
        raise ValueError(f"not a bit string: {s!r}")
    return s


def concat(a: BitString, b: BitString) -> BitString:
    return a + b


def is_prefix(a: BitString, b: BitString) -> bool:
    """True iff ``a`` is a prefix of ``b`` (so the cylinder of ``b`` lies inside that of ``a``)."""
    return b.startswith(a)


def comparable(a: BitString, b: BitString) -> bool:
    return a.startswith(b) or b.startswith(a)


def shortlex_key(s: BitString) -> tuple[int, str]:
    return len(s), s


def strings_of_length(k: int) -> Iterator[BitString]:
    for bits in product("01", repeat=k):
        yield "".join(bits)


def strings_up_to(depth: int) -> Iterator[BitString]:
    """All strings of length ``<= depth`` in shortlex order."""
    for k in range(depth + 1):
        yield from strings_of_length(k)


def format_bits(s: BitString) -> str:
    return s if s else "-"


def parse_bits(token: str) -> BitString:
    token = token.strip()
    return "" if token == "-" else check_bits(token)


@total_ordering
@dataclass(frozen=True, init=False)
class Dyadic:
    """Nonnegative rational ``numerator / 2**exponent`` in canonical form.

    The numerator is odd, or the value is zero with exponent 0, so two equal
    values are structurally equal and hash identically.
    """

    numerator: int
    exponent: int

    __slots__ = ("numerator", "exponent")

    def __init__(self, numerator: int, exponent: int = 0):
        if numerator < 0:
            raise ValueError("Dyadic values are nonnegative")
        if exponent < 0:
            numerator <<= -exponent
            exponent = 0
        if numerator == 0:
            exponent = 0
        else:
            shift = min((numerator & -numerator).bit_length() - 1, exponent)
            numerator >>= shift
            exponent -= shift
        object.__setattr__(self, "numerator", numerator)
        object.__setattr__(self, "exponent", exponent)

    @classmethod
    def pow2(cls, k: int) -> "Dyadic":
        """The value ``2**-k`` (``k`` may be negative)."""
        return cls(1, k)

    @classmethod
    def parse(cls, text: str) -> "Dyadic":
        """Parse ``"a/2^b"``; plain integers are accepted as well."""
        m = _DYADIC.match(text)
        if m:
            return cls(int(m.group(1)), int(m.group(2)))
        if text.strip().isdigit():
            return cls(int(text))
        raise ValueError(f"not a dyadic literal: {text!r}")

    def __str__(self) -> str:
        return f"{self.numerator}/2^{self.exponent}"

    def __repr__(self) -> str:
        return f"Dyadic({self.numerator}, {self.exponent})"

    def _aligned(self, other: "Dyadic") -> tuple[int, int, int]:
        e = max(self.exponent, other.exponent)
        return self.numerator << (e - self.exponent), other.numerator << (e - other.exponent), e

    def __add__(self, other: "Dyadic") -> "Dyadic":
        if not isinstance(other, Dyadic):
            return NotImplemented
        a, b, e = self._aligned(other)
        return Dyadic(a + b, e)

    def __sub__(self, other: "Dyadic") -> "Dyadic":
        if not isinstance(other, Dyadic):
            return NotImplemented
        a, b, e = self._aligned(other)
        if b > a:
            raise ValueError("Dyadic subtraction would go negative")
        return Dyadic(a - b, e)

    def __mul__(self, other: "Dyadic") -> "Dyadic":
        if not isinstance(other, Dyadic):
            return NotImplemented
        return Dyadic(self.numerator * other.numerator, self.exponent + other.exponent)

    def __lt__(self, other: "Dyadic") -> bool:
        if not isinstance(other, Dyadic):
            return NotImplemented
        a, b, _ = self._aligned(other)
        return a < b

    def __bool__(self) -> bool:
        return self.numerator != 0

    def scale_pow2(self, k: int) -> "Dyadic":
        """Multiply by ``2**k``."""
        return Dyadic(self.numerator, self.exponent - k)

    def floor_scaled(self, k: int) -> int:
        """``floor(self * 2**k)`` for ``k >= 0``."""
        return (self.numerator << k) >> self.exponent


ZERO = Dyadic(0)
ONE = Dyadic(1)
HALF = Dyadic(1, 1)


def dsum(values) -> Dyadic:
    """Exact sum of an iterable of dyadics, aligned once to the largest exponent."""
    values = list(values)
    if not values:
        return ZERO
    e = max(v.exponent for v in values)
    return Dyadic(sum(v.numerator << (e - v.exponent) for v in values), e)


def cmp_dyadic_pow2(d: Dyadic, k: int) -> int:
    """Three-way comparison of ``d`` against ``2**-k``: -1, 0 or 1."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    e = max(d.exponent, k)
    lhs = d.numerator << (e - d.exponent)
    rhs = 1 << (e - k)
    return (lhs > rhs) - (lhs < rhs)


class LogBounds(NamedTuple):
    floor_neg_log: int
    ceil_neg_log: int


def neg_log_bounds(d: Dyadic) -> LogBounds:
    """Integers ``lo <= -log2(d) <= hi`` with ``hi - lo`` in {0, 1}, for ``0 < d <= 1``."""
    if d.numerator == 0 or d > ONE:
        raise ValueError(f"neg_log_bounds needs 0 < d <= 1, got {d}")
    # d = a / 2^e with 2^(m-1) <= a < 2^m, so 2^(m-1-e) <= d < 2^(m-e)
    m = d.numerator.bit_length()
    if d.numerator == 1:
        return LogBounds(d.exponent, d.exponent)
    return LogBounds(d.exponent - m, d.exponent - m + 1)
