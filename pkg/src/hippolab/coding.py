"""Elias-gamma integers, Shannon-Fano-Elias codebooks and the levelled code
built from a test family and a log-approximation."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .arith import (
    ONE,
    BitString,
    Dyadic,
    dsum,
    format_bits,
    neg_log_bounds,
    parse_bits,
    shortlex_key,
)
from .measures import LogApproximation


class CodeError(ValueError):
    pass


class TruncatedCode(CodeError):
    pass


class NoMatch(CodeError):
    pass


class KraftViolation(CodeError):
    def __init__(self, message: str, level: int | None = None, total: Dyadic | None = None):
        super().__init__(message)
        self.level = level
        self.total = total


def elias_gamma(n: int) -> BitString:
    if n < 1:
        raise ValueError("Elias-gamma encodes positive integers only")
    b = bin(n)[2:]
    return "0" * (len(b) - 1) + b


def elias_gamma_decode(bits: BitString, start: int = 0) -> tuple[int, int]:
    """Decode one gamma code at ``bits[start:]``; returns ``(n, consumed)``."""
    zeros = 0
    i = start
    while i < len(bits) and bits[i] == "0":
        zeros += 1
        i += 1
    end = i + zeros + 1
    if end > len(bits):
        raise TruncatedCode("truncated Elias-gamma header")
    return int(bits[i:end], 2), end - start


def gamma_length(n: int) -> int:
    return 2 * (n.bit_length() - 1) + 1


# --- Shannon-Fano-Elias ----------------------------------------------------


@dataclass(frozen=True)
class CodebookEntry:
    x: BitString
    q: Dyadic
    codeword: BitString


@dataclass
class Codebook:
    entries: list[CodebookEntry]
    total: Dyadic
    _by_word: dict = field(default_factory=dict, repr=False, compare=False)
    _by_x: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        self._by_word = {e.codeword: e.x for e in self.entries}
        self._by_x = {e.x: e.codeword for e in self.entries}

    def encode(self, x: BitString) -> BitString:
        try:
            return self._by_x[x]
        except KeyError:
            raise NoMatch(f"{format_bits(x)!r} is not in the codebook") from None

    def decode(self, bits: BitString, start: int = 0) -> tuple[BitString, int]:
        return sfe_decode(self, bits, start)

    def lengths(self) -> dict[BitString, int]:
        return {e.x: len(e.codeword) for e in self.entries}


def sfe_build(items: Sequence[tuple[BitString, Dyadic]]) -> Codebook:
    """Shannon-Fano-Elias code: each word is the first ``ceil(-log q) + 1`` bits
    of the cumulative midpoint ``F(i-1) + q_i / 2``."""
    total = dsum(q for _, q in items)
    if total > ONE:
        raise KraftViolation(f"sub-distribution sums to {total} > 1", total=total)
    entries = []
    cumulative = Dyadic(0)
    for x, q in items:
        if not q:
            raise ValueError(f"zero weight for {format_bits(x)!r}")
        ell = neg_log_bounds(q).ceil_neg_log + 1
        midpoint = cumulative + Dyadic(q.numerator, q.exponent + 1)
        word = format(midpoint.floor_scaled(ell), f"0{ell}b")
        entries.append(CodebookEntry(x, q, word))
        cumulative = cumulative + q
    return Codebook(entries, total)


def sfe_decode(cb: Codebook, bits: BitString, start: int = 0) -> tuple[BitString, int]:
    lengths = sorted({len(w) for w in cb._by_word})
    for ell in lengths:
        if start + ell > len(bits):
            break
        x = cb._by_word.get(bits[start : start + ell])
        if x is not None:
            return x, ell
    raise NoMatch("bits match no codeword")


# --- forward direction -----------------------------------------------------


@dataclass
class LevelledCode:
    """Per-level SFE books; the full word for ``(n, x)`` is ``gamma(n)`` then the level word."""

    books: dict[int, Codebook]
    la: LogApproximation

    def bound(self, n: int, x: BitString) -> int:
        """Guaranteed ceiling ``f(x) - n + 2*floor(log n) + c + 2`` on the full word length."""
        return self.la.f(x) - n + 2 * (n.bit_length() - 1) + self.la.c + 2

    def pairs(self) -> Iterable[tuple[int, BitString]]:
        for n in sorted(self.books):
            for e in self.books[n].entries:
                yield n, e.x

    def dumps(self) -> str:
        lines = [f"# levelled-code c={self.la.c} bound=f(x)-n+2*floor(log n)+{self.la.c + 2}"]
        for n in sorted(self.books):
            cb = self.books[n]
            lines.append(f"level {n} total {cb.total}")
            for e in cb.entries:
                lines.append(f"{format_bits(e.x)} {e.q} {e.codeword}")
        return "\n".join(lines) + "\n"


def scaled_submeasure(level: Iterable[BitString], n: int, la: LogApproximation) -> list[tuple[BitString, Dyadic]]:
    """Weights ``2**(n - f(x) - c)`` on one level, shortlex ordered."""
    items = []
    for x in sorted(level, key=shortlex_key):
        e = la.f(x) + la.c - n
        if e < 0:
            raise KraftViolation(f"level {n}: weight 2^{-e} > 1 at {format_bits(x)!r}", level=n)
        items.append((x, Dyadic.pow2(e)))
    return items


def forward_codebook(levels: Mapping[int, Iterable[BitString]], la: LogApproximation, n_max: int) -> LevelledCode:
    """Build the levelled code for levels ``1..n_max``.

    A level whose weights exceed total 1 means either ``(f, c)`` does not
    approximate the measure or the family is not a test; :class:`KraftViolation`
    names the level.
    """
    books = {}
    for n in sorted(levels):
        if n < 1 or n > n_max:
            continue
        items = scaled_submeasure(levels[n], n, la)
        try:
            books[n] = sfe_build(items)
        except KraftViolation as exc:
            raise KraftViolation(f"level {n}: {exc}", level=n, total=exc.total) from None
    return LevelledCode(books, la)


def encode_pair(lc: LevelledCode, n: int, x: BitString) -> BitString:
    if n not in lc.books:
        raise NoMatch(f"no level {n} in code")
    return elias_gamma(n) + lc.books[n].encode(x)


def decode_pair(lc: LevelledCode, bits: BitString, start: int = 0) -> tuple[int, BitString, int]:
    """Returns ``(n, x, consumed)``."""
    n, used = elias_gamma_decode(bits, start)
    if n not in lc.books:
        raise NoMatch(f"header names unknown level {n}")
    x, more = sfe_decode(lc.books[n], bits, start + used)
    return n, x, used + more


def load_codebook_lines(text: str) -> dict[int, list[tuple[BitString, Dyadic, BitString]]]:
    """Parse the ``dumps`` format back into raw per-level rows."""
    levels: dict[int, list] = {}
    current = None
    for line in text.splitlines():
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split()
        if parts[0] == "level":
            current = int(parts[1])
            levels[current] = []
        else:
            levels[current].append((parse_bits(parts[0]), Dyadic.parse(parts[1]), parts[2]))
    return levels
