"""Prefix-free sets, cover-preserving conversions and exact cover masses."""
from __future__ import annotations

from typing import Iterable, Iterator

from .arith import BitString, Dyadic, dsum, format_bits, parse_bits, shortlex_key
from .measures import Measure


def is_prefix_free(strings: Iterable[BitString]) -> bool:
    # in lexicographic order a string's extensions immediately follow it
    ordered = sorted(set(strings))
    return not any(b.startswith(a) for a, b in zip(ordered, ordered[1:]))


class PrefixFreeSet:
    """Immutable prefix-free set of bit strings kept in shortlex order."""

    __slots__ = ("_elements", "_members", "_inner")

    def __init__(self, elements: Iterable[BitString] = ()):
        members = frozenset(elements)
        if not is_prefix_free(members):
            raise ValueError("elements are not prefix-free")
        self._members = members
        self._elements = tuple(sorted(members, key=shortlex_key))
        self._inner = None

    def __iter__(self) -> Iterator[BitString]:
        return iter(self._elements)

    def __len__(self) -> int:
        return len(self._elements)

    def __contains__(self, x) -> bool:
        return x in self._members

    def __eq__(self, other) -> bool:
        if isinstance(other, PrefixFreeSet):
            return self._members == other._members
        return NotImplemented

    def __hash__(self) -> int:
        return hash(self._members)

    def __repr__(self) -> str:
        return f"PrefixFreeSet({list(self._elements)!r})"

    @property
    def elements(self) -> tuple[BitString, ...]:
        return self._elements

    def _proper_prefixes(self) -> frozenset:
        if self._inner is None:
            self._inner = frozenset(e[:i] for e in self._elements for i in range(len(e)))
        return self._inner

    def prefix_in(self, x: BitString) -> BitString | None:
        """The element that is a prefix of ``x``, if any (unique by prefix-freeness)."""
        for i in range(len(x) + 1):
            if x[:i] in self._members:
                return x[:i]
        return None

    def covers(self, x: BitString) -> bool:
        """True iff the whole cylinder of ``x`` lies inside the cover of this set."""
        if self.prefix_in(x) is not None:
            return True
        if x not in self._proper_prefixes():
            return False
        return self.covers(x + "0") and self.covers(x + "1")

    def covers_set(self, other: Iterable[BitString]) -> bool:
        return all(self.covers(x) for x in other)

    def extensions_of(self, x: BitString) -> list[BitString]:
        return [e for e in self._elements if e.startswith(x)]

    def dumps(self) -> str:
        return "".join(format_bits(x) + "\n" for x in self._elements)

    @classmethod
    def loads(cls, text: str) -> "PrefixFreeSet":
        return cls(parse_bits(line) for line in text.splitlines() if line.strip())


def minimal_cover(strings: Iterable[BitString]) -> PrefixFreeSet:
    """Prefix-minimal elements of ``strings``; the union of cylinders is unchanged."""
    kept: list[BitString] = []
    for s in sorted(set(strings)):
        if not kept or not s.startswith(kept[-1]):
            kept.append(s)
    return PrefixFreeSet(kept)


def _slabs(x: BitString, inside: list[BitString]) -> list[BitString]:
    # maximal sub-cylinders of x avoiding the (strict) extensions in `inside`
    if not inside:
        return [x]
    if x in inside:
        return []
    out = []
    for b in "01":
        xb = x + b
        out.extend(_slabs(xb, [e for e in inside if e.startswith(xb)]))
    return out


class StreamingCover:
    """Incremental prefix-free enumeration of a growing union of cylinders.

    Previously accepted strings are never retracted, which is what an
    enumeration-only (r.e.) process can afford.
    """

    def __init__(self, accepted: Iterable[BitString] = ()):
        self.accepted = PrefixFreeSet(accepted)

    def insert(self, x: BitString) -> PrefixFreeSet:
        if self.accepted.prefix_in(x) is not None:
            return PrefixFreeSet()
        emitted = _slabs(x, self.accepted.extensions_of(x))
        self.accepted = PrefixFreeSet(self.accepted.elements + tuple(emitted))
        return PrefixFreeSet(emitted)


def stream_insert(st: StreamingCover, x: BitString) -> tuple[StreamingCover, PrefixFreeSet]:
    """Functional form: returns a new state and the strings it emitted."""
    new = StreamingCover(st.accepted)
    emitted = new.insert(x)
    return new, emitted


def cover_mass(s: Iterable[BitString], P: Measure) -> Dyadic:
    """``P`` of the union of cylinders, summed exactly over a prefix-free set."""
    if not isinstance(s, PrefixFreeSet):
        s = list(s)
        if not is_prefix_free(s):
            raise ValueError("cover_mass needs a prefix-free set")
    return dsum(P.mass(x) for x in s)


def cover_indicator(strings: Iterable[BitString], depth: int) -> int:
    """Bitmask over the ``2**depth`` strings of length ``depth``: bit ``i`` is set iff
    the string with binary value ``i`` lies in the cover of ``strings``."""
    mask = 0
    for s in strings:
        if len(s) > depth:
            raise ValueError(f"string longer than indicator depth {depth}: {s!r}")
        width = depth - len(s)
        start = int(s, 2) << width if s else 0
        mask |= ((1 << (1 << width)) - 1) << start
    return mask
