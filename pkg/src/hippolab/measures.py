"""Measures on the binary tree and log-approximations of them.

A measure is given by its conditional probability of emitting ``1`` after
each prefix; masses are exact products of those conditionals.  A
:class:`LogApproximation` is the pair ``(f, c)`` that blind components are
allowed to see; it carries no reference to any measure.
"""
from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass, field
from typing import Mapping

from .arith import (
    HALF,
    ONE,
    ZERO,
    BitString,
    Dyadic,
    cmp_dyadic_pow2,
    format_bits,
    parse_bits,
    shortlex_key,
    strings_of_length,
    strings_up_to,
)


class Measure:
    """Probability measure defined through next-bit conditionals."""

    kind = "abstract"

    def conditional(self, prefix: BitString) -> Dyadic:
        """Probability that the bit following ``prefix`` is 1."""
        raise NotImplementedError

    def mass(self, x: BitString) -> Dyadic:
        m = ONE
        for i, b in enumerate(x):
            p1 = self.conditional(x[:i])
            m = m * (p1 if b == "1" else ONE - p1)
        return m

    def __call__(self, x: BitString) -> Dyadic:
        return self.mass(x)

    def spec(self) -> dict:
        raise NotImplementedError


def _open_unit(p: Dyadic, what: str) -> Dyadic:
    if not (ZERO < p < ONE):
        raise ValueError(f"{what} must lie strictly between 0 and 1, got {p}")
    return p


class Bernoulli(Measure):
    kind = "bernoulli"

    def __init__(self, p: Dyadic):
        self.p = _open_unit(p, "p")

    def conditional(self, prefix):
        return self.p

    def mass(self, x):
        ones = x.count("1")
        return _power(self.p, ones) * _power(ONE - self.p, len(x) - ones)

    def spec(self):
        return {"kind": self.kind, "p": str(self.p)}


def bernoulli(p: Dyadic) -> Bernoulli:
    return Bernoulli(p)


def _power(d: Dyadic, k: int) -> Dyadic:
    return Dyadic(d.numerator**k, d.exponent * k)


class Markov(Measure):
    """First-order chain; ``transition[a][b]`` is P(next = b | previous = a)."""

    kind = "markov"

    def __init__(self, initial: Dyadic, transition):
        self.initial = _open_unit(initial, "initial")
        rows = tuple(tuple(row) for row in transition)
        if len(rows) != 2 or any(len(r) != 2 for r in rows):
            raise ValueError("transition table must be 2x2")
        for a, row in enumerate(rows):
            for p in row:
                _open_unit(p, f"transition[{a}] entry")
            if row[0] + row[1] != ONE:
                raise ValueError(f"transition row {a} does not sum to 1")
        self.transition = rows

    def conditional(self, prefix):
        if not prefix:
            return self.initial
        return self.transition[int(prefix[-1])][1]

    def spec(self):
        return {
            "kind": self.kind,
            "initial": str(self.initial),
            "transition": [[str(p) for p in row] for row in self.transition],
        }


def markov(initial: Dyadic, transition) -> Markov:
    return Markov(initial, transition)


class HiddenSeedMeasure(Measure):
    """Measure with depth-``i`` conditional ``1/2 + s_i * 2**-(i+2)``.

    The signs ``s_i`` are drawn from a SHAKE-256 stream keyed by the seed, so
    the measure is reproducible for the auditor while the seed itself never
    leaves this object.  ``-log mass(x)`` stays within ``|x| - 1.25`` and
    ``|x| + 1.8`` for every ``x``.
    """

    kind = "hidden-seed"

    def __init__(self, seed: bytes):
        self.__seed = bytes(seed)
        self.__signs = b""

    def _sign(self, i: int) -> int:
        if i >= 8 * len(self.__signs):
            nbytes = max(32, 2 * len(self.__signs), i // 8 + 1)
            self.__signs = hashlib.shake_256(self.__seed).digest(nbytes)
        return 1 if (self.__signs[i // 8] >> (i % 8)) & 1 else -1

    def conditional(self, prefix):
        i = len(prefix)
        delta = Dyadic(1, i + 2)
        return HALF + delta if self._sign(i) > 0 else HALF - delta

    def spec(self):
        return {"kind": self.kind, "seed": self.__seed.hex()}


def sample(P: Measure, length: int, rng: random.Random) -> BitString:
    """Draw ``length`` bits from ``P`` exactly.

    Each next-bit conditional ``a / 2**e`` is compared against ``e`` fresh
    uniform bits, so bit probabilities are exact rather than float-rounded.
    """
    out = []
    for _ in range(length):
        p1 = P.conditional("".join(out))
        u = rng.getrandbits(p1.exponent) if p1.exponent else 0
        out.append("1" if u < p1.numerator else "0")
    return "".join(out)


# --- log-approximations ----------------------------------------------------


@dataclass(frozen=True)
class LogApproximation:
    """Computable ``f`` and constant ``c`` with ``f(x) < -log P(x) < f(x) + c``.

    ``f`` is drawn from a fixed catalogue so that it serializes exactly:

    * ``length-minus-k``: ``f(x) = max(|x| - k, 0)``;
    * ``table-to-depth-d``: explicit values for ``|x| <= d``; a longer ``x``
      gets ``table[x[:d]] + |x| - d``.
    """

    rule: str
    c: int
    k: int = 0
    depth: int = 0
    table: Mapping[str, int] = field(default_factory=dict, hash=False)

    def __post_init__(self):
        if self.c < 1:
            raise ValueError("c must be a positive integer")
        if self.rule == "length-minus-k":
            if self.k < 0:
                raise ValueError("k must be nonnegative")
        elif self.rule == "table-to-depth-d":
            missing = [x for x in strings_up_to(self.depth) if x not in self.table]
            if missing:
                raise ValueError(f"table lacks {len(missing)} strings, e.g. {format_bits(missing[0])!r}")
            if any(v < 0 for v in self.table.values()):
                raise ValueError("f values must be nonnegative")
        else:
            raise ValueError(f"unknown f rule {self.rule!r}")

    def f(self, x: BitString) -> int:
        if self.rule == "length-minus-k":
            return max(len(x) - self.k, 0)
        if len(x) <= self.depth:
            return self.table[x]
        return self.table[x[: self.depth]] + len(x) - self.depth

    __call__ = f

    def to_dict(self) -> dict:
        if self.rule == "length-minus-k":
            return {"rule": self.rule, "k": self.k, "c": self.c}
        table = {format_bits(x): self.table[x] for x in sorted(self.table, key=shortlex_key)}
        return {"rule": self.rule, "depth": self.depth, "c": self.c, "table": table}

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    @classmethod
    def from_dict(cls, d: Mapping) -> "LogApproximation":
        rule = d["rule"]
        if rule == "length-minus-k":
            return cls(rule, int(d["c"]), k=int(d["k"]))
        table = {parse_bits(x): int(v) for x, v in d["table"].items()}
        return cls(rule, int(d["c"]), depth=int(d["depth"]), table=table)

    @classmethod
    def loads(cls, text: str) -> "LogApproximation":
        return cls.from_dict(json.loads(text))

    @classmethod
    def tabulate(cls, base: "LogApproximation", depth: int, overrides=None) -> "LogApproximation":
        """Table rule agreeing with ``base`` up to ``depth`` except at ``overrides``."""
        table = {x: base.f(x) for x in strings_up_to(depth)}
        table.update(overrides or {})
        return cls("table-to-depth-d", base.c, depth=depth, table=table)


def length_minus(k: int, c: int) -> LogApproximation:
    return LogApproximation("length-minus-k", c, k=k)


def hidden_seed(seed: bytes) -> tuple[HiddenSeedMeasure, LogApproximation]:
    """Auditor-side measure plus the blind-side pair ``f = max(|x|-2, 0)``, ``c = 4``."""
    return HiddenSeedMeasure(seed), length_minus(2, 4)


def sandwich_holds(P: Measure, la: LogApproximation, x: BitString) -> bool:
    """Strict ``2**-(f+c) < P(x) < 2**-f``; the root is exempt (``P(root) = 1``)."""
    if not x:
        return True
    fx = la.f(x)
    m = P.mass(x)
    return cmp_dyadic_pow2(m, fx) < 0 and cmp_dyadic_pow2(m, fx + la.c) > 0


def validate_log_approx(P: Measure, la: LogApproximation, depth: int) -> bool:
    if depth < 0:
        raise ValueError("depth must be nonnegative")
    return all(sandwich_holds(P, la, x) for x in strings_up_to(depth))


# --- feasibility -----------------------------------------------------------


@dataclass(frozen=True)
class Interval:
    """Interval of dyadics with explicit open/closed ends."""

    lo: Dyadic
    hi: Dyadic
    lo_closed: bool = False
    hi_closed: bool = False

    @property
    def empty(self) -> bool:
        if self.lo > self.hi:
            return True
        return self.lo == self.hi and not (self.lo_closed and self.hi_closed)

    def __add__(self, other: "Interval") -> "Interval":
        return Interval(
            self.lo + other.lo,
            self.hi + other.hi,
            self.lo_closed and other.lo_closed,
            self.hi_closed and other.hi_closed,
        )

    def __and__(self, other: "Interval") -> "Interval":
        if self.lo > other.lo:
            lo, lo_closed = self.lo, self.lo_closed
        elif other.lo > self.lo:
            lo, lo_closed = other.lo, other.lo_closed
        else:
            lo, lo_closed = self.lo, self.lo_closed and other.lo_closed
        if self.hi < other.hi:
            hi, hi_closed = self.hi, self.hi_closed
        elif other.hi < self.hi:
            hi, hi_closed = other.hi, other.hi_closed
        else:
            hi, hi_closed = self.hi, self.hi_closed and other.hi_closed
        return Interval(lo, hi, lo_closed, hi_closed)

    def __str__(self):
        return f"{'[' if self.lo_closed else '('}{self.lo}, {self.hi}{']' if self.hi_closed else ')'}"


@dataclass
class FeasibilityReport:
    depth: int
    feasible: bool
    violating_node: BitString | None
    intervals: dict[BitString, Interval]

    @property
    def verdict(self) -> str:
        return "feasible-to-depth" if self.feasible else "infeasible"

    def to_dict(self) -> dict:
        return {
            "depth": self.depth,
            "verdict": self.verdict,
            "violating_node": None if self.violating_node is None else format_bits(self.violating_node),
            "intervals": {format_bits(x): str(iv) for x, iv in sorted(self.intervals.items(), key=lambda kv: shortlex_key(kv[0]))},
        }


def feasibility_check(la: LogApproximation, depth: int) -> FeasibilityReport:
    """Propagate admissible mass intervals bottom-up and look for an empty one.

    Each node ``x`` with ``|x| >= 1`` may carry mass in the open interval
    ``(2**-(f(x)+c), 2**-f(x))``; the root carries exactly 1.  An interior
    node must also equal the sum of its children.  An empty intersection
    anywhere proves that no measure satisfies ``(f, c)`` to this depth.
    """
    if depth < 0:
        raise ValueError("depth must be nonnegative")
    intervals: dict[BitString, Interval] = {}
    for k in range(depth, -1, -1):
        for x in strings_of_length(k):
            if x:
                fx = la.f(x)
                own = Interval(Dyadic.pow2(fx + la.c), Dyadic.pow2(fx))
            else:
                own = Interval(ONE, ONE, True, True)
            if k < depth:
                own = own & (intervals[x + "0"] + intervals[x + "1"])
            intervals[x] = own
            if own.empty:
                return FeasibilityReport(depth, False, x, intervals)
    return FeasibilityReport(depth, True, None, intervals)


# --- measure spec files ----------------------------------------------------


def measure_from_spec(spec: Mapping) -> Measure:
    """Build a measure from ``{"kind": ..., parameters as "a/2^b" strings}``."""
    kind = spec.get("kind")
    if kind == "bernoulli":
        return Bernoulli(Dyadic.parse(spec["p"]))
    if kind == "markov":
        table = [[Dyadic.parse(p) for p in row] for row in spec["transition"]]
        return Markov(Dyadic.parse(spec["initial"]), table)
    if kind == "hidden-seed":
        return HiddenSeedMeasure(bytes.fromhex(spec.get("seed", "")))
    raise ValueError(f"unknown measure kind {kind!r}")


def load_measure(path) -> Measure:
    with open(path) as fh:
        return measure_from_spec(json.load(fh))


__all__ = [
    "Bernoulli",
    "FeasibilityReport",
    "HiddenSeedMeasure",
    "Interval",
    "LogApproximation",
    "Markov",
    "Measure",
    "bernoulli",
    "feasibility_check",
    "hidden_seed",
    "length_minus",
    "load_measure",
    "markov",
    "measure_from_spec",
    "sample",
    "sandwich_holds",
    "validate_log_approx",
]
