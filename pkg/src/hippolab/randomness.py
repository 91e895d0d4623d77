"""Test families, their exact verification, and deficiency profiles.

Two constructions share one complexity table:

* :func:`build_blind_test` sees only the log-approximation ``(f, c)`` and
  collects ``{x : Km_B(x) < f(x) - n}``;
* :func:`build_measure_test` is auditor-side and collects
  ``{x : P(x) < 2**-(Km_B(x) + n)}``.

Every level is stored as the prefix-minimal form of the collected strings,
which has the same cover.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Mapping

from .arith import (
    BitString,
    Dyadic,
    cmp_dyadic_pow2,
    format_bits,
    neg_log_bounds,
)
from .complexity import ComplexityTable
from .measures import LogApproximation, Measure
from .prefix_sets import PrefixFreeSet, cover_mass, minimal_cover

FAMILY_HEADER = "# test-family v1"


@dataclass
class TestFamily:
    __test__ = False  # keep pytest from collecting this class

    levels: dict[int, PrefixFreeSet]
    L: int
    provenance: str
    table_tag: str = ""

    @property
    def n_max(self) -> int:
        return max(self.levels, default=0)

    def level(self, n: int) -> PrefixFreeSet | None:
        """Level ``n``; ``None`` stands for the whole space (``n < 1``)."""
        if n < 1:
            return None
        return self.levels.get(n, PrefixFreeSet())

    def nested(self) -> bool:
        return all(self.levels[n].covers_set(self.levels[n + 1]) for n in range(1, self.n_max))

    def dumps(self) -> str:
        lines = [
            FAMILY_HEADER,
            f"provenance: {self.provenance}",
            f"L: {self.L}",
            f"n_max: {self.n_max}",
            f"table: {self.table_tag}",
        ]
        for n in sorted(self.levels):
            lines.append(f"level {n} ({len(self.levels[n])})")
            lines.extend(format_bits(x) for x in self.levels[n])
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text: str) -> "TestFamily":
        lines = text.splitlines()
        if not lines or lines[0] != FAMILY_HEADER:
            raise ValueError("not a test-family file")
        meta = {}
        i = 1
        while i < len(lines) and not lines[i].startswith("level "):
            key, _, value = lines[i].partition(":")
            meta[key.strip()] = value.strip()
            i += 1
        levels: dict[int, list[str]] = {}
        current = None
        for line in lines[i:]:
            if line.startswith("level "):
                current = int(line.split()[1])
                levels[current] = []
            elif line.strip():
                levels[current].append("" if line.strip() == "-" else line.strip())
        return cls(
            {n: PrefixFreeSet(xs) for n, xs in levels.items()},
            int(meta["L"]),
            meta.get("provenance", "external"),
            meta.get("table", ""),
        )


def _check_table(table: ComplexityTable, L: int) -> None:
    if not table.kraft_admissible:
        raise ValueError(f"table {table.version!r} is not Kraft-admissible; refusing to build a test from it")
    if table.budget.out_cap < L:
        raise ValueError(f"table out_cap {table.budget.out_cap} is below the horizon L={L}")


def in_blind_level(x: BitString, n: int, la: LogApproximation, table: ComplexityTable) -> bool:
    km = table.entries.get(x)
    return km is not None and km < la.f(x) - n


def in_measure_level(x: BitString, n: int, P: Measure, table: ComplexityTable) -> bool:
    km = table.entries.get(x)
    return km is not None and cmp_dyadic_pow2(P.mass(x), km + n) < 0


def build_blind_test(la: LogApproximation, table: ComplexityTable, n_max: int, L: int) -> TestFamily:
    """Levels ``1..n_max`` of ``{x : |x| <= L, Km_B(x) < f(x) - n}``.

    Takes no measure: the family is a function of ``(f, c)`` and the table only.
    """
    _check_table(table, L)
    slack = {x: la.f(x) - km for x, km in table.entries.items() if len(x) <= L}
    levels = {n: minimal_cover(x for x, s in slack.items() if s > n) for n in range(1, n_max + 1)}
    return TestFamily(levels, L, f"blind {json.dumps(la.to_dict(), sort_keys=True)}", table.tag)


def build_measure_test(P: Measure, table: ComplexityTable, n_max: int, L: int) -> TestFamily:
    """Levels ``1..n_max`` of ``{x : |x| <= L, P(x) < 2**-(Km_B(x) + n)}`` (auditor side)."""
    _check_table(table, L)
    # deepest n with P(x) < 2^-(km+n) is ceil(-log P(x)) - km - 1
    depth = {}
    for x, km in table.entries.items():
        if len(x) <= L:
            depth[x] = neg_log_bounds(P.mass(x)).ceil_neg_log - km - 1
    levels = {n: minimal_cover(x for x, d in depth.items() if d >= n) for n in range(1, n_max + 1)}
    return TestFamily(levels, L, f"measure {json.dumps(P.spec(), sort_keys=True)}", table.tag)


# --- verification ----------------------------------------------------------


@dataclass
class LevelCheck:
    n: int
    mass: Dyadic
    bound: Dyadic

    @property
    def passed(self) -> bool:
        return self.mass < self.bound


@dataclass
class VerificationReport:
    levels: list[LevelCheck]
    nesting: bool
    bound_kind: str

    @property
    def passed(self) -> bool:
        return self.nesting and all(lv.passed for lv in self.levels)

    def failures(self) -> list[int]:
        return [lv.n for lv in self.levels if not lv.passed]

    def to_dict(self) -> dict:
        return {
            "bound_kind": self.bound_kind,
            "nesting": self.nesting,
            "passed": self.passed,
            "levels": [
                {"n": lv.n, "mass": str(lv.mass), "bound": str(lv.bound), "passed": lv.passed}
                for lv in self.levels
            ],
        }


def verify_test(T: TestFamily, P: Measure, bound: Mapping[int, Dyadic] | None = None) -> VerificationReport:
    """Check ``P(cover(level n)) < bound(n)`` exactly, plus nesting.

    ``bound`` defaults to ``2**-n``; a supplied table must be non-increasing.
    """
    if bound is None:
        kind = "2^-n"
        bounds = {n: Dyadic.pow2(n) for n in T.levels}
    else:
        kind = "decreasing-table"
        keys = sorted(bound)
        if any(bound[a] < bound[b] for a, b in zip(keys, keys[1:])):
            raise ValueError("bound table must be non-increasing in n")
        missing = set(T.levels) - set(bound)
        if missing:
            raise ValueError(f"bound table lacks levels {sorted(missing)}")
        bounds = dict(bound)
    checks = [LevelCheck(n, cover_mass(T.levels[n], P), bounds[n]) for n in sorted(T.levels)]
    return VerificationReport(checks, T.nested(), kind)


@dataclass
class SandwichResult:
    holds: bool
    witness: tuple[int, BitString, str] | None = None

    def __bool__(self):
        return self.holds


def sandwich_check(V: TestFamily, U: TestFamily, c: int) -> SandwichResult:
    """``cover(V_n) <= cover(U_n) <= cover(V_{n-c})`` for every level ``n``.

    Levels below 1 are the whole space.  A failure reports ``(n, x, side)``
    where ``x`` is an element of the smaller family not covered by the larger.
    """
    if V.L != U.L:
        raise ValueError(f"horizons differ: {V.L} vs {U.L}")
    for n in range(1, max(V.n_max, U.n_max) + 1):
        vn, un = V.level(n), U.level(n)
        for x in vn:
            if not un.covers(x):
                return SandwichResult(False, (n, x, "V_n not in U_n"))
        lower = V.level(n - c)
        if lower is not None:
            for x in un:
                if not lower.covers(x):
                    return SandwichResult(False, (n, x, "U_n not in V_(n-c)"))
    return SandwichResult(True)


# --- deficiency --------------------------------------------------------------


@dataclass
class DeficiencyRow:
    length: int
    prefix: BitString
    neg_log_floor: int
    neg_log_ceil: int
    km: int | None
    deficiency: tuple[int, int] | None
    level: int
    running_max: int | None

    def to_dict(self) -> dict:
        return {
            "length": self.length,
            "prefix": format_bits(self.prefix),
            "neg_log_P": [self.neg_log_floor, self.neg_log_ceil],
            "km": self.km,
            "deficiency": None if self.deficiency is None else list(self.deficiency),
            "level": self.level,
            "running_max": self.running_max,
        }


@dataclass
class DeficiencyProfile:
    rows: list[DeficiencyRow] = field(default_factory=list)
    table_tag: str = ""

    @property
    def sup_estimate(self) -> int | None:
        return self.rows[-1].running_max if self.rows else None

    def running_max(self) -> list[int | None]:
        return [r.running_max for r in self.rows]

    def to_dict(self) -> dict:
        return {"table": self.table_tag, "sup_estimate": self.sup_estimate, "rows": [r.to_dict() for r in self.rows]}


def deficiency_profile(x: BitString, P: Measure, table: ComplexityTable) -> DeficiencyProfile:
    """Per-prefix bounds on ``-log P(y) - Km_B(y)`` for every prefix ``y`` of ``x``.

    ``running_max`` tracks the lower deficiency bound; ``level`` is the deepest
    ``n`` whose measure-test cover contains ``y`` (0 when none).  Rows without a
    table entry carry no deficiency and leave both running values unchanged.
    """
    profile = DeficiencyProfile(table_tag=table.tag)
    best: int | None = None
    level = 0
    for i in range(len(x) + 1):
        y = x[:i]
        lo, hi = neg_log_bounds(P.mass(y))
        km = table.entries.get(y)
        if km is None:
            deficiency = None
        else:
            deficiency = (lo - km, hi - km)
            best = deficiency[0] if best is None else max(best, deficiency[0])
            level = max(level, hi - km - 1)
        profile.rows.append(DeficiencyRow(i, y, lo, hi, km, deficiency, level, best))
    return profile


def hippocratic_evidence(x: BitString, T: TestFamily) -> tuple[int, tuple[BitString, ...]]:
    """Deepest level whose cover contains the whole cylinder of ``x``, with witnesses.

    The witness is the level element that prefixes ``x``, or else the level
    elements extending ``x`` that jointly cover it.  Returns ``(0, ())`` when no
    level covers ``x``.
    """
    for n in sorted(T.levels, reverse=True):
        level = T.levels[n]
        if level.covers(x):
            p = level.prefix_in(x)
            return n, (p,) if p is not None else tuple(level.extensions_of(x))
    return 0, ()
