"""A concrete monotone machine and budgeted monotone complexity tables.

Programs are instruction streams read left to right:

* ``0 gamma(l) b_1..b_l``            LITERAL: append the ``l`` raw bits;
* ``1 gamma(k) gamma(l) b_1..b_l``   REPEAT: append the ``l``-bit pattern ``k`` times.

A trailing partial instruction produces nothing, which makes the machine
monotone: extending a program can only extend its output.  The machine is
not universal, so every complexity value here is relative to it.
"""
from __future__ import annotations

import os
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from itertools import product

from .arith import BitString, Dyadic, dsum, format_bits, parse_bits, shortlex_key
from .coding import TruncatedCode, elias_gamma, elias_gamma_decode, gamma_length

MACHINE_VERSION = "litrep-1"


def run_machine(p: BitString, out_cap: int) -> BitString:
    """Output of program ``p``, truncated to ``out_cap`` bits."""
    if out_cap < 1:
        raise ValueError("out_cap must be at least 1")
    out = ""
    pos = 0
    try:
        while pos < len(p) and len(out) < out_cap:
            op = p[pos]
            pos += 1
            if op == "0":
                ell, used = elias_gamma_decode(p, pos)
                pos += used
                if pos + ell > len(p):
                    break
                out += p[pos : pos + ell]
            else:
                k, used = elias_gamma_decode(p, pos)
                pos += used
                ell, used = elias_gamma_decode(p, pos)
                pos += used
                if pos + ell > len(p):
                    break
                pattern = p[pos : pos + ell]
                # never materialize more than out_cap bits of a long repeat
                reps = min(k, -(-(out_cap - len(out)) // ell))
                out += pattern * reps
            pos += ell
    except TruncatedCode:
        pass
    return out[:out_cap]


def literal(bits: BitString) -> BitString:
    """Program text of a single LITERAL instruction."""
    return "0" + elias_gamma(len(bits)) + bits


def repeat(pattern: BitString, k: int) -> BitString:
    return "1" + elias_gamma(k) + elias_gamma(len(pattern)) + pattern


@dataclass(frozen=True)
class EnumerationBudget:
    B: int
    out_cap: int = 32

    def __post_init__(self):
        if self.B < 0:
            raise ValueError("B must be nonnegative")
        if self.out_cap < 1:
            raise ValueError("out_cap must be at least 1")


@dataclass
class ComplexityTable:
    """``Km_B(x)`` for every ``x`` some program of length ``<= B`` outputs an extension of.

    Strings not in ``entries`` have no program within budget and count as
    ``+inf``.  ``programs`` holds one minimal witness per entry.
    """

    entries: dict[BitString, int]
    budget: EnumerationBudget
    programs: dict[BitString, BitString] = field(default_factory=dict, repr=False)
    version: str = MACHINE_VERSION
    kraft_admissible: bool = True

    def __len__(self):
        return len(self.entries)

    def get(self, x: BitString) -> int | None:
        return self.entries.get(x)

    @property
    def tag(self) -> str:
        return f"{self.version} B={self.budget.B} out_cap={self.budget.out_cap}"

    def kraft_sum(self, strings) -> Dyadic:
        """Exact ``sum 2**-Km_B(x)`` over the strings that have an entry."""
        return dsum(Dyadic.pow2(self.entries[x]) for x in strings if x in self.entries)

    def dumps(self) -> str:
        lines = [f"# km-table machine={self.version} B={self.budget.B} out_cap={self.budget.out_cap}"]
        for x in sorted(self.entries, key=shortlex_key):
            lines.append(f"{format_bits(x)} {self.entries[x]}")
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text: str) -> "ComplexityTable":
        lines = text.splitlines()
        if not lines or not lines[0].startswith("# km-table"):
            raise ValueError("missing km-table header")
        header = dict(tok.split("=", 1) for tok in lines[0].split()[2:])
        if header.get("machine") != MACHINE_VERSION:
            raise ValueError(f"table built by machine {header.get('machine')!r}, current is {MACHINE_VERSION!r}")
        budget = EnumerationBudget(int(header["B"]), int(header["out_cap"]))
        entries = {}
        for line in lines[1:]:
            if line.strip():
                x, v = line.split()
                entries[parse_bits(x)] = int(v)
        return cls(entries, budget)


def km_upper(x: BitString, t: ComplexityTable) -> int | None:
    return t.entries.get(x)


def _instruction_set(B: int, out_cap: int) -> list[tuple[int, BitString, BitString]]:
    """Every single instruction of length ``<= B`` as ``(cost, program text, output)``."""
    ins = []
    ell = 1
    while 1 + gamma_length(ell) + ell <= B:
        for bits in product("01", repeat=ell):
            pat = "".join(bits)
            ins.append((1 + gamma_length(ell) + ell, literal(pat), pat[:out_cap]))
        ell += 1
    ell = 1
    while 2 + gamma_length(ell) + ell <= B:
        k = 1
        while 1 + gamma_length(k) + gamma_length(ell) + ell <= B:
            cost = 1 + gamma_length(k) + gamma_length(ell) + ell
            reps = min(k, -(-out_cap // ell))
            for bits in product("01", repeat=ell):
                pat = "".join(bits)
                ins.append((cost, repeat(pat, k), (pat * reps)[:out_cap]))
            k += 1
        ell += 1
    ins.sort(key=lambda t: (t[0], t[1]))
    return ins


def _explore(B: int, out_cap: int, first: list[int]) -> dict[BitString, tuple[int, BitString]]:
    """Uniform-cost search over instruction sequences whose first instruction
    is one of the indices in ``first``.  Returns ``output -> (length, program)``."""
    ins = _instruction_set(B, out_cap)
    best: dict[BitString, tuple[int, BitString]] = {}
    buckets: list[list[tuple[BitString, BitString]]] = [[] for _ in range(B + 1)]
    for i in first:
        cost, prog, out = ins[i]
        buckets[cost].append((prog, out))
    for used in range(B + 1):
        for prog, out in sorted(buckets[used]):
            # buckets are popped in cost order, so the first visit is minimal
            if out in best:
                continue
            best[out] = (used, prog)
            if len(out) >= out_cap:
                continue
            room = B - used
            for cost, iprog, iout in ins:
                if cost > room:
                    break
                nxt = (out + iout)[:out_cap]
                prev = best.get(nxt)
                if prev is None or prev[0] > used + cost:
                    buckets[used + cost].append((prog + iprog, nxt))
    return best


def enumerate_km(budget: EnumerationBudget, jobs: int = 1) -> ComplexityTable:
    """Run every program of length ``<= B`` and take the monotone closure.

    The search is partitioned by first instruction when ``jobs > 1``; partial
    results are merged by pointwise minimum, so the table does not depend on
    ``jobs``.
    """
    B, cap = budget.B, budget.out_cap
    n_first = len(_instruction_set(B, cap))
    parts = [list(range(j, n_first, max(jobs, 1))) for j in range(max(jobs, 1))]
    best: dict[BitString, tuple[int, BitString]] = {"": (0, "")}
    if jobs > 1 and n_first:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_explore, [B] * jobs, [cap] * jobs, parts))
    else:
        results = [_explore(B, cap, parts[0])]
    for part in results:
        for out, rec in part.items():
            if out not in best or rec < best[out]:
                best[out] = rec
    entries: dict[BitString, int] = {}
    programs: dict[BitString, BitString] = {}
    # cheapest outputs first: the first value a prefix receives is its minimum
    for out, (used, prog) in sorted(best.items(), key=lambda kv: (kv[1], kv[0])):
        for i in range(len(out), -1, -1):
            x = out[:i]
            if x in entries:
                break
            entries[x] = used
            programs[x] = prog
    return ComplexityTable(entries, budget, programs)


def default_jobs() -> int:
    return max(1, min(4, os.cpu_count() or 1))


def compressor_surrogate(x: BitString) -> int:
    """Raw-deflate length of ``x`` in bits.

    Exploratory only: this is NOT Kraft-admissible and the test builders
    refuse tables derived from it.
    """
    z = zlib.compressobj(9, zlib.DEFLATED, -15)
    return 8 * len(z.compress(x.encode("ascii")) + z.flush())


def surrogate_table(strings, budget: EnumerationBudget | None = None) -> ComplexityTable:
    budget = budget or EnumerationBudget(0, 1)
    entries = {x: compressor_surrogate(x) for x in strings}
    return ComplexityTable(entries, budget, version="deflate-surrogate", kraft_admissible=False)
