"""Command-line front end.

Exit codes: 0 all checks pass, 1 a verified property was violated,
2 usage or configuration error.
"""
from __future__ import annotations

import argparse
import json
import os
import random
import statistics
import sys
import time
from pathlib import Path

from . import __version__
from .arith import Dyadic, format_bits, parse_bits, strings_of_length
from .coding import (
    KraftViolation,
    decode_pair,
    encode_pair,
    forward_codebook,
    sfe_build,
)
from .complexity import (
    MACHINE_VERSION,
    ComplexityTable,
    EnumerationBudget,
    enumerate_km,
)
from .measures import (
    LogApproximation,
    feasibility_check,
    measure_from_spec,
    sample,
    validate_log_approx,
)
from .prefix_sets import PrefixFreeSet, is_prefix_free
from .randomness import (
    TestFamily,
    build_blind_test,
    build_measure_test,
    deficiency_profile,
    sandwich_check,
    verify_test,
)

MAX_B = 22
MAX_L = 64
MAX_N = 64
CACHE_ENV = "HIPPO_LAB_CACHE"


class UsageError(Exception):
    pass


# --- config ----------------------------------------------------------------


class Config:
    """Experiment configuration read from a JSON file.

    ``measure`` and ``approximation`` may be inline objects or paths to JSON
    files, resolved relative to the config file.
    """

    def __init__(self, data: dict, base: Path):
        self.data = data
        self.base = base

    @classmethod
    def load(cls, path: str | None) -> "Config":
        if path is None:
            return cls({}, Path.cwd())
        p = Path(path)
        if not p.is_file():
            raise UsageError(f"config file not found: {path}")
        try:
            data = json.loads(p.read_text())
        except json.JSONDecodeError as exc:
            raise UsageError(f"config {path} is not valid JSON: {exc}") from None
        return cls(data, p.resolve().parent)

    def _resolve(self, value):
        if isinstance(value, str):
            p = self.base / value
            if not p.is_file():
                raise UsageError(f"referenced file not found: {value}")
            return json.loads(p.read_text())
        return value

    def path(self, key: str) -> Path | None:
        value = self.data.get(key)
        return None if value is None else self.base / value

    def measure(self):
        if "measure" not in self.data:
            raise UsageError("config lacks a measure")
        try:
            return measure_from_spec(self._resolve(self.data["measure"]))
        except (KeyError, ValueError) as exc:
            raise UsageError(f"bad measure spec: {exc}") from None

    def approximation(self) -> LogApproximation:
        if "approximation" not in self.data:
            raise UsageError("config lacks an approximation")
        try:
            return LogApproximation.from_dict(self._resolve(self.data["approximation"]))
        except (KeyError, ValueError) as exc:
            raise UsageError(f"bad approximation spec: {exc}") from None

    def budget(self) -> EnumerationBudget:
        b = self.data.get("budget", {})
        B, cap = int(b.get("B", 14)), int(b.get("out_cap", 32))
        if not 0 <= B <= MAX_B:
            raise UsageError(f"B must lie in [0, {MAX_B}]")
        if cap < 1:
            raise UsageError("out_cap must be positive")
        return EnumerationBudget(B, cap)

    def int_in(self, key: str, default: int, hi: int) -> int:
        v = int(self.data.get(key, default))
        if not 0 <= v <= hi:
            raise UsageError(f"{key} must lie in [0, {hi}]")
        return v

    def bound(self) -> dict | None:
        b = self.data.get("bound", "2^-n")
        if b == "2^-n":
            return None
        if isinstance(b, dict):
            return {int(n): Dyadic.parse(v) for n, v in b.items()}
        raise UsageError(f"unknown bound choice {b!r}")


def _table_for(cfg: Config, jobs: int) -> ComplexityTable:
    """Table named by the config, else from the cache directory, else freshly enumerated."""
    path = cfg.path("table")
    if path is not None:
        if not path.is_file():
            raise UsageError(f"table file not found: {path}")
        try:
            return ComplexityTable.loads(path.read_text())
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    budget = cfg.budget()
    return cached_table(budget, jobs)


def cached_table(budget: EnumerationBudget, jobs: int = 1) -> ComplexityTable:
    cache = os.environ.get(CACHE_ENV)
    name = f"km-{MACHINE_VERSION}-B{budget.B}-cap{budget.out_cap}.txt"
    if cache:
        p = Path(cache) / name
        if p.is_file():
            return ComplexityTable.loads(p.read_text())
    table = enumerate_km(budget, jobs=jobs)
    if cache:
        Path(cache).mkdir(parents=True, exist_ok=True)
        (Path(cache) / name).write_text(table.dumps())
    return table


def _write(out: Path, name: str, text: str) -> str:
    out.mkdir(parents=True, exist_ok=True)
    (out / name).write_text(text)
    return name


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _run_report(args, cfg: Config, verdicts: dict, files: list[str], started: float) -> str:
    return _dump(
        {
            "command": args.command,
            "config": cfg.data,
            "machine": MACHINE_VERSION,
            "version": __version__,
            "seed": args.seed,
            "verdicts": verdicts,
            "files": sorted(files),
            "timing": {"seconds": round(time.perf_counter() - started, 3)},
        }
    )


# --- commands --------------------------------------------------------------


def cmd_enum(args, cfg: Config) -> int:
    B = args.B if args.B is not None else cfg.budget().B
    cap = args.out_cap if args.out_cap is not None else cfg.budget().out_cap
    if B < 0 or B > MAX_B:
        raise UsageError(f"B must lie in [0, {MAX_B}]")
    if cap < 1:
        raise UsageError("out_cap must be positive")
    table = cached_table(EnumerationBudget(B, cap), args.jobs)
    name = args.name or f"km-B{B}-cap{cap}.txt"
    _write(args.out, name, table.dumps())
    print(f"{len(table)} entries -> {args.out / name}")
    return 0


def cmd_test(args, cfg: Config) -> int:
    """Build the blind family and, when a measure is configured, audit it.

    Without a measure only ``blind.family`` is written: the blind side needs
    nothing but ``(f, c)`` and the table.
    """
    started = time.perf_counter()
    la = cfg.approximation()
    P = cfg.measure() if "measure" in cfg.data else None
    table = _table_for(cfg, args.jobs)
    L = cfg.int_in("L", 12, MAX_L)
    n_max = cfg.int_in("n_max", 5, MAX_N)
    bound = cfg.bound()
    V = build_blind_test(la, table, n_max, L)
    files = [_write(args.out, "blind.family", V.dumps())]
    verdicts = {}
    if P is not None:
        U = build_measure_test(P, table, n_max, L)
        files.append(_write(args.out, "measure.family", U.dumps()))
        rv, ru = verify_test(V, P, bound), verify_test(U, P, bound)
        sw = sandwich_check(V, U, la.c)
        witness = None
        if sw.witness is not None:
            witness = {"n": sw.witness[0], "x": format_bits(sw.witness[1]), "side": sw.witness[2]}
        report = {
            "blind": rv.to_dict(),
            "measure": ru.to_dict(),
            "sandwich": {"holds": sw.holds, "witness": witness},
        }
        files.append(_write(args.out, "verification.json", _dump(report)))
        verdicts = {"blind_bound": rv.passed, "measure_bound": ru.passed, "sandwich": sw.holds}
        if witness:
            print(f"sandwich witness: level {witness['n']}, x={witness['x']} ({witness['side']})")
    _write(args.out, "run.json", _run_report(args, cfg, verdicts, files, started))
    for k, v in verdicts.items():
        print(f"{k}: {'pass' if v else 'FAIL'}")
    return 0 if all(verdicts.values()) else 1


def cmd_deficiency(args, cfg: Config) -> int:
    started = time.perf_counter()
    P = cfg.measure()
    table = _table_for(cfg, args.jobs)
    files = []
    if args.input is not None:
        x = parse_bits(args.input)
        prof = deficiency_profile(x, P, table)
        files.append(_write(args.out, "deficiency.json", _dump(prof.to_dict())))
        if args.plot:
            files.extend(_plot_profiles(args.out, {"input": prof}))
        verdicts = {"sup_estimate": prof.sup_estimate}
    else:
        if args.samples is None:
            raise UsageError("give --input or --samples")
        rng = random.Random(args.seed)
        sups = []
        rows = []
        for i in range(args.samples):
            x = sample(P, args.length, rng)
            prof = deficiency_profile(x, P, table)
            sups.append(prof.sup_estimate)
            rows.append({"index": i, "x": format_bits(x), "sup_estimate": prof.sup_estimate})
        finite = [s for s in sups if s is not None]
        summary = {
            "samples": args.samples,
            "length": args.length,
            "sup_estimates": rows,
            "max": max(finite, default=None),
            "min": min(finite, default=None),
            "median": statistics.median(finite) if finite else None,
        }
        files.append(_write(args.out, "deficiency_summary.json", _dump(summary)))
        verdicts = {"max_sup_estimate": summary["max"]}
    _write(args.out, "run.json", _run_report(args, cfg, verdicts, files, started))
    print(_dump(verdicts), end="")
    return 0


def _plot_profiles(out: Path, profiles: dict) -> list[str]:
    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        print("matplotlib not available; skipping plot", file=sys.stderr)
        return []
    fig, ax = plt.subplots(figsize=(6, 4))
    for label, prof in profiles.items():
        xs = [r.length for r in prof.rows if r.running_max is not None]
        ys = [r.running_max for r in prof.rows if r.running_max is not None]
        ax.step(xs, ys, where="post", label=label)
    ax.set_xlabel("prefix length")
    ax.set_ylabel("running max deficiency (lower bound)")
    ax.legend()
    fig.tight_layout()
    fig.savefig(out / "deficiency.png", dpi=100)
    plt.close(fig)
    return ["deficiency.png"]


def cmd_forward(args, cfg: Config) -> int:
    started = time.perf_counter()
    la = cfg.approximation()
    if args.family is None or not Path(args.family).is_file():
        raise UsageError("--family must name an existing test-family file")
    try:
        fam = TestFamily.loads(Path(args.family).read_text())
    except (ValueError, KeyError) as exc:
        raise UsageError(f"bad family file: {exc}") from None
    n_max = cfg.int_in("n_max", fam.n_max, MAX_N)
    files: list[str] = []
    try:
        lc = forward_codebook(fam.levels, la, n_max)
    except KraftViolation as exc:
        verdicts = {"kraft": False, "violating_level": exc.level}
        files.append(_write(args.out, "forward.json", _dump({"error": str(exc), **verdicts})))
        _write(args.out, "run.json", _run_report(args, cfg, verdicts, files, started))
        print(f"Kraft violation at level {exc.level}: {exc}")
        return 1
    files.append(_write(args.out, "levelled_code.txt", lc.dumps()))
    entries = []
    words = []
    roundtrip = bound_ok = True
    for n, x in lc.pairs():
        w = encode_pair(lc, n, x)
        words.append(w)
        ok = len(w) <= lc.bound(n, x)
        back = decode_pair(lc, w)
        rt = back[:2] == (n, x) and back[2] == len(w)
        bound_ok &= ok
        roundtrip &= rt
        entries.append({"n": n, "x": format_bits(x), "length": len(w), "bound": lc.bound(n, x), "ok": ok})
    joint = is_prefix_free(words) and len(set(words)) == len(words)
    verdicts = {"kraft": True, "length_bound": bound_ok, "roundtrip": roundtrip, "prefix_free": joint}
    files.append(_write(args.out, "forward.json", _dump({"entries": entries, **verdicts})))
    _write(args.out, "run.json", _run_report(args, cfg, verdicts, files, started))
    for k, v in verdicts.items():
        print(f"{k}: {'pass' if v else 'FAIL'}")
    return 0 if all(verdicts.values()) else 1


def cmd_sample(args, cfg: Config) -> int:
    P = cfg.measure()
    if args.length < 0:
        raise UsageError("length must be nonnegative")
    x = sample(P, args.length, random.Random(args.seed))
    name = args.name or "sample.txt"
    _write(args.out, name, format_bits(x) + "\n")
    print(format_bits(x))
    return 0


def cmd_feasibility(args, cfg: Config) -> int:
    la = cfg.approximation()
    depth = args.depth if args.depth is not None else cfg.int_in("depth", 8, 20)
    rep = feasibility_check(la, depth)
    result = rep.to_dict()
    if "measure" in cfg.data:
        result["witness_validated"] = validate_log_approx(cfg.measure(), la, depth)
    _write(args.out, "feasibility.json", _dump(result))
    print(f"{rep.verdict}" + ("" if rep.feasible else f" at {format_bits(rep.violating_node)}"))
    return 0 if rep.feasible else 1


def cmd_kraft(args, cfg: Config) -> int:
    table = _table_for(cfg, args.jobs)
    if args.set is not None:
        p = Path(args.set)
        if not p.is_file():
            raise UsageError(f"set file not found: {args.set}")
        try:
            strings = list(PrefixFreeSet.loads(p.read_text()))
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        label = str(p)
    else:
        strings = list(strings_of_length(args.level))
        label = f"level {args.level}"
    total = table.kraft_sum(strings)
    ok = total <= Dyadic(1)
    _write(args.out, "kraft.json", _dump({"set": label, "sum": str(total), "table": table.tag, "passed": ok}))
    print(f"{label}: sum 2^-Km_B = {total} {'<= 1' if ok else '> 1'}")
    return 0 if ok else 1


def cmd_sfe(args, cfg: Config) -> int:
    p = Path(args.items)
    if not p.is_file():
        raise UsageError(f"items file not found: {args.items}")
    items = []
    for line in p.read_text().splitlines():
        if line.strip() and not line.startswith("#"):
            x, q = line.split()
            items.append((parse_bits(x), Dyadic.parse(q)))
    try:
        cb = sfe_build(items)
    except KraftViolation as exc:
        print(f"Kraft violation: {exc}")
        return 1
    lines = [f"# sfe total={cb.total}"] + [f"{format_bits(e.x)} {e.q} {e.codeword}" for e in cb.entries]
    _write(args.out, "codebook.txt", "\n".join(lines) + "\n")
    print("\n".join(lines))
    return 0


# --- parser ----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    def globals_parser(suppress: bool) -> argparse.ArgumentParser:
        # sub-commands repeat the global flags without clobbering values given earlier
        g = argparse.ArgumentParser(add_help=False)
        d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
        g.add_argument("--config", default=d(None), help="experiment config (JSON)")
        g.add_argument("--out", type=Path, default=d(Path("out")), help="output directory")
        g.add_argument("--seed", type=int, default=d(0))
        g.add_argument("--jobs", type=int, default=d(1))
        return g

    common = globals_parser(True)
    parser = argparse.ArgumentParser(prog="hippolab", description="Blind randomness laboratory.", parents=[globals_parser(False)])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__} ({MACHINE_VERSION})")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("enum", parents=[common], help="enumerate a Km_B table")
    p.add_argument("--B", type=int)
    p.add_argument("--out-cap", type=int)
    p.add_argument("--name")
    p.set_defaults(func=cmd_enum)

    p = sub.add_parser("test", parents=[common], help="build and verify blind/measure test families")
    p.set_defaults(func=cmd_test)

    p = sub.add_parser("deficiency", parents=[common], help="deficiency profiles of one string or samples")
    p.add_argument("--input", help="bit string ('-' or '' for the empty string)")
    p.add_argument("--samples", type=int)
    p.add_argument("--length", type=int, default=32)
    p.add_argument("--plot", action="store_true")
    p.set_defaults(func=cmd_deficiency)

    p = sub.add_parser("forward", parents=[common], help="levelled SFE code from a test family")
    p.add_argument("--family")
    p.set_defaults(func=cmd_forward)

    p = sub.add_parser("sample", parents=[common], help="exact sample from a measure")
    p.add_argument("--length", type=int, default=32)
    p.add_argument("--name")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("feasibility", parents=[common], help="interval feasibility of (f, c)")
    p.add_argument("--depth", type=int)
    p.set_defaults(func=cmd_feasibility)

    p = sub.add_parser("kraft", parents=[common], help="exact Kraft sum of a prefix-free set")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--level", type=int, help="use all strings of this length")
    g.add_argument("--set", help="file with one string per line")
    p.set_defaults(func=cmd_kraft)

    p = sub.add_parser("sfe", parents=[common], help="Shannon-Fano-Elias codebook from 'x q' lines")
    p.add_argument("items")
    p.set_defaults(func=cmd_sfe)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.jobs < 1:
        parser.error("--jobs must be positive")
    try:
        cfg = Config.load(args.config)
        return args.func(args, cfg)
    except (UsageError, ValueError) as exc:
        print(f"hippolab {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
