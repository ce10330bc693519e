"""Command-line entry point: ``count``, ``generate`` and ``verify``.

Exit codes: 0 success, 1 verification or consistency failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import contextlib
import itertools
import sys
import time
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import IO, Callable, Iterator, List, Optional, Sequence, Tuple

from . import formats
from .oracle import compare, free_tree_counts, oracle_free, oracle_rooted, rooted_tree_counts
from .series import (GradedSeries, dct_unroot, otter_unroot, rooted_trees_series,
                     solve_rooted_series)
from .structures import (CardinalityMismatch, StructureSet, assemble_free, generate_free,
                         grow_rooted, heavy_orbits, molecular_formula, parse_code)

FAMILIES = {
    # family: (heavy elements, fluorine, natural mode)
    "trees": ((), False, "free"),
    "alkyl": (("C",), False, "rooted"),
    "alkane": (("C",), False, "free"),
    "chno": (("C", "N", "O"), False, "free"),
    "chnof": (("C", "N", "O"), True, "free"),
}
GUARDRAIL = 10
TIERS = {"fast": (5, 4), "slow": (7, 6)}  # (rooted bound, free bound)


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    subcommand: str
    family: str = "chno"
    rooted: bool = False
    n_max: int = 10
    include_F: bool = False
    output: str = "counts"
    out_path: Optional[str] = None
    tier: str = "fast"
    force: bool = False
    fixtures: Optional[str] = None

    @property
    def elements(self) -> Tuple[str, ...]:
        return FAMILIES[self.family][0]


def _config(args: argparse.Namespace) -> RunConfig:
    if args.command == "verify":
        return RunConfig("verify", tier=args.tier, fixtures=args.fixtures)
    family = args.family
    elements, fluorine, natural = FAMILIES[family]
    mode = args.mode or natural
    if family == "alkyl" and mode != "rooted":
        raise UsageError("family alkyl is rooted only (use --family alkane for molecules)")
    if family == "alkane" and mode != "free":
        raise UsageError("family alkane is free only (use --family alkyl for radicals)")
    include_F = fluorine or args.with_f
    if family == "trees":
        if args.with_f:
            raise UsageError("family trees takes no element options")
        if args.command == "generate":
            raise UsageError("family trees supports count only")
    default_format = "counts" if args.command == "count" else "catalog"
    output = args.format or default_format
    if args.command == "count" and output == "catalog":
        raise UsageError("count writes counts or per-element tables, not catalogs")
    if family == "trees" and output == "per-element":
        raise UsageError("trees have no element breakdown")
    lowest = 1 if args.command == "count" else 0
    if args.max < lowest:
        raise UsageError(f"--max must be at least {lowest}")
    if args.command == "generate" and args.max > GUARDRAIL and not args.force:
        raise UsageError(f"--max above {GUARDRAIL} generates millions of structures; pass --force to proceed")
    return RunConfig(args.command, family, mode == "rooted", args.max, include_F, output,
                     args.out, force=args.force)


@contextlib.contextmanager
def _sink(path: Optional[str]) -> Iterator[IO[str]]:
    if path is None:
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            yield fh


def counting_series(config: RunConfig) -> GradedSeries:
    if config.family == "trees":
        f = rooted_trees_series(config.n_max)
        return f if config.rooted else otter_unroot(f)
    a = solve_rooted_series(config.elements, config.include_F, config.n_max)
    if config.rooted:
        return a
    return dct_unroot(a, config.elements, config.include_F)[3]


def run_count(config: RunConfig) -> int:
    series = counting_series(config)
    with _sink(config.out_path) as out:
        formats.emit_counts(series, "per-element" if config.output == "per-element" else "total", out)
    return 0


def run_generate(config: RunConfig) -> int:
    if config.rooted:
        structures = grow_rooted(config.elements, config.include_F, config.n_max)
    else:
        structures = generate_free(config.elements, config.include_F, config.n_max)
    expected = counting_series(config).collapse()
    with _sink(config.out_path) as out:
        if config.output == "catalog":
            formats.emit_catalog(structures, out)
        else:
            formats.emit_counts(_structure_counts(structures, config), config.output, out)
    report = sys.stdout if config.out_path else sys.stderr
    ok = True
    for d in range(config.n_max + 1):
        got = len(structures.slice(d))
        if not got and not expected[d]:
            continue
        status = "ok" if got == expected[d] else "MISMATCH"
        ok &= got == expected[d]
        print(f"# degree {d}: generated {got}, counted {expected[d]} {status}", file=report)
    if not ok:
        print("error: generated structures disagree with the counting series", file=sys.stderr)
        return 1
    return 0


def _structure_counts(structures: StructureSet, config: RunConfig) -> formats.CountsTable:
    if config.output == "counts":
        return formats.CountsTable(sorted(structures.counts().items()))
    tally = {}
    for s in structures:
        f = molecular_formula(s)
        key = formats.ElementVector(f["C"], f["N"], f["O"], f["F"])
        tally[key] = tally.get(key, 0) + 1
    return formats.CountsTable(sorted(tally.items(), key=lambda kv: (kv[0].total(), tuple(kv[0]))))


# ---------------------------------------------------------------- verify

def _subsets() -> List[Tuple[str, ...]]:
    return [s for k in (1, 2, 3) for s in itertools.combinations("CNO", k)]


def _fixture_dir(config: RunConfig) -> Path:
    if config.fixtures:
        return Path(config.fixtures)
    return Path(str(resources.files("isomergen") / "data"))


def _check_fixtures(config: RunConfig) -> List[str]:
    problems = []
    root = _fixture_dir(config)
    for name, free in (("chno_rooted.tsv", False), ("chno_free.tsv", True)):
        table = formats.read_fixture(root / name)
        top = max(d for d, _ in table)
        a = solve_rooted_series("CNO", False, top)
        series = dct_unroot(a, "CNO")[3] if free else a
        computed = series.collapse()
        for d, c in table:
            if computed[d] != c:
                problems.append(f"{name}: degree {d}: fixture {c}, computed {computed[d]}")
    return problems


def _families(bound_cno: int, bound_f: int):
    for els in _subsets():
        yield "".join(els), els, False, bound_cno
    yield "CNO+F", ("C", "N", "O"), True, bound_f


def run_verify(config: RunConfig) -> int:
    rooted_bound, free_bound = TIERS[config.tier]
    f_bound = free_bound - 1
    results: List[Tuple[str, bool]] = []

    def check(name: str, fn: Callable[[], List[str]]) -> None:
        t = time.perf_counter()
        try:
            problems = fn()
        except Exception as exc:  # a crash is a verification failure, not a usage error
            problems = [f"{type(exc).__name__}: {exc}"]
        ok = not problems
        results.append((name, ok))
        print(f"{'PASS' if ok else 'FAIL'} {name} ({time.perf_counter() - t:.2f}s)")
        for p in problems:
            print("  " + p)

    check("reference series fixtures", lambda: _check_fixtures(config))

    def oracle_sweep() -> List[str]:
        problems = []
        for label, els, fl, _ in _families(0, 0):
            rb, fb = (rooted_bound, free_bound) if not fl else (rooted_bound - 1, f_bound)
            for kind, engine, oracle in (
                ("rooted", grow_rooted(els, fl, rb), oracle_rooted(els, fl, rb)),
                ("free", generate_free(els, fl, fb), oracle_free(els, fl, fb)),
            ):
                report = compare(engine, oracle, f"{kind} {label}")
                if not report.passed:
                    problems.append(report.format())
        return problems

    check(f"oracle equivalence (rooted <= {rooted_bound}, free <= {free_bound})", oracle_sweep)

    def agreement() -> List[str]:
        problems = []
        for label, els, fl, _ in _families(0, 0):
            n = 8 if not fl else f_bound + 1
            a = solve_rooted_series(els, fl, n)
            phi = dct_unroot(a, els, fl)[3]
            rooted = grow_rooted(els, fl, n)
            try:
                assemble_free(rooted, els, n, expected=phi)
            except CardinalityMismatch as exc:
                problems.append(f"free {label}: {exc}")
            got = rooted.counts()
            for d, c in enumerate(a.collapse()):
                if got.get(d, 0) != c:
                    problems.append(f"rooted {label}: degree {d}: generated {got.get(d, 0)}, counted {c}")
        return problems

    check("generation matches counting", agreement)

    def orbits() -> List[str]:
        problems = []
        butanes = {"=(C(C(H,H,H),H,H),C(C(H,H,H),H,H))": (2, 2, 1),
                   "!C(C(H,H,H),C(H,H,H),C(H,H,H),H)": (2, 1, 0)}
        for code, want in butanes.items():
            got = heavy_orbits(parse_code(code))
            if got != want:
                problems.append(f"{code}: orbits {got}, expected {want}")
        for label, els, fl, _ in _families(0, 0):
            for m in generate_free(els, fl, free_bound + 1 if not fl else f_bound):
                p, q, r = heavy_orbits(m)
                if p - q + r != 1:
                    problems.append(f"{m.code}: p - q + r = {p - q + r}")
        return problems

    check("per-molecule orbit identity", orbits)

    def round_trip() -> List[str]:
        problems = []
        for label, els, fl, _ in _families(0, 0):
            rb = rooted_bound + 1 if not fl else f_bound
            for s in itertools.chain(grow_rooted(els, fl, rb), generate_free(els, fl, rb)):
                back = parse_code(s.code)
                if back.code != s.code or molecular_formula(back) != molecular_formula(s):
                    problems.append(f"{s.code} parsed back as {back.code}")
                f = molecular_formula(s)
                extra = 1 if s.code.startswith("*") else 2
                if s.heavy_size and f["H"] != 2 * f["C"] + f["N"] + extra - f["F"]:
                    problems.append(f"{s.code}: hydrogen count {f['H']} breaks the valence law")
        return problems

    check("round trip and hydrogen law", round_trip)

    def trees() -> List[str]:
        n = 8 if config.tier == "fast" else 10
        f = rooted_trees_series(n)
        problems = []
        if f.collapse() != rooted_tree_counts(n):
            problems.append(f"rooted trees {f.collapse()} vs brute force {rooted_tree_counts(n)}")
        if otter_unroot(f).collapse() != free_tree_counts(n):
            problems.append(f"free trees {otter_unroot(f).collapse()} vs brute force {free_tree_counts(n)}")
        return problems

    check("tree series vs brute force", trees)

    failed = [name for name, ok in results if not ok]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    return 1 if failed else 0


# ---------------------------------------------------------------- argv

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="isomergen", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in (("count", "print a counting series"),
                        ("generate", "write a catalog of every structure")):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--family", choices=sorted(FAMILIES), required=True)
        mode = p.add_mutually_exclusive_group()
        mode.add_argument("--rooted", dest="mode", action="store_const", const="rooted")
        mode.add_argument("--free", dest="mode", action="store_const", const="free")
        p.add_argument("--max", type=int, required=True, metavar="N", help="largest heavy-atom count")
        p.add_argument("--with-f", action="store_true", help="allow fluorine in place of hydrogen")
        p.add_argument("--out", metavar="PATH")
        p.add_argument("--format", choices=["catalog", "counts", "per-element"])
        p.add_argument("--force", action="store_true", help=f"allow generation beyond --max {GUARDRAIL}")
    v = sub.add_parser("verify", help="run the self-consistency suite")
    v.add_argument("--tier", choices=sorted(TIERS), default="fast")
    v.add_argument("--fixtures", metavar="DIR", help="directory holding chno_rooted.tsv and chno_free.tsv")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = _config(args)
    except UsageError as exc:
        parser.error(str(exc))
    runner = {"count": run_count, "generate": run_generate, "verify": run_verify}[config.subcommand]
    try:
        return runner(config)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
