"""Brute-force regeneration of small instances, kept independent of the engine.

Nothing here calls into :mod:`isomergen.structures` generation or
canonicalization.  Radicals are built from every *ordered* tuple of
children; molecules are built by bonding two radicals in every possible way
and canonicalized by explicit re-rooting at every heavy atom and bond.  Only
the textual code grammar is shared, which is what makes the two sets
comparable.

Also holds a brute-force enumerator of plain unlabeled trees, used to check
the Euler-transform and unrooting series.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Tuple

from .structures import StructureSet

__all__ = [
    "OracleReport",
    "compare",
    "free_tree_counts",
    "min_rooting_key",
    "oracle_free",
    "oracle_rooted",
    "rooted_tree_counts",
]

_BRANCHES = {"C": 3, "N": 2, "O": 1}
_HEAVY = frozenset("CNO")


@dataclass(frozen=True)
class OracleItem:
    code: str
    degree: int


# A radical as nested tuples: (symbol, (child, ...)).
Node = Tuple[str, tuple]


def _text(node: Node) -> str:
    symbol, kids = node
    if not kids:
        return symbol
    return symbol + "(" + ",".join(sorted(_text(k) for k in kids)) + ")"


def _compositions(total: int, parts: int) -> Iterable[Tuple[int, ...]]:
    if parts == 0:
        if total == 0:
            yield ()
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def _selection(elements: Iterable[str], include_F: bool) -> Tuple[List[str], bool]:
    elements = set(elements)
    return [e for e in "CNO" if e in elements], include_F or "F" in elements


def _rooted_nodes(elements: Iterable[str], include_F: bool, n_max: int) -> Dict[int, List[Node]]:
    heavy, include_F = _selection(elements, include_F)
    levels: Dict[int, List[Node]] = {0: [("H", ())] + ([("F", ())] if include_F else [])}
    for n in range(1, n_max + 1):
        seen: Dict[str, Node] = {}
        for e in heavy:
            k = _BRANCHES[e]
            for sizes in _compositions(n - 1, k):
                for kids in itertools.product(*(levels[s] for s in sizes)):
                    node = (e, kids)
                    seen.setdefault(_text(node), node)
        levels[n] = [seen[c] for c in sorted(seen)]
    return levels


def oracle_rooted(elements: Iterable[str], include_F: bool = False, n_max: int = 5) -> StructureSet:
    """All radicals up to n_max heavy atoms via ordered child tuples and dedup."""
    if n_max > 7:
        raise ValueError("oracle is exponential; keep n_max <= 7")
    levels = _rooted_nodes(elements, include_F, n_max)
    return StructureSet((OracleItem("*" + _text(node), n) for n, nodes in levels.items() for node in nodes),
                        n_max=n_max)


# ---------------------------------------------------------------- molecules

class _Molecule:
    """Explicit atom graph of a molecule."""

    def __init__(self):
        self.symbols: List[str] = []
        self.adj: List[List[int]] = []

    def add(self, symbol: str, bonded_to: Optional[int] = None) -> int:
        self.symbols.append(symbol)
        self.adj.append([])
        i = len(self.symbols) - 1
        if bonded_to is not None:
            self.adj[i].append(bonded_to)
            self.adj[bonded_to].append(i)
        return i

    def graft(self, node: Node, bonded_to: Optional[int]) -> int:
        i = self.add(node[0], bonded_to)
        for k in node[1]:
            self.graft(k, i)
        return i

    def heavy(self) -> List[int]:
        return [v for v, s in enumerate(self.symbols) if s in _HEAVY]

    def rooted_text(self, v: int, away_from: int) -> str:
        stack_text = []
        for u in self.adj[v]:
            if u != away_from:
                stack_text.append(self.rooted_text(u, v))
        if not stack_text:
            return self.symbols[v]
        return self.symbols[v] + "(" + ",".join(sorted(stack_text)) + ")"

    def rootings(self) -> List[str]:
        """Code of the molecule seen from every heavy atom and every heavy bond."""
        out = []
        for v in self.heavy():
            out.append("!" + self.rooted_text(v, -1))
            for u in self.adj[v]:
                if u > v and self.symbols[u] in _HEAVY:
                    a, b = sorted((self.rooted_text(v, u), self.rooted_text(u, v)))
                    out.append("=(" + a + "," + b + ")")
        return out

    def heavy_component(self, start: int, removed: int) -> int:
        seen = {removed, start}
        todo = [start]
        count = 0
        while todo:
            v = todo.pop()
            count += self.symbols[v] in _HEAVY
            for u in self.adj[v]:
                if u not in seen:
                    seen.add(u)
                    todo.append(u)
        return count

    def centroid_code(self) -> str:
        """Public code, found by measuring every heavy atom's largest remaining piece."""
        heavy = self.heavy()
        n = len(heavy)
        worst = {}
        for v in heavy:
            worst[v] = max([self.heavy_component(u, v) for u in self.adj[v]] + [0])
        best = min(worst.values())
        centres = [v for v in heavy if worst[v] == best]
        if len(centres) == 1 and 2 * best < n:
            return "!" + self.rooted_text(centres[0], -1)
        u, v = centres
        assert v in self.adj[u] and 2 * best == n, "tree centroid is an atom or a bond"
        a, b = sorted((self.rooted_text(u, v), self.rooted_text(v, u)))
        return "=(" + a + "," + b + ")"


def min_rooting_key(code: str) -> str:
    """Isomorphism key: the least code over all heavy re-rootings of a molecule."""
    return min(_parse_molecule(code).rootings())


def _parse_molecule(code: str) -> _Molecule:
    m = _Molecule()
    pos = 0

    def atom(parent: Optional[int]) -> int:
        nonlocal pos
        i = m.add(code[pos], parent)
        pos += 1
        if pos < len(code) and code[pos] == "(":
            pos += 1
            while True:
                atom(i)
                pos += 1
                if code[pos - 1] == ")":
                    break
        return i

    if code.startswith("!"):
        pos = 1
        atom(None)
    elif code.startswith("=("):
        pos = 2
        a = atom(None)
        pos += 1
        atom(a)
    else:
        raise ValueError(f"not a molecule code: {code!r}")
    return m


def oracle_free(elements: Iterable[str], include_F: bool = False, n_max: int = 4) -> StructureSet:
    """All molecules up to n_max heavy atoms by bonding pairs of radicals every way.

    One partner is heavy-rooted; the other is any radical, including a bare
    H or F.  Duplicates collapse on the minimum-over-rootings key.
    """
    if n_max > 6:
        raise ValueError("oracle is exponential; keep n_max <= 6")
    levels = _rooted_nodes(elements, include_F, n_max)
    out = StructureSet(n_max=n_max)
    for n in range(1, n_max + 1):
        found: Dict[str, str] = {}
        for i in range(1, n + 1):
            for left in levels[i]:
                for right in levels[n - i]:
                    m = _Molecule()
                    a = m.graft(left, None)
                    m.graft(right, a)
                    key = min(m.rootings())
                    if key not in found:
                        found[key] = m.centroid_code()
        for code in sorted(found.values()):
            out.add(OracleItem(code, n))
    return out


# ---------------------------------------------------------------- comparison

@dataclass
class OracleReport:
    label: str
    engine_counts: Dict[int, int]
    oracle_counts: Dict[int, int]
    missing: List[str] = field(default_factory=list)
    extra: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.missing and not self.extra and self.engine_counts == self.oracle_counts

    @property
    def verdict(self) -> str:
        return "pass" if self.passed else "fail"

    def format(self, limit: int = 20) -> str:
        lines = [f"{self.label}: {self.verdict}"]
        for d in sorted(set(self.engine_counts) | set(self.oracle_counts)):
            lines.append(f"  degree {d}: engine {self.engine_counts.get(d, 0)}, oracle {self.oracle_counts.get(d, 0)}")
        for name, codes in (("missing", self.missing), ("extra", self.extra)):
            if codes:
                lines.append(f"  {name} ({len(codes)}):")
                lines.extend(f"    {c}" for c in codes[:limit])
                if len(codes) > limit:
                    lines.append(f"    ... {len(codes) - limit} more")
        return "\n".join(lines)


def compare(engine: StructureSet, oracle: StructureSet, label: str = "compare") -> OracleReport:
    """Symmetric difference by code; ``missing`` are oracle codes the engine lacks."""
    e, o = set(engine.codes()), set(oracle.codes())
    return OracleReport(label, engine.counts(), oracle.counts(), sorted(o - e), sorted(e - o))


# ---------------------------------------------------------------- plain trees

def _ahu(children: Dict[int, List[int]], v: int) -> str:
    return "(" + "".join(sorted(_ahu(children, c) for c in children[v])) + ")"


def _parse_ahu(code: str) -> Dict[int, List[int]]:
    children: Dict[int, List[int]] = {}
    stack: List[int] = []
    for ch in code:
        if ch == "(":
            v = len(children)
            children[v] = []
            if stack:
                children[stack[-1]].append(v)
            stack.append(v)
        else:
            stack.pop()
    return children


def _rooted_tree_codes(n_max: int) -> Dict[int, set]:
    """Rooted unlabeled trees by node count: add a leaf anywhere, then dedup."""
    levels = {1: {"()"}}
    for n in range(2, n_max + 1):
        made = set()
        for code in levels[n - 1]:
            children = _parse_ahu(code)
            for v in list(children):
                grown = {k: list(c) for k, c in children.items()}
                leaf = len(grown)
                grown[leaf] = []
                grown[v].append(leaf)
                made.add(_ahu(grown, 0))
        levels[n] = made
    return levels


def rooted_tree_counts(n_max: int) -> List[int]:
    levels = _rooted_tree_codes(n_max)
    return [0] + [len(levels[n]) for n in range(1, n_max + 1)]


def free_tree_counts(n_max: int) -> List[int]:
    """Free trees: minimum AHU code over every choice of root."""
    out = [0]
    for n, codes in sorted(_rooted_tree_codes(n_max).items()):
        free = set()
        for code in codes:
            children = _parse_ahu(code)
            adj: Dict[int, List[int]] = {v: list(c) for v, c in children.items()}
            for v, cs in children.items():
                for c in cs:
                    adj[c].append(v)
            keys = []
            for root in adj:
                tree: Dict[int, List[int]] = {}
                todo, seen = [root], {root}
                while todo:
                    v = todo.pop()
                    tree[v] = [u for u in adj[v] if u not in seen]
                    seen.update(tree[v])
                    todo.extend(tree[v])
                keys.append(_ahu(tree, root))
            free.add(min(keys))
        out.append(len(free))
    return out
