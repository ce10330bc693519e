"""Canonical acyclic structures: radicals, free molecules, and their generation.

The same recurrences that count radicals and molecules in
:mod:`isomergen.series` are replayed here over canonical trees, so that every
counted object is emitted once.

Line notation (stable, byte-exact):

* leaf codes are ``H`` and ``F``;
* a heavy atom is its symbol followed by ``(`` child codes ``)``, children
  joined by ``,`` in ascending byte order;
* ``*X`` is a radical rooted at ``X``;
* ``!X(...)`` is a molecule whose heavy-skeleton centroid is the atom ``X``
  (all of its valence neighbours are listed as children);
* ``=(A,B)`` is a molecule whose centroid is the bond between the roots of
  the equal-size halves ``A <= B``.
"""

from __future__ import annotations

import itertools
from collections import Counter
from typing import Dict, Iterable, Iterator, List, Optional, Sequence, Tuple, Union

from .series import (BRANCHES, HEAVY, VALENCE, GradedSeries, dct_unroot,
                     normalize_elements, solve_rooted_series)

__all__ = [
    "CardinalityMismatch",
    "CodeError",
    "CodeSyntaxError",
    "FreeStructure",
    "NonCanonicalError",
    "RootedStructure",
    "StructureSet",
    "ValenceError",
    "assemble_free",
    "canonical_rooted_code",
    "generate_free",
    "grow_rooted",
    "heavy_orbits",
    "k_multisets",
    "molecular_formula",
    "parse_code",
]

# per-atom formula vector layout
_C, _N, _O, _F, _H = range(5)
_SLOT = {"C": _C, "N": _N, "O": _O, "F": _F, "H": _H}


class CardinalityMismatch(RuntimeError):
    """Generated slice size disagrees with the counting series."""

    def __init__(self, degree: int, generated: int, expected: int):
        super().__init__(f"degree {degree}: generated {generated} structures, series predicts {expected}")
        self.degree = degree
        self.generated = generated
        self.expected = expected


class CodeError(ValueError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class CodeSyntaxError(CodeError):
    pass


class ValenceError(CodeError):
    pass


class NonCanonicalError(CodeError):
    pass


class RootedStructure:
    """A radical: a valence-exact tree hanging from a root with one free bond."""

    __slots__ = ("symbol", "children", "body", "heavy_size", "counts")

    def __init__(self, symbol: str, children: Sequence["RootedStructure"] = ()):
        children = tuple(sorted(children, key=_body))
        if len(children) != BRANCHES[symbol]:
            raise ValueError(f"{symbol} needs {BRANCHES[symbol]} branches, got {len(children)}")
        self.symbol = symbol
        self.children = children
        if children:
            self.body = symbol + "(" + ",".join(c.body for c in children) + ")"
        else:
            self.body = symbol
        counts = [0] * 5
        counts[_SLOT[symbol]] += 1
        for c in children:
            for i, v in enumerate(c.counts):
                counts[i] += v
        self.counts = tuple(counts)
        self.heavy_size = counts[_C] + counts[_N] + counts[_O]

    @classmethod
    def _sorted(cls, symbol: str, children: Tuple["RootedStructure", ...]) -> "RootedStructure":
        # generation hot path: children already sorted and counted correctly
        self = object.__new__(cls)
        self.symbol = symbol
        self.children = children
        self.body = symbol + "(" + ",".join(c.body for c in children) + ")"
        counts = [0, 0, 0, 0, 0]
        counts[_SLOT[symbol]] = 1
        for c in children:
            cc = c.counts
            counts[0] += cc[0]; counts[1] += cc[1]; counts[2] += cc[2]
            counts[3] += cc[3]; counts[4] += cc[4]
        self.counts = tuple(counts)
        self.heavy_size = counts[0] + counts[1] + counts[2]
        return self

    @property
    def code(self) -> str:
        return "*" + self.body

    @property
    def degree(self) -> int:
        return self.heavy_size

    @property
    def is_heavy(self) -> bool:
        return self.symbol in HEAVY

    def __eq__(self, other: object) -> bool:
        return isinstance(other, RootedStructure) and self.body == other.body

    def __hash__(self) -> int:
        return hash(self.body)

    def __repr__(self) -> str:
        return f"RootedStructure({self.code!r})"


def _body(s: RootedStructure) -> str:
    return s.body


class FreeStructure:
    """A molecule canonically rooted at its heavy-skeleton centroid.

    ``center`` is the centroid atom symbol, or ``None`` when the centroid is a
    bond; ``parts`` holds the valence-many branches or the two halves.
    """

    __slots__ = ("center", "parts", "code", "heavy_size", "counts")

    def __init__(self, center: Optional[str], parts: Sequence[RootedStructure]):
        parts = tuple(sorted(parts, key=_body))
        if center is None:
            if len(parts) != 2 or not all(p.is_heavy for p in parts):
                raise ValueError("bond-centred molecule needs two heavy-rooted halves")
            if parts[0].heavy_size != parts[1].heavy_size:
                raise ValueError("bond-centred halves must have equal heavy size")
            code = "=(" + parts[0].body + "," + parts[1].body + ")"
        else:
            if center not in HEAVY:
                raise ValueError(f"centre atom must be heavy, got {center}")
            if len(parts) != VALENCE[center]:
                raise ValueError(f"{center} needs {VALENCE[center]} neighbours, got {len(parts)}")
            code = "!" + center + "(" + ",".join(p.body for p in parts) + ")"
        self._fill(center, parts, code)

    def _fill(self, center, parts, code):
        self.center = center
        self.parts = parts
        self.code = code
        counts = [0, 0, 0, 0, 0]
        if center is not None:
            counts[_SLOT[center]] = 1
        for p in parts:
            pc = p.counts
            for i in range(5):
                counts[i] += pc[i]
        self.counts = tuple(counts)
        self.heavy_size = counts[0] + counts[1] + counts[2]

    @classmethod
    def _sorted(cls, center: Optional[str], parts: Tuple[RootedStructure, ...]) -> "FreeStructure":
        self = object.__new__(cls)
        if center is None:
            code = "=(" + parts[0].body + "," + parts[1].body + ")"
        else:
            code = "!" + center + "(" + ",".join(p.body for p in parts) + ")"
        self._fill(center, parts, code)
        return self

    @property
    def degree(self) -> int:
        return self.heavy_size

    @property
    def edge_centered(self) -> bool:
        return self.center is None

    def __eq__(self, other: object) -> bool:
        return isinstance(other, FreeStructure) and self.code == other.code

    def __hash__(self) -> int:
        return hash(self.code)

    def __repr__(self) -> str:
        return f"FreeStructure({self.code!r})"


Structure = Union[RootedStructure, FreeStructure]


class StructureSet:
    """Structures graded by heavy-atom count, unique by code, sorted per degree.

    Members only need ``code`` and ``degree`` attributes, so the oracle can
    reuse this container for its own representation.
    """

    def __init__(self, items: Iterable = (), n_max: Optional[int] = None):
        self._slices: Dict[int, Dict[str, object]] = {}
        self.n_max = n_max
        for item in items:
            self.add(item)

    def add(self, item) -> bool:
        """Insert ``item``; returns False if its code was already present."""
        slice_ = self._slices.setdefault(item.degree, {})
        if item.code in slice_:
            return False
        slice_[item.code] = item
        return True

    def _set_slice(self, degree: int, items: List) -> None:
        slice_ = {}
        for item in items:
            if item.code in slice_:
                raise ValueError(f"duplicate structure {item.code}")
            slice_[item.code] = item
        self._slices[degree] = slice_

    def degrees(self) -> List[int]:
        return sorted(d for d, s in self._slices.items() if s)

    def slice(self, degree: int) -> List:
        s = self._slices.get(degree, {})
        return [s[c] for c in sorted(s)]

    def codes(self, degree: Optional[int] = None) -> List[str]:
        if degree is not None:
            return sorted(self._slices.get(degree, {}))
        return [item.code for item in self]

    def counts(self) -> Dict[int, int]:
        return {d: len(self._slices[d]) for d in self.degrees()}

    def __iter__(self) -> Iterator:
        for d in self.degrees():
            yield from self.slice(d)

    def __len__(self) -> int:
        return sum(len(s) for s in self._slices.values())

    def __contains__(self, code: str) -> bool:
        return any(code in s for s in self._slices.values())

    def __getitem__(self, code: str):
        for s in self._slices.values():
            if code in s:
                return s[code]
        raise KeyError(code)

    def __repr__(self) -> str:
        return f"StructureSet({self.counts()})"


def canonical_rooted_code(s: RootedStructure) -> str:
    return s.code


# ---------------------------------------------------------------- multisets

def _size_partitions(total: int, k: int, largest: int) -> Iterator[Tuple[int, ...]]:
    """Non-increasing k-tuples of sizes in [0, largest] summing to total."""
    if k == 0:
        if total == 0:
            yield ()
        return
    for first in range(min(total, largest), -1, -1):
        if first * k < total:
            break
        for rest in _size_partitions(total - first, k - 1, first):
            yield (first,) + rest


def _multisets_exact(by_degree: Dict[int, List[RootedStructure]], k: int, total: int,
                     largest: Optional[int] = None) -> Iterator[Tuple[RootedStructure, ...]]:
    """Every k-multiset from the graded pool whose sizes sum to exactly ``total``.

    Each size partition fixes how many members come from each degree; within a
    degree the members are a combination with replacement, so no multiset can
    arise twice.  Members are returned in canonical (code) order.
    """
    if largest is None:
        largest = total
    for sizes in _size_partitions(total, k, largest):
        groups = []
        for size, mult in sorted(Counter(sizes).items()):
            pool = by_degree.get(size)
            if not pool:
                break
            groups.append(itertools.combinations_with_replacement(pool, mult))
        else:
            for combo in itertools.product(*groups):
                members = [m for group in combo for m in group]
                if len(groups) > 1:
                    members.sort(key=_body)
                yield tuple(members)


def _graded_pool(pool) -> Dict[int, List[RootedStructure]]:
    if isinstance(pool, StructureSet):
        return {d: pool.slice(d) for d in pool.degrees()}
    by_degree: Dict[int, List[RootedStructure]] = {}
    for s in sorted(pool, key=_body):
        by_degree.setdefault(s.degree, []).append(s)
    return by_degree


def k_multisets(pool, k: int, degree_budget: int) -> Iterator[Tuple[RootedStructure, ...]]:
    """All k-multisets of pool members with total heavy size at most ``degree_budget``.

    Ordered by total size, then by size profile, then lexicographically
    within each profile.
    """
    if k < 0:
        raise ValueError(k)
    by_degree = _graded_pool(pool)
    for total in range(degree_budget + 1):
        yield from _multisets_exact(by_degree, k, total)


# ---------------------------------------------------------------- generation

def _leaves(include_F: bool) -> List[RootedStructure]:
    leaves = [RootedStructure("H")]
    if include_F:
        leaves.append(RootedStructure("F"))
    return sorted(leaves, key=_body)


def grow_rooted(elements: Iterable[str], include_F: bool = False, n_max: int = 6) -> StructureSet:
    """Every radical with at most ``n_max`` heavy atoms, built degree by degree.

    A degree-n radical is a heavy root plus a multiset of branch_count
    smaller radicals whose sizes add to n - 1, mirroring one sweep of the
    radical-growth equation.
    """
    heavy, include_F = normalize_elements(elements, include_F)
    out = StructureSet(n_max=n_max)
    by_degree: Dict[int, List[RootedStructure]] = {0: _leaves(include_F)}
    out._set_slice(0, by_degree[0])
    for n in range(1, n_max + 1):
        made = []
        for e in heavy:
            for children in _multisets_exact(by_degree, BRANCHES[e], n - 1):
                made.append(RootedStructure._sorted(e, children))
        made.sort(key=_body)
        by_degree[n] = made
        out._set_slice(n, made)
    return out


def assemble_free(rooted: StructureSet, elements: Iterable[str], n_max: int,
                  expected: Optional[GradedSeries] = None) -> StructureSet:
    """Every molecule with 1..n_max heavy atoms, each once, from a radical pool.

    Node-centred candidates take a heavy centre and a valence-sized multiset of
    radicals each smaller than half the molecule; bond-centred candidates pair
    two heavy radicals of exactly half size.  When ``expected`` (the free
    counting series) is given, each degree is checked against it.
    """
    heavy, _ = normalize_elements(elements)
    by_degree = {d: rooted.slice(d) for d in rooted.degrees()}
    need = n_max // 2
    if any(d not in by_degree for d in range(need + 1)):
        raise ValueError(f"radical pool must be complete through degree {need}")
    out = StructureSet(n_max=n_max)
    for n in range(1, n_max + 1):
        made = []
        bound = (n - 1) // 2
        for e in heavy:
            for parts in _multisets_exact(by_degree, VALENCE[e], n - 1, bound):
                made.append(FreeStructure._sorted(e, parts))
        if n % 2 == 0:
            for pair in itertools.combinations_with_replacement(by_degree[n // 2], 2):
                made.append(FreeStructure._sorted(None, pair))
        made.sort(key=lambda m: m.code)
        if expected is not None:
            want = expected.coefficient(n)
            if len(made) != want:
                raise CardinalityMismatch(n, len(made), want)
        out._set_slice(n, made)
    return out


def generate_free(elements: Iterable[str], include_F: bool = False, n_max: int = 6,
                  check: bool = False) -> StructureSet:
    """Grow just enough radicals (up to n_max // 2) and assemble molecules."""
    heavy, include_F = normalize_elements(elements, include_F)
    rooted = grow_rooted(heavy, include_F, n_max // 2)
    expected = None
    if check:
        a = solve_rooted_series(heavy, include_F, n_max)
        expected = dct_unroot(a, heavy, include_F)[3]
    return assemble_free(rooted, heavy, n_max, expected)


# ---------------------------------------------------------------- orbits

def heavy_orbits(m: FreeStructure) -> Tuple[int, int, int]:
    """Heavy-atom orbits, heavy-bond orbits, and whether a bond splits the molecule into twins.

    Orbits are told apart by the code of the molecule re-rooted at each atom
    or bond.  For any tree molecule the result satisfies p - q + r = 1.
    """
    # per heavy atom: symbol, its radical (if any), the neighbour that radical
    # hangs from, padding leaves, heavy neighbours
    symbols: List[str] = []
    radical: List[Optional[RootedStructure]] = []
    hangs_from: List[int] = []
    leaves: List[List[str]] = []
    adj: List[List[int]] = []

    def add(symbol: str, rs: Optional[RootedStructure], parent: int, kids: Sequence[RootedStructure]) -> int:
        i = len(symbols)
        symbols.append(symbol)
        radical.append(rs)
        hangs_from.append(parent)
        leaves.append([k.body for k in kids if not k.is_heavy])
        adj.append([])
        if parent >= 0:
            adj[i].append(parent)
            adj[parent].append(i)
        for k in kids:
            if k.is_heavy:
                add(k.symbol, k, i, k.children)
        return i

    if m.center is None:
        a, b = m.parts
        add(a.symbol, a, -1, a.children)
        j = add(b.symbol, b, 0, b.children)
        hangs_from[0] = j
    else:
        add(m.center, None, -1, m.parts)

    memo: Dict[Tuple[int, int], str] = {}

    def code(v: int, away: int) -> str:
        """Code of the piece containing v when the bond to ``away`` is cut."""
        if away == hangs_from[v] and away >= 0:
            return radical[v].body
        key = (v, away)
        if key not in memo:
            kids = leaves[v] + [code(u, v) for u in adj[v] if u != away]
            kids.sort()
            memo[key] = symbols[v] + "(" + ",".join(kids) + ")"
        return memo[key]

    n = len(symbols)
    node_codes = {code(v, -1) for v in range(n)}
    edge_codes = set()
    twin = 0
    for v in range(n):
        for u in adj[v]:
            if u > v:
                x, y = code(v, u), code(u, v)
                if x == y:
                    twin = 1
                edge_codes.add((x, y) if x < y else (y, x))
    return len(node_codes), len(edge_codes), twin


def molecular_formula(s: Structure) -> Dict[str, int]:
    c = s.counts
    return {"C": c[_C], "H": c[_H], "F": c[_F], "N": c[_N], "O": c[_O]}


# ---------------------------------------------------------------- parsing

class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def peek(self) -> str:
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def expect(self, ch: str) -> None:
        if self.peek() != ch:
            found = repr(self.peek()) if self.peek() else "end of input"
            raise CodeSyntaxError(f"expected {ch!r}, found {found}", self.pos)
        self.pos += 1

    def node_list(self) -> Tuple[List[RootedStructure], List[int]]:
        """Parse '(' node {',' node} ')' returning the nodes and their start offsets."""
        self.expect("(")
        nodes, starts = [], []
        while True:
            starts.append(self.pos)
            nodes.append(self.node())
            if self.peek() == ",":
                self.pos += 1
                continue
            self.expect(")")
            return nodes, starts

    def node(self) -> RootedStructure:
        start = self.pos
        symbol = self.peek()
        if symbol not in _SLOT:
            found = repr(symbol) if symbol else "end of input"
            raise CodeSyntaxError(f"expected atom symbol, found {found}", start)
        self.pos += 1
        if symbol in ("H", "F"):
            if self.peek() == "(":
                raise ValenceError(f"{symbol} cannot carry branches", start)
            return RootedStructure(symbol)
        if self.peek() != "(":
            raise ValenceError(f"{symbol} needs {BRANCHES[symbol]} branches, found none", start)
        children, starts = self.node_list()
        if len(children) != BRANCHES[symbol]:
            raise ValenceError(f"{symbol} needs {BRANCHES[symbol]} branches, found {len(children)}", start)
        _check_order(children, starts)
        return RootedStructure._sorted(symbol, tuple(children))

    def finish(self) -> None:
        if self.pos != len(self.text):
            raise CodeSyntaxError(f"unexpected trailing text {self.text[self.pos:]!r}", self.pos)


def _check_order(nodes: List[RootedStructure], starts: List[int]) -> None:
    for i in range(1, len(nodes)):
        if nodes[i - 1].body > nodes[i].body:
            raise NonCanonicalError("children out of ascending code order", starts[i])


def parse_code(code: str) -> Structure:
    """Rebuild a structure from its line notation, enforcing canonical form."""
    p = _Parser(code)
    lead = p.peek()
    if lead == "*":
        p.pos += 1
        s = p.node()
        p.finish()
        return s
    if lead == "!":
        p.pos += 1
        start = p.pos
        center = p.peek()
        if center not in _SLOT:
            raise CodeSyntaxError("expected centre atom symbol", start)
        if center not in HEAVY:
            raise NonCanonicalError(f"centre atom must be heavy, got {center}", start)
        p.pos += 1
        parts, starts = p.node_list()
        p.finish()
        if len(parts) != VALENCE[center]:
            raise ValenceError(f"{center} needs {VALENCE[center]} neighbours, found {len(parts)}", start)
        _check_order(parts, starts)
        n = 1 + sum(x.heavy_size for x in parts)
        for x, at in zip(parts, starts):
            if x.heavy_size > (n - 1) // 2:
                raise NonCanonicalError(f"branch of size {x.heavy_size} exceeds centroid bound for size {n}", at)
        return FreeStructure._sorted(center, tuple(parts))
    if lead == "=":
        p.pos += 1
        parts, starts = p.node_list()
        p.finish()
        if len(parts) != 2:
            raise CodeSyntaxError(f"bond-centred code needs 2 halves, found {len(parts)}", 1)
        for x, at in zip(parts, starts):
            if not x.is_heavy:
                raise NonCanonicalError("bond-centred halves must be rooted at heavy atoms", at)
        if parts[0].heavy_size != parts[1].heavy_size:
            raise NonCanonicalError("bond-centred halves differ in size", starts[1])
        _check_order(parts, starts)
        return FreeStructure._sorted(None, tuple(parts))
    raise CodeSyntaxError("code must start with '*', '!' or '='", 0)
