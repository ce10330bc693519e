"""Exact truncated power series and the counting side of the tree equations.

Coefficients are Python ints, so nothing overflows and every division is
checked for a zero remainder.  Chemical series are graded by
:class:`ElementVector`; the univariate counts quoted in the literature are
the collapse of those vectors by total heavy-atom count.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Dict, Iterable, Iterator, List, Mapping, NamedTuple, Tuple

__all__ = [
    "BRANCHES",
    "VALENCE",
    "CycleIndex",
    "DivisibilityError",
    "ElementVector",
    "GradedSeries",
    "NegativeCoefficient",
    "SeriesMismatch",
    "add",
    "apply_cycle_index",
    "cycle_index",
    "dct_unroot",
    "mul",
    "normalize_elements",
    "otter_unroot",
    "plethysm_power",
    "rooted_step",
    "rooted_trees_series",
    "solve_rooted_series",
]

# Branches grown by a non-root atom (one bond is used by the stem).
BRANCHES = {"C": 3, "N": 2, "O": 1, "F": 0, "H": 0}
VALENCE = {"C": 4, "N": 3, "O": 2, "F": 1, "H": 1}

HEAVY = ("C", "N", "O")
_AXIS = {"C": 0, "N": 1, "O": 2, "F": 3}

# C, N and O are graded; F is tracked but carries no size, like H.
ELEMENT_WEIGHTS = (1, 1, 1, 0)


class DivisibilityError(ArithmeticError):
    """An exact division left a remainder."""


class NegativeCoefficient(ArithmeticError):
    """A series that counts a set ended up with a negative coefficient."""


class SeriesMismatch(ValueError):
    """Two series with different truncation bounds or gradings were combined."""


class ElementVector(NamedTuple):
    nC: int = 0
    nN: int = 0
    nO: int = 0
    nF: int = 0

    def total(self) -> int:
        """Heavy-atom count; fluorine is padding and does not add size."""
        return self.nC + self.nN + self.nO

    def key(self) -> str:
        return f"C:{self.nC} N:{self.nN} O:{self.nO} F:{self.nF}"

    @classmethod
    def unit(cls, symbol: str) -> "ElementVector":
        v = [0, 0, 0, 0]
        v[_AXIS[symbol]] = 1
        return cls(*v)


Key = Tuple[int, ...]


class GradedSeries:
    """Immutable truncated power series with nonnegative integer coefficients.

    Keys are exponent tuples; the degree of a key is its dot product with
    ``weights``.  Terms of degree above ``n_max`` are never stored.
    """

    __slots__ = ("n_max", "weights", "_terms")

    def __init__(self, terms: Mapping[Key, int], n_max: int,
                 weights: Tuple[int, ...] = ELEMENT_WEIGHTS):
        self.n_max = n_max
        self.weights = tuple(weights)
        clean = {}
        for k, c in terms.items():
            k = tuple(k)
            if len(k) != len(self.weights):
                raise SeriesMismatch(f"key {k} has wrong arity for weights {self.weights}")
            if c < 0:
                raise NegativeCoefficient(f"coefficient {c} at {k}")
            if c and self.degree(k) <= n_max:
                clean[k] = c
        self._terms: Dict[Key, int] = clean

    # construction helpers

    @classmethod
    def zero(cls, n_max: int, weights: Tuple[int, ...] = ELEMENT_WEIGHTS) -> "GradedSeries":
        return cls({}, n_max, weights)

    @classmethod
    def one(cls, n_max: int, weights: Tuple[int, ...] = ELEMENT_WEIGHTS) -> "GradedSeries":
        return cls({(0,) * len(weights): 1}, n_max, weights)

    @classmethod
    def univariate(cls, coefficients: Iterable[int], n_max: int | None = None) -> "GradedSeries":
        """Build a one-variable series from a coefficient list, index = degree."""
        coefficients = list(coefficients)
        if n_max is None:
            n_max = max(len(coefficients) - 1, 0)
        return cls({(d,): c for d, c in enumerate(coefficients)}, n_max, (1,))

    @classmethod
    def _trusted(cls, terms: Dict[Key, int], n_max: int, weights: Tuple[int, ...]) -> "GradedSeries":
        s = object.__new__(cls)
        s.n_max = n_max
        s.weights = weights
        s._terms = terms
        return s

    # inspection

    def degree(self, key: Iterable[int]) -> int:
        return sum(w * e for w, e in zip(self.weights, key))

    def __getitem__(self, key: Iterable[int]) -> int:
        return self._terms.get(tuple(key), 0)

    def items(self) -> Iterator[Tuple[Key, int]]:
        """Terms ordered by (degree, key)."""
        for k in sorted(self._terms, key=lambda k: (self.degree(k), k)):
            yield k, self._terms[k]

    def __len__(self) -> int:
        return len(self._terms)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, GradedSeries):
            return NotImplemented
        return (self.n_max, self.weights, self._terms) == (other.n_max, other.weights, other._terms)

    def __hash__(self) -> int:
        return hash((self.n_max, self.weights, frozenset(self._terms.items())))

    def __repr__(self) -> str:
        shown = ", ".join(str(c) for c in self.collapse()[:8])
        return f"GradedSeries(n_max={self.n_max}, by_degree=[{shown}{', ...' if self.n_max >= 8 else ''}])"

    def collapse(self) -> List[int]:
        """Univariate view: coefficient per total degree 0..n_max."""
        out = [0] * (self.n_max + 1)
        for k, c in self._terms.items():
            out[self.degree(k)] += c
        return out

    def coefficient(self, degree: int) -> int:
        return sum(c for k, c in self._terms.items() if self.degree(k) == degree)

    def slice(self, degree: int) -> Dict[Key, int]:
        return {k: c for k, c in self._terms.items() if self.degree(k) == degree}

    def _buckets(self) -> List[List[Tuple[Key, int]]]:
        out: List[List[Tuple[Key, int]]] = [[] for _ in range(self.n_max + 1)]
        for k, c in self._terms.items():
            out[self.degree(k)].append((k, c))
        return out

    def _check(self, other: "GradedSeries") -> None:
        if self.n_max != other.n_max:
            raise SeriesMismatch(f"truncation bounds differ: {self.n_max} vs {other.n_max}")
        if self.weights != other.weights:
            raise SeriesMismatch(f"gradings differ: {self.weights} vs {other.weights}")

    # arithmetic

    def __add__(self, other: "GradedSeries") -> "GradedSeries":
        return add(self, other)

    def __mul__(self, other: "GradedSeries") -> "GradedSeries":
        return mul(self, other)

    def __sub__(self, other: "GradedSeries") -> "GradedSeries":
        """Difference; raises NegativeCoefficient if any term would go below zero."""
        self._check(other)
        terms = dict(self._terms)
        for k, c in other._terms.items():
            v = terms.get(k, 0) - c
            if v < 0:
                raise NegativeCoefficient(f"subtraction went negative at {k}: {v}")
            if v:
                terms[k] = v
            else:
                terms.pop(k, None)
        return GradedSeries._trusted(terms, self.n_max, self.weights)

    def scale(self, factor: int) -> "GradedSeries":
        if factor < 0:
            raise NegativeCoefficient(f"negative scale {factor}")
        if factor == 0:
            return GradedSeries.zero(self.n_max, self.weights)
        return GradedSeries._trusted({k: c * factor for k, c in self._terms.items()},
                                     self.n_max, self.weights)

    def shift(self, key: Iterable[int]) -> "GradedSeries":
        """Multiply by the monomial with exponent ``key``."""
        key = tuple(key)
        terms = {}
        for k, c in self._terms.items():
            nk = tuple(a + b for a, b in zip(k, key))
            if self.degree(nk) <= self.n_max:
                terms[nk] = c
        return GradedSeries._trusted(terms, self.n_max, self.weights)

    def exact_div(self, divisor: int) -> "GradedSeries":
        terms = {}
        for k, c in self._terms.items():
            q, r = divmod(c, divisor)
            if r:
                raise DivisibilityError(f"coefficient {c} at {k} is not divisible by {divisor}")
            terms[k] = q
        return GradedSeries._trusted(terms, self.n_max, self.weights)

    def truncate(self, n_max: int) -> "GradedSeries":
        return GradedSeries(self._terms, n_max, self.weights)


def add(a: GradedSeries, b: GradedSeries) -> GradedSeries:
    a._check(b)
    terms = dict(a._terms)
    for k, c in b._terms.items():
        terms[k] = terms.get(k, 0) + c
    return GradedSeries._trusted(terms, a.n_max, a.weights)


def mul(a: GradedSeries, b: GradedSeries) -> GradedSeries:
    """Truncated Cauchy product."""
    a._check(b)
    n_max = a.n_max
    ba, bb = a._buckets(), b._buckets()
    terms: Dict[Key, int] = defaultdict(int)
    for da in range(n_max + 1):
        left = ba[da]
        if not left:
            continue
        for db in range(n_max - da + 1):
            right = bb[db]
            for ka, ca in left:
                for kb, cb in right:
                    terms[tuple(map(int.__add__, ka, kb))] += ca * cb
    return GradedSeries._trusted(dict(terms), n_max, a.weights)


def plethysm_power(a: GradedSeries, k: int) -> GradedSeries:
    """Substitute every variable by its k-th power."""
    if k < 1:
        raise ValueError(f"plethysm power must be positive, got {k}")
    if k == 1:
        return a
    terms = {}
    for key, c in a._terms.items():
        nk = tuple(k * e for e in key)
        if a.degree(nk) <= a.n_max:
            terms[nk] = c
    return GradedSeries._trusted(terms, a.n_max, a.weights)


@dataclass(frozen=True)
class CycleIndex:
    """Cycle index of the symmetric group S_k as integer-weighted cycle types.

    Each term is ``(coefficient, cycle_lengths)``; the polynomial is the sum
    of the terms divided by ``k!``.
    """

    order: int
    terms: Tuple[Tuple[int, Tuple[int, ...]], ...]

    @property
    def divisor(self) -> int:
        return math.factorial(self.order)


def _partitions(n: int, largest: int | None = None) -> Iterator[Tuple[int, ...]]:
    if n == 0:
        yield ()
        return
    if largest is None or largest > n:
        largest = n
    for first in range(largest, 0, -1):
        for rest in _partitions(n - first, first):
            yield (first,) + rest


def cycle_index(k: int) -> CycleIndex:
    """Z(S_k); a permutation of cycle type with m_j j-cycles occurs k!/prod(j^m_j m_j!) times."""
    if k < 0:
        raise ValueError(k)
    terms = []
    # ascending order puts the identity first, matching the usual way of writing Z(S_k)
    for parts in sorted(_partitions(k), key=lambda p: (len(p), p), reverse=True):
        denom = 1
        for j in set(parts):
            m = parts.count(j)
            denom *= j ** m * math.factorial(m)
        terms.append((math.factorial(k) // denom, tuple(sorted(parts))))
    return CycleIndex(k, tuple(terms))


def apply_cycle_index(z: CycleIndex, a: GradedSeries) -> GradedSeries:
    """Count unordered k-multisets drawn from ``a`` (Polya substitution)."""
    powers: Dict[int, GradedSeries] = {}
    total = GradedSeries.zero(a.n_max, a.weights)
    for coeff, parts in z.terms:
        term = GradedSeries.one(a.n_max, a.weights)
        for length in parts:
            if length not in powers:
                powers[length] = plethysm_power(a, length)
            term = mul(term, powers[length])
        total = add(total, term.scale(coeff))
    return total.exact_div(z.divisor)


def normalize_elements(elements: Iterable[str], include_F: bool = False) -> Tuple[Tuple[str, ...], bool]:
    """Split an element selection into sorted heavy symbols and the fluorine flag."""
    elements = set(elements)
    unknown = elements - {"C", "N", "O", "F"}
    if unknown:
        raise ValueError(f"unsupported elements: {sorted(unknown)}")
    if not elements:
        raise ValueError("element set is empty")
    heavy = tuple(e for e in HEAVY if e in elements)
    return heavy, include_F or "F" in elements


def _leaf(n_max: int, include_F: bool) -> GradedSeries:
    terms = {ElementVector(): 1}
    if include_F:
        terms[ElementVector.unit("F")] = 1
    return GradedSeries(terms, n_max)


def rooted_step(a: GradedSeries, elements: Iterable[str], include_F: bool = False) -> GradedSeries:
    """One application of the radical-growth map a -> leaf + sum_e e * Z(S_branch(e); a)."""
    heavy, include_F = normalize_elements(elements, include_F)
    out = _leaf(a.n_max, include_F)
    for e in heavy:
        grown = apply_cycle_index(cycle_index(BRANCHES[e]), a)
        out = add(out, grown.shift(ElementVector.unit(e)))
    return out


def solve_rooted_series(elements: Iterable[str], include_F: bool = False, n_max: int = 10) -> GradedSeries:
    """Radical counting series, solved by iterating from the leaf seed to a fixed point.

    Iteration n settles every term of degree n, so sweep n only needs to be
    carried out to degree n.  A final full-precision sweep must then change
    nothing.
    """
    heavy, include_F = normalize_elements(elements, include_F)
    a = _leaf(n_max, include_F)
    for t in range(1, n_max + 1):
        a = rooted_step(a.truncate(t), heavy, include_F)
    a = a.truncate(n_max)
    if rooted_step(a, heavy, include_F) != a:
        raise RuntimeError("radical series is not a fixed point of the growth map")
    return a


def rooted_trees_series(n_max: int) -> GradedSeries:
    """Unlabeled rooted trees by node count, via the Euler transform f = x MSET(f).

    f_{n+1} = (1/n) sum_{k=1..n} (sum_{d|k} d f_d) f_{n-k+1}
    """
    if n_max < 1:
        raise ValueError("n_max must be at least 1")
    f = [0] * (n_max + 1)
    f[1] = 1
    for n in range(1, n_max):
        acc = 0
        for k in range(1, n + 1):
            s = sum(d * f[d] for d in range(1, k + 1) if k % d == 0)
            acc += s * f[n - k + 1]
        q, r = divmod(acc, n)
        if r:
            raise DivisibilityError(f"Euler transform remainder {r} at n={n + 1}")
        f[n + 1] = q
    return GradedSeries.univariate(f, n_max)


def _signed(terms: Dict[Key, int], other: GradedSeries, sign: int) -> None:
    for k, c in other._terms.items():
        terms[k] = terms.get(k, 0) + sign * c


def otter_unroot(f: GradedSeries) -> GradedSeries:
    """Free trees from rooted trees: F = f - (f^2 - f(x^2)) / 2."""
    terms: Dict[Key, int] = {}
    _signed(terms, f, 2)
    _signed(terms, mul(f, f), -1)
    _signed(terms, plethysm_power(f, 2), 1)
    out = {}
    for k, c in terms.items():
        q, r = divmod(c, 2)
        if r:
            raise DivisibilityError(f"unrooting left remainder at {k}")
        if q < 0:
            raise NegativeCoefficient(f"free tree count {q} at {k}")
        if q:
            out[k] = q
    return GradedSeries._trusted(out, f.n_max, f.weights)


def dct_unroot(a: GradedSeries, elements: Iterable[str], include_F: bool = False
               ) -> Tuple[GradedSeries, GradedSeries, GradedSeries, GradedSeries]:
    """Free-molecule series by the dissimilarity characteristic theorem.

    Returns ``(p, q, r, phi)``: molecules with one marked heavy atom, with one
    marked heavy-heavy bond, with a marked bond joining identical halves, and
    the unmarked molecules ``phi = p - q + r``.
    """
    heavy, include_F = normalize_elements(elements, include_F)
    p = GradedSeries.zero(a.n_max, a.weights)
    for e in heavy:
        p = add(p, apply_cycle_index(cycle_index(VALENCE[e]), a).shift(ElementVector.unit(e)))
    radicals = a - _leaf(a.n_max, include_F)
    q = apply_cycle_index(cycle_index(2), radicals)
    r = plethysm_power(radicals, 2)
    try:
        phi = (p + r) - q
    except NegativeCoefficient as exc:
        raise NegativeCoefficient(f"free-molecule series went negative: {exc}") from None
    return p, q, r, phi
