"""Line-oriented serialization of structure catalogs and counting tables.

Catalog rows: ``code<TAB>formula<TAB>n_heavy<TAB>nC<TAB>nN<TAB>nO<TAB>nF``.
Counts rows: ``degree<TAB>coefficient`` or, per element,
``C:a N:b O:c F:d<TAB>coefficient``.  Lines starting with ``#`` are comments.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable, Iterator, List, Tuple, Union

from .series import ElementVector, GradedSeries
from .structures import StructureSet, molecular_formula

__all__ = [
    "CatalogRecord",
    "CountsTable",
    "FixtureError",
    "emit_catalog",
    "emit_counts",
    "hill_formula",
    "read_fixture",
    "table_from_series",
]

COUNTS_HEADER = "# degree\tcoefficient"
PER_ELEMENT_HEADER = "# elements\tcoefficient"

_HILL_ORDER = ("C", "H", "F", "N", "O")
_DIGITS = re.compile(r"[0-9]+\Z")
_VECTOR = re.compile(r"C:([0-9]+) N:([0-9]+) O:([0-9]+) F:([0-9]+)\Z")


class FixtureError(ValueError):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


def hill_formula(counts: dict) -> str:
    """C first, H second, the rest alphabetically; unit counts are implicit."""
    parts = []
    for symbol in _HILL_ORDER:
        n = counts.get(symbol, 0)
        if n:
            parts.append(symbol if n == 1 else f"{symbol}{n}")
    return "".join(parts)


@dataclass(frozen=True)
class CatalogRecord:
    code: str
    formula: str
    n_heavy: int
    nC: int
    nN: int
    nO: int
    nF: int

    @classmethod
    def of(cls, structure) -> "CatalogRecord":
        f = molecular_formula(structure)
        return cls(structure.code, hill_formula(f), structure.heavy_size, f["C"], f["N"], f["O"], f["F"])

    @classmethod
    def from_line(cls, line: str) -> "CatalogRecord":
        code, formula, *numbers = line.rstrip("\n").split("\t")
        if len(numbers) != 5:
            raise ValueError(f"catalog row needs 7 fields: {line!r}")
        return cls(code, formula, *map(int, numbers))

    def line(self) -> str:
        return "\t".join([self.code, self.formula, str(self.n_heavy),
                          str(self.nC), str(self.nN), str(self.nO), str(self.nF)])


def emit_catalog(structures: StructureSet, sink: IO[str]) -> int:
    """Write one record per structure ordered by (n_heavy, code); return the record count."""
    n = 0
    for s in structures:
        sink.write(CatalogRecord.of(s).line() + "\n")
        n += 1
    return n


Row = Tuple[Union[int, ElementVector], int]


@dataclass
class CountsTable:
    rows: List[Row] = field(default_factory=list)

    @property
    def per_element(self) -> bool:
        return bool(self.rows) and isinstance(self.rows[0][0], ElementVector)

    def as_dict(self) -> dict:
        return dict(self.rows)

    def __len__(self) -> int:
        return len(self.rows)

    def __iter__(self) -> Iterator[Row]:
        return iter(self.rows)


def table_from_series(series: GradedSeries, mode: str = "total") -> CountsTable:
    if mode == "total":
        return CountsTable([(d, c) for d, c in enumerate(series.collapse()) if c])
    if mode == "per-element":
        return CountsTable([(ElementVector(*k), c) for k, c in series.items()])
    raise ValueError(f"unknown counts mode {mode!r}")


def emit_counts(series: Union[GradedSeries, CountsTable], mode: str, sink: IO[str]) -> CountsTable:
    """Write a counts table; zero terms are omitted, so a zero series gives just the header."""
    table = series if isinstance(series, CountsTable) else table_from_series(series, mode)
    sink.write((PER_ELEMENT_HEADER if mode == "per-element" else COUNTS_HEADER) + "\n")
    for key, c in table:
        label = key.key() if isinstance(key, ElementVector) else str(key)
        sink.write(f"{label}\t{c}\n")
    return table


def read_fixture(path: Union[str, Path]) -> CountsTable:
    """Parse a counts file; rows must be exact decimal integers in ascending key order."""
    rows: List[Row] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            fields = line.split("\t")
            if len(fields) != 2:
                raise FixtureError(f"expected 2 tab-separated fields, got {len(fields)}", lineno)
            label, value = fields
            if not _DIGITS.match(value):
                raise FixtureError(f"coefficient {value!r} is not a decimal integer", lineno)
            if _DIGITS.match(label):
                key: Union[int, ElementVector] = int(label)
                order = (key,)
            else:
                m = _VECTOR.match(label)
                if not m:
                    raise FixtureError(f"bad row key {label!r}", lineno)
                key = ElementVector(*map(int, m.groups()))
                order = (key.total(),) + tuple(key)
            if rows:
                prev = rows[-1][0]
                if type(prev) is not type(key):
                    raise FixtureError("mixed degree and element-vector rows", lineno)
                prev_order = (prev,) if isinstance(prev, int) else (prev.total(),) + tuple(prev)
                if order <= prev_order:
                    raise FixtureError(f"row key {label!r} is not in ascending order", lineno)
            rows.append((key, int(value)))
    return CountsTable(rows)


def read_catalog(lines: Iterable[str]) -> List[CatalogRecord]:
    return [CatalogRecord.from_line(line) for line in lines if line.strip()]
