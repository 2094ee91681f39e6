"""Attribute schemas and the relational-table to bitmap-table transformation.

Every (attribute, value) pair that can appear in a rule becomes one *item*
with its own bit column.  A binary attribute contributes a single item (its
positive value); a categorical attribute is one-hot encoded.
"""
from __future__ import annotations

import csv
import enum
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import yaml

DEFAULT_POSITIVE_TOKENS = ("yes", "1", "true")
MIN_PADDED_LEN = 16


class SchemaError(ValueError):
    """A schema violates its own invariants or does not fit the table."""


class StructuralError(SchemaError):
    """Ragged rows, arity mismatches and similar shape problems."""


class EmptyInputError(SchemaError):
    pass


class UnknownValueError(SchemaError):
    def __init__(self, attribute: str, value: str, row: int):
        super().__init__(f"row {row}: value {value!r} is not declared for attribute {attribute!r}")
        self.attribute = attribute
        self.value = value
        self.row = row


class Role(enum.Enum):
    CONDITION = "condition"
    DECISION = "decision"


@dataclass(frozen=True)
class Binary:
    positive: str


@dataclass(frozen=True)
class Categorical:
    values: tuple[str, ...]

    def __post_init__(self):
        if not self.values:
            raise SchemaError("categorical value list is empty")
        if len(set(self.values)) != len(self.values):
            raise SchemaError(f"duplicate categorical values in {self.values!r}")


@dataclass(frozen=True)
class AttributeSpec:
    name: str
    kind: Binary | Categorical
    role: Role = Role.CONDITION

    def items(self) -> tuple[str, ...]:
        if isinstance(self.kind, Binary):
            return (self.kind.positive,)
        return self.kind.values


@dataclass(frozen=True)
class AttributeSchema:
    attributes: tuple[AttributeSpec, ...]

    def __post_init__(self):
        names = [a.name for a in self.attributes]
        if len(set(names)) != len(names):
            raise SchemaError(f"attribute names are not unique: {names}")
        if not any(a.role is Role.CONDITION for a in self.attributes):
            raise SchemaError("schema needs at least one condition attribute")

    @property
    def names(self) -> list[str]:
        return [a.name for a in self.attributes]

    def __getitem__(self, name: str) -> AttributeSpec:
        for a in self.attributes:
            if a.name == name:
                return a
        raise KeyError(name)

    def with_decisions(self, decisions: Iterable[str]) -> "AttributeSchema":
        """Copy of the schema with exactly ``decisions`` in the decision role."""
        decisions = list(decisions)
        unknown = [d for d in decisions if d not in self.names]
        if unknown:
            raise SchemaError(f"unknown decision attribute(s): {', '.join(unknown)}")
        wanted = set(decisions)
        return AttributeSchema(tuple(
            AttributeSpec(a.name, a.kind, Role.DECISION if a.name in wanted else Role.CONDITION)
            for a in self.attributes))


@dataclass(frozen=True)
class Item:
    index: int
    attribute: str
    value: str
    role: Role
    binary: bool = False

    @property
    def label(self) -> str:
        # A binary item is just "the attribute holds", e.g. ``G``.
        return self.attribute if self.binary else f"{self.attribute}={self.value}"


@dataclass(frozen=True)
class ItemCatalog:
    items: tuple[Item, ...]

    def __post_init__(self):
        if [it.index for it in self.items] != list(range(len(self.items))):
            raise SchemaError("item indices must be contiguous from 0")

    @classmethod
    def from_schema(cls, schema: AttributeSchema) -> "ItemCatalog":
        items = []
        for attr in schema.attributes:
            binary = isinstance(attr.kind, Binary)
            for value in attr.items():
                items.append(Item(len(items), attr.name, value, attr.role, binary))
        return cls(tuple(items))

    def __len__(self):
        return len(self.items)

    def __iter__(self):
        return iter(self.items)

    def __getitem__(self, index: int) -> Item:
        return self.items[index]

    def labels(self, indices: Iterable[int]) -> list[str]:
        return [self.items[i].label for i in indices]

    def lookup(self, attribute: str, value: str) -> int | None:
        for it in self.items:
            if it.attribute == attribute and it.value == value:
                return it.index
        return None

    def decision_items(self) -> frozenset[int]:
        return frozenset(it.index for it in self.items if it.role is Role.DECISION)

    def items_of(self, attributes: Iterable[str]) -> frozenset[int]:
        wanted = set(attributes)
        return frozenset(it.index for it in self.items if it.attribute in wanted)


@dataclass(frozen=True)
class RawTable:
    header: tuple[str, ...]
    rows: tuple[tuple[str, ...], ...]

    def __post_init__(self):
        for r, row in enumerate(self.rows):
            if len(row) != len(self.header):
                raise StructuralError(
                    f"row {r} has {len(row)} cells, header has {len(self.header)}")

    def __len__(self):
        return len(self.rows)

    def column(self, name: str) -> list[str]:
        j = self.header.index(name)
        return [row[j] for row in self.rows]


@dataclass(eq=False)
class BitmapTable:
    """Per-item bit columns of length ``padded_len``.

    Reads through :meth:`column` and :meth:`row` are tallied in ``reads`` so
    callers can verify that a mining pass never touched the table.
    """

    n_rows: int
    padded_len: int
    _bits: np.ndarray = field(repr=False)
    reads: int = 0

    def __post_init__(self):
        self._bits.setflags(write=False)
        L = self.padded_len
        if L < max(self.n_rows, MIN_PADDED_LEN) or L & (L - 1):
            raise StructuralError(f"bad padded length {L} for {self.n_rows} rows")
        if self._bits.shape[1] != self.padded_len:
            raise StructuralError("column length differs from padded length")
        if self._bits[:, self.n_rows:].any():
            raise StructuralError("padding rows must be zero")

    @property
    def n_items(self) -> int:
        return self._bits.shape[0]

    def column(self, item: int) -> np.ndarray:
        self.reads += 1
        return self._bits[item]

    def row(self, r: int) -> np.ndarray:
        self.reads += 1
        return self._bits[:, r]

    def popcounts(self) -> list[int]:
        self.reads += 1
        return [int(c) for c in self._bits.sum(axis=1)]

    def reset_reads(self):
        self.reads = 0


def pad_length(n_rows: int) -> int:
    """Smallest power of two that holds ``n_rows``, but never below 16."""
    if n_rows < 1:
        raise ValueError("n_rows must be >= 1")
    return max(MIN_PADDED_LEN, 1 << (n_rows - 1).bit_length())


def read_table(path, delimiter: str = ",", header: Sequence[str] | None = None,
               strip: bool = True) -> RawTable:
    """Read delimited text.  With ``header`` given the file is headerless.

    Blank lines are skipped.
    """
    with open(path, newline="") as fh:
        lines = [r for r in csv.reader(fh, delimiter=delimiter) if any(c.strip() for c in r)]
    if strip:
        lines = [[c.strip() for c in r] for r in lines]
    if header is None:
        if not lines:
            raise EmptyInputError(f"{path}: no header")
        header, lines = lines[0], lines[1:]
    if not lines:
        raise EmptyInputError(f"{path}: table has no rows")
    for r, row in enumerate(lines):
        if len(row) != len(header):
            raise StructuralError(f"{path}: row {r} has {len(row)} cells, header has {len(header)}")
    return RawTable(tuple(header), tuple(tuple(r) for r in lines))


def infer_schema(table: RawTable, positive_tokens: Iterable[str] = DEFAULT_POSITIVE_TOKENS
                 ) -> AttributeSchema:
    if not table.header or not table.rows:
        raise EmptyInputError("cannot infer a schema from an empty table")
    tokens = {t.lower() for t in positive_tokens}
    attrs = []
    for j, name in enumerate(table.header):
        values = list(dict.fromkeys(row[j] for row in table.rows))
        positive = [v for v in values if v.lower() in tokens]
        if len(values) == 2 and len(positive) == 1:
            kind = Binary(positive[0])
        else:
            kind = Categorical(tuple(values))
        attrs.append(AttributeSpec(name, kind))
    return AttributeSchema(tuple(attrs))


def discretize(table: RawTable, schema: AttributeSchema) -> tuple[BitmapTable, ItemCatalog]:
    if list(table.header) != schema.names:
        raise StructuralError(
            f"schema attributes {schema.names} do not match table header {list(table.header)}")
    n_rows = len(table.rows)
    if n_rows == 0:
        raise EmptyInputError("table has no rows")
    catalog = ItemCatalog.from_schema(schema)
    bits = np.zeros((len(catalog), pad_length(n_rows)), dtype=np.uint8)

    base = 0
    for j, attr in enumerate(schema.attributes):
        cells = [row[j] for row in table.rows]
        if isinstance(attr.kind, Binary):
            bits[base, :n_rows] = [c == attr.kind.positive for c in cells]
        else:
            slot = {v: k for k, v in enumerate(attr.kind.values)}
            for r, c in enumerate(cells):
                k = slot.get(c)
                if k is None:
                    raise UnknownValueError(attr.name, c, r)
                bits[base + k, r] = 1
        base += len(attr.items())
    return BitmapTable(n_rows, bits.shape[1], bits), catalog


def decode_row(bitmap: BitmapTable, catalog: ItemCatalog, schema: AttributeSchema, r: int
               ) -> list[str | None]:
    """Inverse of :func:`discretize` for one row.

    A binary attribute whose bit is clear decodes to ``None``: the
    non-positive value has no item of its own.
    """
    bits = bitmap.row(r)
    out: list[str | None] = []
    base = 0
    for attr in schema.attributes:
        n = len(attr.items())
        hits = [k for k in range(n) if bits[base + k]]
        if isinstance(attr.kind, Binary):
            out.append(attr.kind.positive if hits else None)
        else:
            if len(hits) != 1:
                raise StructuralError(f"row {r}: attribute {attr.name} is not one-hot")
            out.append(attr.kind.values[hits[0]])
        base += n
    return out


# -- schema files -----------------------------------------------------------

def schema_from_dict(doc: dict) -> AttributeSchema:
    try:
        entries = doc["attributes"]
    except (KeyError, TypeError):
        raise SchemaError("schema document needs an 'attributes' list") from None
    attrs = []
    for e in entries:
        name = str(e["name"])
        kind_name = str(e.get("kind", "categorical")).lower()
        if kind_name == "binary":
            kind = Binary(str(e["positive"]))
        elif kind_name == "categorical":
            kind = Categorical(tuple(str(v) for v in e["values"]))
        else:
            raise SchemaError(f"attribute {name}: unknown kind {kind_name!r}")
        role = Role(str(e.get("role", "condition")).lower())
        attrs.append(AttributeSpec(name, kind, role))
    return AttributeSchema(tuple(attrs))


def schema_to_dict(schema: AttributeSchema) -> dict:
    out = []
    for a in schema.attributes:
        e = {"name": a.name}
        if isinstance(a.kind, Binary):
            e.update(kind="binary", positive=a.kind.positive)
        else:
            e.update(kind="categorical", values=list(a.kind.values))
        e["role"] = a.role.value
        out.append(e)
    return {"attributes": out}


def load_schema_document(path) -> dict:
    """Parse a YAML (or JSON) schema file into a plain dict."""
    doc = yaml.safe_load(Path(path).read_text())
    if not isinstance(doc, dict):
        raise SchemaError(f"{path}: not a mapping")
    return doc


def load_schema(path) -> AttributeSchema:
    return schema_from_dict(load_schema_document(path))
