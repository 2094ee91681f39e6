"""Benchmark dataset registry, local lookup and validation.

Nothing is ever downloaded.  A registered dataset is looked up in, in
order: an explicit directory, ``$BFARM_DATA_DIR``, and ``./data``.  When it
is missing the error names the canonical source so the user can fetch it.
"""
from __future__ import annotations

import bisect
import hashlib
import os
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Callable, Sequence

from .schema import (AttributeSchema, RawTable, SchemaError, load_schema_document, read_table,
                     schema_from_dict)

ENV_DATA_DIR = "BFARM_DATA_DIR"


class DatasetError(ValueError):
    pass


class DatasetNotFound(DatasetError, FileNotFoundError):
    pass


def _strip_trailing_dot(table: RawTable, column: str) -> RawTable:
    # adult.test writes labels as ">50K." ; the training file has no dot
    j = table.header.index(column)
    rows = tuple(r[:j] + (r[j].rstrip("."),) + r[j + 1:] for r in table.rows)
    return RawTable(table.header, rows)


@dataclass(frozen=True)
class DatasetInfo:
    name: str
    filename: str
    source: str
    rows: tuple[int, ...]
    columns: int
    schema: str
    decision: tuple[str, ...]
    minsup: str
    minconf: str
    # sha256 of the parsed rows (see content_digest), keyed by row count
    checksums: dict | None = None
    clean: Callable[[RawTable], RawTable] | None = None


REGISTRY: dict[str, DatasetInfo] = {d.name: d for d in (
    DatasetInfo(
        "car", "car.data",
        "https://archive.ics.uci.edu/ml/machine-learning-databases/car/car.data",
        rows=(1728,), columns=7, schema="car.yaml", decision=("class",),
        minsup="10%", minconf="75%",
        checksums={1728: "73fb39dc8dc9193047bc5f7007ff54aa9b7c2b701f293eb79695892c1abcc934"}),
    DatasetInfo(
        "mushroom", "agaricus-lepiota.data",
        "https://archive.ics.uci.edu/ml/machine-learning-databases/mushroom/agaricus-lepiota.data",
        rows=(8124,), columns=23, schema="mushroom.yaml", decision=("class",),
        minsup="35%", minconf="90%"),
    DatasetInfo(
        "adult", "adult.data",
        "https://archive.ics.uci.edu/ml/machine-learning-databases/adult/adult.data",
        rows=(32561, 48842), columns=15, schema="adult.yaml", decision=("income",),
        minsup="17%", minconf="94%",
        checksums={32561: "b43511ac80486a00e4f35d1c3d76a3cec2c89246510a76a4e455d7e45d4fb4b9"},
        clean=lambda t: _strip_trailing_dot(t, "income")),
    DatasetInfo(
        "mushroom_keel", "mushroom_keel.data",
        "https://sci2s.ugr.es/keel/dataset.php?cod=178 (KEEL mushroom: UCI rows "
        "with a missing stalk-root removed, class moved last)",
        rows=(5644,), columns=23, schema="mushroom_keel.yaml", decision=("class",),
        minsup="35%", minconf="90%",
        checksums={5644: "b6aaed876ea0897bd491ef07c95a1936a6cfc8d64564d3320edcd332bdc8d3a8"}),
)}


def bin_labels(cuts: Sequence[float]) -> list[str]:
    cuts = [_num(c) for c in cuts]
    labels = [f"<{cuts[0]}"]
    labels += [f"[{lo},{hi})" for lo, hi in zip(cuts, cuts[1:])]
    labels.append(f">={cuts[-1]}")
    return labels


def _num(x) -> str:
    f = float(x)
    return str(int(f)) if f.is_integer() else str(f)


def apply_binning(table: RawTable, binning: dict[str, Sequence[float]]) -> RawTable:
    """Replace numeric cells of the listed columns by interval labels."""
    if not binning:
        return table
    plans = {}
    for col, cuts in binning.items():
        if col not in table.header:
            raise SchemaError(f"binning refers to unknown column {col!r}")
        cuts = sorted(float(c) for c in cuts)
        plans[table.header.index(col)] = (cuts, bin_labels(cuts))
    rows = []
    for r, row in enumerate(table.rows):
        row = list(row)
        for j, (cuts, labels) in plans.items():
            try:
                x = float(row[j])
            except ValueError:
                raise SchemaError(
                    f"row {r}: {table.header[j]} value {row[j]!r} is not numeric") from None
            row[j] = labels[bisect.bisect_right(cuts, x)]
        rows.append(tuple(row))
    return RawTable(table.header, tuple(rows))


def content_digest(table: RawTable) -> str:
    text = "\n".join(",".join(r) for r in table.rows)
    return hashlib.sha256(text.encode()).hexdigest()


def schema_document(info: DatasetInfo) -> dict:
    with resources.as_file(resources.files("bfarm") / "schemas" / info.schema) as p:
        return load_schema_document(p)


def search_dirs(data_dir=None) -> list[Path]:
    dirs = []
    if data_dir is not None:
        dirs.append(Path(data_dir))
    if os.environ.get(ENV_DATA_DIR):
        dirs.append(Path(os.environ[ENV_DATA_DIR]))
    dirs.append(Path.cwd() / "data")
    return dirs


def read_registered(info: DatasetInfo, path) -> RawTable:
    doc = schema_document(info)
    names = [a["name"] for a in doc["attributes"]]
    table = read_table(path, header=names)
    if info.clean:
        table = info.clean(table)
    return table


def validate(info: DatasetInfo, path) -> RawTable:
    try:
        table = read_registered(info, path)
    except SchemaError as e:
        raise DatasetError(f"{info.name}: {e}") from None
    if len(table.header) != info.columns:
        raise DatasetError(f"{info.name}: expected {info.columns} columns, got {len(table.header)}")
    if len(table.rows) not in info.rows:
        raise DatasetError(f"{info.name}: expected {' or '.join(map(str, info.rows))} rows, "
                           f"got {len(table.rows)}")
    expected = (info.checksums or {}).get(len(table.rows))
    if expected and content_digest(table) != expected:
        raise DatasetError(f"{info.name}: content checksum mismatch for {path}")
    return table


def fetch_or_validate_dataset(name, data_dir=None) -> Path:
    """Resolve a registered dataset name, or an existing file path, to a validated local path."""
    info = REGISTRY.get(str(name))
    if info is None:
        path = Path(name)
        if not path.is_file():
            raise DatasetNotFound(f"no such file or registered dataset: {name}")
        return path
    tried = []
    for d in search_dirs(data_dir):
        p = d / info.filename
        tried.append(str(p))
        if p.is_file():
            validate(info, p)
            return p
    raise DatasetNotFound(
        f"dataset {info.name!r} is not available locally (looked for {', '.join(tried)}).\n"
        f"Canonical source: {info.source}\n"
        f"Save it as {info.filename} in one of those directories or set ${ENV_DATA_DIR}.")


@dataclass(frozen=True)
class LoadedDataset:
    info: DatasetInfo | None
    path: Path
    table: RawTable
    schema: AttributeSchema


def load_dataset(name, data_dir=None) -> LoadedDataset:
    """Validated raw table (numeric columns already binned) plus its shipped schema."""
    info = REGISTRY.get(str(name))
    if info is None:
        raise DatasetNotFound(f"{name} is not a registered dataset")
    path = fetch_or_validate_dataset(name, data_dir)
    doc = schema_document(info)
    table = apply_binning(validate(info, path), doc.get("binning") or {})
    return LoadedDataset(info, path, table, schema_from_dict(doc))
