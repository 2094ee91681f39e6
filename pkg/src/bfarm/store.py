"""Binary persistence of quadrant count trees.

File layout (all integers little-endian)::

    header  (48 bytes)
      magic        4s   b"PTRE"
      version      u16
      reserved     u16  (zero)
      padded_len   u64
      n_rows       u64
      root_count   u64
      item_index   u64
      body_len     u64
    body    pre-order node stream
      tag u8: 0 pure-0 | 1 pure-1 | 2 mixed | 3 raw leaf
      mixed    -> u32 one-bit count, then its four children
      raw leaf -> u8 size, u8 packed bits (bit i = position i)

Node sizes follow from the depth and ``padded_len`` and are not stored.
The root count sits in the header, so support checks on single items never
decode a body.

A stored database is a directory of such files (one per item) plus
``manifest.json``.
"""
from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .ptree import Mixed, PNode, PTree, Pure0, Pure1, RawLeaf, is_canonical
from .schema import Item, ItemCatalog, Role

MAGIC = b"PTRE"
VERSION = 1
HEADER = struct.Struct("<4sHHQQQQQ")
HEADER_SIZE = HEADER.size
MANIFEST = "manifest.json"

TAG_PURE0, TAG_PURE1, TAG_MIXED, TAG_LEAF = 0, 1, 2, 3
_U32 = struct.Struct("<I")


class StoreError(ValueError):
    pass


class FormatError(StoreError):
    """Bad magic, unsupported version, or an input too short for a header."""


class CorruptionError(StoreError):
    """The body is truncated or structurally malformed."""


class IntegrityError(StoreError):
    """Counts recorded in the file disagree with the decoded tree."""


@dataclass(frozen=True)
class PtreeFileHeader:
    version: int
    padded_len: int
    n_rows: int
    root_count: int
    item_index: int
    body_len: int


def _encode(root: PNode, out: bytearray):
    stack = [root]
    while stack:
        n = stack.pop()
        t = type(n)
        if t is Pure0:
            out.append(TAG_PURE0)
        elif t is Pure1:
            out.append(TAG_PURE1)
        elif t is Mixed:
            out.append(TAG_MIXED)
            out += _U32.pack(n.count)
            stack.extend(reversed(n.children))
        else:
            out += bytes((TAG_LEAF, n.size, n.bits))


def write(t: PTree, n_rows: int, item_index: int) -> bytes:
    L = t.length
    if L < 16 or L & (L - 1):
        raise StoreError(f"padded length {L} is not a power of two >= 16")
    if not t.root_count <= n_rows <= L:
        raise StoreError(f"need root_count <= n_rows <= length, got "
                         f"{t.root_count}, {n_rows}, {L}")
    if item_index < 0:
        raise StoreError("item_index must be non-negative")
    if not is_canonical(t):
        raise StoreError("refusing to serialize a non-canonical tree")
    body = bytearray()
    _encode(t.root, body)
    return HEADER.pack(MAGIC, VERSION, 0, L, n_rows, t.root_count, item_index, len(body)) + body


def read_header(data: bytes) -> PtreeFileHeader:
    if len(data) < HEADER_SIZE:
        raise FormatError(f"need {HEADER_SIZE} header bytes, got {len(data)}")
    magic, version, _, L, n_rows, rc, item, body_len = HEADER.unpack_from(data)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}")
    if version != VERSION:
        raise FormatError(f"unsupported version {version}")
    if L < 16 or L & (L - 1) or n_rows > L or rc > n_rows:
        raise FormatError(f"inconsistent header: len={L} rows={n_rows} root_count={rc}")
    return PtreeFileHeader(version, L, n_rows, rc, item, body_len)


def peek_root_count(data: bytes) -> int:
    return read_header(data[:HEADER_SIZE]).root_count


def _decode(body: bytes, length: int) -> PNode:
    pos = 0

    def take(n: int) -> bytes:
        nonlocal pos
        if pos + n > len(body):
            raise CorruptionError("body ends early")
        chunk = body[pos:pos + n]
        pos += n
        return chunk

    def node(size: int) -> PNode:
        tag = take(1)[0]
        if tag == TAG_PURE0:
            return Pure0(size)
        if tag == TAG_PURE1:
            return Pure1(size)
        if tag == TAG_MIXED:
            if size % 4:
                raise CorruptionError(f"mixed node of size {size}")
            (count,) = _U32.unpack(take(4))
            q = size // 4
            kids = (node(q), node(q), node(q), node(q))
            if count != sum(k.count for k in kids):
                raise IntegrityError(f"mixed node count {count} != sum of children")
            return Mixed(size, count, kids, 1 + sum(k.nodes for k in kids))
        if tag == TAG_LEAF:
            leaf_size, bits = take(2)
            if leaf_size != size:
                raise CorruptionError(f"leaf size {leaf_size} where {size} expected")
            return RawLeaf(size, bits)
        raise CorruptionError(f"unknown node tag {tag}")

    root = node(length)
    if pos != len(body):
        raise CorruptionError(f"{len(body) - pos} trailing bytes after tree")
    return root


def read(data: bytes) -> tuple[PTree, int, int]:
    h = read_header(data)
    body = data[HEADER_SIZE:]
    if len(body) < h.body_len:
        raise CorruptionError(f"body truncated: {len(body)} of {h.body_len} bytes")
    if len(body) > h.body_len:
        raise CorruptionError(f"{len(body) - h.body_len} bytes beyond declared body")
    t = PTree(h.padded_len, _decode(body, h.padded_len))
    if t.root_count != h.root_count:
        raise IntegrityError(f"header root count {h.root_count} != decoded {t.root_count}")
    if not is_canonical(t):
        raise IntegrityError("decoded tree is not canonical")
    return t, h.n_rows, h.item_index


# -- directory stores -------------------------------------------------------

def item_filename(index: int) -> str:
    return f"item_{index:05d}.ptree"


def write_store(directory, trees: Sequence[PTree], catalog: ItemCatalog, n_rows: int) -> Path:
    directory = Path(directory)
    if len(trees) != len(catalog):
        raise StoreError("one tree per catalog item is required")
    try:
        directory.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise StoreError(f"cannot use {directory} as a store: {e}") from None
    lengths = {t.length for t in trees}
    if len(lengths) > 1:
        raise StoreError("trees have different lengths")
    entries = []
    for item, t in zip(catalog, trees):
        name = item_filename(item.index)
        (directory / name).write_bytes(write(t, n_rows, item.index))
        entries.append({
            "index": item.index, "attribute": item.attribute, "value": item.value,
            "role": item.role.value, "binary": item.binary,
            "filename": name, "root_count": t.root_count,
        })
    manifest = {
        "format": "ptree-store", "version": VERSION,
        "n_rows": n_rows, "padded_len": lengths.pop() if lengths else 16,
        "items": entries,
    }
    (directory / MANIFEST).write_text(json.dumps(manifest, indent=2) + "\n")
    return directory


class StoredTrees(Sequence):
    """Trees of a directory store, decoded on first access.

    ``root_counts`` comes from the manifest and the file headers, so a
    caller that only needs single-item supports never decodes a body.
    """

    def __init__(self, directory):
        self.directory = Path(directory)
        try:
            manifest = json.loads((self.directory / MANIFEST).read_text())
        except FileNotFoundError:
            raise FormatError(f"{self.directory}: no {MANIFEST}") from None
        except json.JSONDecodeError as e:
            raise FormatError(f"{self.directory}: unreadable manifest ({e})") from None
        self.n_rows = int(manifest["n_rows"])
        self.padded_len = int(manifest["padded_len"])
        self.catalog = ItemCatalog(tuple(
            Item(int(e["index"]), e["attribute"], e["value"], Role(e["role"]), bool(e.get("binary")))
            for e in manifest["items"]))
        self._files = [self.directory / e["filename"] for e in manifest["items"]]
        self.root_counts = []
        for e, path in zip(manifest["items"], self._files):
            with open(path, "rb") as fh:
                h = read_header(fh.read(HEADER_SIZE))
            if h.root_count != e["root_count"] or h.item_index != e["index"]:
                raise IntegrityError(f"{path.name}: header disagrees with manifest")
            self.root_counts.append(h.root_count)
        self._cache: dict[int, PTree] = {}
        self.decoded = 0

    def __len__(self):
        return len(self._files)

    def __getitem__(self, i):
        if isinstance(i, slice):
            return [self[j] for j in range(*i.indices(len(self)))]
        t = self._cache.get(i)
        if t is None:
            t, n_rows, item = read(self._files[i].read_bytes())
            if n_rows != self.n_rows or item != i:
                raise IntegrityError(f"{self._files[i].name}: header disagrees with manifest")
            self._cache[i] = t
            self.decoded += 1
        return t


def load_store(directory) -> StoredTrees:
    return StoredTrees(directory)
