"""Quadrant count trees over single bit columns.

A column of power-of-two length is split into four contiguous quarters,
recursively.  Quarters that are all ones or all zeros stop the recursion;
mixed quarters keep their 1-bit count and four children.  A mixed block
whose size is not a multiple of four (the size-2 tail of lengths like
2048) keeps its raw bits instead.

Nodes double as purity masks (pure-1 / pure-0 / mixed), which is what the
AND algebra dispatches on.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Sequence, Union

import numpy as np


class StructureError(ValueError):
    pass


@dataclass(frozen=True, slots=True)
class Pure0:
    size: int

    @property
    def count(self) -> int:
        return 0

    @property
    def nodes(self) -> int:
        return 1


@dataclass(frozen=True, slots=True)
class Pure1:
    size: int

    @property
    def count(self) -> int:
        return self.size

    @property
    def nodes(self) -> int:
        return 1


@dataclass(frozen=True, slots=True)
class RawLeaf:
    size: int
    bits: int  # bit i is position i of the block

    @property
    def count(self) -> int:
        return self.bits.bit_count()

    @property
    def nodes(self) -> int:
        return 1


@dataclass(frozen=True, slots=True)
class Mixed:
    size: int
    count: int
    children: tuple
    nodes: int = field(default=0, compare=False)


PNode = Union[Pure0, Pure1, RawLeaf, Mixed]


def _mixed(size: int, count: int, children: tuple) -> Mixed:
    return Mixed(size, count, children, 1 + sum(c.nodes for c in children))


def _leaf(size: int, bits: int) -> PNode:
    if bits == 0:
        return Pure0(size)
    if bits == (1 << size) - 1:
        return Pure1(size)
    return RawLeaf(size, bits)


@dataclass(frozen=True)
class PTree:
    length: int
    root: PNode

    @property
    def root_count(self) -> int:
        return self.root.count

    @property
    def node_count(self) -> int:
        return self.root.nodes

    def __and__(self, other: "PTree") -> "PTree":
        return ptree_and(self, other)


def _check_length(n: int):
    if n < 4 or n & (n - 1):
        raise StructureError(f"column length must be a power of two >= 4, got {n}")


def build(bits: Sequence[int] | np.ndarray) -> PTree:
    arr = np.asarray(bits, dtype=np.uint8).ravel()
    n = len(arr)
    _check_length(n)
    prefix = [0]
    prefix.extend(np.cumsum(arr, dtype=np.int64).tolist())

    def node(start: int, size: int) -> PNode:
        c = prefix[start + size] - prefix[start]
        if c == 0:
            return Pure0(size)
        if c == size:
            return Pure1(size)
        if size % 4:
            packed = 0
            for i in range(size):
                if arr[start + i]:
                    packed |= 1 << i
            return RawLeaf(size, packed)
        q = size // 4
        return _mixed(size, c, (node(start, q), node(start + q, q),
                                node(start + 2 * q, q), node(start + 3 * q, q)))

    return PTree(n, node(0, n))


def root_count(t: PTree) -> int:
    return t.root.count


def to_bits(t: PTree) -> np.ndarray:
    out = np.zeros(t.length, dtype=np.uint8)

    def fill(n: PNode, start: int):
        if type(n) is Pure1:
            out[start:start + n.size] = 1
        elif type(n) is RawLeaf:
            for i in range(n.size):
                out[start + i] = (n.bits >> i) & 1
        elif type(n) is Mixed:
            q = n.size // 4
            for k, child in enumerate(n.children):
                fill(child, start + k * q)

    fill(t.root, 0)
    return out


def _and(a: PNode, b: PNode) -> PNode:
    ta, tb = type(a), type(b)
    if ta is Pure0:
        return a
    if tb is Pure0:
        return b
    if ta is Pure1:
        return b
    if tb is Pure1:
        return a
    if ta is RawLeaf:
        return _leaf(a.size, a.bits & b.bits)
    kids = tuple(map(_and, a.children, b.children))
    c = kids[0].count + kids[1].count + kids[2].count + kids[3].count
    if c == 0:
        return Pure0(a.size)
    if c == a.size:
        return Pure1(a.size)
    return _mixed(a.size, c, kids)


def ptree_and(a: PTree, b: PTree) -> PTree:
    if a.length != b.length:
        raise StructureError(f"cannot AND trees of length {a.length} and {b.length}")
    return PTree(a.length, _and(a.root, b.root))


def and_many(trees: Sequence[PTree]) -> PTree:
    if not trees:
        raise ValueError("and_many needs at least one tree")
    acc = trees[0]
    for t in trees[1:]:
        acc = ptree_and(acc, t)
    return acc


def iter_preorder(t: PTree) -> Iterator[PNode]:
    stack = [t.root]
    while stack:
        n = stack.pop()
        yield n
        if type(n) is Mixed:
            stack.extend(reversed(n.children))


def is_canonical(t: PTree) -> bool:
    """Check every structural invariant of a tree; used by tests and the reader."""
    def ok(n: PNode, size: int) -> bool:
        if n.size != size:
            return False
        if type(n) in (Pure0, Pure1):
            return True
        if type(n) is RawLeaf:
            return size % 4 != 0 and 0 < n.bits < (1 << size) - 1
        if size % 4 or len(n.children) != 4:
            return False
        if not 1 <= n.count <= size - 1 or n.count != sum(c.count for c in n.children):
            return False
        return all(ok(c, size // 4) for c in n.children)

    return ok(t.root, t.length)
