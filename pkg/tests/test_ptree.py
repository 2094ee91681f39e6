import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bfarm.ptree import (Mixed, PTree, Pure0, Pure1, RawLeaf, StructureError, and_many, build,
                         is_canonical, iter_preorder, ptree_and, root_count, to_bits)

LENGTHS = [4, 8, 16, 32, 64, 128, 256, 512, 1024]


@st.composite
def columns(draw, length=None):
    n = length or draw(st.sampled_from(LENGTHS))
    # runs make pure quadrants likely, raw bits make mixed ones likely
    if draw(st.booleans()):
        return np.array(draw(st.lists(st.integers(0, 1), min_size=n, max_size=n)), dtype=np.uint8)
    out = np.zeros(n, dtype=np.uint8)
    cuts = sorted(draw(st.lists(st.integers(0, n), max_size=6)))
    bit = draw(st.integers(0, 1))
    prev = 0
    for c in cuts + [n]:
        out[prev:c] = bit
        prev, bit = c, 1 - bit
    return out


@st.composite
def column_pairs(draw):
    n = draw(st.sampled_from(LENGTHS))
    return draw(columns(n)), draw(columns(n))


def test_all_zero_and_all_one():
    assert build(np.zeros(16, dtype=np.uint8)).root == Pure0(16)
    assert build(np.ones(64, dtype=np.uint8)).root == Pure1(64)


def test_small_example():
    # 1100 0000 1111 0101, quarters of 4
    bits = [1, 1, 0, 0, 0, 0, 0, 0, 1, 1, 1, 1, 0, 1, 0, 1]
    t = build(bits)
    assert t.root_count == 8
    assert isinstance(t.root, Mixed)
    q0, q1, q2, q3 = t.root.children
    assert q1 == Pure0(4) and q2 == Pure1(4)
    assert q0.count == 2 and q3.count == 2
    # a quarter of 4 splits into four single bits
    assert q0.children == (Pure1(1), Pure1(1), Pure0(1), Pure0(1))


def test_raw_leaf_for_size_two():
    # 32 -> 8 -> 2: blocks of two bits cannot be quartered
    bits = np.zeros(32, dtype=np.uint8)
    bits[0] = 1
    t = build(bits)
    first = t.root.children[0]
    assert first.size == 8 and first.children[0] == RawLeaf(2, 0b01)
    assert first.children[1:] == (Pure0(2),) * 3
    bits[1] = 1
    assert build(bits).root.children[0].children[0] == Pure1(2)
    assert np.array_equal(to_bits(t), np.eye(1, 32, dtype=np.uint8)[0])


def test_length_checks():
    for n in (0, 2, 3, 12, 100):
        with pytest.raises(StructureError):
            build(np.zeros(n, dtype=np.uint8))
    with pytest.raises(StructureError):
        ptree_and(build(np.zeros(16)), build(np.zeros(64)))
    with pytest.raises(ValueError):
        and_many([])


def test_and_operator_and_identity():
    x = build([1, 0, 1, 1] * 4)
    ones = build(np.ones(16))
    zeros = build(np.zeros(16))
    assert (x & ones) == x
    assert (x & zeros) == zeros
    assert and_many([x]) == x


@settings(max_examples=300, deadline=None)
@given(columns())
def test_lossless(bits):
    t = build(bits)
    assert np.array_equal(to_bits(t), bits)
    assert root_count(t) == int(bits.sum())
    assert is_canonical(t)
    assert t.node_count == sum(1 for _ in iter_preorder(t))


@settings(max_examples=300, deadline=None)
@given(column_pairs())
def test_and_matches_bitwise(pair):
    x, y = pair
    c = ptree_and(build(x), build(y))
    assert np.array_equal(to_bits(c), x & y)
    assert c.root_count == int((x & y).sum())
    assert c == build(x & y)
    assert is_canonical(c)


@settings(max_examples=200, deadline=None)
@given(column_pairs(), st.data())
def test_and_algebra(pair, data):
    x, y = pair
    z = data.draw(columns(len(x)))
    a, b, c = build(x), build(y), build(z)
    assert ptree_and(a, b) == ptree_and(b, a)
    assert ptree_and(ptree_and(a, b), c) == ptree_and(a, ptree_and(b, c))
    assert ptree_and(a, a) == a
    assert and_many([a, b, c]) == build(x & y & z)


def test_non_canonical_detected():
    # a mixed node whose children are all pure-1 should have been collapsed
    bad = PTree(16, Mixed(16, 16, (Pure1(4),) * 4, 5))
    assert not is_canonical(bad)
    wrong_count = PTree(16, Mixed(16, 3, (Pure1(4), Pure0(4), Pure0(4), Pure0(4)), 5))
    assert not is_canonical(wrong_count)


def test_equality_ignores_node_tally():
    a = Mixed(16, 4, (Pure1(4), Pure0(4), Pure0(4), Pure0(4)), 5)
    b = Mixed(16, 4, (Pure1(4), Pure0(4), Pure0(4), Pure0(4)), 0)
    assert a == b
