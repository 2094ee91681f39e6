import json
import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from _instances import table3
from bfarm import store
from bfarm.miner import trees_from_bitmap
from bfarm.ptree import Mixed, PTree, Pure0, Pure1, build
from bfarm.schema import discretize


def _tree(seed=0, length=64, density=0.4):
    rng = np.random.default_rng(seed)
    return build((rng.random(length) < density).astype(np.uint8))


def test_header_layout():
    t = build([1, 1, 0, 0] * 4)
    data = store.write(t, 16, 3)
    assert data[:4] == b"PTRE"
    h = store.read_header(data)
    assert (h.version, h.padded_len, h.n_rows, h.root_count, h.item_index) == (1, 16, 16, 8, 3)
    assert h.body_len == len(data) - store.HEADER_SIZE
    assert store.peek_root_count(data) == 8


def test_body_encoding():
    # root mixed(count 4) over pure1, pure0, pure0, pure0
    t = PTree(16, Mixed(16, 4, (Pure1(4), Pure0(4), Pure0(4), Pure0(4)), 5))
    body = store.write(t, 8, 0)[store.HEADER_SIZE:]
    assert body == bytes([2]) + struct.pack("<I", 4) + bytes([1, 0, 0, 0])


def test_raw_leaf_encoding():
    bits = np.zeros(32, dtype=np.uint8)
    bits[0] = 1
    data = store.write(build(bits), 20, 0)
    assert bytes([3, 2, 1]) in data[store.HEADER_SIZE:]
    assert store.read(data)[0] == build(bits)


@settings(max_examples=200, deadline=None)
@given(st.sampled_from([16, 32, 64, 128, 256]), st.integers(0, 2**32 - 1), st.floats(0, 1))
def test_round_trip(length, seed, density):
    t = _tree(seed, length, density)
    data = store.write(t, length, 7)
    back, n_rows, item = store.read(data)
    assert back == t and n_rows == length and item == 7
    assert store.write(back, length, 7) == data


def test_write_refuses_bad_input():
    t = _tree()
    with pytest.raises(store.StoreError):
        store.write(t, t.root_count - 1, 0)
    with pytest.raises(store.StoreError):
        store.write(t, 65, 0)
    with pytest.raises(store.StoreError):
        store.write(build([1, 0, 1, 0, 0, 0, 0, 0]), 8, 0)  # length below 16
    with pytest.raises(store.StoreError):
        store.write(t, 64, -1)
    bad = PTree(16, Mixed(16, 16, (Pure1(4),) * 4, 5))
    with pytest.raises(store.StoreError):
        store.write(bad, 16, 0)


def test_format_errors():
    data = store.write(_tree(), 64, 0)
    with pytest.raises(store.FormatError):
        store.read(data[:10])
    with pytest.raises(store.FormatError):
        store.read(b"XXXX" + data[4:])
    with pytest.raises(store.FormatError):
        store.read(data[:4] + struct.pack("<H", 9) + data[6:])


def test_corruption_errors():
    data = store.write(_tree(), 64, 0)
    with pytest.raises(store.CorruptionError):
        store.read(data[:-1])
    with pytest.raises(store.CorruptionError):
        store.read(data + b"\0")
    # unknown tag in the first body byte
    with pytest.raises(store.CorruptionError):
        store.read(data[:store.HEADER_SIZE] + b"\x09" + data[store.HEADER_SIZE + 1:])


def test_integrity_errors():
    t = _tree()
    data = bytearray(store.write(t, 64, 0))
    # header root count (offset 4+2+2+8+8 = 24)
    struct.pack_into("<Q", data, 24, t.root_count - 1)
    with pytest.raises(store.IntegrityError):
        store.read(bytes(data))
    data = bytearray(store.write(t, 64, 0))
    # the root mixed node's count follows its tag
    struct.pack_into("<I", data, store.HEADER_SIZE + 1, t.root_count + 1)
    with pytest.raises(store.IntegrityError):
        store.read(bytes(data))


def test_directory_store(tmp_path):
    table, schema = table3()
    bitmap, catalog = discretize(table, schema)
    trees = trees_from_bitmap(bitmap)
    store.write_store(tmp_path, trees, catalog, bitmap.n_rows)
    manifest = json.loads((tmp_path / store.MANIFEST).read_text())
    assert manifest["n_rows"] == 8 and manifest["padded_len"] == 16
    assert [e["root_count"] for e in manifest["items"]] == [2, 6, 1, 5, 5, 3, 4]

    loaded = store.load_store(tmp_path)
    assert loaded.root_counts == [2, 6, 1, 5, 5, 3, 4]
    assert loaded.decoded == 0
    assert loaded.catalog == catalog
    assert list(loaded) == trees
    assert loaded.decoded == 7
    assert loaded[1:3] == trees[1:3]


def test_directory_store_tamper(tmp_path):
    table, schema = table3()
    bitmap, catalog = discretize(table, schema)
    store.write_store(tmp_path, trees_from_bitmap(bitmap), catalog, 8)
    manifest = json.loads((tmp_path / store.MANIFEST).read_text())
    manifest["items"][0]["root_count"] = 5
    (tmp_path / store.MANIFEST).write_text(json.dumps(manifest))
    with pytest.raises(store.IntegrityError):
        store.load_store(tmp_path)


def test_missing_store(tmp_path):
    with pytest.raises(store.FormatError):
        store.load_store(tmp_path)
    (tmp_path / store.MANIFEST).write_text("{not json")
    with pytest.raises(store.FormatError):
        store.load_store(tmp_path)


def test_store_size_mismatch(tmp_path):
    table, schema = table3()
    bitmap, catalog = discretize(table, schema)
    with pytest.raises(store.StoreError):
        store.write_store(tmp_path, trees_from_bitmap(bitmap)[:3], catalog, 8)
