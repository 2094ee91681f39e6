from collections import Counter
from pathlib import Path

import pytest

from bfarm import datasets
from bfarm.miner import bf_arm, trees_from_bitmap
from bfarm.model import MiningConfig
from bfarm.oracle import reference_mine, transactions
from bfarm.schema import RawTable, SchemaError, discretize

DATA = Path(__file__).resolve().parents[1] / "data"


def need(name):
    info = datasets.REGISTRY[name]
    if not (DATA / info.filename).is_file():
        pytest.fail(f"{info.filename} is not in {DATA}")
    return info


def test_registry():
    assert set(datasets.REGISTRY) >= {"car", "mushroom", "adult"}
    car = datasets.REGISTRY["car"]
    assert car.rows == (1728,) and car.columns == 7
    assert (car.minsup, car.minconf) == ("10%", "75%")
    assert datasets.REGISTRY["mushroom"].rows == (8124,)
    assert set(datasets.REGISTRY["adult"].rows) == {32561, 48842}


def test_car_loads():
    need("car")
    car = datasets.load_dataset("car", DATA)
    bitmap, catalog = discretize(car.table, car.schema)
    assert bitmap.n_rows == 1728 and len(catalog) == 25 and bitmap.padded_len == 2048
    assert [it.attribute for it in catalog if it.index in catalog.decision_items()] == ["class"] * 4
    assert Counter(car.table.column("class")) == {"unacc": 1210, "acc": 384, "good": 69,
                                                  "vgood": 65}


def test_adult_schema():
    need("adult")
    adult = datasets.load_dataset("adult", DATA)
    bitmap, catalog = discretize(adult.table, adult.schema)
    assert bitmap.n_rows == 32561 and bitmap.padded_len == 32768
    assert len(catalog) == 125
    assert catalog.lookup("workclass", "?") is not None
    assert {it.value for it in catalog if it.attribute == "income"} == {"<=50K", ">50K"}
    ages = {it.value for it in catalog if it.attribute == "age"}
    assert all(v.startswith(("<", "[", ">=")) for v in ages)


def test_missing_dataset_names_source(tmp_path, monkeypatch):
    monkeypatch.delenv(datasets.ENV_DATA_DIR, raising=False)
    monkeypatch.chdir(tmp_path)
    with pytest.raises(datasets.DatasetNotFound) as e:
        datasets.fetch_or_validate_dataset("mushroom", tmp_path)
    assert "agaricus-lepiota.data" in str(e.value)
    assert datasets.REGISTRY["mushroom"].source in str(e.value)


def test_env_dir(tmp_path, monkeypatch):
    need("car")
    (tmp_path / "car.data").write_bytes((DATA / "car.data").read_bytes())
    monkeypatch.setenv(datasets.ENV_DATA_DIR, str(tmp_path))
    monkeypatch.chdir(tmp_path.parent)
    assert datasets.fetch_or_validate_dataset("car") == tmp_path / "car.data"


def test_truncated_mushroom(tmp_path):
    need("mushroom_keel")
    # the keel rows with the class moved to the front look like the UCI file
    lines = (DATA / "mushroom_keel.data").read_text().splitlines()[:500]
    moved = [",".join([c.split(",")[-1]] + c.split(",")[:-1]) for c in lines]
    (tmp_path / "agaricus-lepiota.data").write_text("\n".join(moved) + "\n")
    with pytest.raises(datasets.DatasetError, match="rows"):
        datasets.fetch_or_validate_dataset("mushroom", tmp_path)


def test_wrong_arity(tmp_path):
    (tmp_path / "car.data").write_text("a,b,c\n" * 1728)
    with pytest.raises(datasets.DatasetError):
        datasets.fetch_or_validate_dataset("car", tmp_path)


def test_checksum_mismatch(tmp_path):
    need("car")
    text = (DATA / "car.data").read_text().replace("vhigh", "high", 1)
    (tmp_path / "car.data").write_text(text)
    with pytest.raises(datasets.DatasetError, match="checksum"):
        datasets.fetch_or_validate_dataset("car", tmp_path)


def test_user_path(tmp_path):
    p = tmp_path / "t.csv"
    p.write_text("x,y\n1,2\n")
    assert datasets.fetch_or_validate_dataset(str(p)) == p
    with pytest.raises(datasets.DatasetNotFound):
        datasets.fetch_or_validate_dataset(str(tmp_path / "nope.csv"))


def test_bin_labels_and_binning():
    assert datasets.bin_labels([10, 20.5]) == ["<10", "[10,20.5)", ">=20.5"]
    table = RawTable(("age", "x"), (("5", "a"), ("10", "b"), ("30", "c")))
    binned = datasets.apply_binning(table, {"age": [20, 10]})
    assert binned.column("age") == ["<10", "[10,20)", ">=20"]
    assert binned.column("x") == ["a", "b", "c"]
    with pytest.raises(SchemaError):
        datasets.apply_binning(table, {"nope": [1]})
    with pytest.raises(SchemaError):
        datasets.apply_binning(RawTable(("age",), (("?",),)), {"age": [1]})


def test_trailing_dot_in_labels():
    table = RawTable(("a", "income"), (("x", ">50K."), ("y", "<=50K")))
    cleaned = datasets.REGISTRY["adult"].clean(table)
    assert cleaned.column("income") == [">50K", "<=50K"]


def test_mushroom_keel_variant_agrees():
    # the canonical mushroom file is not shipped; its keel subset exercises the same schema
    need("mushroom_keel")
    ds = datasets.load_dataset("mushroom_keel", DATA)
    bitmap, catalog = discretize(ds.table, ds.schema)
    trees = trees_from_bitmap(bitmap)
    rows = transactions(ds.table, catalog)
    config = MiningConfig("35%", "90%", "fixed", catalog.decision_items())
    result = bf_arm(trees, bitmap.n_rows, config)
    counts, rules = reference_mine(rows, config)
    assert result.counts() == counts
    assert [(r.key, r.count, r.antecedent_count) for r in result.rules] == \
        [(r.key, r.count, r.antecedent_count) for r in rules]
    assert len(rules) > 0
