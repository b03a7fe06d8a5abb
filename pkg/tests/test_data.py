import numpy as np
import pytest

from gmtree import (
    DataFormatError,
    DataSet,
    SchemaSpec,
    decode_categories,
    kfold_indices,
    load_csv,
    load_schema,
    make_subset,
)
from gmtree.data import FoldPlan, encode_row

from conftest import FIVEPOINT_X, FIVEPOINT_Y


MIXED_SCHEMA = {
    "columns": [
        {"name": "amount", "role": "numeric"},
        {"name": "kind", "role": "categorical", "categories": ["car", "house", "dream"]},
        {"name": "label", "role": "target", "classes": ["0", "1"]},
    ]
}

MIXED_ROWS = "4,car,0\n0,house,1\n3,house,1\n1,dream,0\n2,car,0\n"


@pytest.fixture
def mixed_csv(tmp_path):
    data = tmp_path / "mixed.csv"
    data.write_text(MIXED_ROWS)
    schema = tmp_path / "mixed.schema.json"
    import json

    schema.write_text(json.dumps(MIXED_SCHEMA))
    return data, schema


def test_dummy_encoding_golden(mixed_csv):
    data, schema_path = mixed_csv
    ds = load_csv(data, load_schema(schema_path))
    expected = np.array(
        [
            [4, 1, 0, 0],
            [0, 0, 1, 0],
            [3, 0, 1, 0],
            [1, 0, 0, 1],
            [2, 1, 0, 0],
        ],
        dtype=float,
    )
    assert np.array_equal(ds.features, expected)
    assert np.array_equal(ds.outcomes, [0, 1, 1, 0, 0])
    assert ds.d == 4 and ds.C == 2
    assert ds.feature_names == ("amount", "kind=car", "kind=house", "kind=dream")


def test_encoding_round_trip(mixed_csv):
    data, schema_path = mixed_csv
    schema = load_schema(schema_path)
    ds = load_csv(data, schema)
    decoded = decode_categories(ds.features, schema)
    assert decoded["kind"] == ["car", "house", "house", "dream", "car"]


def test_fivepoint_load(tmp_path):
    csv_path = tmp_path / "fivepoint.csv"
    csv_path.write_text("0,0\n0.5,0\n1.25,0\n1.5,1\n1.75,1\n")
    schema = SchemaSpec.from_dict(
        {
            "columns": [
                {"name": "x", "role": "numeric"},
                {"name": "label", "role": "target", "classes": ["0", "1"]},
            ]
        }
    )
    ds = load_csv(csv_path, schema)
    assert (ds.n, ds.d, ds.C) == (5, 1, 2)
    # already sorted ascending, so the sorted order is the identity
    assert np.array_equal(ds.sorted_indices[0], np.arange(5))


def test_sorted_indices_match_independent_sort():
    rng = np.random.default_rng(0)
    for _ in range(30):
        n, d = int(rng.integers(1, 40)), int(rng.integers(1, 5))
        X = rng.integers(0, 5, size=(n, d)).astype(float)  # plenty of ties
        y = rng.integers(0, 2, size=n)
        if len(np.unique(y)) < 2:
            continue
        ds = DataSet(X, y)
        for r in range(d):
            idx = ds.sorted_indices[r]
            # sorted by value...
            assert np.all(np.diff(X[idx, r]) >= 0)
            # ...stable: ties keep original row order, so the permutation is
            # exactly what lexsort on (row index, value) produces
            oracle = np.lexsort((np.arange(n), X[:, r]))
            assert np.array_equal(idx, oracle)


def test_subset_members_example(fivepoint_dataset):
    view = make_subset(fivepoint_dataset, fivepoint_dataset.features[:, 0] <= 1.375)
    assert list(view.rows) == [0, 1, 2]
    assert view.n == 3


def test_subset_all_and_none(fivepoint_dataset):
    every = make_subset(fivepoint_dataset, np.ones(5, dtype=bool))
    assert np.array_equal(every.rows, np.arange(5))
    assert np.array_equal(every.sorted_rows, fivepoint_dataset.sorted_indices)
    empty = make_subset(fivepoint_dataset, np.zeros(5, dtype=bool))
    assert empty.n == 0


def test_subset_predicate_callable(fivepoint_dataset):
    view = make_subset(fivepoint_dataset, lambda row: row[0] > 1.0)
    assert list(view.rows) == [2, 3, 4]


def test_stable_filter_property():
    rng = np.random.default_rng(1)
    for _ in range(20):
        n, d = int(rng.integers(3, 50)), int(rng.integers(1, 4))
        X = rng.integers(0, 6, size=(n, d)).astype(float)
        y = rng.integers(0, 3, size=n)
        y[:2] = [0, 1]
        ds = DataSet(X, y, n_classes=3)
        mask = rng.random(n) < 0.5
        view = make_subset(ds, mask)
        for r in range(d):
            parent_order = ds.sorted_indices[r]
            expected = parent_order[mask[parent_order]]
            assert np.array_equal(view.sorted_rows[r], expected)
        # nested restriction preserves the property relative to the child
        mask2 = rng.random(n) < 0.7
        sub = make_subset(view, mask2)
        for r in range(d):
            parent_order = view.sorted_rows[r]
            assert np.array_equal(sub.sorted_rows[r], parent_order[mask2[parent_order]])


def test_unknown_category_reported(tmp_path, mixed_csv):
    _, schema_path = mixed_csv
    bad = tmp_path / "bad.csv"
    bad.write_text("4,car,0\n1,boat,1\n")
    with pytest.raises(DataFormatError, match=r"row 2.*'kind'.*boat"):
        load_csv(bad, load_schema(schema_path))


def test_parse_failure_reports_row_and_column(tmp_path, mixed_csv):
    _, schema_path = mixed_csv
    bad = tmp_path / "bad.csv"
    bad.write_text("4,car,0\nnope,car,1\n")
    with pytest.raises(DataFormatError, match=r"row 2.*'amount'"):
        load_csv(bad, load_schema(schema_path))


def test_missing_value_rejected(tmp_path, mixed_csv):
    _, schema_path = mixed_csv
    bad = tmp_path / "bad.csv"
    bad.write_text("4,car,0\n,car,1\n")
    with pytest.raises(DataFormatError, match="row 2"):
        load_csv(bad, load_schema(schema_path))


def test_empty_file_rejected(tmp_path, mixed_csv):
    _, schema_path = mixed_csv
    empty = tmp_path / "empty.csv"
    empty.write_text("")
    with pytest.raises(DataFormatError, match="empty"):
        load_csv(empty, load_schema(schema_path))


def test_unknown_class_label(tmp_path, mixed_csv):
    _, schema_path = mixed_csv
    bad = tmp_path / "bad.csv"
    bad.write_text("4,car,2\n")
    with pytest.raises(DataFormatError, match="class label"):
        load_csv(bad, load_schema(schema_path))


def test_encode_row_without_target():
    schema = SchemaSpec.from_dict(MIXED_SCHEMA)
    encoded, outcome = encode_row(["4", "car"], schema, require_target=False)
    assert encoded == [4.0, 1.0, 0.0, 0.0] and outcome is None
    with pytest.raises(DataFormatError, match="expected 3 fields"):
        encode_row(["4", "car"], schema, require_target=True)


def test_schema_validation():
    with pytest.raises(DataFormatError, match="exactly one target"):
        SchemaSpec.from_dict({"columns": [{"name": "x", "role": "numeric"}]})
    with pytest.raises(DataFormatError, match="duplicate categories"):
        SchemaSpec.from_dict(
            {
                "columns": [
                    {"name": "k", "role": "categorical", "categories": ["a", "a"]},
                    {"name": "y", "role": "target", "classes": ["0", "1"]},
                ]
            }
        )
    with pytest.raises(DataFormatError, match="two class labels"):
        SchemaSpec.from_dict(
            {
                "columns": [
                    {"name": "x", "role": "numeric"},
                    {"name": "y", "role": "target", "classes": ["0"]},
                ]
            }
        )


def test_schema_digest_tracks_content():
    a = SchemaSpec.from_dict(MIXED_SCHEMA)
    b = SchemaSpec.from_dict(MIXED_SCHEMA)
    assert a.digest() == b.digest()
    altered = dict(MIXED_SCHEMA)
    altered["columns"] = [
        {"name": "amount", "role": "numeric"},
        {"name": "kind", "role": "categorical", "categories": ["car", "house", "boat"]},
        {"name": "label", "role": "target", "classes": ["0", "1"]},
    ]
    assert SchemaSpec.from_dict(altered).digest() != a.digest()


def test_dataset_validation():
    with pytest.raises(DataFormatError):
        DataSet(np.empty((0, 2)), np.empty(0, dtype=int))
    with pytest.raises(DataFormatError, match="length"):
        DataSet(FIVEPOINT_X, FIVEPOINT_Y[:-1])
    with pytest.raises(DataFormatError, match="non-finite"):
        DataSet(np.array([[np.nan]]), np.array([0]))
    with pytest.raises(DataFormatError, match="two classes"):
        DataSet(np.array([[1.0], [2.0]]), np.array([0, 0]))
    ds = DataSet(FIVEPOINT_X, FIVEPOINT_Y)
    with pytest.raises(ValueError):
        ds.features[0, 0] = 9.0  # arrays are frozen


def test_kfold_singleton_folds():
    plan = kfold_indices(10, 10, seed=3)
    assert np.array_equal(np.sort(plan.sizes()), np.ones(10, dtype=int))


def test_kfold_balanced_sizes():
    plan = kfold_indices(306, 10, seed=0)
    sizes = np.sort(plan.sizes())
    assert list(sizes) == [30, 30, 30, 30, 31, 31, 31, 31, 31, 31]


def test_kfold_deterministic_and_seed_sensitive():
    a = kfold_indices(100, 5, seed=42)
    b = kfold_indices(100, 5, seed=42)
    c = kfold_indices(100, 5, seed=43)
    assert np.array_equal(a.assignment, b.assignment)
    assert not np.array_equal(a.assignment, c.assignment)


def test_kfold_coverage_and_disjointness():
    plan = kfold_indices(57, 7, seed=1)
    seen = np.concatenate([plan.test_rows(f) for f in range(7)])
    assert np.array_equal(np.sort(seen), np.arange(57))


def test_kfold_bounds():
    with pytest.raises(DataFormatError):
        kfold_indices(5, 6, seed=0)
    with pytest.raises(DataFormatError):
        kfold_indices(5, 1, seed=0)


def test_foldplan_text_round_trip():
    plan = kfold_indices(23, 4, seed=9)
    restored = FoldPlan.from_text(plan.to_text(), k=4, seed=9)
    assert np.array_equal(plan.assignment, restored.assignment)
