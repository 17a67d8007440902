import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from logunfold.dataset import (
    BinaryDataset,
    PredictorSet,
    compress_profiles,
    load_csv,
    profile_label,
)
from logunfold.errors import DataError


def test_load_csv_small(tmp_path):
    path = tmp_path / "r.csv"
    path.write_text("a,b\n1,0\n0,1\n1,1\n")
    ds = load_csv(path, "responses")
    assert ds.I == 3 and ds.R == 2
    assert np.array_equal(ds.n, [1, 1, 1])
    assert ds.item_labels == ["a", "b"]
    assert np.array_equal(ds.Y, [[1, 0], [0, 1], [1, 1]])


def test_load_csv_rejects_non_binary(tmp_path):
    path = tmp_path / "r.csv"
    path.write_text("a,b\n1,0\n0,2\n")
    with pytest.raises(DataError, match=r"row 3.*column 'b'"):
        load_csv(path, "responses")


def test_load_csv_rejects_ragged(tmp_path):
    path = tmp_path / "r.csv"
    path.write_text("a,b\n1,0\n1\n")
    with pytest.raises(DataError, match="ragged row 3"):
        load_csv(path, "responses")


def test_load_csv_frequency_column(tmp_path):
    path = tmp_path / "r.csv"
    path.write_text("a,b,n\n1,0,5\n0,1,2\n")
    ds = load_csv(path, "responses")
    assert ds.I == 2 and ds.R == 2
    assert np.array_equal(ds.n, [5, 2])
    assert ds.total_count == 7
    assert ds.item_labels == ["a", "b"]


def test_load_csv_predictors(tmp_path):
    path = tmp_path / "x.csv"
    path.write_text("u,v\n1.5,-2\n0,3.25\n")
    ps = load_csv(path, "predictors")
    assert ps.n_obs == 2 and ps.P == 2
    assert np.allclose(ps.X, [[1.5, -2.0], [0.0, 3.25]])
    assert np.array_equal(ps.centering, [0.0, 0.0])


def test_load_csv_predictor_parse_error(tmp_path):
    path = tmp_path / "x.csv"
    path.write_text("u,v\n1.5,oops\n")
    with pytest.raises(DataError, match=r"row 2, column 'v'"):
        load_csv(path, "predictors")


def test_compress_counts():
    ds = compress_profiles([[1, 0], [1, 0], [0, 1]])
    got = {label: count for label, count in zip(ds.profile_labels, ds.n)}
    assert got == {"10": 2, "01": 1}


def test_compress_drop_all_zero():
    rows = [[0, 0], [1, 0], [0, 0], [1, 1]]
    ds, inverse = compress_profiles(rows, drop_all_zero=True, return_inverse=True)
    assert ds.total_count == 2
    assert not ds.has_all_zero_profile()
    assert inverse[0] == -1 and inverse[2] == -1
    assert ds.profile_labels[inverse[1]] == "10"
    assert ds.profile_labels[inverse[3]] == "11"


def test_compress_unique_rows_keep_unit_weights():
    rows = [[1, 0], [0, 1], [1, 1]]
    ds = compress_profiles(rows, drop_all_zero=False)
    assert np.array_equal(ds.n, [1, 1, 1])


def test_compress_all_zero_with_drop_errors():
    with pytest.raises(DataError):
        compress_profiles([[0, 0], [0, 0]], drop_all_zero=True)
    with pytest.raises(DataError):
        compress_profiles(np.empty((0, 3)))


@given(
    st.lists(
        st.lists(st.integers(0, 1), min_size=3, max_size=3),
        min_size=1,
        max_size=30,
    )
)
@settings(max_examples=60, deadline=None)
def test_compress_expand_roundtrip(rows):
    ds = compress_profiles(rows)
    expanded = ds.expand()
    original = sorted(tuple(r) for r in rows)
    recovered = sorted(tuple(int(v) for v in r) for r in expanded)
    assert original == recovered


@given(
    st.lists(
        st.lists(st.integers(0, 1), min_size=2, max_size=2),
        min_size=1,
        max_size=20,
    )
)
@settings(max_examples=60, deadline=None)
def test_compress_idempotent(rows):
    once = compress_profiles(rows)
    twice = compress_profiles(once.expand())
    assert np.array_equal(once.Y, twice.Y)
    assert np.array_equal(once.n, twice.n)


def test_dataset_validation():
    with pytest.raises(DataError, match="non-binary"):
        BinaryDataset(Y=[[1, 2]], n=[1])
    with pytest.raises(DataError, match="positive integers"):
        BinaryDataset(Y=[[1, 0]], n=[0])
    with pytest.raises(DataError, match="length"):
        BinaryDataset(Y=[[1, 0]], n=[1, 1])


def test_signed_responses():
    ds = BinaryDataset(Y=[[1, 0]], n=[3])
    assert np.array_equal(ds.q, [[1.0, -1.0]])


def test_dataset_json_roundtrip():
    ds = compress_profiles([[1, 0], [1, 0], [0, 1]])
    back = BinaryDataset.from_json(ds.to_json())
    assert np.array_equal(back.Y, ds.Y)
    assert np.array_equal(back.n, ds.n)
    assert back.item_labels == ds.item_labels
    assert back.profile_labels == ds.profile_labels
    parsed = json.loads(ds.to_json())
    assert set(parsed) == {"Y", "n", "item_labels", "profile_labels"}


def test_predictor_centering_accumulates():
    ps = PredictorSet(X=[[4.0, 6.0], [6.0, 4.0]])
    centered = ps.center([4.0, 5.0]).center([1.0, 0.0])
    assert np.allclose(centered.X, [[-1.0, 1.0], [1.0, -1.0]])
    assert np.allclose(centered.centering, [5.0, 5.0])


def test_predictor_constant_column_flagged():
    ps = PredictorSet(X=[[1.0, 0.0], [2.0, 0.0]])
    with pytest.raises(DataError, match="constant"):
        ps.check_columns()
    ps.check_columns(allow_constant=True)


def test_profile_label():
    assert profile_label([1, 1, 0, 0, 1, 0]) == "110010"
