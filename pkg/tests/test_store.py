"""Embedding store round-trips, validation failures, and alignment."""

from __future__ import annotations

import json

import numpy as np
import pytest

from mmsent import DataError, EmbeddingMatrix, FeatureSpec, align, read_store, write_store
from mmsent.jsonutil import read_json


def random_store(tmp_path, name="feat", dim=5, count=7, seed=0):
    rng = np.random.default_rng(seed)
    ids = [f"{name}{i}" for i in range(count)]
    data = rng.normal(size=(count, dim)).astype(np.float32)
    path = write_store(FeatureSpec(name, dim, count), ids, data, tmp_path / name)
    return path, ids, data


class TestRoundTrip:
    def test_identity(self, tmp_path):
        path, ids, data = random_store(tmp_path)
        m = read_store(path)
        assert m.ids == tuple(ids)
        assert m.spec == FeatureSpec("feat", 5, 7)
        assert np.array_equal(m.data, data)

    def test_bit_exact_for_extreme_float32(self, tmp_path):
        # denormals, huge magnitudes, and negative zero must survive untouched
        data = np.array(
            [[1e-45, -1e-45, 3.4e38], [-3.4e38, -0.0, 1.1754944e-38]], dtype=np.float32
        )
        path = write_store(FeatureSpec("x", 3, 2), ["a", "b"], data, tmp_path / "x")
        m = read_store(path)
        assert m.data.tobytes() == data.tobytes()

    def test_float64_input_rounds_to_float32(self, tmp_path):
        data = np.array([[0.1, 0.2]], dtype=np.float64)
        path = write_store(FeatureSpec("x", 2, 1), ["a"], data, tmp_path / "x")
        m = read_store(path)
        assert m.data.dtype == np.float32
        assert np.array_equal(m.data, data.astype(np.float32))

    def test_empty_store(self, tmp_path):
        path = write_store(FeatureSpec("x", 4, 0), [], np.zeros((0, 4)), tmp_path / "x")
        m = read_store(path)
        assert m.ids == ()
        assert m.data.shape == (0, 4)

    def test_manifest_records_declared_dim(self, tmp_path):
        path, _, _ = random_store(tmp_path, name="object", dim=2048, count=2)
        assert read_json(path / "manifest.json")["dim"] == 2048

    def test_contextual_text_dim(self, tmp_path):
        path, _, _ = random_store(tmp_path, name="roberta_text", dim=768, count=3)
        assert read_store(path).spec.dim == 768


class TestWriteValidation:
    def test_shape_mismatch(self, tmp_path):
        with pytest.raises(DataError, match="shape"):
            write_store(FeatureSpec("x", 3, 2), ["a", "b"], np.zeros((2, 4)), tmp_path / "x")

    def test_duplicate_ids(self, tmp_path):
        with pytest.raises(DataError, match="duplicate"):
            write_store(FeatureSpec("x", 2, 2), ["a", "a"], np.zeros((2, 2)), tmp_path / "x")

    def test_nan_rejected(self, tmp_path):
        data = np.zeros((2, 2))
        data[1, 0] = np.nan
        with pytest.raises(DataError, match="NaN"):
            write_store(FeatureSpec("x", 2, 2), ["a", "b"], data, tmp_path / "x")

    def test_id_with_newline_rejected(self, tmp_path):
        with pytest.raises(DataError, match="line break"):
            write_store(FeatureSpec("x", 2, 1), ["a\nb"], np.zeros((1, 2)), tmp_path / "x")


class TestReadValidation:
    def test_missing_manifest(self, tmp_path):
        (tmp_path / "empty").mkdir()
        with pytest.raises(DataError, match="missing manifest"):
            read_store(tmp_path / "empty")

    def test_corrupt_manifest(self, tmp_path):
        path, _, _ = random_store(tmp_path)
        (path / "manifest.json").write_text("{not json", encoding="utf-8")
        with pytest.raises(DataError, match="corrupt manifest"):
            read_store(path)

    def test_truncated_data_file(self, tmp_path):
        path, _, _ = random_store(tmp_path)
        raw = (path / "data.bin").read_bytes()
        (path / "data.bin").write_bytes(raw[:-4])
        with pytest.raises(DataError, match="bytes"):
            read_store(path)

    def test_ids_count_mismatch(self, tmp_path):
        path, ids, _ = random_store(tmp_path)
        (path / "ids.txt").write_text("".join(f"{i}\n" for i in ids[:-1]), encoding="utf-8")
        with pytest.raises(DataError, match="lines"):
            read_store(path)

    def test_duplicate_ids_in_file(self, tmp_path):
        path, ids, _ = random_store(tmp_path)
        dupes = [ids[0]] + list(ids[1:-1]) + [ids[0]]
        (path / "ids.txt").write_text("".join(f"{i}\n" for i in dupes), encoding="utf-8")
        with pytest.raises(DataError, match="duplicate"):
            read_store(path)

    def test_wrong_dtype_tag(self, tmp_path):
        path, _, _ = random_store(tmp_path)
        manifest = read_json(path / "manifest.json")
        manifest["dtype"] = "f64le"
        (path / "manifest.json").write_text(json.dumps(manifest), encoding="utf-8")
        with pytest.raises(DataError, match="dtype"):
            read_store(path)

    def test_loaded_matrix_is_read_only(self, tmp_path):
        path, _, _ = random_store(tmp_path)
        m = read_store(path)
        with pytest.raises(ValueError):
            m.data[0, 0] = 1.0


class TestAlign:
    def test_identity_permutation(self, tmp_path):
        path, ids, data = random_store(tmp_path)
        m = read_store(path)
        (out,) = align([m], ids)
        assert out.ids == tuple(ids)
        assert np.array_equal(out.data, data)

    def test_two_shuffled_matrices(self, tmp_path):
        rng = np.random.default_rng(1)
        ids = [f"s{i}" for i in range(6)]
        d1 = rng.normal(size=(6, 3)).astype(np.float32)
        d2 = rng.normal(size=(6, 4)).astype(np.float32)
        perm1, perm2 = rng.permutation(6), rng.permutation(6)
        m1 = EmbeddingMatrix(FeatureSpec("a", 3, 6), [ids[i] for i in perm1], d1[perm1])
        m2 = EmbeddingMatrix(FeatureSpec("b", 4, 6), [ids[i] for i in perm2], d2[perm2])

        a1, a2 = align([m1, m2], ids)
        assert a1.ids == a2.ids == tuple(ids)
        assert np.array_equal(a1.data, d1)
        assert np.array_equal(a2.data, d2)

    def test_subset_and_reorder(self, tmp_path):
        path, ids, data = random_store(tmp_path)
        m = read_store(path)
        order = [ids[3], ids[0]]
        (out,) = align([m], order)
        assert np.array_equal(out.data, data[[3, 0]])
        assert out.spec.count == 2

    def test_missing_id_names_feature(self, tmp_path):
        path, _, _ = random_store(tmp_path, name="face")
        with pytest.raises(DataError, match="'face'.*'ghost'"):
            align([read_store(path)], ["ghost"])

    def test_row_multiset_preserved(self, tmp_path):
        path, ids, data = random_store(tmp_path)
        m = read_store(path)
        order = list(reversed(ids))
        (out,) = align([m], order)
        assert sorted(map(tuple, out.data.tolist())) == sorted(map(tuple, data.tolist()))

    def test_source_not_mutated(self, tmp_path):
        path, ids, data = random_store(tmp_path)
        m = read_store(path)
        align([m], list(reversed(ids)))
        assert np.array_equal(m.data, data)
