"""Model persistence: exact round trips and corrupt-input handling."""

import json

import numpy as np
import pytest

from proxqrf import (DataError, TreeParams, fit_forest, gap_test,
                     load_model, predict_quantiles, save_model)

from conftest import make_dataset


@pytest.fixture(scope="module")
def saved(tmp_path_factory):
    data = make_dataset(n=35, p=3, seed=8)
    forest = fit_forest(data, TreeParams(max_depth=5), n_trees=10, seed=21)
    path = tmp_path_factory.mktemp("model") / "model.json"
    save_model(forest, data, path)
    return data, forest, path


class TestRoundTrip:

    def test_training_data_identical(self, saved):
        data, forest, path = saved
        forest2, data2 = load_model(path)
        assert np.array_equal(data2.features, data.features)
        assert np.array_equal(data2.target, data.target)
        assert data2.feature_names == data.feature_names

    def test_forest_structure_identical(self, saved):
        data, forest, path = saved
        forest2, _ = load_model(path)
        assert forest2.params == forest.params
        assert forest2.seed == forest.seed
        for a, b in zip(forest.trees, forest2.trees):
            assert np.array_equal(a.feature, b.feature)
            assert np.array_equal(a.threshold, b.threshold, equal_nan=True)
            assert np.array_equal(a.left, b.left)
            assert np.array_equal(a.right, b.right)
            assert np.array_equal(a.value, b.value, equal_nan=True)
            assert a.leaf_members == b.leaf_members
            assert a.leaf_counts == b.leaf_counts
        for ra, rb in zip(forest.bootstraps, forest2.bootstraps):
            assert np.array_equal(ra.multiplicity, rb.multiplicity)
        assert np.array_equal(forest.train_leaves, forest2.train_leaves)

    def test_gap_rows_bit_identical(self, saved):
        data, forest, path = saved
        forest2, data2 = load_model(path)
        q = data.features[:6]
        a = gap_test(forest, data, q)
        b = gap_test(forest2, data2, q)
        assert np.array_equal(a.weights, b.weights)

    def test_quantile_predictions_bit_identical(self, saved):
        data, forest, path = saved
        forest2, data2 = load_model(path)
        q = data.features[:6]
        alphas = (0.025, 0.5, 0.975)
        a = predict_quantiles(forest, data, q, "gap", alphas)
        b = predict_quantiles(forest2, data2, q, "gap", alphas)
        for qa, qb in zip(a, b):
            assert np.array_equal(qa.values, qb.values)

    def test_second_save_is_byte_identical(self, saved, tmp_path):
        data, forest, path = saved
        again = tmp_path / "again.json"
        save_model(forest, data, again)
        assert again.read_bytes() == path.read_bytes()


class TestCorruptInputs:

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataError):
            load_model(tmp_path / "absent.json")

    def test_truncated_file(self, saved, tmp_path):
        _, _, path = saved
        broken = tmp_path / "trunc.json"
        broken.write_bytes(path.read_bytes()[: path.stat().st_size // 2])
        with pytest.raises(DataError):
            load_model(broken)

    def test_not_json(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("this is not a model")
        with pytest.raises(DataError):
            load_model(bad)

    def test_wrong_format_name(self, saved, tmp_path):
        _, _, path = saved
        payload = json.loads(path.read_text())
        payload["format"] = "somebody-else"
        other = tmp_path / "other.json"
        other.write_text(json.dumps(payload))
        with pytest.raises(DataError):
            load_model(other)

    def test_unknown_version(self, saved, tmp_path):
        _, _, path = saved
        payload = json.loads(path.read_text())
        payload["version"] = 999
        other = tmp_path / "future.json"
        other.write_text(json.dumps(payload))
        with pytest.raises(DataError):
            load_model(other)

    def test_missing_section(self, saved, tmp_path):
        _, _, path = saved
        payload = json.loads(path.read_text())
        del payload["trees"]
        other = tmp_path / "gutted.json"
        other.write_text(json.dumps(payload))
        with pytest.raises(DataError):
            load_model(other)
