"""Weighting schemes: hand-worked fixtures, invariants, and oracles."""

import numpy as np
import pytest

from proxqrf import (Dataset, SCHEMES, WeightMatrix, fit_forest, gap_test,
                     gap_train, oob_proximity, oob_raw, original_proximity,
                     original_raw, qrf_matrix, qrf_weights, scheme_matrix,
                     TreeParams)

from conftest import hand_forest, make_dataset, single_leaf, stump
from oracles import gap_row, leaf_of


def line_data(n=4):
    X = np.arange(n, dtype=float)[:, None]
    return Dataset(X, np.arange(n, dtype=float) * 10, ("x0",))


class TestQrfWeights:

    def test_two_tree_hand_average(self):
        # tree 1 splits {0,1} from {2,3}; tree 2 is a single leaf
        data = line_data()
        t1 = stump(0, 1.5, left_members=(0, 1), left_counts=(1, 1),
                   right_members=(2, 3), right_counts=(1, 1))
        t2 = single_leaf(0.0, members=(0, 1, 2, 3), counts=(1, 1, 1, 1))
        forest = hand_forest(data, [t1, t2],
                             [[1, 1, 1, 1], [1, 1, 1, 1]])
        w = qrf_weights(forest, data, [0.0])
        # (1/2 + 1/4)/2 = 0.375 for leaf mates, (0 + 1/4)/2 otherwise
        assert np.array_equal(w, [0.375, 0.375, 0.125, 0.125])

    def test_routes_all_training_points_not_just_inbag(self):
        # leaf shares count every co-leaf training point, in-bag or not
        data = line_data()
        t1 = stump(0, 1.5, left_members=(1,), left_counts=(2,),
                   right_members=(2, 3), right_counts=(1, 1))
        forest = hand_forest(data, [t1], [[0, 2, 1, 1]])
        w = qrf_weights(forest, data, [0.0])
        assert np.array_equal(w, [0.5, 0.5, 0.0, 0.0])

    def test_matrix_rows_always_defined(self, toy_data, toy_forest):
        W = qrf_matrix(toy_forest, toy_data, toy_data.features[:7])
        assert W.scheme == "qrf" and W.defined.all()
        assert np.allclose(W.weights.sum(axis=1), 1.0, atol=1e-12)


class TestGap:

    def test_single_tree_hand_shares(self):
        # row 0 is out of bag; its leaf holds 1 (twice) and 2 (once)
        data = line_data()
        t = stump(0, 2.5, left_members=(1, 2), left_counts=(2, 1),
                  right_members=(3,), right_counts=(1,))
        forest = hand_forest(data, [t], [[0, 2, 1, 1]])
        W = gap_train(forest, data)
        assert W.defined[0]
        assert np.allclose(W.row(0), [0.0, 2 / 3, 1 / 3, 0.0], atol=1e-15)

    def test_diagonal_is_exactly_zero(self, toy_data, toy_forest):
        W = gap_train(toy_forest, toy_data)
        assert (np.diag(W.weights) == 0.0).all()

    def test_never_oob_row_flagged_undefined(self):
        data = line_data()
        t1 = single_leaf(0.0, members=(0, 1), counts=(2, 2))
        t2 = single_leaf(0.0, members=(0, 2), counts=(3, 1))
        forest = hand_forest(data, [t1, t2], [[2, 2, 0, 0], [3, 0, 1, 0]])
        W = gap_train(forest, data)
        assert not W.defined[0]            # in-bag in both trees
        assert np.array_equal(W.row(0), np.zeros(4))
        assert W.defined[1] and W.defined[2] and W.defined[3]

    def test_rows_match_literal_definition(self, toy_data, toy_forest):
        W = gap_train(toy_forest, toy_data)
        for i in (0, 5, 11, 23):
            want = gap_row(toy_forest, toy_data, i)
            if want is None:
                assert not W.defined[i]
            else:
                assert np.allclose(W.row(i), want, atol=1e-14)

    def test_test_mode_treats_query_as_oob_everywhere(self):
        data = line_data()
        t = stump(0, 2.5, left_members=(1, 2), left_counts=(2, 1),
                  right_members=(3,), right_counts=(1,))
        forest = hand_forest(data, [t], [[0, 2, 1, 1]])
        W = gap_test(forest, data, np.array([[0.0], [5.0]]))
        assert W.mode == "test" and W.defined.all()
        assert np.allclose(W.weights[0], [0.0, 2 / 3, 1 / 3, 0.0])
        assert np.array_equal(W.weights[1], [0.0, 0.0, 0.0, 1.0])

    def test_identity_recovers_oob_predictions(self, toy_data, toy_forest):
        W = gap_train(toy_forest, toy_data)
        pred = toy_forest.predict_oob(toy_data)
        ok = W.defined
        assert np.abs((W.weights @ toy_data.target)[ok]
                      - pred[ok]).max() < 1e-10


class TestOriginal:

    def test_raw_coleaf_fraction(self):
        # same leaf in 3 of 4 trees -> raw proximity 0.75
        X = np.array([[0.0], [1.0]])
        data = Dataset(X, np.array([0.0, 1.0]), ("x0",))
        together = single_leaf(0.0, members=(0, 1), counts=(1, 1))
        apart = stump(0, 0.5, left_members=(0,), left_counts=(1,),
                      right_members=(1,), right_counts=(1,))
        forest = hand_forest(data, [together, together, together, apart],
                             [[1, 1]] * 4)
        raw = original_raw(forest, data, data.features)
        assert raw[0, 0] == 1.0 and raw[1, 1] == 1.0
        assert raw[0, 1] == 0.75 and raw[1, 0] == 0.75

    def test_raw_symmetric_for_train_queries(self, toy_data, toy_forest):
        raw = original_raw(toy_forest, toy_data, toy_data.features)
        assert np.array_equal(raw, raw.T)
        assert (np.diag(raw) == 1.0).all()

    def test_normalized_rows(self, toy_data, toy_forest):
        W = original_proximity(toy_forest, toy_data, toy_data.features[:5])
        assert W.defined.all()
        assert np.allclose(W.weights.sum(axis=1), 1.0, atol=1e-12)

    def test_zero_pattern_matches_qrf(self, toy_data, toy_forest):
        Q = toy_data.features[:10]
        a = qrf_matrix(toy_forest, toy_data, Q).weights > 0
        b = original_proximity(toy_forest, toy_data, Q).weights > 0
        assert np.array_equal(a, b)


class TestOob:

    def test_train_raw_both_oob_fraction(self):
        # 0 and 1 are jointly out of bag twice, co-leaf once -> 0.5
        data = line_data()
        t_apart = stump(0, 0.5, left_members=(2,), left_counts=(2,),
                        right_members=(3,), right_counts=(2,))
        t_together = single_leaf(0.0, members=(2, 3), counts=(2, 2))
        t_inbag = single_leaf(0.0, members=(0, 2, 3), counts=(2, 1, 1))
        forest = hand_forest(data, [t_apart, t_together, t_inbag],
                             [[0, 0, 2, 2], [0, 0, 2, 2], [2, 0, 1, 1]])
        raw = oob_raw(forest, data)
        assert raw[0, 1] == 0.5 and raw[1, 0] == 0.5
        assert raw[0, 0] == 1.0

    def test_train_matches_literal_loops(self, toy_data, toy_forest):
        W = oob_proximity(toy_forest, toy_data)
        leaves = toy_forest.train_leaves
        oob = toy_forest.multiplicity_matrix() == 0
        n = toy_data.n
        for i in (0, 9, 17):
            raw = np.zeros(n)
            for j in range(n):
                if i == j:
                    raw[j] = 1.0
                    continue
                both = oob[i] & oob[j]
                if both.any():
                    raw[j] = (leaves[i, both] == leaves[j, both]).mean()
            want = raw / raw.sum()
            assert np.allclose(W.row(i), want, atol=1e-14)

    def test_test_mode_query_counts_oob_trees_per_point(self):
        data = line_data()
        t1 = stump(0, 2.5, left_members=(1, 2), left_counts=(2, 1),
                   right_members=(3,), right_counts=(1,))
        t2 = single_leaf(0.0, members=(0, 1), counts=(2, 2))
        forest = hand_forest(data, [t1, t2], [[0, 2, 1, 1], [2, 2, 0, 0]])
        W = oob_proximity(forest, data, queries=np.array([[0.0]]),
                          mode="test")
        # j=0: oob in t1 only, co-leaf there (raw 1); j=2: oob in t2 only,
        # co-leaf there too (raw 1); j=3: oob in t2, co-leaf (raw 1);
        # j=1 never oob (raw 0)
        assert np.allclose(W.weights[0], [1 / 3, 0.0, 1 / 3, 1 / 3])

    def test_train_mode_rejects_queries(self, toy_data, toy_forest):
        with pytest.raises(ValueError):
            oob_proximity(toy_forest, toy_data,
                          queries=toy_data.features[:2], mode="train")

    def test_rows_sum_to_one_when_defined(self, toy_data, toy_forest):
        W = oob_proximity(toy_forest, toy_data)
        sums = W.weights[W.defined].sum(axis=1)
        assert np.allclose(sums, 1.0, atol=1e-12)


class TestWeightMatrix:

    def test_row_copy_semantics(self, toy_data, toy_forest):
        W = gap_train(toy_forest, toy_data)
        r = W.row(0)
        assert np.array_equal(r, W.weights[0])

    def test_validation_rejects_negative(self):
        w = np.array([[1.2, -0.2], [0.5, 0.5]])
        with pytest.raises(ValueError):
            WeightMatrix(w, scheme="qrf", mode="train",
                         defined=np.array([True, True]))

    def test_validation_rejects_bad_row_sum(self):
        w = np.array([[0.6, 0.6], [0.5, 0.5]])
        with pytest.raises(ValueError):
            WeightMatrix(w, scheme="qrf", mode="train",
                         defined=np.array([True, True]))

    def test_undefined_rows_must_be_zero(self):
        w = np.array([[0.5, 0.5], [0.3, 0.3]])
        with pytest.raises(ValueError):
            WeightMatrix(w, scheme="gap", mode="train",
                         defined=np.array([True, False]))

    def test_unknown_scheme_rejected(self):
        w = np.array([[1.0, 0.0]])
        with pytest.raises(ValueError):
            WeightMatrix(w, scheme="cosine", mode="train",
                         defined=np.array([True]))

    def test_to_csv_round_trips_values(self, tmp_path, toy_data,
                                       toy_forest):
        W = gap_test(toy_forest, toy_data, toy_data.features[:3])
        path = tmp_path / "w.csv"
        W.to_csv(path)
        lines = path.read_text().strip().splitlines()
        assert len(lines) == 4  # header + 3 queries
        header = lines[0].split(",")
        assert header[0] == "query" and header[1] == "defined"
        got = np.array([[float(v) for v in line.split(",")[2:]]
                        for line in lines[1:]])
        assert np.array_equal(got, W.weights)


class TestSchemeDispatch:

    @pytest.mark.parametrize("scheme", SCHEMES)
    def test_matches_direct_calls(self, scheme, toy_data, toy_forest):
        Q = toy_data.features[:4]
        W = scheme_matrix(toy_forest, toy_data, Q, scheme)
        direct = {
            "qrf": qrf_matrix,
            "gap": gap_test,
            "original": original_proximity,
            "oob": lambda f, d, q: oob_proximity(f, d, q, mode="test"),
        }[scheme](toy_forest, toy_data, Q)
        assert np.array_equal(W.weights, direct.weights)
        assert W.scheme == scheme

    def test_unknown_scheme(self, toy_data, toy_forest):
        with pytest.raises(ValueError):
            scheme_matrix(toy_forest, toy_data, toy_data.features[:2],
                          "fuzzy")
