import math

import numpy as np
import pytest

from kaamlab import (
    as_single_layer_network,
    average_contribution,
    build_differential_logit_matrix,
    build_kaam,
    build_logit_matrix,
    kaam_logit,
    patient_logit_row,
)
from kaamlab import ModelConfig
from kaamlab.additive import LogitMatrix, matrix_probabilities
from kaamlab.errors import ArityError, InvalidInputError, ShapeError
from conftest import random_kaam


class TestKaamLogit:
    def test_zero_shape_functions_leave_bias(self, rng):
        model, _ = random_kaam(rng)
        model.layer.coefficients[:] = 0
        model.layer.base_weight[:] = 0
        model.bias[:] = [0.7, -0.2]
        x = rng.normal(size=4)
        assert kaam_logit(model, x, 0) == pytest.approx(0.7)
        assert kaam_logit(model, x, 1) == pytest.approx(-0.2)

    def test_single_feature_decomposition(self, rng):
        from kaamlab import func_eval

        model, _ = random_kaam(rng, features=1)
        x = np.array([0.4])
        expected = model.bias[1] + func_eval(model.shape_function(0, 1), 0.4)
        assert kaam_logit(model, x, 1) == pytest.approx(expected, abs=1e-12)

    def test_matches_folded_single_layer_network(self, rng):
        model, _ = random_kaam(rng)
        net = as_single_layer_network(model)
        for _ in range(50):
            x = rng.normal(size=4) * 2
            for p in range(2):
                assert kaam_logit(model, x, p) == pytest.approx(
                    float(net.forward_logits(x)[p]), abs=1e-12)

    def test_index_and_shape_errors(self, rng):
        model, _ = random_kaam(rng)
        with pytest.raises(IndexError):
            kaam_logit(model, np.zeros(4), 5)
        with pytest.raises(ShapeError):
            kaam_logit(model, np.zeros(3), 0)


class TestLogitMatrix:
    def test_single_zero_row(self, rng):
        model, _ = random_kaam(rng)
        model.layer.coefficients[:] = 0
        model.layer.base_weight[:] = 0
        model.bias[:] = [0.3, 0.9]
        m = build_logit_matrix(model, np.zeros((1, 4)), 1)
        np.testing.assert_allclose(m.values, [[0, 0, 0, 0, 0.9]], atol=1e-12)

    def test_bias_column_constant(self, rng):
        model, X = random_kaam(rng)
        m = build_logit_matrix(model, X, 0)
        np.testing.assert_array_equal(m.values[:, -1],
                                      np.full(X.shape[0], model.bias[0]))

    def test_row_sums_reproduce_logits(self, rng):
        model, X = random_kaam(rng)
        m = build_logit_matrix(model, X[:50], 1)
        expected = [kaam_logit(model, x, 1) for x in X[:50]]
        np.testing.assert_allclose(m.row_sums(), expected, atol=1e-10)

    def test_additivity_only_touched_column_changes(self, rng):
        model, X = random_kaam(rng)
        x = X[0].copy()
        base = patient_logit_row(model, x, 1)
        x[2] += 0.8
        bumped = patient_logit_row(model, x, 1)
        changed = np.flatnonzero(np.abs(bumped - base) > 1e-14)
        np.testing.assert_array_equal(changed, [2])

    def test_csv_export(self, rng, tmp_path):
        model, X = random_kaam(rng)
        m = build_logit_matrix(model, X[:3], 0, row_ids=[10, 11, 12])
        path = tmp_path / "delta.csv"
        m.to_csv(path)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "id,f0,f1,f2,f3,bias"
        assert lines[1].startswith("10,")
        reread = [float(v) for v in lines[1].split(",")[1:]]
        np.testing.assert_array_equal(reread, m.values[0])


class TestDifferentialMatrix:
    def test_identical_class_functions_give_zero(self, rng):
        model, X = random_kaam(rng)
        model.layer.coefficients[:, 1] = model.layer.coefficients[:, 0]
        model.layer.base_weight[:, 1] = model.layer.base_weight[:, 0]
        model.layer.spline_weight[:, 1] = model.layer.spline_weight[:, 0]
        model.bias[:] = 0.0
        m = build_differential_logit_matrix(model, X[:20])
        np.testing.assert_allclose(m.values, 0.0, atol=1e-12)
        np.testing.assert_allclose(matrix_probabilities(m), 0.5, atol=1e-12)

    def test_equals_per_class_difference(self, rng):
        model, X = random_kaam(rng)
        diff = build_differential_logit_matrix(model, X[:30])
        d1 = build_logit_matrix(model, X[:30], 1)
        d0 = build_logit_matrix(model, X[:30], 0)
        np.testing.assert_allclose(diff.values, d1.values - d0.values, atol=1e-12)

    def test_sigmoid_of_row_sums_is_predict_binary(self, rng):
        model, X = random_kaam(rng)
        m = build_differential_logit_matrix(model, X)
        probs = model.predict_binary(X)
        np.testing.assert_allclose(matrix_probabilities(m), probs, atol=1e-10)

    def test_multiclass_rejected(self, rng):
        model, X = random_kaam(rng, classes=3)
        with pytest.raises(ArityError):
            build_differential_logit_matrix(model, X)


class TestAverageContribution:
    def test_single_row_is_identity(self, rng):
        model, X = random_kaam(rng)
        m = build_logit_matrix(model, X[:1], 0)
        np.testing.assert_array_equal(average_contribution(m).delta, m.values[0])

    def test_symmetric_rows_cancel(self):
        values = np.array([[1.0, -2.0, 0.0], [-1.0, 2.0, 0.0]])
        m = LogitMatrix(values, ["a", "b"], 0, [0, 1])
        np.testing.assert_array_equal(average_contribution(m).delta, [0, 0, 0])

    def test_random_matches_mean_oracle(self, rng):
        values = rng.normal(size=(100, 6))
        values[:, -1] = 0.37
        m = LogitMatrix(values, [f"c{i}" for i in range(5)], None, list(range(100)))
        np.testing.assert_allclose(average_contribution(m).delta,
                                   values.mean(axis=0), atol=1e-12)

    def test_empty_matrix_rejected(self):
        m = LogitMatrix(np.zeros((0, 3)), ["a", "b"], 0, [])
        with pytest.raises(InvalidInputError):
            average_contribution(m)


class TestStructuralEquivalence:
    def test_probabilities_match_folded_network(self, rng):
        model, _ = random_kaam(rng)
        net = as_single_layer_network(model)
        X = rng.normal(size=(1000, 4)) * 2.5
        np.testing.assert_allclose(model.predict_proba(X), net.predict_proba(X),
                                   atol=1e-10)

    def test_predict_binary_equals_proba_column(self, rng):
        model, _ = random_kaam(rng)
        X = rng.normal(size=(200, 4))
        np.testing.assert_allclose(model.predict_binary(X),
                                   model.predict_proba(X)[:, 1], atol=1e-12)
