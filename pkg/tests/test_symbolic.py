import math

import numpy as np
import pytest

from kaamlab import (
    ModelConfig,
    build_kaam,
    distill,
    eval_formula,
    fit_symbolic,
    formula_probabilities,
    parse_formula,
    render_formula,
    round_formula,
)
from kaamlab.errors import InvalidInputError
from kaamlab.symbolic import (
    ClassFormula,
    SymbolicFormula,
    SymbolicTerm,
    TabulatedTerm,
    formula_from_dict,
    formula_to_dict,
)


def make_formula(terms, constant, feature_names, mode="binary-differential",
                 class_labels=("0", "1")):
    if mode == "binary-differential":
        classes = [ClassFormula(None, constant, terms)]
    else:
        classes = terms  # caller passes ClassFormula list
    return SymbolicFormula(list(feature_names), list(class_labels), mode, classes)


class TestFitSymbolic:
    def test_identity_recovery(self):
        x = np.linspace(-1, 1, 64)
        term = fit_symbolic(x, x)
        assert term.primitive == "identity"
        assert term.fit_r2 >= 0.9999
        assert (term.a, term.b, term.c1, term.c2) == (1.0, 0.0, 1.0, 0.0)

    def test_affine_identity_recovery(self):
        x = np.linspace(0, 5, 64)
        term = fit_symbolic(x, 2.5 * x - 1.0)
        assert term.primitive == "identity"
        pred, _ = term.evaluate(x)
        np.testing.assert_allclose(pred, 2.5 * x - 1.0, atol=1e-10)

    def test_sine_generator_recovery(self):
        x = np.linspace(-2.2, 1.8, 256)
        y = 1.15 * np.sin(0.79 * x + 0.6)
        term = fit_symbolic(x, y)
        assert term.primitive == "sin"
        assert term.fit_r2 >= 0.999
        pred, _ = term.evaluate(x)
        assert np.abs(pred - y).max() < 1e-3

    def test_constant_samples(self):
        x = np.linspace(-1, 1, 32)
        term = fit_symbolic(x, np.full(32, 2.0))
        assert term.c1 == 0.0
        assert term.c2 == 2.0
        assert term.fit_r2 == 1.0

    def test_too_few_samples(self):
        with pytest.raises(InvalidInputError):
            fit_symbolic(np.arange(5), np.arange(5))

    def test_fit_r2_within_unit_interval(self, rng):
        x = np.linspace(-1, 1, 64)
        y = rng.normal(size=64)
        term = fit_symbolic(x, y)
        assert 0.0 <= term.fit_r2 <= 1.0


class TestEvalFormula:
    def heart_eq_terms(self):
        # the published heart-risk logit: eight covariates, three decimals
        names = ["DiffWalk", "HighChol", "Sex", "Smoker", "Stroke", "Age",
                 "PhysHlth", "GenHlth"]
        idx = {n: i for i, n in enumerate(names)}
        T = SymbolicTerm
        terms = [
            T("identity", 1.0, 0.0, 0.52, 0.0, idx["DiffWalk"]),
            T("identity", 1.0, 0.0, 0.49, 0.0, idx["HighChol"]),
            T("identity", 1.0, 0.0, 1.4, 0.0, idx["Sex"]),
            T("identity", 1.0, 0.0, 0.21, 0.0, idx["Smoker"]),
            T("identity", 1.0, 0.0, 0.82, 0.0, idx["Stroke"]),
            T("sin", 0.79, 0.6, 1.15, 0.0, idx["Age"]),
            T("sin", 0.8, -2.59, -1.09, 0.0, idx["Age"]),
            T("cos", 1.43, 3.55, 0.13, 0.0, idx["PhysHlth"]),
            T("tanh", 0.63, 0.91, 1.18, 0.0, idx["GenHlth"]),
            T("tanh", 0.7, 0.86, 0.76, 0.0, idx["GenHlth"]),
        ]
        return names, terms

    def test_heart_formula_at_all_zero_covariates(self):
        names, terms = self.heart_eq_terms()
        formula = make_formula(terms, -4.28, names)
        # independent arithmetic evaluation of the published expression
        expected = (1.15 * math.sin(0.6) - 1.09 * math.sin(-2.59)
                    + 0.13 * math.cos(3.55) + 1.18 * math.tanh(0.91)
                    + 0.76 * math.tanh(0.86) - 4.28)
        out = eval_formula(formula, np.zeros(len(names)))
        assert out.logits[0] == pytest.approx(expected, abs=1e-12)
        assert out.logits[0] == pytest.approx(-1.799, abs=1e-3)
        prob = 1 / (1 + math.exp(-out.logits[0]))
        assert prob == pytest.approx(0.142, abs=1e-3)

    def test_constant_zero_formula_gives_half(self):
        formula = make_formula([], 0.0, ["a"])
        probs = formula_probabilities(formula, np.zeros((1, 1)))
        np.testing.assert_allclose(probs, [[0.5, 0.5]], atol=1e-12)

    def test_term_by_term_recomputation(self, rng):
        names = [f"f{i}" for i in range(4)]
        terms = [
            SymbolicTerm("sin", 1.3, -0.2, 0.7, 0.0, 0),
            SymbolicTerm("square", -0.563, 1.0, 0.088, 0.0, 1),
            SymbolicTerm("tanh", 0.63, 0.91, 1.18, 0.0, 2),
            SymbolicTerm("identity", 1.0, 0.0, -0.4, 0.0, 3),
        ]
        formula = make_formula(terms, 0.947, names)
        for _ in range(20):
            x = rng.normal(size=4)
            expected = (0.947
                        + 0.7 * math.sin(1.3 * x[0] - 0.2)
                        + 0.088 * (-0.563 * x[1] + 1.0) ** 2
                        + 1.18 * math.tanh(0.63 * x[2] + 0.91)
                        - 0.4 * x[3])
            assert eval_formula(formula, x).logits[0] == pytest.approx(
                expected, abs=1e-12)

    def test_appendix_style_reciprocal_and_rsqrt(self):
        names = ["pioglitazone", "num_procedures"]
        terms = [
            SymbolicTerm("recip", -1.207 * 0.51, 0.51 * 0.0, 0.005, 0.0, 0),
            SymbolicTerm("rsqrt", 0.328, 1.0, -0.506, 0.0, 1),
        ]
        formula = make_formula(terms, 0.0, names)
        x = np.array([0.7, 2.0])
        expected = (0.005 / (0.51 * -1.207 * 0.7)
                    - 0.506 / math.sqrt(0.328 * 2.0 + 1.0))
        assert eval_formula(formula, x).logits[0] == pytest.approx(expected,
                                                                   abs=1e-12)

    def test_domain_violation_clamps_and_flags(self):
        term = SymbolicTerm("log", 1.0, 0.0, 1.0, 0.0, 0,
                            arg_range=(0.5, 2.0))
        formula = make_formula([term], 0.0, ["x"])
        ok = eval_formula(formula, np.array([1.0]))
        assert not ok.clamped
        bad = eval_formula(formula, np.array([-3.0]))
        assert bad.clamped
        assert bad.logits[0] == pytest.approx(math.log(0.5), abs=1e-12)

    def test_purity(self, rng):
        names, terms = TestEvalFormula().heart_eq_terms()
        formula = make_formula(terms, -4.28, names)
        x = rng.normal(size=len(names))
        a = eval_formula(formula, x)
        b = eval_formula(formula, x)
        assert a.logits.tolist() == b.logits.tolist()


class TestRoundFormula:
    def test_large_decimals_unchanged(self, rng):
        names, terms = TestEvalFormula().heart_eq_terms()
        formula = make_formula(terms, -4.281234567, names)
        rounded = round_formula(formula, 12)
        x = rng.normal(size=len(names))
        assert eval_formula(rounded, x).logits[0] == pytest.approx(
            eval_formula(formula, x).logits[0], abs=1e-9)

    def test_half_to_even_rule(self):
        term = SymbolicTerm("identity", 1.0, 0.0, 0.5196, 0.0, 0)
        formula = make_formula([term], 0.0, ["x"])
        rounded = round_formula(formula, 3)
        assert rounded.classes[0].terms[0].c1 == 0.52
        assert "0.52 * x" in render_formula(rounded)

    def test_idempotent(self):
        term = SymbolicTerm("sin", 0.12345, -0.9876, 1.23456, 0.0, 0)
        formula = make_formula([term], 0.55555, ["x"])
        once = round_formula(formula, 3)
        twice = round_formula(once, 3)
        assert render_formula(once) == render_formula(twice)


class TestRenderAndParse:
    def test_constant_only(self):
        formula = make_formula([], -4.28, ["x"])
        assert render_formula(formula) == "-4.28"

    def test_sin_term_format(self):
        term = SymbolicTerm("sin", 0.79, 0.6, 1.15, 0.0, 0)
        formula = make_formula([term], -4.28, ["Age"])
        assert render_formula(formula) == "1.15 * sin(0.79 * Age + 0.6) - 4.28"

    def test_terms_sorted_by_magnitude_constant_last(self):
        terms = [
            SymbolicTerm("identity", 1.0, 0.0, 0.2, 0.0, 0),
            SymbolicTerm("identity", 1.0, 0.0, -1.4, 0.0, 1),
        ]
        formula = make_formula(terms, 0.5, ["a", "b"])
        assert render_formula(formula) == "-1.4 * b + 0.2 * a + 0.5"

    def test_backticked_names(self):
        term = SymbolicTerm("identity", 1.0, 0.0, 0.3, 0.0, 0)
        formula = make_formula([term], 0.0, ["color=red"])
        text = render_formula(formula)
        assert "`color=red`" in text
        back = parse_formula(text, ["color=red"])
        assert back.classes[0].terms[0].feature_index == 0

    def _random_formula(self, rng, names, mode):
        prims = ["identity", "square", "sin", "cos", "tanh", "exp", "abs",
                 "sigmoid", "cube"]

        def random_terms(class_index):
            terms = []
            n_terms = int(rng.integers(1, min(4, len(names) + 1)))
            for j in rng.choice(len(names), size=n_terms, replace=False):
                p = prims[rng.integers(len(prims))]
                a = float(np.round(rng.uniform(-3, 3), 3)) or 1.0
                b = float(np.round(rng.uniform(-3, 3), 3))
                c1 = float(np.round(rng.uniform(0.1, 2) * rng.choice([-1, 1]), 3))
                if p == "identity":
                    a, b = 1.0, 0.0
                terms.append(SymbolicTerm(p, a, b, c1, 0.0, int(j), class_index))
            return terms

        if mode == "binary-differential":
            classes = [ClassFormula(None, float(np.round(rng.normal(), 3)),
                                    random_terms(None))]
            labels = ["0", "1"]
        else:
            labels = ["alpha", "beta", "gamma"]
            classes = [ClassFormula(p, float(np.round(rng.normal(), 3)),
                                    random_terms(p)) for p in range(3)]
        return SymbolicFormula(list(names), labels, mode, classes)

    def test_round_trip_fixed_point_100_random(self, rng):
        names = ["Age", "GenHlth", "color=red", "x_1"]
        for i in range(100):
            mode = "binary-differential" if i % 2 == 0 else "per-class"
            formula = self._random_formula(rng, names, mode)
            text = render_formula(formula)
            back = parse_formula(text, names, formula.class_labels)
            assert render_formula(back) == text
            # values survive the trip as well
            x = rng.normal(size=len(names))
            np.testing.assert_allclose(eval_formula(back, x).logits,
                                       eval_formula(formula, x).logits,
                                       atol=1e-12)

    def test_multiclass_lines(self):
        classes = [
            ClassFormula(0, 0.1, [SymbolicTerm("identity", 1.0, 0.0, 0.5, 0.0, 0, 0)]),
            ClassFormula(1, -0.2, []),
        ]
        formula = SymbolicFormula(["x"], ["no", "yes"], "per-class", classes)
        text = render_formula(formula)
        assert text.splitlines()[0] == "logit[no] = 0.5 * x + 0.1"
        assert text.splitlines()[1] == "logit[yes] = -0.2"

    def test_tabulated_marker_not_parseable(self):
        term = TabulatedTerm(np.array([0.0, 1.0]), np.array([1.0, 2.0]), 0)
        formula = make_formula([term], 0.0, ["x"])
        text = render_formula(formula)
        assert "tabulated(x)" in text
        with pytest.raises(InvalidInputError):
            parse_formula(text, ["x"])

    def test_structured_round_trip(self, rng):
        names = ["a", "b"]
        formula = self._random_formula(rng, names, "per-class")
        formula.classes[0].terms.append(
            TabulatedTerm(np.linspace(0, 1, 5), rng.normal(size=5), 1, 0))
        back = formula_from_dict(formula_to_dict(formula))
        x = rng.normal(size=2)
        np.testing.assert_allclose(eval_formula(back, x).logits,
                                   eval_formula(formula, x).logits, atol=1e-15)


class TestDistill:
    def test_zero_shape_functions_give_constant_formula(self, rng):
        X = rng.normal(size=(40, 3))
        model = build_kaam(X, ["a", "b", "c"], ["0", "1"],
                           ModelConfig(init_mode="sparse"), seed=0)
        model.bias[:] = [0.25, 1.0]
        formula = distill(model, X)
        cf = formula.classes[0]
        assert cf.terms == []
        assert cf.constant == pytest.approx(0.75)  # differential bias

    def test_prunes_near_constant_feature(self, rng):
        X = rng.normal(size=(80, 2))
        model = build_kaam(X, ["big", "tiny"], ["0", "1"],
                           ModelConfig(degree=1, grid_points=4,
                                       init_mode="sparse"), seed=1)
        # feature 0 carries a strong linear effect, feature 1 almost nothing
        peaks = model.layer.bases[0].knots[1:-1]
        model.layer.coefficients[0, 1] = peaks          # g(x) = x
        model.layer.coefficients[1, 1] = 1e-6 * model.layer.bases[1].knots[1:-1]
        formula = distill(model, X, prune_threshold=0.01)
        terms = formula.classes[0].terms
        assert len(terms) == 1
        assert terms[0].feature_index == 0
        assert terms[0].primitive == "identity"

    def test_multiclass_has_one_formula_per_class(self, rng):
        X = rng.normal(size=(50, 2))
        model = build_kaam(X, ["a", "b"], ["x", "y", "z"],
                           ModelConfig(degree=1, init_mode="sparse"), seed=2)
        formula = distill(model, X)
        assert formula.mode == "per-class"
        assert [cf.class_index for cf in formula.classes] == [0, 1, 2]

    def test_low_fidelity_falls_back_to_tabulated(self, rng):
        X = rng.normal(size=(60, 1))
        model = build_kaam(X, ["w"], ["0", "1"],
                           ModelConfig(degree=1, grid_points=10,
                                       init_mode="sparse"), seed=3)
        # jagged coefficients no single primitive can track
        model.layer.coefficients[0, 1] = rng.normal(size=11) * 5
        formula = distill(model, X)
        assert formula.low_fidelity
        assert formula.has_tabulated_terms
        # the tabulated curve still reproduces the shape closely on support
        probs = formula_probabilities(formula, X)
        model_probs = model.predict_proba(X)
        assert np.median(np.abs(probs[:, 1] - model_probs[:, 1])) < 0.05

    def test_distilled_probabilities_track_spline_model(self, rng):
        n = 150
        X = np.column_stack([rng.uniform(-2, 2, n), rng.uniform(-2, 2, n)])
        y = (np.tanh(X[:, 0]) + 0.5 * X[:, 1] > 0).astype(int)
        from kaamlab import TrainConfig, train

        model = build_kaam(X, ["a", "b"], ["0", "1"],
                           ModelConfig(degree=3, grid_points=5), seed=4)
        train(model, X, y, TrainConfig(epochs=150, early_stop_patience=0, seed=4))
        formula = distill(model, X)
        probs = formula_probabilities(formula, X)[:, 1]
        model_probs = model.predict_binary(X)
        assert np.median(np.abs(probs - model_probs)) < 0.05
