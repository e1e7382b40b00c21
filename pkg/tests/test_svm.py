import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import dual_qp_oracle, gram_direct
from pcasvm import _pure
from pcasvm.errors import DegenerateTrainingError, DomainError, NonConvergenceError, ValidationError
from pcasvm.svm import (
    KKT_TOL,
    KernelSpec,
    SVMModel,
    TrainingSet,
    decision_value,
    decision_values,
    kernel_eval,
    kernel_matrix,
    predict,
    predict_batch,
    train,
)
from pcasvm.timeseries import Direction

XOR_X = np.array([[0.0, 0.0], [1.0, 1.0], [0.0, 1.0], [1.0, 0.0]])
XOR_Y = np.array([0, 0, 1, 1])


def _audit(model, data):
    """Recompute every KKT residual from the model alone, with plain loops."""
    x = data.features
    y = data.signed_labels()
    sv = model.support_vectors
    coefs = model.dual_coefs
    alpha = np.zeros(len(y))
    for k, row in enumerate(sv):
        match = [i for i in range(len(x)) if np.array_equal(x[i], row) and alpha[i] == 0]
        alpha[match[0]] = abs(coefs[k])
    worst = 0.0
    for i in range(len(x)):
        f = model.bias + sum(coefs[k] * kernel_eval(model.kernel, sv[k], x[i]) for k in range(len(sv)))
        margin = y[i] * f
        if alpha[i] == 0:
            worst = max(worst, 1.0 - margin)
        elif alpha[i] >= model.C:
            worst = max(worst, margin - 1.0)
        else:
            worst = max(worst, abs(margin - 1.0))
    assert abs(alpha @ y) < 1e-9 * max(1.0, model.C)
    assert np.all((alpha >= 0) & (alpha <= model.C))
    return worst, alpha


class TestKernel:
    def test_rbf_identical_points(self):
        assert kernel_eval(KernelSpec("rbf", gamma=0.3), [1.0, 2.0], [1.0, 2.0]) == 1.0

    def test_linear_dot(self):
        assert kernel_eval(KernelSpec("linear"), [1, 2], [3, 4]) == 11.0

    def test_rbf_value(self):
        assert kernel_eval(KernelSpec("rbf", gamma=0.5), [0, 0], [2, 0]) == pytest.approx(math.exp(-2), abs=1e-15)

    def test_polynomial_value(self):
        assert kernel_eval(KernelSpec("polynomial", degree=2, coef0=1.0), [1, 2], [3, 4]) == 144.0

    def test_dimension_mismatch(self):
        with pytest.raises(DomainError):
            kernel_eval(KernelSpec("linear"), [1, 2], [1, 2, 3])

    def test_unknown_kind(self):
        with pytest.raises(ValidationError):
            KernelSpec("sigmoid")

    def test_default_gamma(self):
        assert KernelSpec().resolved(4).gamma == 0.25

    @pytest.mark.parametrize("kind", ["linear", "polynomial", "rbf"])
    def test_matrix_matches_loops(self, kind, rng):
        x = rng.normal(size=(7, 3))
        spec = KernelSpec(kind, gamma=0.4)
        np.testing.assert_allclose(kernel_matrix(spec, x, x), gram_direct(kind, x, gamma=0.4), rtol=1e-12, atol=1e-12)


class TestTrain:
    def test_two_point_linear(self, backend):
        model = train(TrainingSet([[0.0], [2.0]], [0, 1]), KernelSpec("linear"), C=100)
        assert predict(model, np.array([0.5])) == Direction.DOWN
        assert predict(model, np.array([1.5])) == Direction.UP
        assert decision_value(model, np.array([1.0])) == pytest.approx(0.0, abs=1e-8)

    def test_xor_against_oracle(self, backend):
        data = TrainingSet(XOR_X, XOR_Y)
        model = train(data, KernelSpec("rbf", gamma=1.0), C=100)
        assert predict_batch(model, XOR_X).tolist() == XOR_Y.tolist()
        oracle, _ = dual_qp_oracle(gram_direct("rbf", XOR_X, gamma=1.0), data.signed_labels(), 100.0)
        assert model.diagnostics["dual_objective"] == pytest.approx(oracle, rel=1e-6)

    def test_separable_linear_zero_errors(self, backend):
        rng = np.random.default_rng(3)
        x = rng.uniform(-1, 1, size=(20, 2))
        x[:, 0] += np.where(np.arange(20) < 10, -1.5, 1.5)
        y = (np.arange(20) >= 10).astype(int)
        data = TrainingSet(x, y)
        model = train(data, KernelSpec("linear"), C=100)
        assert predict_batch(model, x).tolist() == y.tolist()
        worst, _ = _audit(model, data)
        assert worst <= KKT_TOL

    def test_free_support_vector_on_margin(self, backend, rng):
        x = rng.normal(size=(30, 2))
        y = (x[:, 0] + 0.3 * rng.normal(size=30) > 0).astype(int)
        data = TrainingSet(x, y)
        model = train(data, KernelSpec("rbf"), C=10)
        worst, alpha = _audit(model, data)
        assert worst <= KKT_TOL
        signed = data.signed_labels()
        free = np.flatnonzero((alpha > 0) & (alpha < model.C))
        assert len(free) > 0
        for i in free:
            assert abs(decision_value(model, x[i]) - signed[i]) <= KKT_TOL

    def test_single_class(self):
        with pytest.raises(DegenerateTrainingError):
            train(TrainingSet([[0.0], [1.0]], [1, 1]))

    def test_cap_breach_raises_with_diagnostics(self, rng):
        x = rng.normal(size=(30, 2))
        y = rng.integers(0, 2, 30)
        y[:2] = [0, 1]
        with pytest.raises(NonConvergenceError) as info:
            train(TrainingSet(x, y), KernelSpec("rbf"), C=100, max_iter=3)
        assert info.value.diagnostics["iterations"] == 3

    def test_bad_labels(self):
        with pytest.raises(ValidationError):
            TrainingSet([[0.0], [1.0]], [0, 2])

    def test_json_round_trip(self, rng):
        x = rng.normal(size=(12, 3))
        y = (x[:, 1] > 0).astype(int)
        model = train(TrainingSet(x, y), KernelSpec("polynomial", degree=2), C=1)
        back = SVMModel.from_json(model.to_json())
        np.testing.assert_array_equal(decision_values(back, x), decision_values(model, x))

    def test_row_on_demand_path_matches_dense(self, rng, monkeypatch):
        from pcasvm import svm

        x = rng.normal(size=(25, 2))
        y = (x[:, 0] * x[:, 1] > 0).astype(int)
        dense = train(TrainingSet(x, y), KernelSpec("rbf"), C=10)
        monkeypatch.setattr(svm, "FULL_GRAM_LIMIT", 0)
        lazy = train(TrainingSet(x, y), KernelSpec("rbf"), C=10)
        assert lazy.diagnostics["dual_objective"] == pytest.approx(dense.diagnostics["dual_objective"], rel=1e-9)
        np.testing.assert_array_equal(predict_batch(lazy, x), predict_batch(dense, x))

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 10_000), st.sampled_from(["linear", "polynomial", "rbf"]), st.sampled_from([1.0, 100.0]))
    def test_matches_oracle_property(self, seed, kind, C):
        rng = np.random.default_rng(seed)
        p = int(rng.integers(4, 20))
        x = rng.normal(size=(p, 2))
        y = rng.integers(0, 2, p)
        y[:2] = [0, 1]
        data = TrainingSet(x, y)
        model = train(data, KernelSpec(kind), C=C)
        oracle, _ = dual_qp_oracle(gram_direct(kind, x, gamma=0.5), data.signed_labels(), C)
        assert model.diagnostics["dual_objective"] == pytest.approx(oracle, rel=1e-6)
        assert model.diagnostics["max_kkt_violation"] <= KKT_TOL


class TestDecision:
    def _fixture(self):
        return SVMModel(
            support_vectors=np.array([[0.0, 1.0], [1.0, -1.0], [2.0, 0.5]]),
            dual_coefs=np.array([0.7, -1.2, 0.5]),
            bias=-0.1,
            kernel=KernelSpec("rbf", gamma=0.8),
            C=10.0,
        )

    def test_hand_expanded_sum(self):
        model = self._fixture()
        x = np.array([0.4, 0.2])
        want = -0.1
        for coef, sv in zip(model.dual_coefs, model.support_vectors):
            want += coef * math.exp(-0.8 * ((x[0] - sv[0]) ** 2 + (x[1] - sv[1]) ** 2))
        assert decision_value(model, x) == pytest.approx(want, abs=1e-14)

    def test_tie_predicts_up(self):
        model = SVMModel(np.zeros((0, 2)), np.zeros(0), 0.0, KernelSpec("linear"), 1.0)
        assert predict(model, np.array([1.0, 2.0])) == Direction.UP

    def test_positive_is_up_negative_is_down(self):
        model = SVMModel(np.array([[1.0]]), np.array([1.0]), 0.0, KernelSpec("linear"), 1.0)
        assert predict(model, np.array([2.0])) == Direction.UP
        assert predict(model, np.array([-2.0])) == Direction.DOWN

    def test_dimension_mismatch(self):
        with pytest.raises(DomainError):
            decision_value(self._fixture(), np.zeros(3))


def test_pure_smo_reports_cap():
    gram = np.array([[1.0, 0.2], [0.2, 1.0]])
    _, _, it, gap = _pure.smo_solve(gram.__getitem__, np.diag(gram).copy(), np.array([1.0, -1.0]), 1.0, 1e-6, 0)
    assert it == 0 and gap > 1e-6


class TestInvariance:
    def _data(self, seed=8, p=30):
        rng = np.random.default_rng(seed)
        x = rng.normal(size=(p, 3))
        y = (x[:, 0] - x[:, 1] + 0.4 * rng.normal(size=p) > 0).astype(int)
        return x, y, rng.normal(size=(15, 3))

    @pytest.mark.parametrize("kind", ["linear", "polynomial", "rbf"])
    def test_row_permutation(self, kind):
        x, y, probes = self._data()
        perm = np.random.default_rng(1).permutation(len(y))
        a = train(TrainingSet(x, y), KernelSpec(kind), C=1.0)
        b = train(TrainingSet(x[perm], y[perm]), KernelSpec(kind), C=1.0)
        np.testing.assert_allclose(decision_values(a, probes), decision_values(b, probes), atol=1e-6)

    @pytest.mark.parametrize("kind", ["linear", "polynomial", "rbf"])
    def test_label_flip_negates(self, kind):
        x, y, probes = self._data()
        a = train(TrainingSet(x, y), KernelSpec(kind), C=1.0)
        b = train(TrainingSet(x, 1 - y), KernelSpec(kind), C=1.0)
        np.testing.assert_allclose(decision_values(b, probes), -decision_values(a, probes), atol=1e-8)
