import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from lewisweights import LpLewisWeights, leverage_scores
from conftest import random_matrix


@pytest.fixture(scope="module")
def fitted():
    X = random_matrix(0, 40, 3)
    return X, LpLewisWeights(p=4.0, alpha=0.5).fit(X)


class TestFit:
    def test_weights_certified(self, fitted):
        _, est = fitted
        assert est.certificate_.passed
        assert est.one_sided_certificate_.passed
        assert est.weights_.shape == (40,)
        assert est.weights_.sum() == pytest.approx(3.0, rel=1e-2)

    def test_transform_scores_match_weights(self, fitted):
        X, est = fitted
        scores = leverage_scores(est.transform(X))
        assert np.abs(est.weights_ / scores - 1).max() <= 0.5 + 1e-5

    def test_fit_transform_equals_fit_then_transform(self):
        X = random_matrix(1, 25, 2)
        a = LpLewisWeights(p=3.0, alpha=0.5).fit_transform(X)
        b = LpLewisWeights(p=3.0, alpha=0.5).fit(X).transform(X)
        np.testing.assert_array_equal(a, b)

    def test_sampling_probabilities(self, fitted):
        _, est = fitted
        probs = est.sampling_probabilities()
        assert probs.sum() == pytest.approx(1.0)
        assert (probs > 0).all()


class TestSklearnProtocol:
    def test_requires_fit_before_transform(self):
        with pytest.raises(NotFittedError):
            LpLewisWeights().transform(random_matrix(2, 10, 2))

    def test_transform_rejects_other_shapes(self, fitted):
        X, est = fitted
        with pytest.raises(ValueError, match="row aligned"):
            est.transform(X[:-1])

    def test_get_set_params_round_trip(self):
        est = LpLewisWeights(p=6.0, alpha=0.2, mode="adaptive", random_state=5)
        params = est.get_params()
        assert params["p"] == 6.0
        assert params["mode"] == "adaptive"
        other = LpLewisWeights().set_params(**params)
        assert other.get_params() == params

    def test_clone_preserves_params(self):
        est = LpLewisWeights(p=8.0, alpha=0.3, backend="sketch")
        cloned = clone(est)
        assert cloned.get_params() == est.get_params()

    def test_invalid_input_raises(self):
        with pytest.raises(ValueError):
            LpLewisWeights().fit(np.zeros((4, 2)))
