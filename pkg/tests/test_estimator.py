import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from hawkesrep.core import (
    KernelSpec,
    MarkSpace,
    TargetSpec,
    affine_fn,
    select_bin_count,
    uniform_density,
)
from hawkesrep.estimator import HawkesRepresentation
from hawkesrep.infer import log_likelihood
from hawkesrep.represent import induced_ground_intensity
from hawkesrep.simulate import SimConfig, simulate_target

UNIT = MarkSpace.interval(0.0, 1.0)


@pytest.fixture(scope="module")
def events():
    spec = TargetSpec(
        space=UNIT,
        immigrant_rate=1.0,
        mark_density=uniform_density(UNIT),
        productivity=affine_fn(0.3, 0.4),
        beta=2.0,
        kernel=KernelSpec(convention="unnormalized"),
    )
    stream = simulate_target(spec, SimConfig(horizon=150.0, seed=3))
    return np.column_stack([stream.times, stream.marks])


@pytest.fixture(scope="module")
def fitted(events):
    est = HawkesRepresentation(
        n_components=2, kernel_convention="unnormalized", horizon=150.0, restarts=1
    )
    return est.fit(events)


class TestSklearnContract:
    def test_get_params_round_trip(self):
        est = HawkesRepresentation(n_components=3, tol=1e-4)
        params = est.get_params()
        assert params["n_components"] == 3
        assert params["tol"] == 1e-4
        est.set_params(restarts=5)
        assert est.restarts == 5

    def test_clone(self, fitted):
        fresh = clone(fitted)
        assert fresh.get_params() == fitted.get_params()
        assert not hasattr(fresh, "params_")

    def test_unfitted_predict_raises(self, events):
        with pytest.raises(NotFittedError):
            HawkesRepresentation().predict(events)


class TestFit:
    def test_fitted_attributes(self, fitted):
        assert fitted.n_components_ == 2
        assert fitted.params_.k == 2
        assert fitted.partition_.k == 2
        assert fitted.horizon_ == 150.0
        assert np.isfinite(fitted.result_.loglik)
        assert isinstance(fitted.result_.converged, bool)

    def test_component_count_defaults_to_bin_rule(self, events):
        est = HawkesRepresentation(horizon=150.0, restarts=1).fit(events)
        assert est.n_components_ == select_bin_count(len(events))

    def test_horizon_defaults_to_last_event(self, events):
        est = HawkesRepresentation(n_components=1, restarts=1).fit(events)
        assert est.horizon_ == events[-1, 0]

    def test_explicit_mark_space(self, events):
        est = HawkesRepresentation(
            n_components=2, mark_space=UNIT, horizon=150.0, restarts=1
        ).fit(events)
        assert est.partition_.space.bounds == (0.0, 1.0)

    def test_inferred_space_covers_marks(self, events):
        est = HawkesRepresentation(n_components=2, horizon=150.0, restarts=1)
        est.fit(events)
        lo, hi = est.partition_.space.bounds
        assert lo <= events[:, 1].min() and hi >= events[:, 1].max()


class TestValidation:
    def test_rejects_1d(self):
        with pytest.raises(ValueError):
            HawkesRepresentation().fit(np.array([1.0, 2.0, 3.0]))

    def test_rejects_wrong_width(self):
        with pytest.raises(ValueError, match=r"\(n, 2\)"):
            HawkesRepresentation().fit(np.ones((5, 3)))

    def test_rejects_non_increasing_times(self):
        X = np.array([[1.0, 0.5], [1.0, 0.6], [2.0, 0.7]])
        with pytest.raises(ValueError, match="strictly increasing"):
            HawkesRepresentation().fit(X)


class TestPredictScoreSample:
    def test_predict_matches_intensity_recursion(self, fitted, events):
        out = fitted.predict(events)
        stream = fitted._stream(events, space=fitted.partition_.space)
        expect = [
            induced_ground_intensity(
                fitted.params_, fitted.partition_, stream, float(t)
            )
            for t in events[:40, 0]
        ]
        np.testing.assert_allclose(out[:40], expect, rtol=1e-12, atol=1e-12)

    def test_predict_positive(self, fitted, events):
        assert np.all(fitted.predict(events) > 0)

    def test_score_is_log_likelihood(self, fitted, events):
        stream = fitted._stream(events, space=fitted.partition_.space)
        assert fitted.score(events) == pytest.approx(
            log_likelihood(fitted.params_, fitted.partition_, stream), abs=1e-12
        )

    def test_score_of_training_data_equals_fit_loglik(self, fitted, events):
        assert fitted.score(events) == pytest.approx(
            fitted.result_.loglik, rel=1e-9
        )

    def test_sample_shape_and_domain(self, fitted):
        X = fitted.sample(horizon=60.0, random_state=7)
        assert X.ndim == 2 and X.shape[1] == 2
        assert np.all(np.diff(X[:, 0]) > 0)
        assert X[-1, 0] <= 60.0
        lo, hi = fitted.partition_.space.bounds
        assert np.all((X[:, 1] >= lo) & (X[:, 1] <= hi))

    def test_sample_reproducible(self, fitted):
        a = fitted.sample(horizon=40.0, random_state=11)
        b = fitted.sample(horizon=40.0, random_state=11)
        assert np.array_equal(a, b)
