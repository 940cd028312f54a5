import numpy as np
import pytest
from scipy import stats

from hawkesrep.core import (
    EventStream,
    KernelSpec,
    MarkSpace,
    MvParams,
    TargetSpec,
    affine_fn,
    build_uniform_partition,
    constant_fn,
    uniform_density,
)
from hawkesrep.simulate import (
    ExplosionError,
    SimConfig,
    mv_residuals,
    simulate_mv,
    simulate_target,
    target_residuals,
)

UNIT = MarkSpace.interval(0.0, 1.0)


def eq10_spec(k_labels=None, alpha=1.0, beta=2.0, mu=1.0):
    """The unit-rate, half-branching target used throughout the tests:
    baseline mu, excitation alpha*exp(-beta u) per event, uniform marks."""
    space = MarkSpace.with_labels(range(1, k_labels + 1)) if k_labels else UNIT
    return TargetSpec(
        space=space,
        immigrant_rate=mu,
        mark_density=uniform_density(space),
        productivity=constant_fn(alpha),
        beta=beta,
        kernel=KernelSpec(convention="unnormalized"),
    )


class TestSimConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            SimConfig(horizon=0.0)
        with pytest.raises(ValueError):
            SimConfig(horizon=-1.0)
        with pytest.raises(ValueError):
            SimConfig(horizon=1.0, max_events=0)
        assert SimConfig(horizon=10).max_events == 10_000_000


class TestSimulateTarget:
    def test_deterministic_and_simple(self):
        spec = eq10_spec()
        a = simulate_target(spec, SimConfig(horizon=200.0, seed=77))
        b = simulate_target(spec, SimConfig(horizon=200.0, seed=77))
        assert np.array_equal(a.times, b.times)
        assert np.array_equal(a.marks, b.marks)
        assert np.all(np.diff(a.times) > 0)
        c = simulate_target(spec, SimConfig(horizon=200.0, seed=78))
        assert not np.array_equal(a.times, c.times)

    def test_no_excitation_reduces_to_poisson(self):
        space = UNIT
        spec = TargetSpec(space, 1.0, uniform_density(space), constant_fn(0.0), 1.0)
        stream = simulate_target(spec, SimConfig(horizon=1000.0, seed=5))
        assert abs(stream.n - 1000.0) < 3.0 * np.sqrt(1000.0)

    def test_mean_count_matches_stationary_rate(self):
        spec = eq10_spec()
        horizon = 500.0
        counts = [
            simulate_target(spec, SimConfig(horizon=horizon, seed=s)).n
            for s in range(40)
        ]
        counts = np.asarray(counts, dtype=float)
        expected = 1.0 * horizon / (1.0 - 0.5)
        se = counts.std(ddof=1) / np.sqrt(counts.size)
        assert abs(counts.mean() - expected) < 3.0 * se

    def test_uniform_label_fractions(self):
        spec = eq10_spec(k_labels=6)
        stream = simulate_target(spec, SimConfig(horizon=3000.0, seed=9))
        fractions = np.array(
            [(stream.marks == lab).mean() for lab in range(1, 7)]
        )
        se = np.sqrt((1 / 6) * (5 / 6) / stream.n)
        assert np.all(np.abs(fractions - 1 / 6) < 3.5 * se)

    def test_mark_dependent_ingredients_use_general_path(self):
        space = UNIT
        spec = TargetSpec(
            space,
            1.0,
            uniform_density(space),
            affine_fn(0.3, 0.4),
            affine_fn(1.0, 1.0),  # beta(M) = 1 + M
            KernelSpec(convention="unnormalized"),
        )
        a = simulate_target(spec, SimConfig(horizon=300.0, seed=3))
        b = simulate_target(spec, SimConfig(horizon=300.0, seed=3))
        assert np.array_equal(a.times, b.times) and np.array_equal(a.marks, b.marks)
        assert a.n > 100
        # residuals of the generating intensity behave like Exp(1)
        res = target_residuals(spec, a)
        assert stats.kstest(res, "expon").pvalue > 0.01

    def test_rejection_sampled_marks_match_density(self):
        space = UNIT
        spec = TargetSpec(space, 1.0, affine_fn(0.0, 2.0), constant_fn(0.0), 1.0)
        stream = simulate_target(spec, SimConfig(horizon=3000.0, seed=21))
        # f(m) = 2m has CDF m^2 on [0,1]
        assert stats.kstest(stream.marks, lambda x: x**2).pvalue > 0.01

    def test_custom_mark_sampler(self):
        space = UNIT
        spec = TargetSpec(
            space,
            1.0,
            affine_fn(0.0, 2.0),
            constant_fn(0.0),
            1.0,
            mark_sampler=lambda rng, n: np.sqrt(rng.random(n)),
        )
        stream = simulate_target(spec, SimConfig(horizon=2000.0, seed=4))
        assert stats.kstest(stream.marks, lambda x: x**2).pvalue > 0.01

    def test_explosion_carries_partial_stream(self):
        spec = eq10_spec(alpha=3.0, beta=2.0)  # branching 1.5
        with pytest.raises(ExplosionError) as excinfo:
            simulate_target(spec, SimConfig(horizon=10_000.0, seed=1, max_events=500))
        partial = excinfo.value.stream
        assert partial.n == 500
        assert np.all(np.diff(partial.times) > 0)
        assert np.all(partial.marks >= 0.0) and np.all(partial.marks <= 1.0)


class TestSimulateMv:
    def test_superposed_poisson_count(self):
        part = build_uniform_partition(UNIT, 2)
        params = MvParams([1.0, 1.0], np.zeros((2, 2)), np.ones((2, 2)))
        stream = simulate_mv(params, part, SimConfig(horizon=1000.0, seed=2))
        assert abs(stream.n - 1000.0) < 3.0 * np.sqrt(1000.0)

    def test_deterministic(self):
        part = build_uniform_partition(UNIT, 3)
        params = MvParams(
            [0.4, 0.3, 0.3],
            np.full((3, 3), 0.2),
            np.full((3, 3), 2.0),
            KernelSpec(),
        )
        a = simulate_mv(params, part, SimConfig(horizon=300.0, seed=11))
        b = simulate_mv(params, part, SimConfig(horizon=300.0, seed=11))
        assert np.array_equal(a.times, b.times) and np.array_equal(a.marks, b.marks)

    def test_marks_live_in_cells_and_discrete_labels(self):
        part = build_uniform_partition(MarkSpace.with_labels([2, 5, 9]), 3)
        params = MvParams([0.5] * 3, np.zeros((3, 3)), np.ones((3, 3)))
        stream = simulate_mv(params, part, SimConfig(horizon=100.0, seed=8))
        assert set(np.unique(stream.marks)) <= {2.0, 5.0, 9.0}

    def test_matches_target_simulator_in_distribution(self):
        # K=1 representation of the half-branching target: inter-event
        # times from both simulators should be exchangeable
        space = MarkSpace.with_labels([1])
        part = build_uniform_partition(space, 1)
        params = MvParams(
            [1.0], [[1.0]], [[2.0]], KernelSpec(convention="unnormalized")
        )
        spec = eq10_spec(k_labels=1)
        gaps_mv, gaps_tg = [], []
        for seed in range(60):
            cfg = SimConfig(horizon=100.0, seed=seed)
            gaps_mv.append(np.diff(simulate_mv(params, part, cfg).times))
            gaps_tg.append(np.diff(simulate_target(spec, cfg).times))
        p = stats.ks_2samp(np.concatenate(gaps_mv), np.concatenate(gaps_tg)).pvalue
        assert p > 0.01

    def test_near_critical_terminates(self):
        part = build_uniform_partition(UNIT, 1)
        params = MvParams([1.0], [[0.99]], [[1.0]], KernelSpec())
        stream = simulate_mv(params, part, SimConfig(horizon=50.0, seed=6))
        assert stream.horizon == 50.0

    def test_explosion(self):
        part = build_uniform_partition(UNIT, 1)
        params = MvParams([1.0], [[1.5]], [[1.0]], KernelSpec())
        with pytest.raises(ExplosionError) as excinfo:
            simulate_mv(params, part, SimConfig(horizon=1e5, seed=0, max_events=300))
        assert excinfo.value.stream.n == 300

    def test_dimension_mismatch(self):
        part = build_uniform_partition(UNIT, 2)
        params = MvParams([1.0], [[0.1]], [[1.0]])
        with pytest.raises(ValueError):
            simulate_mv(params, part, SimConfig(horizon=10.0))


class TestResiduals:
    def test_target_residuals_exponential(self):
        spec = eq10_spec()
        stream = simulate_target(spec, SimConfig(horizon=2000.0, seed=13))
        res = target_residuals(spec, stream)
        assert res.size == stream.n
        assert stats.kstest(res, "expon").pvalue > 0.01

    def test_mv_residuals_exponential(self):
        part = build_uniform_partition(UNIT, 2)
        params = MvParams(
            [0.5, 0.5],
            np.full((2, 2), 0.4),
            np.full((2, 2), 2.0),
            KernelSpec(),
        )
        stream = simulate_mv(params, part, SimConfig(horizon=1500.0, seed=14))
        res = mv_residuals(params, part, stream)
        assert stats.kstest(res, "expon").pvalue > 0.01

    def test_wrong_model_fails_ks(self):
        # residuals computed under a mis-specified (halved) rate are not Exp(1)
        spec = eq10_spec()
        stream = simulate_target(spec, SimConfig(horizon=2000.0, seed=15))
        wrong = eq10_spec(mu=0.5)
        res = target_residuals(wrong, stream)
        assert stats.kstest(res, "expon").pvalue < 1e-6

    def test_empty_stream(self):
        spec = eq10_spec()
        empty = EventStream([], [], 1.0, spec.space)
        assert target_residuals(spec, empty).size == 0
