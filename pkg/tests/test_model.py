import numpy as np
import pytest

from sigspline.model import (
    SigSplineModel,
    conditional_increments,
    extend_path,
    feature_map,
    from_unit,
    generate,
    load_model,
    log_likelihood,
    model_from_dict,
    model_to_dict,
    parameter_count,
    sample_step,
    save_model,
    sliding_windows,
    to_unit,
    zero_model,
)
from sigspline.spline import spline_cdf, spline_density, spline_inverse
from tests.conftest import random_model


@pytest.fixture
def history(rng):
    return 0.1 + 0.8 * rng.random((3, 2))


class TestParameterCount:
    @pytest.mark.parametrize("level,expected", [(1, 512), (2, 1664), (3, 5120), (4, 15488)])
    def test_two_dimensional_64_bins(self, level, expected):
        assert parameter_count(2, level, 64) == expected

    def test_matches_stored_arrays(self, rng):
        m = random_model(rng, d=3, level=2, bins=5)
        assert sum(u.size for u in m.params) == parameter_count(3, 2, 5)


class TestFeatureMap:
    def test_zero_parameters_give_zero_features(self, history):
        m = zero_model(2, 2, 4)
        x = np.vstack([history, history[-1]])
        assert np.array_equal(feature_map(x, 1, m.params[0], 2), np.zeros(4))

    def test_empty_word_row_reads_constant_one(self, history, rng):
        u = np.zeros((4, 13))
        u[2, 0] = 1.7  # only the empty-word column of row 3
        x = np.vstack([history, history[-1]])
        assert np.allclose(feature_map(x, 1, u, 2), [0, 0, 1.7, 0])

    def test_masked_coordinates_are_invisible(self, history, rng):
        m = random_model(rng, d=2, level=2, bins=4)
        x = np.vstack([history, [0.3, 0.9]])
        y = np.vstack([history, [0.3, 0.123]])
        assert np.array_equal(
            feature_map(x, 2, m.params[1], 2), feature_map(y, 2, m.params[1], 2)
        )


class TestConditionalIncrements:
    def test_zero_parameters_are_uniform(self, history):
        m = zero_model(2, 2, 8)
        delta = conditional_increments(history, [0.5, 0.5], 1, m)
        assert np.allclose(delta, 1.0 / 8)

    def test_positive_and_normalized(self, history, rng):
        m = random_model(rng, d=2, level=2, bins=8)
        delta = conditional_increments(history, [0.5, 0.5], 2, m)
        assert np.all(delta > 0) and delta.sum() == pytest.approx(1.0, abs=1e-12)

    def test_partial_beyond_i_is_ignored(self, history, rng):
        m = random_model(rng, d=2, level=2, bins=4)
        a = conditional_increments(history, [0.5, 0.9], 1, m)
        b = conditional_increments(history, [0.1, 0.2], 1, m)
        assert np.array_equal(a, b)

    def test_window_limits_memory(self, rng):
        m = random_model(rng, d=2, level=2, bins=4, window=2)
        hist = 0.1 + 0.8 * rng.random((5, 2))
        other = hist.copy()
        other[:-2] = rng.random((3, 2))  # only rows beyond the window differ
        a = conditional_increments(hist, [0.5, 0.5], 1, m)
        b = conditional_increments(other, [0.5, 0.5], 1, m)
        assert np.array_equal(a, b)

    def test_full_history_sees_old_rows(self, rng):
        m = random_model(rng, d=2, level=2, bins=4, window=None)
        hist = 0.1 + 0.8 * rng.random((5, 2))
        other = hist.copy()
        other[0] = [0.9, 0.9]
        a = conditional_increments(hist, [0.5, 0.5], 1, m)
        b = conditional_increments(other, [0.5, 0.5], 1, m)
        assert not np.array_equal(a, b)


class TestLogLikelihood:
    def test_zero_parameters_uniform_density(self, rng):
        m = zero_model(3, 1, 16)
        x = rng.random((4, 3))
        assert log_likelihood(m, x) == pytest.approx(0.0, abs=1e-12)

    def test_piecewise_constant_in_the_bin(self, history, rng):
        m = random_model(rng, d=2, level=1, bins=4)
        x1 = np.vstack([history, [0.30, 0.60]])
        x2 = np.vstack([history, [0.30, 0.70]])  # same bins: [0.25,0.5) x [0.5,0.75)
        assert log_likelihood(m, x1) == log_likelihood(m, x2)

    def test_products_of_coordinate_densities(self, history, rng):
        m = random_model(rng, d=2, level=2, bins=8)
        target = np.array([0.37, 0.81])
        x = np.vstack([history, target])
        dens = 1.0
        for i in (1, 2):
            delta = conditional_increments(history, target, i, m)
            dens *= spline_density(target[i - 1], delta)
        assert np.exp(log_likelihood(m, x)) == pytest.approx(dens, rel=1e-12)

    def test_conditional_density_integrates_to_one(self, rng):
        m = random_model(rng, d=1, level=2, bins=4)
        hist = 0.2 + 0.6 * rng.random((3, 1))
        cells = 4000  # aligned with the 4 bins: midpoint rule is exact
        mids = (np.arange(cells) + 0.5) / cells
        total = 0.0
        for x in mids:
            total += np.exp(log_likelihood(m, np.vstack([hist, [[x]]])))
        assert total / cells == pytest.approx(1.0, abs=1e-10)

    def test_needs_two_rows(self, rng):
        with pytest.raises(ValueError):
            log_likelihood(zero_model(2, 1, 4), rng.random((1, 2)))


class TestSampling:
    def test_uniform_model_is_identity_on_u(self, history):
        m = zero_model(2, 2, 8)
        assert np.allclose(sample_step(m, history, [0.5, 0.5]), [0.5, 0.5])

    def test_endpoints(self, history, rng):
        m = random_model(rng, d=2, level=2, bins=4)
        assert np.array_equal(sample_step(m, history, [0.0, 0.0]), [0.0, 0.0])
        assert np.array_equal(sample_step(m, history, [1.0, 1.0]), [1.0, 1.0])

    def test_matches_inverse_of_conditional_cdf(self, history, rng):
        m = random_model(rng, d=2, level=2, bins=8)
        u = rng.random(2)
        drawn = sample_step(m, history, u)
        d1 = conditional_increments(history, drawn, 1, m)
        d2 = conditional_increments(history, drawn, 2, m)
        assert drawn[0] == spline_inverse(u[0], d1)
        assert drawn[1] == spline_inverse(u[1], d2)

    def test_empirical_cdf_matches_model_cdf(self, history, rng):
        # draws for a fixed conditional law, inverted in bulk (same math as
        # sample_step, which the test above ties to spline_inverse)
        m = random_model(rng, d=2, level=2, bins=8)
        delta = conditional_increments(history, [0.0, 0.0], 1, m)
        draws = np.sort(spline_inverse(rng.random(100_000), delta))
        model_cdf = spline_cdf(draws, delta)
        empirical_hi = np.arange(1, draws.size + 1) / draws.size
        empirical_lo = np.arange(0, draws.size) / draws.size
        ks = max(
            np.abs(empirical_hi - model_cdf).max(),
            np.abs(model_cdf - empirical_lo).max(),
        )
        assert ks <= 0.01

    def test_generate_deterministic_and_shaped(self, history, rng):
        m = random_model(rng, d=2, level=1, bins=4)
        a = generate(m, history, 4, rng_seed=11)
        b = generate(m, history, 4, rng_seed=11)
        assert a.shape == (history.shape[0] + 4, 2)
        assert np.array_equal(a, b)
        assert np.array_equal(a[: history.shape[0]], history)

    def test_generate_horizon_one_is_sample_step(self, history, rng):
        m = random_model(rng, d=2, level=1, bins=4)
        out = generate(m, history, 1, rng_seed=3)
        u = np.random.default_rng(3).random(2)
        assert np.array_equal(out[-1], sample_step(m, history, u))

    def test_extend_path_draws_sequentially(self, history, rng):
        m = random_model(rng, d=2, level=1, bins=4)
        gen = np.random.default_rng(9)
        path = extend_path(m, history, 2, gen)
        assert path.shape == (5, 2)


class TestScaling:
    def test_round_trip_in_range(self, rng):
        m = zero_model(2, 1, 4)
        m.scale_min, m.scale_max = np.array([-1.0, 0.0]), np.array([3.0, 10.0])
        raw = np.column_stack([rng.uniform(-1, 3, 20), rng.uniform(0, 10, 20)])
        assert np.allclose(from_unit(m, to_unit(m, raw)), raw, atol=1e-12)

    def test_out_of_range_clamps_inside(self):
        m = zero_model(1, 1, 4)
        m.scale_min, m.scale_max = np.array([0.0]), np.array([1.0])
        unit = to_unit(m, np.array([[-5.0], [0.5], [7.0]]))
        assert unit[0, 0] == 1e-6 and unit[2, 0] == 1 - 1e-6 and unit[1, 0] == 0.5

    def test_identity_without_state(self, rng):
        m = zero_model(2, 1, 4)
        raw = rng.random((5, 2))
        assert np.array_equal(to_unit(m, raw), raw)


class TestPersistence:
    def test_round_trip_is_bitwise(self, tmp_path, rng):
        m = random_model(rng, d=2, level=2, bins=4, window=3)
        m.scale_min, m.scale_max = np.array([-1.3, 0.2]), np.array([2.71, 9.9])
        path = tmp_path / "model.json"
        save_model(m, path)
        loaded = load_model(path)
        assert loaded.d == m.d and loaded.level == m.level and loaded.bins == m.bins
        assert loaded.window == m.window
        assert all(np.array_equal(a, b) for a, b in zip(loaded.params, m.params))
        assert np.array_equal(loaded.scale_min, m.scale_min)
        assert np.array_equal(loaded.scale_max, m.scale_max)

    def test_rejects_unknown_format(self):
        with pytest.raises(ValueError):
            model_from_dict({"format": "something-else"})

    def test_dict_round_trip(self, rng):
        m = random_model(rng, d=1, level=1, bins=3)
        again = model_from_dict(model_to_dict(m))
        assert np.array_equal(again.params[0], m.params[0])


class TestValidation:
    def test_wrong_parameter_shape(self):
        with pytest.raises(ValueError):
            SigSplineModel(d=2, level=1, bins=4, params=[np.zeros((4, 3))] * 2)

    def test_wrong_parameter_list_length(self):
        with pytest.raises(ValueError):
            SigSplineModel(d=2, level=1, bins=4, params=[np.zeros((4, 4))])

    def test_sliding_windows(self):
        x = np.arange(10.0).reshape(5, 2)
        wins = sliding_windows(x, 2)
        assert len(wins) == 4
        assert np.array_equal(wins[0], x[:2])
        with pytest.raises(ValueError):
            sliding_windows(x, 6)
