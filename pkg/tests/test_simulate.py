import math

import numpy as np
import pytest

from conftest import random_cov
from equidrift import (
    CovMatrix,
    ModelParams,
    VolMatrix,
    WealthLaw,
    WeightVector,
    optimal_wealth_density,
    optimal_wealth_moments,
    pi_star,
    replay_wealth,
    simulate_paths,
    sym_sqrt,
)
from equidrift.errors import DimensionMismatch, NonPositiveGridPoint

FIG_LEFT = dict(w=1.0, lam=0.1, mu=0.2, r=0.03, t=1.0)


def fig_left_kappa() -> float:
    return (FIG_LEFT["lam"] - FIG_LEFT["r"]) / (FIG_LEFT["mu"] - FIG_LEFT["r"])


class TestSimulatePaths:
    def test_vanishing_volatility_grows_at_r(self):
        params = ModelParams(sigma=VolMatrix(1e-12 * np.eye(2)), mu=0.2, r=0.03)
        paths = simulate_paths(params, horizon=1.0, steps=4, n_paths=3, seed=0)
        ratios = paths.prices[:, -1, :] / paths.prices[:, 0, :]
        np.testing.assert_allclose(ratios, math.exp(0.03), rtol=1e-9)

    def test_single_asset_price_mean(self):
        params = ModelParams(sigma=VolMatrix([[0.2]]), mu=0.2, r=0.03)
        paths = simulate_paths(params, horizon=1.0, steps=1, n_paths=100_000, seed=5)
        ratios = paths.prices[:, -1, 0] / paths.prices[:, 0, 0]
        se = ratios.std(ddof=1) / math.sqrt(ratios.size)
        assert abs(ratios.mean() - math.exp(0.064)) <= 4 * se

    def test_deterministic_per_seed(self):
        params = ModelParams(sigma=sym_sqrt(random_cov(np.random.default_rng(1), 3)), mu=0.2, r=0.03)
        a = simulate_paths(params, 1.0, 12, 50, seed=99)
        b = simulate_paths(params, 1.0, 12, 50, seed=99)
        np.testing.assert_array_equal(a.prices, b.prices)
        np.testing.assert_array_equal(a.driver_increments, b.driver_increments)
        np.testing.assert_array_equal(a.times, b.times)

    def test_path_count_does_not_change_earlier_paths(self):
        # per-path substreams: path i depends only on (seed, i), so asking
        # for more paths must not reshuffle the ones already drawn
        params = ModelParams(sigma=VolMatrix(0.3 * np.eye(2)), mu=0.2, r=0.03)
        small = simulate_paths(params, 1.0, 6, 3, seed=17)
        large = simulate_paths(params, 1.0, 6, 8, seed=17)
        np.testing.assert_array_equal(large.prices[:3], small.prices)

    def test_increment_variance_matches_grid(self):
        params = ModelParams(sigma=VolMatrix(np.eye(2)), mu=0.2, r=0.03)
        paths = simulate_paths(params, horizon=2.0, steps=8, n_paths=4000, seed=3)
        dt = paths.dt
        assert dt == 0.25
        sample_var = paths.driver_increments.var(ddof=1)
        assert abs(sample_var - dt) <= 0.05 * dt

    def test_initial_prices_respected(self):
        params = ModelParams(
            sigma=VolMatrix(0.2 * np.eye(2)), mu=0.2, r=0.03, s0=[5.0, 7.0]
        )
        paths = simulate_paths(params, 1.0, 3, 2, seed=0)
        np.testing.assert_allclose(paths.prices[:, 0, :], [[5.0, 7.0]] * 2, rtol=1e-15)

    def test_prices_strictly_positive(self):
        params = ModelParams(sigma=VolMatrix(2.0 * np.eye(2)), mu=0.2, r=0.03)
        paths = simulate_paths(params, 5.0, 50, 200, seed=8)
        assert np.all(paths.prices > 0.0)

    def test_rejects_bad_grid(self):
        params = ModelParams(sigma=VolMatrix(np.eye(2)), mu=0.2, r=0.03)
        with pytest.raises(ValueError):
            simulate_paths(params, horizon=0.0, steps=2, n_paths=2, seed=0)
        with pytest.raises(ValueError):
            simulate_paths(params, horizon=1.0, steps=0, n_paths=2, seed=0)


class TestReplayWealth:
    def test_all_cash_grows_at_r_exactly(self):
        params = ModelParams(sigma=VolMatrix(0.5 * np.eye(2)), mu=0.2, r=0.03)
        paths = simulate_paths(params, horizon=1.0, steps=8, n_paths=20, seed=2)
        cash = WeightVector(weights=[0.0, 0.0], kappa=None, exposure=0.0)
        wealth = replay_wealth(paths, cash, params, w0=2.0)
        np.testing.assert_array_equal(wealth, np.full(20, 2.0 * math.exp(0.03)))

    def test_optimal_policy_moments(self):
        n = 5
        rng = np.random.default_rng(42)
        sigma = sym_sqrt(random_cov(rng, n, scale=0.1))
        params = ModelParams(sigma=sigma, mu=FIG_LEFT["mu"], r=FIG_LEFT["r"])
        kappa = fig_left_kappa()
        wv = pi_star(sigma, kappa)
        paths = simulate_paths(params, FIG_LEFT["t"], 16, 40_000, seed=7)
        wealth = replay_wealth(paths, wv, params, FIG_LEFT["w"])

        law = WealthLaw(w=FIG_LEFT["w"], lam=FIG_LEFT["lam"], kappa=kappa, n=n, t=FIG_LEFT["t"])
        mean_th, var_th = optimal_wealth_moments(law)
        se = wealth.std(ddof=1) / math.sqrt(wealth.size)
        assert abs(wealth.mean() - mean_th) <= 4 * se
        assert abs(wealth.var(ddof=1) - var_th) <= 0.05 * var_th

    def test_wealth_strictly_positive_under_leverage(self):
        params = ModelParams(sigma=VolMatrix(0.4 * np.eye(3)), mu=0.2, r=0.03)
        heavy = WeightVector(weights=[3.0, -1.0, 2.0], kappa=None, exposure=4.0)
        paths = simulate_paths(params, 2.0, 40, 500, seed=21)
        wealth = replay_wealth(paths, heavy, params, w0=1.0)
        assert np.all(wealth > 0.0)

    def test_per_step_policy_callable(self):
        params = ModelParams(sigma=VolMatrix(0.2 * np.eye(2)), mu=0.2, r=0.03)
        paths = simulate_paths(params, 1.0, 4, 10, seed=4)
        all_a = WeightVector(weights=[1.0, 0.0], kappa=None, exposure=1.0)
        all_b = WeightVector(weights=[0.0, 1.0], kappa=None, exposure=1.0)

        def alternating(step):
            return all_a if step % 2 == 0 else all_b

        wealth = replay_wealth(paths, alternating, params, 1.0)
        assert np.all(wealth > 0.0)
        assert not np.array_equal(wealth, replay_wealth(paths, all_a, params, 1.0))

    def test_dimension_mismatch(self):
        params = ModelParams(sigma=VolMatrix(np.eye(2)), mu=0.2, r=0.03)
        paths = simulate_paths(params, 1.0, 2, 2, seed=0)
        wrong = WeightVector(weights=[1.0, 0.0, 0.0], kappa=None, exposure=1.0)
        with pytest.raises(DimensionMismatch):
            replay_wealth(paths, wrong, params, 1.0)

    def test_variance_floor_among_equal_mean_exposures(self):
        # any constant driver-exposure vector with the same coordinate sum
        # has terminal-wealth variance at least the equalized one
        n = 3
        sigma = VolMatrix(np.eye(n))
        params = ModelParams(sigma=sigma, mu=FIG_LEFT["mu"], r=FIG_LEFT["r"])
        kappa = fig_left_kappa()
        paths = simulate_paths(params, 1.0, 8, 30_000, seed=13)
        law = WealthLaw(w=1.0, lam=FIG_LEFT["lam"], kappa=kappa, n=n, t=1.0)
        _, var_opt = optimal_wealth_moments(law)

        rng = np.random.default_rng(55)
        for _ in range(10):
            p = rng.normal(loc=kappa / n, scale=0.3, size=n)
            p += (kappa - p.sum()) / n
            pi = np.linalg.solve(sigma.entries.T, p)
            wv = WeightVector(weights=pi, kappa=None, exposure=float(pi.sum()))
            wealth = replay_wealth(paths, wv, params, 1.0)
            var_hat = wealth.var(ddof=1)
            centered = wealth - wealth.mean()
            se_var = math.sqrt(
                ((centered ** 4).mean() - var_hat ** 2) / wealth.size
            )
            assert var_hat >= var_opt - 2 * se_var

    def test_rejects_nonpositive_initial_wealth(self):
        params = ModelParams(sigma=VolMatrix(np.eye(2)), mu=0.2, r=0.03)
        paths = simulate_paths(params, 1.0, 2, 2, seed=0)
        with pytest.raises(ValueError):
            replay_wealth(paths, WeightVector([0.5, 0.5], None, 1.0), params, 0.0)


class TestWealthLaw:
    def test_zero_horizon_moments(self):
        law = WealthLaw(w=3.0, lam=0.1, kappa=0.5, n=4, t=0.0)
        assert optimal_wealth_moments(law) == (3.0, 0.0)

    def test_reference_moment_values(self):
        law = WealthLaw(w=1.0, lam=0.1, kappa=1.0, n=1, t=1.0)
        mean, var = optimal_wealth_moments(law)
        assert mean == pytest.approx(math.exp(0.1), rel=1e-15)
        assert var == pytest.approx(math.exp(0.2) * (math.e - 1.0), rel=1e-14)

    def test_variance_strictly_decreasing_in_asset_count(self):
        variances = [
            optimal_wealth_moments(WealthLaw(w=1.0, lam=0.1, kappa=0.8, n=n, t=1.0))[1]
            for n in (1, 2, 5, 25, 100, 10_000)
        ]
        assert all(a > b for a, b in zip(variances, variances[1:]))
        assert variances[-1] < 1e-4 * variances[0]

    def test_from_rates(self):
        law = WealthLaw.from_rates(w=1.0, lam=0.1, mu=0.2, r=0.03, n=5, t=1.0)
        assert law.kappa == pytest.approx(0.07 / 0.17, rel=1e-15)
        with pytest.raises(ValueError):
            WealthLaw.from_rates(w=1.0, lam=0.1, mu=0.05, r=0.05, n=5, t=1.0)

    def test_validation(self):
        with pytest.raises(ValueError):
            WealthLaw(w=0.0, lam=0.1, kappa=1.0, n=1, t=1.0)
        with pytest.raises(ValueError):
            WealthLaw(w=1.0, lam=0.1, kappa=-0.2, n=1, t=1.0)


class TestWealthDensity:
    def test_mode_value_matches_closed_form(self):
        law = WealthLaw(w=1.0, lam=0.1, kappa=0.9, n=3, t=1.0)
        m, s = law.log_mean, law.log_sd
        mode = math.exp(m - s * s)
        peak = math.exp(s * s / 2.0 - m) / (s * math.sqrt(2.0 * math.pi))
        got = optimal_wealth_density(law, [mode])[0]
        assert got == pytest.approx(peak, rel=1e-12)

    def test_integrates_to_one(self):
        law = WealthLaw(w=1.0, lam=0.1, kappa=1.2, n=2, t=1.0)
        m, s = law.log_mean, law.log_sd
        grid = np.exp(np.linspace(m - 6.5 * s, m + 6.5 * s, 400_000))
        total = np.trapezoid(optimal_wealth_density(law, grid), grid)
        assert abs(total - 1.0) <= 1e-6

    def test_wide_fixed_grid_captures_mass(self):
        # at kappa = 2 the log-sd is 2.0 and the upper tail beyond 20
        # still holds ~0.7% of the mass, so the threshold drops there
        grid = np.linspace(1e-4, 20.0, 200_000)
        for kappa, floor in ((0.5, 0.999), (1.0, 0.999), (2.0, 0.99)):
            law = WealthLaw(w=1.0, lam=0.1, kappa=kappa, n=1, t=1.0)
            total = np.trapezoid(optimal_wealth_density(law, grid), grid)
            assert total >= floor

    def test_curves_tighten_with_asset_count(self):
        kappa = fig_left_kappa()
        grid = np.linspace(0.01, 3.0, 2000)
        peaks = []
        for n in (1, 5, 25):
            law = WealthLaw(
                w=FIG_LEFT["w"], lam=FIG_LEFT["lam"], kappa=kappa, n=n, t=FIG_LEFT["t"]
            )
            peaks.append(optimal_wealth_density(law, grid).max())
        assert peaks[0] < peaks[1] < peaks[2]

    def test_huge_asset_count_concentrates_near_growth_level(self):
        kappa = fig_left_kappa()
        law = WealthLaw(w=1.0, lam=0.1, kappa=kappa, n=10**6, t=1.0)
        center = math.exp(0.1)
        grid = np.linspace(0.99 * center, 1.01 * center, 50_000)
        total = np.trapezoid(optimal_wealth_density(law, grid), grid)
        assert total >= 0.99

    def test_rejects_nonpositive_grid(self):
        law = WealthLaw(w=1.0, lam=0.1, kappa=1.0, n=1, t=1.0)
        with pytest.raises(NonPositiveGridPoint):
            optimal_wealth_density(law, [0.5, 0.0, 1.0])
        with pytest.raises(NonPositiveGridPoint):
            optimal_wealth_density(law, [-1.0])
