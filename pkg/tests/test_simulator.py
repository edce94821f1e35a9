"""
Tests for the exact OU simulator.

Statistical checks use fixed seeds and 4-standard-error tolerances.
"""

import itertools

import numpy as np
import pytest
from scipy import stats

from vasicek_gpr_mcp.affine import (
    cov_log_bond,
    factor_covariance,
    factor_mean,
    mean_log_bond,
    mixed_second_moment,
)
from vasicek_gpr_mcp.errors import ConfigurationError
from vasicek_gpr_mcp.models import CurveId, MultiCurveParams, SingleCurveParams, TimeGrid
from vasicek_gpr_mcp.simulator import (
    make_rng,
    sample_log_bonds,
    simulate_correlated_ou,
    simulate_log_bonds,
    simulate_ou_path,
    sub_seed,
)

N_PATHS = 100_000


def _within(sample: np.ndarray, expected: float, n_se: float = 4.0) -> bool:
    se = float(np.std(sample, ddof=1)) / np.sqrt(sample.size)
    return abs(float(np.mean(sample)) - expected) <= n_se * se


class TestRandomStreams:
    """Test seeding of the Philox streams."""

    def test_same_seed_same_stream(self):
        assert np.array_equal(make_rng(42).standard_normal(5), make_rng(42).standard_normal(5))

    def test_different_seeds_differ(self):
        assert not np.array_equal(make_rng(1).standard_normal(5), make_rng(2).standard_normal(5))

    def test_sub_seed_is_xor(self):
        assert sub_seed(0, 7) == 7
        assert sub_seed(0b1010, 0b0110) == 0b1100

    def test_uses_philox(self):
        assert isinstance(make_rng(3).bit_generator, np.random.Philox)


class TestShortRatePaths:
    """Test single-factor and correlated OU paths."""

    def test_zero_volatility_is_deterministic(self, small_grid):
        params = SingleCurveParams(r0=0.5, kappa=2.0, theta=0.1, sigma=0.0)
        path = simulate_ou_path(params, small_grid, make_rng(0))
        np.testing.assert_allclose(path, factor_mean(params, small_grid.points), rtol=1e-12)

    def test_path_shapes(self, single_params, small_grid):
        assert simulate_ou_path(single_params, small_grid, make_rng(0)).shape == (10,)
        assert simulate_ou_path(single_params, small_grid, make_rng(0), n_paths=3).shape == (3, 10)

    def test_marginal_moments_at_one_year(self, single_params):
        grid = TimeGrid.uniform(4, 1.0)
        paths = simulate_ou_path(single_params, grid, make_rng(2024), n_paths=N_PATHS)
        terminal = paths[:, -1]
        assert _within(terminal, factor_mean(single_params, 1.0))

        variance = factor_covariance(single_params, 1, 1, 1.0, 1.0)
        squared = (terminal - float(factor_mean(single_params, 1.0))) ** 2
        assert _within(squared, variance)

    def test_terminal_distribution_is_gaussian(self, single_params):
        grid = TimeGrid.uniform(8, 1.0)
        terminal = simulate_ou_path(single_params, grid, make_rng(99), n_paths=20_000)[:, -1]
        sd = np.sqrt(factor_covariance(single_params, 1, 1, 1.0, 1.0))
        result = stats.kstest(terminal, "norm", args=(factor_mean(single_params, 1.0), sd))
        assert result.pvalue > 1e-3

    def test_one_step_matches_two_steps(self, single_params):
        one = simulate_ou_path(single_params, TimeGrid(points=[1.0], maturity=1.0), make_rng(41), n_paths=N_PATHS)
        two = simulate_ou_path(
            single_params, TimeGrid(points=[0.5, 1.0], maturity=1.0), make_rng(43), n_paths=N_PATHS
        )
        a, b = one[:, -1], two[:, -1]
        se = np.sqrt((a.var(ddof=1) + b.var(ddof=1)) / N_PATHS)
        assert abs(a.mean() - b.mean()) <= 4.0 * se

        centre = float(factor_mean(single_params, 1.0))
        sq_a, sq_b = (a - centre) ** 2, (b - centre) ** 2
        se = np.sqrt((sq_a.var(ddof=1) + sq_b.var(ddof=1)) / N_PATHS)
        assert abs(sq_a.mean() - sq_b.mean()) <= 4.0 * se

    def test_full_correlation_gives_identical_paths(self, single_params, small_grid):
        params = MultiCurveParams(factor1=single_params, factor2=single_params, rho=1.0)
        rates1, rates2 = simulate_correlated_ou(params, small_grid, make_rng(5), n_paths=50)
        np.testing.assert_allclose(rates1, rates2, rtol=1e-14, atol=0.0)

    def test_independent_factors_are_uncorrelated(self, multi_params):
        grid = TimeGrid.uniform(4, 1.0)
        rates1, rates2 = simulate_correlated_ou(multi_params, grid, make_rng(17), n_paths=N_PATHS)
        corr = np.corrcoef(rates1[:, -1], rates2[:, -1])[0, 1]
        assert abs(corr) <= 4.0 / np.sqrt(N_PATHS)

    @pytest.mark.parametrize("s_index, t_index", [(3, 3), (1, 3), (3, 1)])
    def test_mixed_second_moment(self, correlated_params, s_index, t_index):
        grid = TimeGrid.uniform(4, 1.0)
        rates1, rates2 = simulate_correlated_ou(correlated_params, grid, make_rng(31), n_paths=N_PATHS)
        s, t = grid.points[s_index], grid.points[t_index]
        products = rates1[:, s_index] * rates2[:, t_index]
        assert _within(products, mixed_second_moment(correlated_params, s, t))


class TestLogBondSeries:
    """Test log-bond series built from the factor paths."""

    def test_log_price_at_maturity_is_zero(self, multi_params, small_grid):
        series = simulate_log_bonds(multi_params, [CurveId.ZERO, CurveId.DELTA], small_grid, make_rng(1))
        assert series.curves[CurveId.ZERO][-1] == 0.0
        assert series.curves[CurveId.DELTA][-1] == 0.0

    def test_series_layout(self, multi_params, small_grid):
        series = simulate_log_bonds(multi_params, [CurveId.DELTA, CurveId.ZERO], small_grid, make_rng(1), seed=1)
        assert list(series.curves) == [CurveId.ZERO, CurveId.DELTA]
        assert series.short_rates.shape == (2, 10)
        assert series.seed == 1

    def test_reproducible_for_fixed_seed(self, single_params, small_grid):
        first = simulate_log_bonds(single_params, [CurveId.ZERO], small_grid, make_rng(8))
        second = simulate_log_bonds(single_params, [CurveId.ZERO], small_grid, make_rng(8))
        assert np.array_equal(first.curves[CurveId.ZERO], second.curves[CurveId.ZERO])

    def test_noise_changes_values(self, single_params, small_grid):
        clean = simulate_log_bonds(single_params, [CurveId.ZERO], small_grid, make_rng(8))
        noisy = simulate_log_bonds(single_params, [CurveId.ZERO], small_grid, make_rng(8), noise_var=1e-4)
        assert not np.array_equal(clean.curves[CurveId.ZERO], noisy.curves[CurveId.ZERO])

    def test_delta_curve_needs_multi_params(self, single_params, small_grid):
        with pytest.raises(ConfigurationError):
            simulate_log_bonds(single_params, [CurveId.DELTA], small_grid, make_rng(0))

    def test_at_least_one_curve(self, single_params, small_grid):
        with pytest.raises(ConfigurationError):
            simulate_log_bonds(single_params, [], small_grid, make_rng(0))


class TestKernelAgreement:
    """Sample moments of simulated log prices match the closed-form kernel."""

    @pytest.fixture(scope="class")
    def sampled(self):
        params = MultiCurveParams(
            factor1=SingleCurveParams(r0=0.5, kappa=2.0, theta=0.1, sigma=0.2),
            factor2=SingleCurveParams(r0=0.7, kappa=0.5, theta=0.03, sigma=0.8),
            rho=0.6,
        )
        grid = TimeGrid.uniform(5, 1.0)
        log_prices, _ = sample_log_bonds(params, [CurveId.ZERO, CurveId.DELTA], grid, make_rng(123), N_PATHS)
        return params, grid, log_prices

    @pytest.mark.parametrize("curve", list(CurveId))
    def test_means(self, sampled, curve):
        params, grid, log_prices = sampled
        for i in range(grid.size - 1):
            assert _within(log_prices[curve][:, i], mean_log_bond(params, curve, grid.points[i], 1.0))

    @pytest.mark.parametrize(
        "curve_a, curve_b, i, j",
        [
            (CurveId.ZERO, CurveId.ZERO, 1, 3),
            (CurveId.DELTA, CurveId.DELTA, 2, 2),
            (CurveId.ZERO, CurveId.DELTA, 0, 2),
            (CurveId.DELTA, CurveId.ZERO, 3, 1),
        ],
    )
    def test_covariances(self, sampled, curve_a, curve_b, i, j):
        params, grid, log_prices = sampled
        a = log_prices[curve_a][:, i]
        b = log_prices[curve_b][:, j]
        products = (a - a.mean()) * (b - b.mean())
        expected = cov_log_bond(params, curve_a, curve_b, grid.points[i], grid.points[j], 1.0)
        assert _within(products, expected)

    @pytest.mark.parametrize("curve_b", list(CurveId))
    def test_full_grid_against_zero_curve(self, sampled, curve_b):
        params, grid, log_prices = sampled
        for i, j in itertools.product(range(3), repeat=2):
            a = log_prices[CurveId.ZERO][:, i]
            b = log_prices[curve_b][:, j]
            products = (a - a.mean()) * (b - b.mean())
            expected = cov_log_bond(params, CurveId.ZERO, curve_b, grid.points[i], grid.points[j], 1.0)
            assert _within(products, expected), f"({i}, {j})"
