import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from microclust.gaussian_assignment import (
    AssignmentSimConfig,
    DimensionSimConfig,
    EquallySpacedMixture1D,
    build_lattice_means,
    concentration_and_zero_correct,
    correct_prob_1d,
    correct_prob_bounds_p,
    ml_assign,
    ml_assign_grid,
    run_assignment_sim,
    run_dimension_sim,
    sigma_from_scale,
)
from microclust.seeding import substream


def brute_scan(y, means):
    return int(np.argmin(np.abs(np.asarray(means) - y)))


class TestMlAssign:
    def test_exact_hit(self):
        means = np.array([0.1, 0.2, 0.3, 0.4])
        assert ml_assign(0.3, means) == 2

    def test_midpoint_goes_to_lower_index(self):
        means = np.array([0.0, 1.0, 2.0])
        assert ml_assign(0.5, means) == 0
        assert ml_assign(1.5, means) == 1

    def test_grid_example(self):
        mix = EquallySpacedMixture1D(n_components=100, sigma=0.01)
        means = mix.means()
        # 0.057 sits nearest 0.06 = mean index 5 (0-based); oracle is the scan.
        assert brute_scan(0.057, means) == 5
        assert int(ml_assign_grid(0.057, mix)) == 5
        assert ml_assign(0.057, means) == 5

    def test_multivariate(self):
        means = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
        assert ml_assign(np.array([0.9, 0.2]), means) == 1

    def test_empty_means_rejected(self):
        with pytest.raises(ValueError):
            ml_assign(0.0, np.array([]))

    def test_fast_path_matches_scan_in_bulk(self):
        rng = substream(71)
        for n in (3, 17, 250):
            mix = EquallySpacedMixture1D(n_components=n, sigma=0.5, range_width=2.3, origin=-0.7)
            means = mix.means()
            ys = rng.uniform(-2.0, 3.0, size=20_000)
            fast = ml_assign_grid(ys, mix)
            scan = np.abs(ys[:, None] - means[None, :]).argmin(axis=1)
            assert (fast == scan).all()

    def test_grid_midpoint_tie_matches_scan(self):
        mix = EquallySpacedMixture1D(n_components=8, sigma=1.0)
        means = mix.means()
        midpoints = (means[:-1] + means[1:]) / 2.0
        fast = ml_assign_grid(midpoints, mix)
        scan = np.abs(midpoints[:, None] - means[None, :]).argmin(axis=1)
        assert (fast == scan).all()


@given(
    st.floats(min_value=-5, max_value=5),
    st.floats(min_value=-100, max_value=100),
    st.floats(min_value=0.01, max_value=50),
)
def test_ml_assign_translation_and_scale_invariance(y, shift, scale):
    means = np.array([-1.3, -0.2, 0.4, 2.0])
    base = ml_assign(y, means)
    assert ml_assign(y + shift, means + shift) == base
    assert ml_assign(y * scale, means * scale) == base


class TestCorrectProb1d:
    def test_limits(self):
        wide = EquallySpacedMixture1D(n_components=10, sigma=1e-9)
        assert correct_prob_1d(wide) == pytest.approx(1.0)
        narrow = EquallySpacedMixture1D(n_components=10, sigma=1e9)
        assert correct_prob_1d(narrow) == pytest.approx(0.0, abs=1e-6)

    def test_interior_formula(self):
        mix = EquallySpacedMixture1D(n_components=50, sigma=0.004)
        x = mix.spacing / (2 * mix.sigma)
        assert correct_prob_1d(mix) == pytest.approx(2 * stats.norm.cdf(x) - 1)

    def test_edge_exact_average(self):
        mix = EquallySpacedMixture1D(n_components=4, sigma=0.1)
        x = mix.spacing / (2 * mix.sigma)
        interior = 2 * stats.norm.cdf(x) - 1
        edge = stats.norm.cdf(x)
        assert correct_prob_1d(mix, edge_exact=True) == pytest.approx(
            (2 * interior + 2 * edge) / 4
        )

    def test_sigma_scale_c2_value(self):
        # sigma = c/N convention at c = 2: spacing/(2 sigma) = 1/4.
        n = 5000
        mix = EquallySpacedMixture1D(n_components=n, sigma=sigma_from_scale(2.0, n))
        value = correct_prob_1d(mix)
        assert value == pytest.approx(2 * stats.norm.cdf(0.25) - 1)
        assert value == pytest.approx(0.2, abs=0.01)

    def test_scale_conventions(self):
        assert sigma_from_scale(2.0, 100, "sigma") == pytest.approx(0.02)
        assert sigma_from_scale(2.0, 100, "sigma-squared") == pytest.approx(math.sqrt(0.02))
        with pytest.raises(ValueError):
            sigma_from_scale(2.0, 100, "bogus")
        with pytest.raises(ValueError):
            sigma_from_scale(-1.0, 100)


class TestConcentrationAndZeroCorrect:
    def test_concentration_at_t_one(self):
        mix = EquallySpacedMixture1D(n_components=30, sigma=0.5)
        bounds = concentration_and_zero_correct(mix, 1.0)
        assert bounds.concentration_bound == pytest.approx(2 * math.exp(-60))

    def test_limit_value_at_special_ratio(self):
        # range_width/sigma = sqrt(2 pi) makes the limit exactly 1/e.
        sigma = 1.0 / math.sqrt(2 * math.pi)
        for n in (10, 1000):
            mix = EquallySpacedMixture1D(n_components=n, sigma=sigma)
            assert concentration_and_zero_correct(mix, 0.1).zero_correct_limit == pytest.approx(
                math.exp(-1)
            )

    def test_finite_value_converges_monotonically(self):
        sigma = 0.4
        values = []
        for n in (5, 10, 50, 100, 1000, 10_000, 100_000):
            mix = EquallySpacedMixture1D(n_components=n, sigma=sigma)
            values.append(concentration_and_zero_correct(mix, 0.1).zero_correct_finite)
        limit = math.exp(-1.0 / (math.sqrt(2 * math.pi) * sigma))
        assert all(a <= b + 1e-15 for a, b in zip(values, values[1:]))
        assert values[-1] == pytest.approx(limit, rel=1e-4)

    def test_t_validated(self):
        mix = EquallySpacedMixture1D(n_components=5, sigma=1.0)
        with pytest.raises(ValueError):
            concentration_and_zero_correct(mix, 0.0)


class TestLattice:
    def test_square_corners(self):
        means, sep = build_lattice_means(4, 2)
        assert sep == pytest.approx(1.0)
        assert sorted(map(tuple, means)) == [(0, 0), (0, 1), (1, 0), (1, 1)]

    def test_cube_thousand(self):
        means, sep = build_lattice_means(1000, 3)
        assert means.shape == (1000, 3)
        assert sep == pytest.approx(1 / 9)

    def test_line_of_five(self):
        means, sep = build_lattice_means(5, 1)
        assert sep == pytest.approx(0.25)
        assert means.ravel().tolist() == [0.0, 0.25, 0.5, 0.75, 1.0]

    def test_exact_cube_side_not_inflated_by_float_error(self):
        means, sep = build_lattice_means(27, 3)
        assert sep == pytest.approx(0.5)  # 3 points per axis
        assert means.shape == (27, 3)

    def test_in_unit_cube_and_separation_achieved(self):
        means, sep = build_lattice_means(23, 2)
        assert (means >= 0).all() and (means <= 1).all()
        d = np.sqrt(((means[:, None, :] - means[None, :, :]) ** 2).sum(-1))
        np.fill_diagonal(d, np.inf)
        assert d.min() == pytest.approx(sep)

    def test_single_point(self):
        means, sep = build_lattice_means(1, 4)
        assert means.shape == (1, 4)
        assert math.isinf(sep)


class TestChiSquareSandwich:
    def test_dimension_one_identity(self):
        # chi2_1 is a squared standard normal: upper bound is 2 Phi(d/s) - 1.
        sandwich = correct_prob_bounds_p(0.8, 0.5, 1)
        assert sandwich.upper == pytest.approx(2 * stats.norm.cdf(0.8 / 0.5) - 1)

    def test_wide_separation_saturates(self):
        sandwich = correct_prob_bounds_p(10.0, 0.001, 3)
        assert sandwich.lower == pytest.approx(1.0)
        assert sandwich.upper == pytest.approx(1.0)

    def test_lower_below_upper(self):
        sandwich = correct_prob_bounds_p(0.5, 0.3, 7)
        assert 0.0 <= sandwich.lower <= sandwich.upper <= 1.0

    def test_normal_approximation_close_at_large_dim(self):
        p = 4000
        delta, sigma = 1.0, 1.0 / math.sqrt(p)
        sandwich = correct_prob_bounds_p(delta, sigma, p)
        assert sandwich.normal_lower == pytest.approx(sandwich.lower, abs=0.02)
        assert sandwich.normal_upper == pytest.approx(sandwich.upper, abs=0.02)

    def test_log_dimension_noise_rate_suffices(self):
        # With p = log N the lattice separation delta = N^(-1/p) stays at the
        # constant 1/e, so a noise variance shrinking only like 1/log N keeps
        # delta^2/sigma^2 proportional to p.  The proportionality constant
        # must exceed the chi-square mean rate (here 3 > 2), otherwise the
        # probabilities still decay; with it, both bounds stay bounded away
        # from zero as N grows.
        for n in (10**3, 10**6, 10**12):
            p = max(2, round(math.log(n)))
            delta = n ** (-1.0 / p)
            sigma = math.sqrt(math.exp(-2.0) / (3.0 * p))
            sandwich = correct_prob_bounds_p(delta, sigma, p)
            assert sandwich.lower > 0.2
            assert sandwich.upper > 0.5

    def test_fixed_dimension_noise_rate_fails(self):
        # Holding sigma constant while N grows in fixed dimension drives the
        # correct-assignment probability to zero: the same formulas decay.
        uppers = []
        for n in (10**2, 10**4, 10**6):
            delta = n ** (-1.0 / 3)
            uppers.append(correct_prob_bounds_p(delta, 0.3, 3).upper)
        assert uppers[0] > uppers[1] > uppers[2]
        assert uppers[-1] < 1e-3

    def test_validation(self):
        with pytest.raises(ValueError):
            correct_prob_bounds_p(0.0, 1.0, 2)
        with pytest.raises(ValueError):
            correct_prob_bounds_p(1.0, 1.0, 0)


class TestAssignmentSim:
    def test_tiny_noise_is_perfect(self):
        config = AssignmentSimConfig(n_components=50, c=1e-6, replicates=5, seed=0)
        result = run_assignment_sim(config)
        assert result.proportion_correct_mean == 1.0
        assert result.zero_correct_frequency == 0.0

    def test_matches_theory_within_monte_carlo_error(self):
        for c in (0.25, 1.0):
            config = AssignmentSimConfig(n_components=500, c=c, replicates=40, seed=5)
            result = run_assignment_sim(config)
            theory = result.theory_proportion
            se = math.sqrt(theory * (1 - theory) / (500 * 40))
            assert abs(result.proportion_correct_mean - theory) < 4 * se

    def test_zero_correct_matches_edge_exact_truth(self):
        # The physical simulator has one-sided extreme components, so the
        # all-wrong probability is q^(N-2) (q/2)^2 with q = 2 - 2 Phi(x).
        n, c = 10, 8.0
        config = AssignmentSimConfig(n_components=n, c=c, replicates=40_000, seed=6)
        result = run_assignment_sim(config)
        q = 2 - 2 * stats.norm.cdf(1 / (2 * c))
        truth = q ** (n - 2) * (q / 2) ** 2
        se = math.sqrt(truth * (1 - truth) / config.replicates)
        assert abs(result.zero_correct_frequency - truth) < 4 * se

    def test_deterministic(self):
        config = AssignmentSimConfig(n_components=40, c=0.5, replicates=10, seed=12)
        assert run_assignment_sim(config) == run_assignment_sim(config)

    def test_validation(self):
        with pytest.raises(ValueError):
            AssignmentSimConfig(n_components=1, c=0.5, replicates=5, seed=0)
        with pytest.raises(ValueError):
            AssignmentSimConfig(n_components=5, c=0.5, replicates=0, seed=0)


class TestDimensionSim:
    def test_well_separated_lattice_is_perfect(self):
        config = DimensionSimConfig(n_components=64, dim=3, sigma=0.01, replicates=5, seed=1)
        result = run_dimension_sim(config)
        assert result.proportion_correct_mean > 0.999
        assert result.within_bounds

    def test_huge_noise_is_nearly_uniform(self):
        config = DimensionSimConfig(n_components=64, dim=3, sigma=10.0, replicates=60, seed=2)
        result = run_dimension_sim(config)
        assert result.proportion_correct_mean == pytest.approx(1 / 64, abs=0.01)

    def test_dimension_one_agrees_with_interval_theory(self):
        # 5-point line lattice with spacing 1/4; interior/edge success
        # probabilities are the usual normal interval masses.
        config = DimensionSimConfig(n_components=5, dim=1, sigma=0.1, replicates=4000, seed=3)
        result = run_dimension_sim(config)
        x = 0.25 / (2 * 0.1)
        interior, edge = 2 * stats.norm.cdf(x) - 1, stats.norm.cdf(x)
        truth = (3 * interior + 2 * edge) / 5
        se = math.sqrt(truth * (1 - truth) / (5 * 4000))
        assert abs(result.proportion_correct_mean - truth) < 4 * se

    def test_deterministic(self):
        config = DimensionSimConfig(n_components=27, dim=3, sigma=0.2, replicates=8, seed=4)
        assert run_dimension_sim(config) == run_dimension_sim(config)
