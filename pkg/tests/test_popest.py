import math

import numpy as np
import pytest
from scipy import optimize, special

from microclust.popest import (
    CaptureTable,
    NonConvergenceError,
    PopestSimConfig,
    Records,
    estimate_population,
    generate_capture_table,
    generate_databases,
    pattern_probabilities,
    reconstruct_counts,
    run_popest_replicate,
    run_popest_sim,
    solve_beta_b_for_unobserved,
)


class TestCaptureTable:
    def test_validation(self):
        with pytest.raises(ValueError):
            CaptureTable(2, np.array([1, 2, 3]))  # wrong length
        with pytest.raises(ValueError):
            CaptureTable(2, np.array([0, -1, 0, 0]))

    def test_totals_and_list_sums(self):
        # Patterns (bit0=list0, bit1=list1): [none, only0, only1, both]
        table = CaptureTable(2, np.array([5, 10, 20, 40]))
        assert table.n_entities == 75
        assert table.n_observed == 70
        assert table.list_totals().tolist() == [50, 60]

    def test_pattern_probabilities_sum_to_one(self):
        p = np.array([0.3, 0.9, 0.05])
        probs = pattern_probabilities(p)
        assert probs.sum() == pytest.approx(1.0, abs=1e-14)
        # Index 0b101 means lists 0 and 2 present.
        assert probs[0b101] == pytest.approx(0.3 * (1 - 0.9) * 0.05)


class TestGenerateCaptureTable:
    def test_counts_sum_to_entities(self):
        table, p = generate_capture_table(1234, 3, 1.0, 1.7, seed=0)
        assert table.n_entities == 1234
        assert len(p) == 3

    def test_degenerate_probabilities_hook(self):
        table, p = generate_capture_table(50, 2, 1.0, 1.0, seed=1, p=np.array([1.0, 1.0]))
        assert table.counts[0b11] == 50
        assert table.n_observed == 50

    def test_unobserved_fraction_matches_beta_expectation(self):
        a, b, t = 1.0, 1.7, 3
        fracs = []
        for r in range(300):
            table, _ = generate_capture_table(2000, t, a, b, seed=100 + r)
            fracs.append(table.counts[0] / 2000)
        expected = (b / (a + b)) ** t
        se = np.std(fracs, ddof=1) / math.sqrt(len(fracs))
        assert abs(np.mean(fracs) - expected) < 3 * se

    def test_hyperparameters_validated(self):
        with pytest.raises(ValueError):
            generate_capture_table(10, 3, -1.0, 1.0, seed=0)
        with pytest.raises(ValueError):
            generate_capture_table(10, 1, 1.0, 1.0, seed=0)


class TestGenerateDatabases:
    def test_record_count_formula(self):
        table, _ = generate_capture_table(500, 3, 1.0, 1.7, seed=3)
        records = generate_databases(table, sigma=0.01, seed=4)
        idx = np.arange(8)
        popcounts = np.array([bin(i).count("1") for i in idx])
        assert len(records) == int((table.counts * popcounts).sum())

    def test_tags_unique_within_entity(self):
        table, _ = generate_capture_table(300, 3, 1.0, 1.0, seed=5)
        records = generate_databases(table, sigma=0.01, seed=6)
        for entity in np.unique(records.entity):
            tags = records.list_tag[records.entity == entity]
            assert len(set(tags.tolist())) == len(tags)

    def test_single_list_pattern_emits_one_tagged_record(self):
        counts = np.zeros(4, dtype=int)
        counts[0b01] = 7  # seven entities on list 0 only
        table = CaptureTable(2, counts)
        records = generate_databases(table, sigma=0.5, seed=7)
        assert len(records) == 7
        assert (records.list_tag == 0).all()

    def test_two_list_entities_get_both_tags(self):
        counts = np.zeros(8, dtype=int)
        counts[0b011] = 4
        table = CaptureTable(3, counts)
        records = generate_databases(table, sigma=0.5, seed=8)
        for entity in np.unique(records.entity):
            tags = sorted(records.list_tag[records.entity == entity].tolist())
            assert tags == [0, 1]

    def test_unobserved_entities_emit_nothing(self):
        counts = np.array([10, 5, 0, 0])
        table = CaptureTable(2, counts)
        records = generate_databases(table, sigma=0.1, seed=9)
        assert len(records) == 5
        assert len(np.unique(records.entity)) == 5

    def test_deterministic(self):
        table, _ = generate_capture_table(200, 3, 1.0, 1.7, seed=10)
        a = generate_databases(table, sigma=0.02, seed=11)
        b = generate_databases(table, sigma=0.02, seed=11)
        assert (a.y == b.y).all()
        assert (a.list_tag == b.list_tag).all()
        assert (a.entity == b.entity).all()


class TestReconstruct:
    def test_truth_inverts_generation(self):
        for seed in range(5):
            table, _ = generate_capture_table(400, 3, 1.0, 1.7, seed=20 + seed)
            records = generate_databases(table, sigma=0.01, seed=30 + seed)
            rebuilt = reconstruct_counts(records, records.entity, 3)
            assert (rebuilt.counts[1:] == table.counts[1:]).all()
            assert rebuilt.counts[0] == 0

    def test_all_singleton_clusters(self):
        table, _ = generate_capture_table(300, 3, 1.0, 1.7, seed=40)
        records = generate_databases(table, sigma=0.01, seed=41)
        rebuilt = reconstruct_counts(records, np.arange(len(records)), 3)
        for j in range(3):
            assert rebuilt.counts[1 << j] == int((records.list_tag == j).sum())

    def test_merged_pair_gets_union_pattern(self):
        records = Records(
            y=np.array([0.1, 0.11]),
            list_tag=np.array([0, 2]),
            entity=np.array([1, 2]),
        )
        rebuilt = reconstruct_counts(records, np.array([7, 7]), 3)
        assert rebuilt.counts[0b101] == 1
        assert rebuilt.counts.sum() == 1

    def test_assignment_length_checked(self):
        records = Records(
            y=np.array([0.1]), list_tag=np.array([0]), entity=np.array([1])
        )
        with pytest.raises(ValueError):
            reconstruct_counts(records, np.array([1, 2]), 2)


class TestEstimate:
    def test_lincoln_petersen_closed_form(self):
        table = CaptureTable(2, np.array([0, 50, 50, 50]))
        est = estimate_population(table)
        assert est.n_total_hat == pytest.approx(200.0, abs=1e-6)
        assert est.n0_hat == pytest.approx(50.0, abs=1e-6)
        assert est.ci_lower <= est.n0_hat <= est.ci_upper

    def test_lincoln_petersen_random_tables(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            n11 = int(rng.integers(5, 200))
            n10 = int(rng.integers(0, 300))
            n01 = int(rng.integers(0, 300))
            table = CaptureTable(2, np.array([0, n10, n01, n11]))
            est = estimate_population(table)
            lp = (n11 + n10) * (n11 + n01) / n11
            assert est.n_total_hat == pytest.approx(lp, rel=1e-6)

    def test_everyone_on_every_list(self):
        counts = np.zeros(8, dtype=int)
        counts[0b111] = 120
        est = estimate_population(CaptureTable(3, counts))
        assert est.n0_hat == 0.0
        assert est.ci_upper == 0.0

    def test_zero_cell_ignored(self):
        with_zero = CaptureTable(2, np.array([999, 50, 50, 50]))
        without = CaptureTable(2, np.array([0, 50, 50, 50]))
        assert estimate_population(with_zero).n0_hat == pytest.approx(
            estimate_population(without).n0_hat
        )

    def test_list_permutation_equivariance(self):
        table, _ = generate_capture_table(2000, 3, 1.0, 1.7, seed=50)
        est = estimate_population(table)
        # Swap lists 0 and 2: permute pattern bits accordingly.
        permuted = np.zeros_like(table.counts)
        for pattern in range(8):
            new = ((pattern & 1) << 2) | (pattern & 2) | ((pattern >> 2) & 1)
            permuted[new] = table.counts[pattern]
        est_perm = estimate_population(CaptureTable(3, permuted))
        assert est_perm.n_total_hat == pytest.approx(est.n_total_hat, rel=1e-9)
        assert est_perm.p_hat == pytest.approx(tuple(reversed(est.p_hat)), rel=1e-9)

    def test_empty_list_dropped_with_warning(self):
        counts = np.zeros(8, dtype=int)
        counts[0b001] = 40
        counts[0b010] = 30
        counts[0b011] = 30
        with pytest.warns(UserWarning, match="dropping"):
            est = estimate_population(CaptureTable(3, counts))
        assert est.dropped_lists == (2,)
        lp = 70 * 60 / 30
        assert est.n_total_hat == pytest.approx(lp, rel=1e-6)

    def test_no_overlap_is_unbounded(self):
        counts = np.zeros(4, dtype=int)
        counts[0b01] = 30
        counts[0b10] = 25
        with pytest.raises(NonConvergenceError):
            estimate_population(CaptureTable(2, counts))

    def test_no_observations_rejected(self):
        with pytest.raises(ValueError):
            estimate_population(CaptureTable(2, np.array([9, 0, 0, 0])))

    def test_wald_interval_option(self):
        table = CaptureTable(2, np.array([0, 50, 50, 50]))
        log_ci = estimate_population(table, ci_method="lognormal")
        wald = estimate_population(table, ci_method="wald")
        assert wald.n0_hat == pytest.approx(log_ci.n0_hat)
        assert wald.ci_lower != pytest.approx(log_ci.ci_lower)
        with pytest.raises(ValueError):
            estimate_population(table, ci_method="exact")

    def test_matches_direct_likelihood_maximization(self):
        def profile_negative_loglik(n, m, d):
            return -(
                special.gammaln(n + 1)
                - special.gammaln(n - d + 1)
                + sum(mj * np.log(mj / n) + (n - mj) * np.log(1 - mj / n) for mj in m)
            )

        for r in range(5):
            table, _ = generate_capture_table(200_000, 3, 1.0, 1.7, seed=60 + r)
            est = estimate_population(table)
            m = table.list_totals().astype(float)
            d = table.n_observed
            res = optimize.minimize_scalar(
                profile_negative_loglik,
                args=(m, d),
                bounds=(d + 1e-6, 20 * d),
                method="bounded",
                options={"xatol": 1e-8},
            )
            assert est.n_total_hat == pytest.approx(res.x, rel=1e-4)

    def test_coverage_at_perfect_resolution_quick(self):
        covered = 0
        n = 150
        for r in range(n):
            table, _ = generate_capture_table(5000, 3, 1.0, 1.7, seed=700 + r)
            est = estimate_population(table)
            covered += int(est.ci_lower <= table.counts[0] <= est.ci_upper)
        assert 0.88 <= covered / n <= 0.995


class TestSolveBeta:
    def test_matches_target(self):
        for t in (2, 3, 5):
            b = solve_beta_b_for_unobserved(0.25, t, a=1.0)
            assert (b / (1.0 + b)) ** t == pytest.approx(0.25, rel=1e-12)

    def test_known_value(self):
        # (b/(1+b))^3 = 0.25 at b ~ 1.7 as used for the default table design.
        b = solve_beta_b_for_unobserved(0.25, 3)
        assert b == pytest.approx(1.7, abs=0.06)

    def test_validates(self):
        with pytest.raises(ValueError):
            solve_beta_b_for_unobserved(1.5, 3)


class TestReplicatePipeline:
    def test_perfect_resolution_replicate(self):
        config = PopestSimConfig(c=1e-4, seed=80, n_entities=800, replicates=1)
        rep = run_popest_replicate(config, 0)
        assert not rep.failed
        assert rep.prop_correct == 1.0
        assert rep.mse_nx == 0.0
        assert rep.ci_lower <= rep.n0_hat <= rep.ci_upper

    def test_noisy_replicate_still_completes(self):
        config = PopestSimConfig(c=2.0, seed=81, n_entities=800, replicates=1)
        rep = run_popest_replicate(config, 0)
        assert not rep.failed
        assert 0.0 <= rep.prop_correct <= 1.0
        assert rep.mse_nx > 0.0

    def test_failed_replicates_are_marked_not_fatal(self):
        # Tiny inclusion probabilities make overlap-free tables likely, which
        # the estimator reports as unbounded.
        config = PopestSimConfig(
            c=1e-4, seed=82, n_entities=40, n_lists=2,
            beta_a=0.05, beta_b=5.0, replicates=30,
        )
        reps = run_popest_sim(config)
        assert len(reps) == 30
        failed = [r for r in reps if r.failed]
        assert failed, "expected at least one degenerate replicate"
        assert all(r.failure for r in failed)

    def test_deterministic(self):
        config = PopestSimConfig(c=0.5, seed=83, n_entities=500, replicates=3)
        assert run_popest_sim(config) == run_popest_sim(config)
