"""Closed-form schedules, constraint checks and the smoothness profile helpers."""

import math

import numpy as np
import pytest

from sparsebudget.core.errors import ConfigurationError, DataError, InvalidArgument
from sparsebudget.schemas.budget import Budget, SmoothnessProfile
from sparsebudget.schemas.schedules import BatchSchedule, ScheduleKind
from sparsebudget.services.data_env import make_rng, make_synthetic_instance
from sparsebudget.services.theory import (
    batch_lower_bound,
    contraction_diagnostics,
    estimate_smoothness_profile,
    hybrid_inner_length,
    hybrid_outer_rounds,
    hybrid_stage_targets,
    population_gradient,
    population_loss,
    proof_batch_size,
    sample_complexity,
    schedule_sizes,
    sparsity_lower_bound,
    support_identification_round,
    synthetic_profile,
    theory_batch_size,
    validate_parameters,
)


@pytest.fixture
def batch_case(oracles):
    case = oracles["theory_batch_size"]
    return case, SmoothnessProfile(**case["profile"]), Budget(**case["budget"])


class TestTheoryBatchSize:
    def test_exploration_matches_hand_evaluation(self, batch_case):
        case, profile, budget = batch_case
        size = theory_batch_size(
            profile, budget, ScheduleKind.THEORY_EXPLORATION, case["T"],
            Delta=case["Delta"], delta=case["delta"], c_B=case["c_B"], sigma=case["sigma"],
        )
        assert size == case["exploration"]

    def test_exploitation_matches_hand_evaluation(self, batch_case):
        case, profile, budget = batch_case
        size = theory_batch_size(
            profile, budget, ScheduleKind.THEORY_EXPLOITATION, case["T"],
            Delta=case["Delta"], delta=case["delta"], c_B=case["c_B"], sigma=case["sigma"],
        )
        assert size == case["exploitation"]

    def test_branches_recomputed_independently(self, batch_case):
        case, profile, budget = batch_case
        kappa, alpha = 4.0, 1.0 / 128.0
        log_factor = math.log(kappa * 500 * 5 / 0.1)
        assert log_factor == pytest.approx(case["log_factor"], rel=1e-15)
        second = 1.0 / 1.0 * 1.0 / 1.0 * 5 * 20 / (1 - alpha) ** 5
        assert second == pytest.approx(case["second_branch"], abs=1e-3)
        expected = math.ceil(log_factor * max(kappa**2 * 20**2, second))
        size = theory_batch_size(profile, budget, "theory-exploration", 5, Delta=1.0)
        assert size == expected

    def test_exploitation_first_branch_is_linear_in_T(self, batch_case):
        _, profile, budget = batch_case
        sizes = [
            theory_batch_size(profile, budget, "theory-exploitation", T, sigma=0.0, delta=0.1)
            for T in (5, 10)
        ]
        log_ratio = math.log(4 * 500 * 10 / 0.1) / math.log(4 * 500 * 5 / 0.1)
        assert sizes[1] / sizes[0] == pytest.approx(2 * log_ratio, rel=1e-4)

    def test_large_target_leaves_first_branch(self, batch_case):
        _, profile, budget = batch_case
        noiseless = theory_batch_size(profile, budget, "theory-exploration", 5, sigma=0.0)
        loose = theory_batch_size(profile, budget, "theory-exploration", 5, Delta=1e12)
        assert loose == noiseless

    def test_stage_index_rescales_target_and_confidence(self, batch_case):
        _, profile, budget = batch_case
        k, Delta0 = 3, 50.0
        delta_minus, _, delta_k = hybrid_stage_targets(k, Delta0, profile.alpha, 0.1)
        staged = theory_batch_size(
            profile, budget, "theory-exploration", 5, k=k, Delta=Delta0, c_B=1e-3
        )
        direct = theory_batch_size(
            profile, budget, "theory-exploration", 5, Delta=delta_minus, delta=delta_k, c_B=1e-3
        )
        assert staged == direct

    def test_infinite_r_requires_override(self, unit_profile, desk_budget):
        with pytest.raises(ConfigurationError):
            theory_batch_size(unit_profile, desk_budget, "theory-exploration", 5, Delta=1.0)
        override = unit_profile.model_copy(update={"r_effective": 3.0})
        assert theory_batch_size(override, desk_budget, "theory-exploration", 5, Delta=1.0) >= 1

    def test_noisy_schedule_needs_target(self, batch_case):
        _, profile, budget = batch_case
        with pytest.raises(ConfigurationError):
            theory_batch_size(profile, budget, "theory-exploration", 5)

    def test_rejects_practical_kind(self, batch_case):
        _, profile, budget = batch_case
        with pytest.raises(InvalidArgument):
            theory_batch_size(profile, budget, "constant", 5, Delta=1.0)


class TestHybridFormulas:
    def test_inner_length_oracle(self, oracles):
        case = oracles["hybrid_inner_length"]
        profile = SmoothnessProfile(**case["profile"])
        budget = Budget(**case["budget"])
        assert hybrid_inner_length(profile, budget, case["c_T"]) == case["value"]

    def test_inner_length_clips_to_one(self):
        profile = SmoothnessProfile(L_s=4.0, mu_s=1.0, r_inf=1.0)
        budget = Budget(d=100, s_star=5, s=20, s_prime=60)
        assert hybrid_inner_length(profile, budget, c_T=1.0) == 1

    def test_inner_length_grows_as_alpha_shrinks(self):
        budget = Budget(d=500, s_star=5, s=20, s_prime=45)
        lengths = [
            hybrid_inner_length(
                SmoothnessProfile(L_s=1.0, mu_s=0.5, r_inf=1.0, alpha_check=alpha), budget
            )
            for alpha in (0.5, 0.1, 0.01, 0.001)
        ]
        assert lengths == sorted(lengths)
        assert lengths[0] < lengths[-1]

    def test_stage_targets(self):
        alpha, Delta0 = 0.1, 8.0
        delta_minus, delta_k, confidence = hybrid_stage_targets(2, Delta0, alpha, 0.3)
        assert delta_minus == pytest.approx(0.5 * alpha * Delta0)
        assert delta_k == pytest.approx(0.5 * alpha * 0.81 * Delta0)
        assert confidence == pytest.approx(0.9 / (math.pi**2 * 4))
        with pytest.raises(InvalidArgument):
            hybrid_stage_targets(0, Delta0, alpha, 0.3)

    def test_confidence_shares_sum_below_delta(self):
        total = sum(hybrid_stage_targets(k, 1.0, 0.1, 0.2)[2] for k in range(1, 10_000))
        assert total < 0.2 / 2 + 1e-12

    def test_support_identification_round(self):
        profile = SmoothnessProfile(L_s=1.0, mu_s=1.0, r_inf=1.0, alpha_check=0.5)
        assert support_identification_round(profile, Delta0=0.1, r_min=1.0) == 0
        # log2(4 * 10) = 5.32
        assert support_identification_round(profile, Delta0=10.0, r_min=1.0) == 6

    def test_outer_rounds_take_the_smaller_log(self):
        profile = SmoothnessProfile(L_s=1.0, mu_s=1.0, r_inf=1.0, alpha_check=0.5)
        budget = Budget(d=100, s_star=5, s=20, s_prime=40)
        rounds = hybrid_outer_rounds(profile, budget, Delta0=10.0, epsilon=0.01, r_min=1.0)
        boosted = math.log(10.0 * 20 / (1.0 * 1.0 * 0.25 * 100 * 0.01))
        plain = math.log(10.0 / 0.01)
        assert rounds == math.ceil(min(boosted, plain) / math.log(2.0))


class TestValidateParameters:
    def test_sparsity_bound_oracle(self, oracles):
        case = oracles["sparsity_lower_bound"]
        profile = SmoothnessProfile(**case["profile"])
        budget = Budget(**case["budget"])
        assert sparsity_lower_bound(case["eta"], budget, profile) == case["value"]
        assert case["value"] == case["factor"] * budget.s_star

    def test_batch_bound_oracle(self, oracles):
        case = oracles["batch_lower_bound"]
        profile = SmoothnessProfile(**case["profile"])
        budget = Budget(**case["budget"])
        value = batch_lower_bound(case["eta"], case["s"], budget, profile, case["delta_t"])
        assert value == pytest.approx(case["value"], rel=1e-9)

    def test_recommended_step_passes(self, desk_budget):
        profile = SmoothnessProfile(L_s=2.0, mu_s=1.0, r_inf=1.0)
        report = validate_parameters(1 / 8, 20, desk_budget, profile, B_t=10, delta_t=0.01)
        assert report.get("step_size").passed
        assert report.get("step_size").slack == pytest.approx(1 / 4 - 1 / 8)

    def test_large_step_fails(self, desk_budget):
        profile = SmoothnessProfile(L_s=2.0, mu_s=1.0, r_inf=1.0)
        report = validate_parameters(1 / 2, 20, desk_budget, profile, B_t=10, delta_t=0.01)
        assert not report.get("step_size").passed
        assert not report.passed

    def test_all_constraints_can_pass(self):
        profile = SmoothnessProfile(L_s=1.0, mu_s=1.0, r_inf=1.0)
        budget = Budget(d=10_000, s_star=1, s=1025, s_prime=1100)
        B_t = math.ceil(batch_lower_bound(0.25, 1025, budget, profile, 0.01))
        report = validate_parameters(0.25, 1025, budget, profile, B_t, 0.01)
        assert report.passed
        assert [check.name for check in report.checks] == ["step_size", "sparsity", "batch_size"]

    def test_infinite_r_makes_batch_constraint_unsatisfiable(self, unit_profile, desk_budget):
        report = validate_parameters(0.25, 20, desk_budget, unit_profile, 10**9, 0.01)
        assert not report.get("batch_size").passed


class TestContractionDiagnostics:
    def test_oracle(self, oracles):
        case = oracles["contraction_diagnostics"]
        profile = SmoothnessProfile(**case["profile"])
        budget = Budget(**case["budget"])
        diagnostics = contraction_diagnostics(
            case["eta"], case["s"], budget, profile, case["B_t"], case["sigma"], case["delta_t"]
        )
        assert diagnostics.alpha == case["alpha"]
        assert diagnostics.c_t == pytest.approx(case["c_t"], rel=1e-9)
        assert diagnostics.per_step_noise == pytest.approx(case["per_step_noise"], rel=1e-9)

    def test_noiseless_has_no_additive_term(self, unit_profile, desk_budget):
        diagnostics = contraction_diagnostics(0.25, 20, desk_budget, unit_profile, 10, 0.0, 0.01)
        assert diagnostics.c_t == 0.0

    def test_unbounded_features_keep_c_t(self, desk_budget):
        gaussian = SmoothnessProfile(L_s=1.0, mu_s=1.0, r_inf=float("inf"))
        diagnostics = contraction_diagnostics(0.25, 20, desk_budget, gaussian, 10, 1.0, 0.01)
        assert diagnostics.c_t == pytest.approx(4 * 20 * 2.75 * 0.25 * math.log(100 / 0.01))
        assert diagnostics.per_step_noise is None

    def test_vanishing_true_sparsity_limit(self):
        profile = SmoothnessProfile(L_s=1.0, mu_s=0.5, r_inf=1.0)
        budget = Budget(d=10**7, s_star=1, s=10**6, s_prime=2 * 10**6)
        alpha = contraction_diagnostics(0.25, budget.s, budget, profile, 1, 0.0, 0.1).alpha
        assert alpha == pytest.approx(0.5 * 0.5 * (0.25 + 0.125) * 0.25, rel=1e-5)


class TestProofBatchSize:
    def test_noiseless_equals_rounded_lower_bound(self):
        profile = SmoothnessProfile(L_s=1.0, mu_s=1.0, r_inf=1.0)
        budget = Budget(d=100, s_star=5, s=15, s_prime=20)
        expected = math.ceil(batch_lower_bound(0.25, 15, budget, profile, 0.01))
        assert proof_batch_size(0.25, 15, budget, profile, 0.0, 1.0, 10, 0.01) == expected

    def test_noise_term_grows_with_smaller_target(self):
        profile = SmoothnessProfile(L_s=1.0, mu_s=1.0, r_inf=1.0)
        budget = Budget(d=100, s_star=5, s=15, s_prime=20)
        coarse = proof_batch_size(0.25, 15, budget, profile, 1.0, 1.0, 10, 0.01)
        fine = proof_batch_size(0.25, 15, budget, profile, 1.0, 1e-4, 10, 0.01)
        assert fine > coarse

    def test_infinite_r(self, unit_profile, desk_budget):
        with pytest.raises(ConfigurationError):
            proof_batch_size(0.25, 20, desk_budget, unit_profile, 0.0, 1.0, 10, 0.01)


class TestSampleComplexity:
    def test_exploration_scales_with_inverse_epsilon(self):
        profile = SmoothnessProfile(L_s=1.0, mu_s=1.0, r_inf=1.0)
        budget = Budget(d=100, s_star=5, s=20, s_prime=40)
        bias = sample_complexity(profile, budget, 0.0, 1.0)
        at_eps = sample_complexity(profile, budget, 1.0, 0.1) - bias
        at_half = sample_complexity(profile, budget, 1.0, 0.05) - bias
        assert at_half == pytest.approx(2 * at_eps)

    def test_hybrid_noise_term_is_not_worse(self):
        profile = SmoothnessProfile(L_s=1.0, mu_s=1.0, r_inf=1.0)
        budget = Budget(d=100, s_star=5, s=20, s_prime=40)
        explore = sample_complexity(profile, budget, 1.0, 1e-6) - sample_complexity(
            profile, budget, 0.0, 1e-6
        )
        hybrid = sample_complexity(profile, budget, 1.0, 1e-6, "hybrid", r_min=1.0) - (
            sample_complexity(profile, budget, 0.0, 1e-6, "hybrid", r_min=1.0)
        )
        assert hybrid <= explore

    def test_unknown_algorithm(self):
        profile = SmoothnessProfile(L_s=1.0, mu_s=1.0, r_inf=1.0)
        budget = Budget(d=100, s_star=5, s=20, s_prime=40)
        with pytest.raises(InvalidArgument):
            sample_complexity(profile, budget, 1.0, 0.1, "naive")
        with pytest.raises(InvalidArgument):
            sample_complexity(profile, budget, 1.0, 0.1, "hybrid")


class TestScheduleSizes:
    def test_constant(self):
        assert schedule_sizes(BatchSchedule(kind="constant", base=7), 4) == [7, 7, 7, 7]

    def test_geometric_is_nondecreasing(self):
        sizes = schedule_sizes(BatchSchedule(kind="geometric", base=10, ratio=1.1), 30)
        assert sizes[0] == 10
        assert sizes == sorted(sizes)
        assert sizes[-1] == math.ceil(10 * 1.1**29)

    def test_theory_kind_needs_profile(self):
        with pytest.raises(ConfigurationError):
            schedule_sizes(BatchSchedule(kind="theory-exploration"), 3)

    def test_theory_kind_is_constant_over_stage(self, oracles):
        case = oracles["theory_batch_size"]
        schedule = BatchSchedule(kind="theory-exploration", target=1.0, horizon=5)
        sizes = schedule_sizes(
            schedule, 3, SmoothnessProfile(**case["profile"]), Budget(**case["budget"])
        )
        assert sizes == [case["exploration"]] * 3


class TestPopulationHelpers:
    @pytest.fixture(scope="class")
    def instance(self):
        return make_synthetic_instance(d=30, s_star=5, sigma=0.5, law="iid-uniform", test_size=10)

    def test_loss_and_gradient(self, instance):
        theta = np.zeros(30)
        assert population_loss(theta, instance) == pytest.approx(5.0 + 0.25)
        np.testing.assert_allclose(population_gradient(theta, instance), -2 * instance.theta_star)

    def test_restricted_gradient_inequality(self, instance):
        """(mu^2/4)||theta - theta*||^2 - ||grad_{S u S*}||^2 <= mu (L(theta*) - L(theta))"""
        rng = np.random.default_rng(17)
        mu = 1.0
        support_star = np.flatnonzero(instance.theta_star)
        for _ in range(10_000):
            theta = np.zeros(30)
            chosen = rng.choice(30, size=int(rng.integers(1, 11)), replace=False)
            theta[chosen] = rng.standard_normal(chosen.size) * 2
            union = np.union1d(chosen, support_star)
            grad = population_gradient(theta, instance)[union]
            lhs = mu**2 / 4 * np.sum((theta - instance.theta_star) ** 2) - grad @ grad
            rhs = mu * (population_loss(instance.theta_star, instance) - population_loss(theta, instance))
            assert lhs <= rhs + 1e-9

    def test_unknown_covariance(self, finite_instance):
        inst = finite_instance([[1.0, 2.0]], [0.0])
        with pytest.raises(DataError):
            population_loss(np.zeros(2), inst)
        with pytest.raises(DataError):
            synthetic_profile(inst)


class TestSmoothnessProfiles:
    def test_synthetic_profile_is_exact(self):
        inst = make_synthetic_instance(d=10, s_star=2, law="iid-uniform", r_inf=3.0, test_size=5)
        profile = synthetic_profile(inst)
        assert profile.L_s == profile.mu_s == pytest.approx(3.0)
        assert profile.kappa_s == pytest.approx(1.0)
        assert profile.alpha == pytest.approx(1 / 32)
        assert not profile.estimated

    def test_estimate_brackets_identity_gram(self):
        rng = np.random.default_rng(23)
        X = rng.standard_normal((5000, 20))
        profile = estimate_smoothness_profile(X, 3, make_rng(0), n_supports=30)
        assert profile.estimated
        assert profile.mu_s <= 1.0 <= profile.L_s
        assert 0.8 < profile.mu_s and profile.L_s < 1.2
        assert profile.r_inf == pytest.approx(np.max(np.abs(X)))

    def test_estimate_is_seeded(self):
        X = np.random.default_rng(5).standard_normal((200, 12))
        first = estimate_smoothness_profile(X, 2, make_rng(1), n_supports=10)
        second = estimate_smoothness_profile(X, 2, make_rng(1), n_supports=10)
        assert first == second
