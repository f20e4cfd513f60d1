import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hteitr.meta_learners import fit_standard, fit_xlearner, oracle_estimate
from hteitr.policy_eval import (EvalGrid, GridSource, NoOverlapError, RuleSource, TreatmentRule,
                                constant_rule, emse, ipw_value, misclassification, optimal_rule,
                                regret_report, sign_rule)
from hteitr.scenario_gen import (ScenarioSpec, TrialDataset, analytic_value, builtin_scenario,
                                 generate, true_cate)

S1 = builtin_scenario("scenario1")
S2 = builtin_scenario("scenario2")


class TestSignRule:
    def test_positive_constant(self):
        rule = sign_rule(lambda x: np.full(np.shape(x), 0.6))
        np.testing.assert_array_equal(rule(np.linspace(-1, 1, 11)), 1)

    def test_identity_with_tie_break(self):
        rule = sign_rule(lambda x: x)
        np.testing.assert_array_equal(rule(np.array([-0.5, 0.0, 0.5])), [-1, 1, 1])
        assert rule(0.0) == 1

    def test_scenario1_optimal_is_treat_all(self):
        rule = optimal_rule(S1)
        assert rule.source is RuleSource.OPTIMAL
        np.testing.assert_array_equal(rule(np.linspace(-1, 1, 101)), 1)

    @settings(max_examples=100, deadline=None)
    @given(st.floats(1e-6, 1e6), st.integers(0, 2**32))
    def test_scale_invariance(self, c, seed):
        coefs = np.random.default_rng(seed).normal(size=4)
        tau = lambda x: np.polyval(coefs, x)
        grid = np.linspace(-1, 1, 257)
        np.testing.assert_array_equal(sign_rule(tau)(grid), sign_rule(lambda x: c * tau(x))(grid))

    def test_constant_rule_validation(self):
        with pytest.raises(ValueError):
            constant_rule(0)


class TestEMSE:
    def test_perfect(self):
        grid = EvalGrid.uniform(S2, 101)
        assert emse(oracle_estimate(S2), S2, grid) == 0.0

    def test_constant_offset(self):
        for grid in (EvalGrid.uniform(S1, 7), EvalGrid(np.array([0.3]))):
            assert emse(lambda x: true_cate(S1, x) + 0.1, S1, grid) == pytest.approx(0.01, abs=1e-15)

    def test_hand_average(self):
        grid = EvalGrid(np.array([-0.5, 0.5]))
        est = lambda x: true_cate(S1, x) + np.array([0.1, -0.3])
        assert emse(est, S1, grid) == pytest.approx(0.05, abs=1e-15)

    def test_empty_grid(self):
        with pytest.raises(ValueError):
            EvalGrid(np.array([]))


class TestMisclassification:
    def test_optimal_and_opposite(self):
        grid = EvalGrid.uniform(S2, 1001)
        assert misclassification(optimal_rule(S2), S2, grid) == 0.0
        flipped = TreatmentRule(lambda x: -optimal_rule(S2)(x))
        assert misclassification(flipped, S2, grid) == 1.0

    def test_half_grid(self):
        rule = TreatmentRule(lambda x: np.where(x < 0, 1, -1))
        grid = EvalGrid(np.linspace(-1, 1, 1000, endpoint=False) + 0.001)
        assert misclassification(rule, S2, grid) == pytest.approx(0.5)

    @pytest.mark.parametrize("spec", [S1, S2])
    def test_grid_and_sample_agree(self, spec):
        est = fit_standard(generate(spec, 600, 30, 4))
        rule = sign_rule(est)
        uniform = EvalGrid.uniform(spec, 10_000)
        sampled = EvalGrid(np.random.default_rng(1).uniform(-1, 1, 10_000), GridSource.TEST_DATASET)
        assert abs(misclassification(rule, spec, uniform) - misclassification(rule, spec, sampled)) < 0.02

    @pytest.mark.parametrize("spec", [S1, S2])
    def test_builtin_optimum_is_exact(self, spec):
        grid = EvalGrid.uniform(spec)
        assert misclassification(optimal_rule(spec), spec, grid) == 0.0
        assert emse(oracle_estimate(spec), spec, grid) == 0.0


class TestIPW:
    def test_all_match_is_plain_mean(self):
        # equal arm weights cancel only at propensity 1/2
        data = generate(S1, 30, 10, 0)
        rule = TreatmentRule(lambda x: np.asarray(data.a))
        assert ipw_value(rule, data, 0.5) == pytest.approx(np.mean(data.y), abs=1e-12)

    def test_all_match_general_propensity(self):
        data = generate(S1, 30, 10, 0)
        rule = TreatmentRule(lambda x: np.asarray(data.a))
        w = np.where(data.a == 1, 1 / 0.25, 1 / 0.75)
        assert ipw_value(rule, data, 0.25) == pytest.approx(np.average(data.y, weights=w), abs=1e-12)

    def test_no_overlap(self):
        data = generate(S1, 5, 5, 0)
        rule = TreatmentRule(lambda x: -np.asarray(data.a))
        with pytest.raises(NoOverlapError):
            ipw_value(rule, data, 0.5)

    def test_bad_propensity(self):
        with pytest.raises(ValueError):
            ipw_value(constant_rule(1), generate(S1, 5, 5, 0), 1.0)

    def test_weights(self):
        # treat-all on two treated units with p = 0.2 and two control units
        data = TrialDataset(np.zeros(4), np.array([-1, -1, 1, 1]), np.array([0.0, 0.0, 1.0, 3.0]))
        assert ipw_value(constant_rule(1), data, 0.2) == pytest.approx(2.0)
        assert ipw_value(constant_rule(-1), data, 0.2) == pytest.approx(0.0)

    def test_monte_carlo_unbiased(self):
        p = 50 / 1050
        values = [ipw_value(constant_rule(1), generate(S2, 1000, 50, s), p) for s in range(500)]
        se = np.std(values, ddof=1) / np.sqrt(len(values))
        assert abs(np.mean(values) - 1.825) < 3 * se


class TestRegret:
    def test_optimal(self):
        r = regret_report(optimal_rule(S1), oracle_estimate(S1), S1, EvalGrid.uniform(S1))
        assert r.regret == 0.0 and r.rmse == 0.0

    def test_treat_none(self):
        r = regret_report(constant_rule(-1), lambda x: -true_cate(S1, x), S1, EvalGrid.uniform(S1))
        assert r.regret == pytest.approx(0.1, abs=1e-9)
        assert r.rmse == pytest.approx(0.2)
        assert r.ratio == pytest.approx(0.5, abs=1e-8)

    @pytest.mark.parametrize("spec", [S1, S2])
    def test_nonnegative(self, spec):
        grid = EvalGrid.uniform(spec, 501)
        for seed in range(20):
            data = generate(spec, 200, 10, seed)
            for fit in (fit_standard, fit_xlearner):
                est = fit(data)
                assert regret_report(sign_rule(est), est, spec, grid).regret >= -1e-6

    def test_custom_spec_switching_optimum(self):
        spec = ScenarioSpec("switch", (0.0,), (1.0, 1.0), (0.5, 1.5))
        best = analytic_value(spec, optimal_rule(spec))
        assert best == pytest.approx(1.25, abs=1e-9)
        r = regret_report(constant_rule(1), lambda x: np.full(np.shape(x), 1.0), spec, EvalGrid.uniform(spec))
        assert r.regret == pytest.approx(0.25, abs=1e-9)
