import numpy as np
import pytest
from scipy.stats import norm

from causalcdf import (GraphSelection, RunError, ScenarioConfig, ValidationError,
                       ate, compute_sen_spe, covariance_matrix, dte,
                       gen_covariates, gen_outcome, gen_treatment,
                       generate_replicate, metrics_to_csv, qte,
                       run_replications, scenario_edges, simulate_outcomes,
                       aggregate_metrics, true_effect, true_propensity)
from causalcdf._util import rng_for


def selection_with(p, v_hat, e_hat):
    pairs = [(j, k) for j in range(p) for k in range(j + 1, p)]
    beta = np.array([1.0 if j in v_hat else 0.0 for j in range(p)])
    theta = np.array([1.0 if pr in e_hat else 0.0 for pr in pairs])
    return GraphSelection(beta_hat=beta, theta_hat=theta, v_hat=frozenset(v_hat),
                          e_hat=frozenset(e_hat), lambda1=0.0, lambda2=0.0,
                          objective_value=0.0, intercept=0.0, converged=True,
                          n_cycles=0)


class TestScenarioStructure:
    def test_edge_counts(self):
        assert len(scenario_edges("hub")) == 10
        assert len(scenario_edges("lattice")) == 6
        assert scenario_edges("independent") == ()

    def test_lattice_triangles(self):
        assert set(scenario_edges("lattice")) == {(0, 1), (0, 2), (1, 2),
                                                  (3, 4), (3, 5), (4, 5)}

    def test_hub_stars(self):
        edges = set(scenario_edges("hub"))
        assert {(0, j) for j in range(1, 6)} <= edges
        assert {(6, j) for j in range(7, 12)} <= edges

    def test_covariance_is_identity_plus_rho_adjacency(self):
        cfg = ScenarioConfig(scenario="lattice", n=10, rho=0.3)
        sigma = covariance_matrix(cfg)
        assert sigma[0, 1] == 0.3 and sigma[0, 6] == 0.0
        assert np.allclose(np.diag(sigma), 1.0)

    def test_non_pd_covariance_rejected(self):
        with pytest.raises(ValidationError):
            ScenarioConfig(scenario="hub", n=10, rho=0.6)  # 1 - 0.6*sqrt(5) < 0

    def test_network_needs_twelve_columns(self):
        with pytest.raises(ValidationError):
            ScenarioConfig(scenario="hub", n=10, p=6)


class TestGenerators:
    def test_independent_sample_covariance_near_identity(self):
        cfg = ScenarioConfig(scenario="independent", n=100_000, seed=0)
        x = gen_covariates(cfg, rng_for(0, 0))
        sample = np.cov(x, rowvar=False)
        assert np.max(np.abs(sample - np.eye(12))) < 0.05

    def test_lattice_correlations(self):
        cfg = ScenarioConfig(scenario="lattice", n=100_000, seed=0)
        x = gen_covariates(cfg, rng_for(1, 0))
        corr = np.corrcoef(x, rowvar=False)
        assert corr[0, 1] == pytest.approx(0.3, abs=0.02)
        assert corr[0, 6] == pytest.approx(0.0, abs=0.02)

    def test_propensity_at_origin(self):
        x = np.zeros((1, 12))
        pi = true_propensity(x, scenario_edges("independent"))
        assert pi[0] == pytest.approx(1 / (1 + np.exp(-1)), abs=1e-12)

    def test_treatment_rate_matches_monte_carlo_integral(self):
        cfg = ScenarioConfig(scenario="independent", n=100_000, seed=3)
        rng = rng_for(3, 0)
        x = gen_covariates(cfg, rng)
        a = gen_treatment(x, (), rng)
        oracle_rng = np.random.default_rng(42)
        s = oracle_rng.normal(scale=np.sqrt(2), size=2_000_000)
        oracle = np.mean(1 / (1 + np.exp(-(1 + s))))
        assert a.mean() == pytest.approx(oracle, abs=0.01)

    def test_unit_level_shift_is_exactly_gamma0(self, rng):
        x = rng.normal(size=(500, 12))
        a = rng.integers(0, 2, 500)
        y, y1, y0 = gen_outcome(x, a, scenario_edges("hub"), 2.5, rng)
        assert np.allclose(y1 - y0, 2.5)
        assert np.array_equal(y, np.where(a == 1, y1, y0))

    def test_control_outcome_distribution_independent_case(self):
        rng = rng_for(9, 0)
        x = rng.normal(size=(200_000, 12))
        a = np.zeros(200_000, dtype=int)
        y, _, y0 = gen_outcome(x, a, (), 1.0, rng)
        assert y0.mean() == pytest.approx(1.0, abs=0.02)
        assert y0.var() == pytest.approx(3.0, rel=0.02)

    def test_replicates_are_reproducible(self):
        cfg = ScenarioConfig(scenario="independent", n=50, seed=5)
        r1 = generate_replicate(cfg, 3)
        r2 = generate_replicate(cfg, 3)
        assert np.array_equal(r1.dataset.y, r2.dataset.y)
        assert np.array_equal(r1.dataset.x, r2.dataset.x)


class TestTrueEffects:
    def test_additive_effects(self):
        cfg = ScenarioConfig(scenario="hub", n=10, gamma0=1.7)
        assert true_effect(cfg, ate()) == 1.7
        assert true_effect(cfg, qte(0.3)) == 1.7

    def test_zero_gamma_nulls_everything(self):
        cfg = ScenarioConfig(scenario="independent", n=10, gamma0=0.0)
        assert true_effect(cfg, ate()) == 0.0
        assert true_effect(cfg, dte(0.4)) == 0.0

    def test_independent_cdf_gap_closed_form(self):
        cfg = ScenarioConfig(scenario="independent", n=10)
        got = true_effect(cfg, dte(0.0))
        want = norm.cdf(-2 / np.sqrt(3)) - norm.cdf(-1 / np.sqrt(3))
        assert got == pytest.approx(want, abs=1e-12)

    def test_network_cdf_gap_via_monte_carlo_oracle(self):
        cfg = ScenarioConfig(scenario="lattice", n=10)
        one = true_effect(cfg, dte(0.0), n_draws=400_000)
        two = true_effect(cfg, dte(0.0), n_draws=400_000)  # cached
        assert one == two
        assert -1.0 < one < 0.0  # shift up, so the CDF gap at 0 is negative


class TestSenSpe:
    def test_perfect_recovery(self):
        sel = selection_with(4, {0, 2}, {(1, 3)})
        sen, spe = compute_sen_spe(sel, {0, 2}, {(1, 3)}, p=4)
        assert sen == 1.0 and spe == 1.0

    def test_all_zero_estimate_scores_zero_spe(self):
        sel = selection_with(4, set(), set())
        sen, spe = compute_sen_spe(sel, {0, 2}, {(1, 3)}, p=4)
        assert sen == 1.0 and spe == 0.0

    def test_empty_denominator_reports_missing(self):
        sel = selection_with(2, {0, 1}, {(0, 1)})
        sen, spe = compute_sen_spe(sel, {0, 1}, {(0, 1)}, p=2)
        assert sen is None and spe == 1.0

    def test_partial_recovery_rates(self):
        sel = selection_with(4, {0, 1}, set())
        sen, spe = compute_sen_spe(sel, {0, 2}, set(), p=4)
        # truly zero: mains {1,3} and all 6 pairs; main 1 was wrongly kept
        assert sen == pytest.approx(7 / 8)
        assert spe == pytest.approx(1 / 2)


class TestRunReplications:
    def test_null_effect_bias_within_noise(self):
        cfg = ScenarioConfig(scenario="independent", n=400, gamma0=0.0, seed=17)
        rows = run_replications(cfg, ("CDF",), (ate(),), reps=40)
        row = rows[0]
        assert abs(row.bias) < 3 * row.se / np.sqrt(row.n_used)

    def test_single_replicate_has_missing_se_and_cr(self):
        cfg = ScenarioConfig(scenario="independent", n=300, seed=2)
        rows = run_replications(cfg, ("CDF", "IPW"), (ate(),), reps=1)
        for row in rows:
            assert row.se is None and row.cr is None
            assert row.n_used == 1

    def test_mse_identity(self):
        cfg = ScenarioConfig(scenario="independent", n=300, seed=6)
        row = run_replications(cfg, ("LD",), (ate(),), reps=30)[0]
        reps = row.n_used
        expected = row.bias**2 + row.se**2 * (reps - 1) / reps
        assert row.mse == pytest.approx(expected, rel=1e-9)

    def test_thread_count_does_not_change_results(self):
        cfg = ScenarioConfig(scenario="independent", n=250, seed=8)
        specs = (ate(), qte(0.5))
        rows1 = run_replications(cfg, ("CDF", "Firpo"), specs, reps=10, threads=1)
        rows2 = run_replications(cfg, ("CDF", "Firpo"), specs, reps=10, threads=2)
        assert metrics_to_csv(rows1) == metrics_to_csv(rows2)

    def test_sen_spe_attached_to_cdf_rows_only(self):
        cfg = ScenarioConfig(scenario="independent", n=300, seed=4)
        rows = run_replications(cfg, ("CDF", "LD", "IPW"), (ate(),), reps=5)
        by_method = {r.method: r for r in rows}
        assert by_method["CDF"].sen is not None
        assert by_method["LD"].sen is None and by_method["IPW"].sen is None

    def test_method_order_matches_tables(self):
        cfg = ScenarioConfig(scenario="independent", n=250, seed=4)
        rows = run_replications(cfg, ("CDF", "LD", "IPW", "Firpo"),
                                (ate(), qte(0.5), dte(0.0)), reps=2)
        assert [(r.estimand, r.method) for r in rows] == [
            ("ATE", "IPW"), ("ATE", "LD"), ("ATE", "CDF"),
            ("QTE(0.5)", "Firpo"), ("QTE(0.5)", "CDF"),
            ("DTE(0)", "CDF"),
        ]

    def test_failure_budget(self):
        cfg = ScenarioConfig(scenario="independent", n=300, seed=4)
        outcomes = simulate_outcomes(cfg, ("CDF",), (ate(),), reps=10)
        for i in range(6):
            outcomes[i] = {"index": i, "error": "boom"}
        with pytest.raises(RunError):
            aggregate_metrics(cfg, outcomes, ("CDF",), (ate(),))

    def test_efficiency_flag_present_in_outcomes(self):
        cfg = ScenarioConfig(scenario="independent", n=300, seed=4)
        outcomes = simulate_outcomes(cfg, ("CDF",), (ate(), dte(0.0)), reps=4)
        assert all(o["efficiency_ok"] for o in outcomes)
