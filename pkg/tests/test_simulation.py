"""Monte Carlo harness: seeding, contamination, pairing, determinism."""

import numpy as np
import pytest

from rayreg.simulation import (
    BreakdownCurve,
    ScenarioConfig,
    breakdown_curve,
    format_table,
    mix_seed,
    rng_for,
    run_table,
    scenario_design,
    sensitivity_curve,
    simulate_signal,
)

BETA = (0.5, 0.15)


def _cfg(**kwargs):
    defaults = dict(beta_true=BETA, n_obs=80, epsilon=0.0, replications=40, master_seed=99)
    defaults.update(kwargs)
    return ScenarioConfig(**defaults)


class TestSeeds:
    def test_mix_seed_deterministic_and_spread(self):
        a = mix_seed(123, 1, 5)
        assert a == mix_seed(123, 1, 5)
        neighbors = {mix_seed(123, 1, i) for i in range(1000)}
        assert len(neighbors) == 1000
        assert mix_seed(123, 1, 5) != mix_seed(124, 1, 5)

    def test_rng_for_reproducible(self):
        assert rng_for(7, 1).random(5) == pytest.approx(rng_for(7, 1).random(5))


class TestSimulateSignal:
    def test_no_contamination_empty_positions(self):
        y, pos = simulate_signal(_cfg(), 0)
        assert pos.size == 0
        assert np.all(y > 0)

    def test_exact_outlier_count_and_value(self):
        cfg = _cfg(n_obs=100, epsilon=0.05)
        y, pos = simulate_signal(cfg, 3)
        assert pos.size == 5
        assert np.all(y[pos] == 10.0)
        assert len(set(pos.tolist())) == 5

    def test_floor_rule(self):
        cfg = _cfg(n_obs=90, epsilon=0.01)  # floor(0.9) = 0 outliers
        _, pos = simulate_signal(cfg, 0)
        assert pos.size == 0

    def test_deterministic_per_replication(self):
        cfg = _cfg(epsilon=0.1)
        y1, p1 = simulate_signal(cfg, 7)
        y2, p2 = simulate_signal(cfg, 7)
        assert np.array_equal(y1, y2) and np.array_equal(p1, p2)
        y3, _ = simulate_signal(cfg, 8)
        assert not np.array_equal(y1, y3)

    def test_covariates_fixed_across_replications(self):
        cfg = _cfg()
        X1 = scenario_design(cfg).X
        X2 = scenario_design(cfg).X
        assert np.array_equal(X1, X2)

    def test_config_validation(self):
        with pytest.raises(ValueError):
            _cfg(epsilon=1.0)
        with pytest.raises(ValueError):
            _cfg(n_obs=2)
        with pytest.raises(ValueError):
            _cfg(outlier_value=0.0)


class TestRunTable:
    def test_reports_and_totals(self):
        reports = run_table([_cfg(epsilon=0.05, replications=30)])
        rep = reports[0]
        for est in (rep.mle, rep.wmle):
            assert est.n_used + est.convergence_failures == 30
            assert est.absolute_total_rb == pytest.approx(
                sum(abs(v) for v in est.rb_percent), abs=1e-12
            )
            assert est.absolute_total_mse == pytest.approx(sum(est.mse), abs=1e-12)

    def test_zero_reweight_rounds_make_columns_identical(self):
        reports = run_table([_cfg(replications=25, reweight_iterations=0)])
        rep = reports[0]
        assert rep.mle.mean == rep.wmle.mean
        assert rep.mle.mse == rep.wmle.mse

    def test_bitwise_reproducible(self):
        cfgs = [_cfg(replications=20, epsilon=0.02)]
        a = run_table(cfgs)[0].as_dict()
        b = run_table(cfgs)[0].as_dict()
        assert a == b

    def test_workers_do_not_change_results(self):
        cfgs = [_cfg(replications=14, epsilon=0.05)]
        serial = run_table(cfgs, workers=1)[0].as_dict()
        parallel = run_table(cfgs, workers=2)[0].as_dict()
        assert serial == parallel

    def test_clean_cell_recovers_truth_loosely(self):
        rep = run_table([_cfg(n_obs=500, replications=300)])[0]
        assert rep.mle.mean[0] == pytest.approx(0.5, abs=0.015)
        assert rep.mle.mean[1] == pytest.approx(0.15, abs=0.03)
        assert rep.mle.convergence_failures == 0

    def test_one_percent_contamination_direction(self):
        # A single percent of value-10 outliers already drags the plain
        # intercept up by tens of percent while the robust column stays
        # within a few percent of the truth.
        rep = run_table([_cfg(n_obs=500, epsilon=0.01, replications=300)])[0]
        assert 15.0 <= rep.mle.rb_percent[0] <= 50.0
        assert rep.mle.rb_percent[1] < 0.0
        assert abs(rep.wmle.rb_percent[0]) <= 4.0

    def test_empty_grid_rejected(self):
        with pytest.raises(ValueError):
            run_table([])


class TestBreakdownCurve:
    def test_count_zero_matches_clean_table_cell(self):
        cfg = _cfg(replications=25)
        curve = breakdown_curve(cfg, [0, 4], workers=1)
        table = run_table([cfg])[0]
        assert curve.mle_total_rb[0] == pytest.approx(table.mle.absolute_total_rb, abs=1e-12)
        assert curve.wmle_total_rb[0] == pytest.approx(table.wmle.absolute_total_rb, abs=1e-12)

    def test_contamination_hurts_mle(self):
        curve = breakdown_curve(_cfg(n_obs=120, replications=30), [0, 12])
        assert curve.mle_total_rb[1] > curve.mle_total_rb[0]
        assert curve.wmle_total_rb[1] < curve.mle_total_rb[1]

    def test_mle_curve_monotone_after_smoothing(self):
        curve = breakdown_curve(_cfg(n_obs=120, replications=40), [0, 8, 16, 32])
        smoothed = [
            0.5 * (a + b) for a, b in zip(curve.mle_total_rb, curve.mle_total_rb[1:])
        ]
        assert all(b >= a for a, b in zip(smoothed, smoothed[1:]))

    def test_count_bounds(self):
        with pytest.raises(ValueError):
            breakdown_curve(_cfg(), [80])
        with pytest.raises(ValueError):
            breakdown_curve(_cfg(), [-1])

    def test_csv_layout(self):
        curve = BreakdownCurve(
            counts=(0, 5), mle_total_rb=(1.0, 2.0), wmle_total_rb=(0.5, 0.7),
            convergence_failures=0,
        )
        lines = curve.to_csv().strip().splitlines()
        assert lines[0] == "outliers,mle_total_rb,wmle_total_rb"
        assert lines[1] == "0,1.0,0.5"


class TestSensitivityCurve:
    def test_score_neutral_value_is_quiet(self):
        # An outlier near 2*mu/sqrt(pi) barely moves either estimator, while
        # a large one drags the plain fit hard.
        cfg = _cfg(n_obs=150, replications=25)
        curve = sensitivity_curve(cfg, [2.0, 10.0])
        assert curve.mle_masc[0] < 2.0
        assert curve.mle_masc[1] > 5.0 * curve.mle_masc[0]
        assert curve.wmle_masc[1] < curve.mle_masc[1]

    def test_epsilon_plays_no_role(self):
        a = sensitivity_curve(_cfg(replications=10, epsilon=0.0), [5.0])
        b = sensitivity_curve(_cfg(replications=10, epsilon=0.2), [5.0])
        assert a.mle_masc == b.mle_masc and a.wmle_masc == b.wmle_masc

    def test_deterministic_and_parallel_equal(self):
        cfg = _cfg(replications=8)
        a = sensitivity_curve(cfg, [1.0, 10.0], workers=1)
        b = sensitivity_curve(cfg, [1.0, 10.0], workers=2)
        assert a.mle_masc == b.mle_masc and a.wmle_masc == b.wmle_masc

    def test_rejects_nonpositive_values(self):
        with pytest.raises(ValueError):
            sensitivity_curve(_cfg(replications=5), [0.0, 1.0])


class TestFormatting:
    def test_text_table_mentions_estimators_and_cells(self):
        text = format_table(run_table([_cfg(replications=10)]))
        assert "WMLE" in text and "MLE" in text
        assert "N = 80" in text
        assert "RB(%)" in text and "MSE" in text
