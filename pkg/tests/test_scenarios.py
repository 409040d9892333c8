"""Sugar market dynamics, era paths, and the conspicuous-ethics probe."""

import numpy as np
import pytest

import dutybound.scenarios as scenarios
from dutybound.config import load_packaged_config
from dutybound.economy import Agent, Fiber, UtilityFamily, UtilitySpec
from dutybound.equilibrium import solve_tatonnement
from dutybound.errors import NonMonotoneSurvival
from dutybound.scenarios import (
    SugarMarketConfig,
    check_monotone_flags,
    estimate_critical_mass,
    increasing_segments,
    run_slavery_eras,
    run_sugar,
    veblen_demand_curve,
)
from dutybound.transition import GenerationProfile, build_path

from oracles import grid_search_demand


class TestRunSugar:
    def test_no_ethical_consumers_immediate_exit(self):
        config = SugarMarketConfig(phi=0.0)
        report = run_sugar(config)
        assert not report.survived
        assert report.collapse_period == config.exit_consecutive - 1
        assert all(s == 0.0 for s in report.shares)

    def test_all_ethical_zero_premium_survives(self):
        config = SugarMarketConfig(phi=1.0, price_ethical=1.0, price_conventional=1.0,
                                   price_conventional_after=1.0)
        report = run_sugar(config)
        assert report.survived and all(s == 1.0 for s in report.shares)

    def test_default_survives_pre_shock(self):
        report = run_sugar(SugarMarketConfig())
        pre = report.shares[: SugarMarketConfig.shock_period]
        assert all(s >= SugarMarketConfig.viability_threshold for s in pre)
        assert report.survived

    def test_small_share_collapses_after_shock(self):
        config = SugarMarketConfig(phi=0.05)
        report = run_sugar(config)
        assert not report.survived
        assert report.collapse_period is not None
        assert report.collapse_period > config.shock_period

    def test_share_zero_after_exit(self):
        config = SugarMarketConfig(phi=0.05)
        report = run_sugar(config)
        assert all(s == 0.0 for s in report.shares[report.collapse_period + 1:])

    def test_deterministic_given_seed(self):
        a = run_sugar(SugarMarketConfig(seed=5))
        b = run_sugar(SugarMarketConfig(seed=5))
        assert a.shares == b.shares

    def test_share_monotone_in_phi_and_premium(self):
        phis = np.linspace(0.05, 0.95, 10)
        premiums = np.linspace(0.0, 0.9, 10)
        shares = np.empty((10, 10))
        for i, phi in enumerate(phis):
            for j, premium in enumerate(premiums):
                config = SugarMarketConfig(phi=float(phi),
                                           price_ethical=1.0 + float(premium),
                                           price_conventional=1.0, seed=777)
                shares[i, j] = run_sugar(config).shares[0]
        assert np.all(np.diff(shares, axis=0) >= 0)   # nondecreasing in phi
        assert np.all(np.diff(shares, axis=1) <= 0)   # nonincreasing in premium

    def test_invalid_configs_rejected(self):
        with pytest.raises(ValueError):
            SugarMarketConfig(phi=1.5)
        with pytest.raises(ValueError):
            SugarMarketConfig(viability_threshold=0.0)
        with pytest.raises(ValueError):
            SugarMarketConfig(shock_period=50, horizon=40)


class TestCriticalMass:
    def test_zero_premium_threshold_equals_viability(self):
        config = SugarMarketConfig(price_ethical=1.0, price_conventional=1.0,
                                   price_conventional_after=1.0,
                                   viability_threshold=0.25)
        estimate = estimate_critical_mass(config, bisect_tol=0.002)
        # share equals the rounded ethical count, so the threshold is v itself
        assert estimate.phi_star == pytest.approx(0.25, abs=0.003)

    def test_unpayable_premium_has_no_threshold(self):
        config = SugarMarketConfig(price_ethical=3.0, price_conventional=1.0,
                                   price_conventional_after=1.0, w_max=1.0)
        estimate = estimate_critical_mass(config)
        assert estimate.phi_star is None

    def test_reproducible_across_seeds(self):
        stars = []
        for seed in range(10):
            config = SugarMarketConfig(seed=seed)
            stars.append(estimate_critical_mass(config, bisect_tol=0.002).phi_star)
        assert max(stars) - min(stars) <= 0.04
        assert all(abs(s - stars[0]) <= 0.02 for s in stars[1:])

    def test_scan_included_in_result(self):
        estimate = estimate_critical_mass(SugarMarketConfig(), scan_points=11)
        assert len(estimate.scan) == 11
        assert all(isinstance(f, bool) for _, f in estimate.scan)

    def test_monotone_flag_checker_finds_witnesses(self):
        assert check_monotone_flags([False, True, True]) == []
        assert check_monotone_flags([True, True, True]) == []
        assert check_monotone_flags([False, False, False]) == []
        witnesses = check_monotone_flags([False, True, False, True, False])
        assert (1, 2) in witnesses and (1, 4) in witnesses

    def test_non_monotone_survival_raised(self, monkeypatch):
        def fake_run_sugar(config):
            # survives only on a middle band of phi: non-monotone by design
            survived = 0.3 <= config.phi <= 0.6
            return scenarios.ScenarioReport(shares=[], survived=survived)

        monkeypatch.setattr(scenarios, "run_sugar", fake_run_sugar)
        with pytest.raises(NonMonotoneSurvival) as err:
            estimate_critical_mass(SugarMarketConfig())
        assert err.value.witnesses
        lo, hi = err.value.witnesses[0]
        assert lo < hi


class TestSlaveryEras:
    def test_canonical_config_structure(self):
        cfg = load_packaged_config("slavery")
        records = run_slavery_eras(cfg.template(), cfg.path, cfg.profile)
        assert [rec.y_id for rec in records] == ["y1", "y2", "y3"]
        assert records[0].volumes["slave_sugar"] > 0
        assert records[2].volumes["slave_sugar"] == 0.0
        for bundle in records[2].allocations.values():
            assert bundle.x[1] == 0.0

    def test_single_era_reduces_to_plain_solve(self):
        cfg = load_packaged_config("slavery")
        template = cfg.template()
        path = build_path([[0, "y1"]], template.base)
        records = run_slavery_eras(template, path, GenerationProfile(lambdas=(0.1,)))
        direct = solve_tatonnement(
            template.economy_at("y1", [a.with_lam(0.1) for a in template.agents]),
            step=template.solver_step, tol=template.solver_tol,
            max_iter=template.solver_max_iter)
        assert np.allclose(records[0].result.prices.values, direct.prices.values)

    def test_constraint_ablation_lambda_constant(self):
        """Holding lambda fixed isolates the constraint channel: the y3
        prohibition still zeroes the tainted good while the duty share
        moves only through constraints and carried endowments."""
        cfg = load_packaged_config("slavery")
        template = cfg.template()
        lam = 0.6
        records = run_slavery_eras(template, cfg.path,
                                   GenerationProfile(lambdas=(lam, lam, lam)))
        paired = run_slavery_eras(template, cfg.path, cfg.profile)
        assert records[2].volumes["slave_sugar"] == 0.0
        # the rising-lambda run spends weakly more on duties at the final era
        assert paired[2].duty_share >= records[2].duty_share - 1e-12


class TestVeblenProbe:
    def make_fiber(self):
        return Fiber(y_id="y", goods=("staple",), duties=("eco",))

    def cd_agent(self, rng):
        spec = UtilitySpec(family=UtilityFamily.COBB_DOUGLAS_EXTENDED,
                           alpha={"staple": float(rng.uniform(0.3, 1.5))},
                           beta={"eco": float(rng.uniform(0.2, 1.5))})
        return Agent(id="c", endowment={"staple": float(rng.uniform(2.0, 12.0))},
                     utility=spec, lam=float(rng.uniform(0.2, 2.0)))

    def test_theta_zero_never_slopes_upward(self):
        rng = np.random.default_rng(123)
        sweep = np.linspace(0.4, 3.0, 14)
        fiber = self.make_fiber()
        for _ in range(100):
            curve = veblen_demand_curve(self.cd_agent(rng), fiber, "eco", sweep)
            assert curve.increasing_segments == []

    def test_high_theta_upward_segment_confirmed_by_oracle(self):
        fiber = self.make_fiber()
        spec = UtilitySpec(family=UtilityFamily.VEBLEN_PRICE_DEPENDENT,
                           alpha={"staple": 1.0}, beta={"eco": 1.0},
                           reference_premium={"eco": 1.0})
        agent = Agent(id="v", endowment={"staple": 10.0}, utility=spec,
                      lam=1.0, theta=2.0)
        sweep = np.linspace(0.5, 3.0, 26)
        curve = veblen_demand_curve(agent, fiber, "eco", sweep)
        assert curve.has_increasing_segment()
        lo, hi = curve.increasing_segments[0]
        grid = [p for p in sweep if lo <= p <= hi]
        oracle_q = []
        for p_e in grid:
            bundle, _ = grid_search_demand(agent, np.array([1.0, p_e]), fiber,
                                           resolution=1e-3)
            oracle_q.append(bundle.e[0])
        assert increasing_segments(grid, oracle_q, rtol=1e-4)

    def test_reference_price_sweep_matches_theta_zero(self):
        """When the swept price never leaves the reference, the status term
        vanishes and the curve coincides with the plain one."""
        fiber = self.make_fiber()
        veblen = UtilitySpec(family=UtilityFamily.VEBLEN_PRICE_DEPENDENT,
                             alpha={"staple": 1.0}, beta={"eco": 1.0},
                             reference_premium={"eco": 1.3})
        plain = UtilitySpec(family=UtilityFamily.COBB_DOUGLAS_EXTENDED,
                            alpha={"staple": 1.0}, beta={"eco": 1.0})
        sweep = [1.3]
        a_veblen = Agent(id="v", endowment={"staple": 8.0}, utility=veblen,
                         lam=1.0, theta=3.0)
        a_plain = Agent(id="p", endowment={"staple": 8.0}, utility=plain, lam=1.0)
        q_veblen = veblen_demand_curve(a_veblen, fiber, "eco", sweep).quantities
        q_plain = veblen_demand_curve(a_plain, fiber, "eco", sweep).quantities
        assert q_veblen == pytest.approx(q_plain, abs=1e-9)

    def test_unknown_duty_rejected(self):
        with pytest.raises(ValueError):
            veblen_demand_curve(self.cd_agent(np.random.default_rng(0)),
                                self.make_fiber(), "ghost", [1.0])
