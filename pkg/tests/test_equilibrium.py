"""Excess demand, tatonnement, the grid oracle, and the equilibrium index."""

import numpy as np
import pytest

from dutybound.duty import compile_constraints, load_registry
from dutybound.economy import Agent, Fiber, FiberEconomy, UtilityFamily, UtilitySpec
from dutybound.equilibrium import (
    PriceVector,
    equilibrium_index,
    excess_demand,
    solve_grid_oracle,
    solve_tatonnement,
    trade_volumes,
    walras_gap,
)
from dutybound.errors import DimensionTooLarge, SingularJacobian

from oracles import cd_equilibrium_2good


def cd_agent(name, alpha1, w1, w2):
    spec = UtilitySpec(family=UtilityFamily.COBB_DOUGLAS_EXTENDED,
                       alpha={"g1": alpha1, "g2": 1.0 - alpha1})
    return Agent(id=name, endowment={"g1": w1, "g2": w2}, utility=spec)


def two_good_economy(agents):
    return FiberEconomy(fiber=Fiber(y_id="y", goods=("g1", "g2"), duties=()),
                        agents=tuple(agents))


def symmetric_economy():
    return two_good_economy([cd_agent("A", 0.5, 1.0, 0.0), cd_agent("B", 0.5, 0.0, 1.0)])


class SyntheticEconomy:
    """Two-good excess demand with three equilibria at p2 in {0.5, 1, 2}.

    Walras-consistent by construction: z1 = -p2 * z2. This is the classic
    desk-scale shape for multiplicity: demand for good 2 crosses zero three
    times with alternating slopes.
    """

    dims = ("g1", "g2")
    numeraire_index = 0

    def free_indices(self):
        return [1]

    def initial_prices(self):
        return np.array([1.0, 1.0])

    def excess_demand(self, prices):
        p2 = float(np.asarray(prices)[1])
        z2 = -(p2 - 0.5) * (p2 - 1.0) * (p2 - 2.0) / p2 ** 2
        return np.array([-p2 * z2, z2])


class TestExcessDemand:
    def test_symmetric_clears_at_unit_prices(self):
        z = excess_demand(symmetric_economy(), np.array([1.0, 1.0]))
        assert np.allclose(z, 0.0, atol=1e-9)

    def test_skewed_prices_sign_pattern_and_walras(self):
        economy = symmetric_economy()
        p = np.array([1.0, 2.0])
        z = excess_demand(economy, p)
        # good 2 became expensive: excess demand for good 1, excess supply of 2
        assert z[0] > 0 and z[1] < 0
        assert walras_gap(p, z) <= 1e-10

    def test_single_agent_autarky(self):
        """One agent: the value of excess demand vanishes at every price
        (budget exhaustion), and markets clear at the agent's supporting
        price, where demand equals the endowment exactly."""
        economy = two_good_economy([cd_agent("solo", 0.4, 1.0, 2.0)])
        for p2 in (0.5, 1.0, 3.0):
            p = np.array([1.0, p2])
            assert walras_gap(p, excess_demand(economy, p)) <= 1e-12
        # supporting price of the endowment: p2 = (a2 / a1) * (w1 / w2)
        p_star = np.array([1.0, (0.6 / 0.4) * (1.0 / 2.0)])
        assert np.allclose(excess_demand(economy, p_star), 0.0, atol=1e-8)

    def test_walras_holds_with_duties_and_claims(self):
        reg = load_registry({
            "goods": ["g1", "g2"],
            "imperfect_duties": ["d1"],
            "maxims": {
                "d1": {"class": "imperfect"},
                "debt": {"class": "perfect", "kind": "PRIOR_CLAIM", "amount": 0.3},
            },
            "bundles": {"y": {"label": "y", "active": ["debt"]}},
        })
        fiber = Fiber(y_id="y", goods=("g1", "g2"), duties=("d1",),
                      constraints=compile_constraints(reg.bundles["y"], reg))
        spec = UtilitySpec(family=UtilityFamily.COBB_DOUGLAS_EXTENDED,
                           alpha={"g1": 0.5, "g2": 0.5}, beta={"d1": 1.0})
        agents = (Agent(id="A", endowment={"g1": 3.0, "g2": 1.0}, utility=spec, lam=1.0),
                  Agent(id="B", endowment={"g1": 1.0, "g2": 3.0}, utility=spec, lam=0.5))
        economy = FiberEconomy(fiber=fiber, agents=agents, duty_prices={"d1": 1.0})
        for p2 in (0.6, 1.0, 1.7):
            p = np.array([1.0, p2, 1.0])
            assert walras_gap(p, excess_demand(economy, p)) <= 1e-10


class TestTatonnement:
    def test_symmetric_equilibrium(self):
        result = solve_tatonnement(symmetric_economy(), p0=np.array([1.0, 1.6]),
                                   tol=1e-10)
        assert result.converged
        assert abs(result.prices.values[1] / result.prices.values[0] - 1.0) <= 1e-8
        for bundle in result.allocations.values():
            assert np.allclose(bundle.x, [0.5, 0.5], atol=1e-6)

    def test_asymmetric_matches_closed_form(self):
        rng = np.random.default_rng(31)
        for _ in range(10):
            alpha1 = rng.uniform(0.2, 0.8, size=2)
            endow = rng.uniform(0.3, 2.5, size=(2, 2))
            economy = two_good_economy([
                cd_agent("A", float(alpha1[0]), float(endow[0, 0]), float(endow[0, 1])),
                cd_agent("B", float(alpha1[1]), float(endow[1, 0]), float(endow[1, 1])),
            ])
            p2_star, alloc = cd_equilibrium_2good(alpha1, endow)
            result = solve_tatonnement(economy, tol=1e-12)
            assert result.converged
            assert abs(result.prices.values[1] - p2_star) < 1e-6
            assert np.allclose(result.allocations["A"].x, alloc[0], atol=1e-6)
            assert np.allclose(result.allocations["B"].x, alloc[1], atol=1e-6)

    def test_walras_law_at_every_iterate(self):
        result = solve_tatonnement(symmetric_economy(), p0=np.array([1.0, 3.0]))
        assert result.diagnostics
        assert max(result.walras_gaps()) <= 1e-10

    def test_homogeneity_of_excess_demand(self):
        economy = two_good_economy([cd_agent("A", 0.3, 1.0, 0.5),
                                    cd_agent("B", 0.7, 0.5, 1.0)])
        p = np.array([1.0, 1.4])
        z = excess_demand(economy, p)
        for k in (0.5, 2.0, 10.0):
            assert np.allclose(excess_demand(economy, k * p), z, rtol=1e-9, atol=1e-12)

    def test_forbidden_good_never_trades(self):
        reg = load_registry({
            "goods": ["grain", "slave_sugar"],
            "imperfect_duties": [],
            "maxims": {"ban": {"class": "perfect", "kind": "FORBID",
                               "target": "slave_sugar"}},
            "bundles": {"y": {"label": "ban", "active": ["ban"]}},
        })
        fiber = Fiber(y_id="y", goods=("grain", "slave_sugar"), duties=(),
                      constraints=compile_constraints(reg.bundles["y"], reg))
        spec = UtilitySpec(family=UtilityFamily.COBB_DOUGLAS_EXTENDED,
                           alpha={"grain": 0.5, "slave_sugar": 0.5})
        agents = (Agent(id="A", endowment={"grain": 1.0, "slave_sugar": 2.0}, utility=spec),
                  Agent(id="B", endowment={"grain": 2.0, "slave_sugar": 0.1}, utility=spec))
        economy = FiberEconomy(fiber=fiber, agents=agents)
        result = solve_tatonnement(economy)
        assert result.converged
        volumes = trade_volumes(economy, result.allocations)
        assert volumes["slave_sugar"] == 0.0
        for bundle in result.allocations.values():
            assert bundle.x[1] == 0.0

    def test_non_convergence_flagged_with_best_iterate(self):
        result = solve_tatonnement(symmetric_economy(), p0=np.array([1.0, 5.0]),
                                   max_iter=3)
        assert not result.converged
        assert result.residual < np.inf and result.iterations == 3

    def test_bad_settings_rejected(self):
        with pytest.raises(ValueError):
            solve_tatonnement(symmetric_economy(), step=0.0)
        with pytest.raises(ValueError):
            solve_tatonnement(symmetric_economy(), tol=-1.0)


class TestGridOracle:
    def test_symmetric_single_equilibrium_at_unit_ratio(self):
        candidates = solve_grid_oracle(symmetric_economy(), resolution=101)
        assert len(candidates) == 1
        assert abs(candidates[0].values[1] - 1.0) < 0.05

    def test_oracle_and_tatonnement_agree(self):
        economy = two_good_economy([cd_agent("A", 0.25, 2.0, 0.2),
                                    cd_agent("B", 0.75, 0.3, 1.5)])
        oracle = solve_grid_oracle(economy, resolution=151)
        solver = solve_tatonnement(economy, tol=1e-11)
        assert solver.converged and len(oracle) == 1
        step = (20.0 / 0.05) ** (1.0 / 150)
        assert abs(np.log(oracle[0].values[1] / solver.prices.values[1])) < 2 * np.log(step)

    def test_three_equilibria_odd_count(self):
        candidates = solve_grid_oracle(SyntheticEconomy(), resolution=200)
        assert len(candidates) == 3
        ratios = sorted(c.values[1] for c in candidates)
        assert np.allclose(ratios, [0.5, 1.0, 2.0], atol=1e-6)

    def test_dimension_guard(self):
        fiber = Fiber(y_id="y", goods=("a", "b", "c", "d"), duties=())
        spec = UtilitySpec(family=UtilityFamily.COBB_DOUGLAS_EXTENDED,
                           alpha={g: 1.0 for g in "abcd"})
        economy = FiberEconomy(fiber=fiber,
                               agents=(Agent(id="x", endowment={g: 1.0 for g in "abcd"},
                                             utility=spec),))
        with pytest.raises(DimensionTooLarge):
            solve_grid_oracle(economy, resolution=20)

    def test_resolution_guard(self):
        with pytest.raises(ValueError):
            solve_grid_oracle(symmetric_economy(), resolution=5)


class TestEquilibriumIndex:
    def test_unique_cd_equilibrium_has_index_plus_one(self):
        economy = two_good_economy([cd_agent("A", 0.3, 1.0, 0.0),
                                    cd_agent("B", 0.7, 0.0, 1.0)])
        result = solve_tatonnement(economy, tol=1e-11)
        assert equilibrium_index(economy, result.prices) == 1

    def test_indices_over_synthetic_equilibria_sum_to_plus_one(self):
        economy = SyntheticEconomy()
        candidates = solve_grid_oracle(economy, resolution=200)
        indices = [equilibrium_index(economy, c) for c in candidates]
        assert sorted(indices) == [-1, 1, 1]
        assert sum(indices) == 1

    def test_requires_market_clearing_prices(self):
        economy = symmetric_economy()
        with pytest.raises(ValueError):
            equilibrium_index(economy, PriceVector(values=np.array([1.0, 3.0]),
                                                   dims=("g1", "g2")))

    def test_singular_jacobian_guard(self):
        class FlatEconomy:
            dims = ("g1", "g2")
            numeraire_index = 0

            def free_indices(self):
                return [1]

            def initial_prices(self):
                return np.array([1.0, 1.0])

            def excess_demand(self, prices):
                p2 = float(np.asarray(prices)[1])
                # tangential equilibrium at p2 = 1: z2 = -(p2 - 1)^2
                z2 = -((p2 - 1.0) ** 2)
                return np.array([-p2 * z2, z2])

        economy = FlatEconomy()
        with pytest.raises(SingularJacobian):
            equilibrium_index(economy, np.array([1.0, 1.0]))

    def test_autarky_defaults_to_plus_one(self):
        economy = two_good_economy([cd_agent("solo", 0.5, 1.0, 1.0)])

        class OneTradable:
            pass

        # a one-good fiber has no free prices at all
        fiber = Fiber(y_id="y", goods=("g1",), duties=())
        spec = UtilitySpec(family=UtilityFamily.COBB_DOUGLAS_EXTENDED, alpha={"g1": 1.0})
        solo = FiberEconomy(fiber=fiber,
                            agents=(Agent(id="s", endowment={"g1": 1.0}, utility=spec),))
        assert equilibrium_index(solo, np.array([1.0])) == 1
