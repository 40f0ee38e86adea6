import math

import numpy as np
import pytest

from mdidro.api import (
    ConvergenceError,
    DiscreteDistribution,
    IllegalArgumentError,
    InvertibilityError,
    StationaryPolicy,
    SupportError,
    TabularMdp,
    capped_ips_estimate,
    inventory_instance,
    ips_estimate,
    long_run_cost,
    mdi_ope_estimate,
    occupation_measure,
    random_policy,
    sample_behavioral,
    total_variation,
)
from mdidro.api.mdp import BehavioralSamples, ips_weight_bound


def swap_chain() -> TabularMdp:
    kernel = [[[0.0, 1.0]], [[1.0, 0.0]]]
    return TabularMdp(kernel, [[1.0], [3.0]])


def samples(states: list, actions: list, costs: list) -> BehavioralSamples:
    return BehavioralSamples(np.array(states), np.array(actions), np.array(costs))


class TestTabularMdp:
    def test_shapes(self) -> None:
        mdp = inventory_instance()
        assert mdp.n_states == 5
        assert mdp.n_actions == 4
        assert mdp.kernel.sum(axis=2).tolist() == pytest.approx(
            np.ones((5, 4)).tolist()
        )

    def test_inventory_cost(self) -> None:
        mdp = inventory_instance()
        assert mdp.cost[0, 0] == pytest.approx(-0.24)

    def test_inventory_respects_capacity(self) -> None:
        mdp = inventory_instance(capacity=3)
        assert np.all(mdp.kernel[:, :, 3:] == 0)

    def test_arrays_are_read_only(self) -> None:
        mdp = swap_chain()
        with pytest.raises(ValueError):
            mdp.cost[0, 0] = 2.0

    def test_kernel_rows(self) -> None:
        with pytest.raises(IllegalArgumentError, match="rows should sum to 1"):
            TabularMdp([[[0.5, 0.4]], [[1.0, 0.0]]], [[1.0], [3.0]])

    def test_cost_shape(self) -> None:
        with pytest.raises(IllegalArgumentError, match="cost table"):
            TabularMdp([[[0.0, 1.0]], [[1.0, 0.0]]], [1.0, 3.0])

    @pytest.mark.parametrize(
        "kwargs,match",
        [
            ({"demand_rate": 1.0}, "demand rate"),
            ({"capacity": 6}, "capacity"),
            ({"n_actions": 0}, "at least one action"),
        ],
    )
    def test_inventory_arguments(self, kwargs: dict, match: str) -> None:
        with pytest.raises(IllegalArgumentError, match=match):
            inventory_instance(**kwargs)


class TestOccupationMeasure:
    def test_periodic_chain(self) -> None:
        mdp = swap_chain()
        measure = occupation_measure(mdp, StationaryPolicy([[1.0], [1.0]]))
        assert measure.table.reshape(-1).tolist() == pytest.approx([0.5, 0.5])
        assert measure.mean_cost == pytest.approx(2.0)
        assert measure.balance_residual(mdp) == pytest.approx(0.0, abs=1e-10)

    def test_inventory_balance(self, rng: np.random.Generator) -> None:
        mdp = inventory_instance()
        policy = random_policy(5, 4, rng)
        measure = occupation_measure(mdp, policy)
        assert measure.table.sum() == pytest.approx(1.0)
        assert measure.balance_residual(mdp) <= 1e-8
        assert long_run_cost(mdp, policy) == pytest.approx(measure.mean_cost)

    def test_induced_policy(self, rng: np.random.Generator) -> None:
        mdp = inventory_instance()
        policy = random_policy(5, 4, rng)
        induced = occupation_measure(mdp, policy).policy()
        visited = occupation_measure(mdp, policy).state_distribution > 1e-9
        assert induced.table[visited].tolist() == pytest.approx(
            policy.table[visited].tolist()
        )

    def test_multichain(self) -> None:
        mdp = TabularMdp([[[1.0, 0.0]], [[0.0, 1.0]]], [[0.0], [1.0]])
        # both states absorb; any mixture is stationary and iteration settles
        measure = occupation_measure(mdp, StationaryPolicy([[1.0], [1.0]]))
        assert measure.mean_cost == pytest.approx(0.5)

    def test_policy_shape(self) -> None:
        with pytest.raises(IllegalArgumentError, match="does not match"):
            occupation_measure(swap_chain(), StationaryPolicy([[0.5, 0.5]] * 2))

    def test_cost_of_the_state_index(self) -> None:
        kernel = [[[0.0, 1.0], [0.0, 1.0]], [[1.0, 0.0], [1.0, 0.0]]]
        mdp = TabularMdp(kernel, [[1.0, 1.0], [2.0, 2.0]])
        policy = StationaryPolicy([[0.5, 0.5], [0.5, 0.5]])
        assert long_run_cost(mdp, policy) == pytest.approx(1.5)

    def test_constant_cost(self, rng: np.random.Generator) -> None:
        base = inventory_instance()
        mdp = TabularMdp(base.kernel, np.full(base.cost.shape, 0.7))
        assert long_run_cost(mdp, random_policy(5, 4, rng)) == pytest.approx(0.7)

    def test_sampled_costs_average_to_the_long_run_cost(
        self, rng: np.random.Generator
    ) -> None:
        mdp = inventory_instance()
        policy = random_policy(5, 4, rng)
        drawn = sample_behavioral(mdp, policy, 100_000, rng)
        error = 4.0 * float(drawn.costs.std()) / math.sqrt(drawn.size)
        assert float(drawn.costs.mean()) == pytest.approx(
            long_run_cost(mdp, policy), abs=error
        )

    def test_iteration_limit(self, rng: np.random.Generator) -> None:
        mdp = inventory_instance()
        with pytest.raises(ConvergenceError):
            occupation_measure(mdp, random_policy(5, 4, rng), max_iterations=1)


class TestRandomPolicy:
    def test_rows(self, rng: np.random.Generator) -> None:
        policy = random_policy(3, 4, rng)
        assert policy.table.shape == (3, 4)
        assert policy.table.sum(axis=1).tolist() == pytest.approx([1.0] * 3)
        assert np.all(policy.table > 0)

    def test_dimensions(self, rng: np.random.Generator) -> None:
        with pytest.raises(IllegalArgumentError):
            random_policy(0, 4, rng)


class TestSampling:
    def test_sample_behavioral(self, rng: np.random.Generator) -> None:
        mdp = inventory_instance()
        drawn = sample_behavioral(mdp, random_policy(5, 4, rng), 50, rng)
        assert drawn.size == 50
        assert drawn.costs.tolist() == mdp.cost[drawn.states, drawn.actions].tolist()
        state, action, cost = drawn.triples()[0]
        assert 1 <= state <= 5
        assert 1 <= action <= 4
        assert cost == mdp.cost[state - 1, action - 1]

    def test_same_seed_same_samples(self) -> None:
        mdp = inventory_instance()
        policy = random_policy(5, 4, np.random.default_rng(0))
        first = sample_behavioral(mdp, policy, 20, np.random.default_rng(3))
        second = sample_behavioral(mdp, policy, 20, np.random.default_rng(3))
        assert first.triples() == second.triples()

    def test_sample_size(self, rng: np.random.Generator) -> None:
        with pytest.raises(IllegalArgumentError, match="sample size"):
            sample_behavioral(swap_chain(), StationaryPolicy([[1.0], [1.0]]), 0, rng)


class TestIps:
    behavior = np.array([[0.25, 0.25], [0.5, 0.0]])
    target = np.array([[0.5, 0.0], [0.25, 0.25]])

    def test_on_policy_is_the_sample_mean(self) -> None:
        drawn = samples([0, 0, 1], [0, 1, 0], [1.0, 2.0, 3.0])
        assert ips_estimate(drawn, self.behavior, self.behavior) == pytest.approx(2.0)

    def test_weights(self) -> None:
        drawn = samples([0, 0, 1], [0, 1, 0], [1.0, 2.0, 3.0])
        expected = (1.0 * 2.0 + 0.0 + 3.0 * 0.5) / 3
        assert ips_estimate(drawn, self.target, self.behavior) == pytest.approx(
            expected
        )

    def test_cap(self) -> None:
        drawn = samples([0, 0, 1], [0, 1, 0], [1.0, 2.0, 3.0])
        assert capped_ips_estimate(drawn, self.target, self.behavior, 0.0) == 0.0
        capped = capped_ips_estimate(drawn, self.target, self.behavior, 1.0)
        assert capped == pytest.approx((1.0 + 3.0 * 0.5) / 3)

    def test_negative_cap(self) -> None:
        drawn = samples([0], [0], [1.0])
        with pytest.raises(IllegalArgumentError, match="cap"):
            capped_ips_estimate(drawn, self.target, self.behavior, -1.0)

    def test_unsupported_pair(self) -> None:
        drawn = samples([1], [1], [1.0])
        with pytest.raises(SupportError, match=r"\(s=2, a=2\)"):
            ips_estimate(drawn, self.target, self.behavior)

    def test_infinite_cap_is_plain_ips(self, rng: np.random.Generator) -> None:
        mdp = inventory_instance()
        behavior_policy = random_policy(5, 4, rng)
        behavior = occupation_measure(mdp, behavior_policy).table
        target = occupation_measure(mdp, random_policy(5, 4, rng)).table
        drawn = sample_behavioral(mdp, behavior_policy, 200, rng)
        assert capped_ips_estimate(drawn, target, behavior, math.inf) == ips_estimate(
            drawn, target, behavior
        )

    def test_unbiased(self) -> None:
        rng = np.random.default_rng(21)
        mdp = inventory_instance()
        behavior_policy = random_policy(5, 4, rng)
        target_policy = random_policy(5, 4, rng)
        behavior = occupation_measure(mdp, behavior_policy).table
        truth = long_run_cost(mdp, target_policy)
        target = occupation_measure(mdp, target_policy).table
        estimates = np.array(
            [
                ips_estimate(
                    sample_behavioral(mdp, behavior_policy, 100, rng),
                    target,
                    behavior,
                )
                for _ in range(400)
            ]
        )
        error = 4.0 * float(estimates.std()) / math.sqrt(estimates.shape[0])
        assert float(estimates.mean()) == pytest.approx(truth, abs=error)

    def test_cap_bias_shrinks(self) -> None:
        rng = np.random.default_rng(5)
        mdp = inventory_instance()
        behavior = occupation_measure(mdp, random_policy(5, 4, rng)).table
        target = occupation_measure(mdp, random_policy(5, 4, rng)).table
        # shift the costs positive so that lowering a weight lowers the estimate
        cost = mdp.cost - mdp.cost.min() + 1.0
        truth = float(np.sum(target * cost))
        ratios = target / behavior

        def bias(cap: float) -> float:
            return truth - float(np.sum(behavior * cost * np.minimum(cap, ratios)))

        caps = [0.0, 0.25, 0.5, 1.0, 2.0, 4.0, float(ratios.max())]
        biases = [bias(cap) for cap in caps]
        assert all(a >= b for a, b in zip(biases, biases[1:]))
        assert biases[0] == pytest.approx(truth)
        assert biases[-1] == pytest.approx(0.0, abs=1e-12)

        flat = np.arange(cost.size)
        states, actions = np.divmod(rng.choice(flat, size=300), cost.shape[1])
        drawn = samples(
            states.tolist(), actions.tolist(), cost[states, actions].tolist()
        )
        estimates = [
            capped_ips_estimate(drawn, target, behavior, cap) for cap in caps
        ]
        assert all(a <= b for a, b in zip(estimates, estimates[1:]))

    def test_weight_bound(self) -> None:
        mdp = TabularMdp(
            [[[1.0, 0.0], [1.0, 0.0]], [[1.0, 0.0], [1.0, 0.0]]],
            [[1.0, -4.0], [2.0, 9.0]],
        )
        # the unvisited pair (2, 2) does not count
        assert ips_weight_bound(mdp, self.target, self.behavior) == pytest.approx(2.0)


class TestMdiOpe:
    def test_shared_costs(self) -> None:
        behavior = np.array([[0.5, 0.5]])
        drawn = samples([0, 0], [0, 1], [1.0, 1.0])
        with pytest.raises(InvertibilityError, match="share the cost"):
            mdi_ope_estimate(drawn, behavior, behavior, 0.1)

    def test_target_must_visit_observed_pairs(self) -> None:
        behavior = np.array([[0.5, 0.5]])
        target = np.array([[1.0, 0.0]])
        drawn = samples([0, 0], [0, 1], [1.0, 2.0])
        with pytest.raises(SupportError, match="evaluation frequency"):
            mdi_ope_estimate(drawn, target, behavior, 0.1)

    def test_projection_recovers_the_target_costs(self) -> None:
        behavior = np.full((2, 2), 0.25)
        target = np.array([[0.4, 0.1], [0.3, 0.2]])
        # every pair observed equally often, so the sample is the behavior measure
        drawn = samples(
            [0, 0, 1, 1] * 5, [0, 1, 0, 1] * 5, [1.0, 2.0, 3.0, 4.0] * 5
        )
        estimate = mdi_ope_estimate(drawn, target, behavior, 0.05)
        assert estimate.projection.converged
        expected = DiscreteDistribution(
            [[1.0], [2.0], [3.0], [4.0]], [0.4, 0.1, 0.3, 0.2]
        )
        assert total_variation(estimate.projection.projection, expected) <= 1e-2
        # the worst case dominates the evaluation policy's mean cost of 2.3
        assert estimate.value >= 2.3 - 1e-2

    def test_inventory_estimate(self) -> None:
        rng = np.random.default_rng(11)
        mdp = inventory_instance()
        behavior_policy = random_policy(5, 4, rng)
        target_policy = random_policy(5, 4, rng)
        behavior = occupation_measure(mdp, behavior_policy).table
        target = occupation_measure(mdp, target_policy).table
        drawn = sample_behavioral(mdp, behavior_policy, 300, rng)
        estimate = mdi_ope_estimate(drawn, target, behavior, 0.05)
        assert estimate.kl_target >= 0
        assert math.isfinite(estimate.value)
        assert estimate.value >= float(drawn.costs.min()) - 1e-6
        assert estimate.value <= float(drawn.costs.max()) + 1e-3
        payload = estimate.to_payload()
        assert payload["J"] == estimate.value
        assert payload["kl_target"] == estimate.kl_target
        assert "worst_case" in payload
