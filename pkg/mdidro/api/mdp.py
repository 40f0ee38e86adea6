import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from .core import (
    ConvergenceError,
    IllegalArgumentError,
    InvertibilityError,
    SupportError,
)
from .distributions import (
    BoxSet,
    DiscreteDistribution,
    TabularFeatures,
    empirical_from_samples,
    relative_entropy,
)
from .dro import (
    DroConfig,
    LinearLoss,
    ScenarioSet,
    WorstCaseRisk,
    default_tolerance,
    worst_case_risk,
)
from .iprojection import (
    IProjectionConfig,
    IProjectionProblem,
    IProjectionSolution,
    solve,
)


log = logging.getLogger(__name__)

STOCHASTIC_TOLERANCE = 1e-10
BALANCE_TOLERANCE = 1e-8


def _frozen(values: Any) -> np.ndarray:
    array = np.array(values, dtype=float)
    array.setflags(write=False)
    return array


def _check_stochastic(table: np.ndarray, what: str) -> None:
    if np.any(table < 0) or not np.all(np.isfinite(table)):
        raise IllegalArgumentError(f"{what} should have finite nonnegative entries")
    sums = table.sum(axis=-1)
    if np.max(np.abs(sums - 1.0)) > STOCHASTIC_TOLERANCE:
        raise IllegalArgumentError(f"{what} rows should sum to 1")


@dataclass(frozen=True, eq=False)
class TabularMdp:
    """Finite MDP; ``kernel[s, a, s2]`` is the probability of moving to s2.

    States and actions are 0-based here and 1-based in user-facing text.
    """

    kernel: np.ndarray
    cost: np.ndarray
    initial_state: int = 0

    def __post_init__(self) -> None:
        kernel = _frozen(self.kernel)
        cost = _frozen(self.cost)
        if kernel.ndim != 3 or kernel.shape[0] != kernel.shape[2]:
            raise IllegalArgumentError("kernel should have shape (nS, nA, nS)")
        if cost.shape != kernel.shape[:2]:
            raise IllegalArgumentError("cost table should have shape (nS, nA)")
        if not np.all(np.isfinite(cost)):
            raise IllegalArgumentError("costs should be finite")
        _check_stochastic(kernel, "transition kernel")
        if not 0 <= self.initial_state < kernel.shape[0]:
            raise IllegalArgumentError("initial state is out of range")
        object.__setattr__(self, "kernel", kernel)
        object.__setattr__(self, "cost", cost)

    @property
    def n_states(self) -> int:
        return int(self.kernel.shape[0])

    @property
    def n_actions(self) -> int:
        return int(self.kernel.shape[1])


@dataclass(frozen=True, eq=False)
class StationaryPolicy:
    table: np.ndarray

    def __post_init__(self) -> None:
        table = _frozen(self.table)
        if table.ndim != 2:
            raise IllegalArgumentError("policy table should have shape (nS, nA)")
        _check_stochastic(table, "policy")
        object.__setattr__(self, "table", table)

    def check_compatible(self, mdp: TabularMdp) -> None:
        if self.table.shape != (mdp.n_states, mdp.n_actions):
            raise IllegalArgumentError(
                f"policy shape {self.table.shape} does not match the MDP "
                f"({mdp.n_states}, {mdp.n_actions})"
            )


@dataclass(frozen=True, eq=False)
class OccupationMeasure:
    table: np.ndarray
    mean_cost: float

    @property
    def state_distribution(self) -> np.ndarray:
        return self.table.sum(axis=1)

    def balance_residual(self, mdp: TabularMdp) -> float:
        inflow = np.einsum("sa,sat->t", self.table, mdp.kernel)
        return float(np.max(np.abs(self.state_distribution - inflow)))

    def policy(self, threshold: float = 1e-9) -> StationaryPolicy:
        """Policy induced by the frequencies; rarely visited states act uniformly."""
        visits = self.state_distribution
        n_actions = self.table.shape[1]
        uniform = np.full_like(self.table, 1.0 / n_actions)
        table = np.divide(
            self.table,
            visits[:, None],
            out=uniform,
            where=(visits > threshold)[:, None],
        )
        return StationaryPolicy(table / table.sum(axis=1, keepdims=True))


def occupation_measure(
    mdp: TabularMdp, policy: StationaryPolicy, max_iterations: int = 1_000_000
) -> OccupationMeasure:
    policy.check_compatible(mdp)
    chain = np.einsum("sa,sat->st", policy.table, mdp.kernel)
    # the lazy chain has the same stationary law and is aperiodic
    lazy = 0.5 * (chain + np.eye(mdp.n_states))
    dist = np.full(mdp.n_states, 1.0 / mdp.n_states)
    for iteration in range(1, max_iterations + 1):
        following = dist @ lazy
        following /= following.sum()
        residual = float(np.max(np.abs(following - dist)))
        dist = following
        if residual <= 1e-12:
            log.debug("Stationary distribution found after %d iterations", iteration)
            break
    else:
        raise ConvergenceError(
            "power iteration did not settle; the policy chain may be multichain"
        )
    table = dist[:, None] * policy.table
    measure = OccupationMeasure(_frozen(table), float(np.sum(table * mdp.cost)))
    balance = measure.balance_residual(mdp)
    if balance > BALANCE_TOLERANCE:
        raise ConvergenceError(f"occupation measure violates balance by {balance:.3g}")
    return measure


def long_run_cost(mdp: TabularMdp, policy: StationaryPolicy) -> float:
    return occupation_measure(mdp, policy).mean_cost


@dataclass(frozen=True, eq=False)
class BehavioralSamples:
    states: np.ndarray
    actions: np.ndarray
    costs: np.ndarray

    @property
    def size(self) -> int:
        return int(self.states.shape[0])

    def triples(self) -> List[Tuple[int, int, float]]:
        """1-based (state, action, cost) triples."""
        return [
            (int(s) + 1, int(a) + 1, float(c))
            for s, a, c in zip(self.states, self.actions, self.costs)
        ]


def sample_behavioral(
    mdp: TabularMdp,
    policy: StationaryPolicy,
    sample_size: int,
    rng: np.random.Generator,
) -> BehavioralSamples:
    """Draw i.i.d. state-action pairs from the behavioral occupation measure."""
    if sample_size < 1:
        raise IllegalArgumentError("sample size should be positive")
    measure = occupation_measure(mdp, policy)
    flat = measure.table.reshape(-1)
    picks = rng.choice(flat.shape[0], size=sample_size, p=flat / flat.sum())
    states, actions = np.divmod(picks, mdp.n_actions)
    return BehavioralSamples(states, actions, mdp.cost[states, actions])


def _importance_ratios(
    samples: BehavioralSamples, target: np.ndarray, behavior: np.ndarray
) -> np.ndarray:
    denominators = behavior[samples.states, samples.actions]
    missing = np.flatnonzero(denominators <= 0)
    if missing.size:
        num = missing[0]
        raise SupportError(
            f"behavioral frequency is zero at observed pair "
            f"(s={samples.states[num] + 1}, a={samples.actions[num] + 1})"
        )
    return target[samples.states, samples.actions] / denominators


def capped_ips_estimate(
    samples: BehavioralSamples,
    target: np.ndarray,
    behavior: np.ndarray,
    cap: float = math.inf,
) -> float:
    if cap < 0:
        raise IllegalArgumentError(f"cap should be nonnegative, got {cap}")
    ratios = np.minimum(cap, _importance_ratios(samples, target, behavior))
    return float(np.mean(samples.costs * ratios))


def ips_estimate(
    samples: BehavioralSamples, target: np.ndarray, behavior: np.ndarray
) -> float:
    return capped_ips_estimate(samples, target, behavior)


def ips_weight_bound(
    mdp: TabularMdp, target: np.ndarray, behavior: np.ndarray
) -> float:
    """Largest |c| * mu_e / mu_b over pairs the behavior policy visits."""
    mask = behavior > 0
    return float(np.max(np.abs(mdp.cost[mask]) * target[mask] / behavior[mask]))


@dataclass(frozen=True, eq=False)
class OpeEstimate:
    value: float
    kl_target: float
    projection: IProjectionSolution
    worst_case: WorstCaseRisk

    def to_payload(self) -> Dict[str, Any]:
        return {
            "J": self.value,
            "kl_target": self.kl_target,
            "entropy_value": self.projection.entropy_value,
            "feasibility_gap": self.projection.feasibility_gap,
            "certified_optimality_bound": self.projection.certified_optimality_bound,
            "certified_feasibility_bound": (
                self.projection.certified_feasibility_bound
            ),
            "converged": self.projection.converged and self.worst_case.converged,
            "worst_case": self.worst_case.to_payload(),
        }


def _cost_features(
    samples: BehavioralSamples, target: np.ndarray, behavior: np.ndarray
) -> TabularFeatures:
    owners: Dict[float, Tuple[int, int]] = {}
    for s, a, c in zip(samples.states, samples.actions, samples.costs):
        pair = (int(s), int(a))
        seen = owners.setdefault(float(c), pair)
        if seen != pair:
            raise InvertibilityError(
                f"pairs (s={seen[0] + 1}, a={seen[1] + 1}) and "
                f"(s={pair[0] + 1}, a={pair[1] + 1}) share the cost {c!r}"
            )
    costs = np.array(sorted(owners))
    pairs = [owners[c] for c in costs]
    numerators = np.array([target[p] for p in pairs])
    denominators = np.array([behavior[p] for p in pairs])
    if np.any(denominators <= 0):
        raise SupportError("behavioral frequency is zero at an observed pair")
    if np.any(numerators <= 0):
        raise SupportError(
            "evaluation frequency is zero at an observed pair; "
            "its log-ratio feature is undefined"
        )
    return TabularFeatures(costs, np.log(numerators / denominators))


def mdi_ope_estimate(
    samples: BehavioralSamples,
    target: np.ndarray,
    behavior: np.ndarray,
    radius: float,
    tolerance: Optional[float] = None,
    inflation: Optional[float] = None,
    dro_config: Optional[DroConfig] = None,
    iprojection_config: Optional[IProjectionConfig] = None,
) -> OpeEstimate:
    """Upper estimate of the evaluation policy's long-run cost.

    The empirical cost distribution is projected onto the distributions
    whose mean log-ratio equals the divergence between the two occupation
    measures; the worst case over a ball of ``radius`` around the
    projection is the estimate.
    """
    target = np.asarray(target, dtype=float)
    behavior = np.asarray(behavior, dtype=float)
    features = _cost_features(samples, target, behavior)
    empirical = empirical_from_samples(samples.costs)
    flat_pairs = np.arange(target.size, dtype=float).reshape(-1, 1)
    kl_target = relative_entropy(
        DiscreteDistribution(flat_pairs, target.reshape(-1)),
        DiscreteDistribution(flat_pairs, behavior.reshape(-1)),
    )
    if math.isinf(kl_target):
        raise SupportError("evaluation measure is not covered by the behavior measure")
    if inflation is None:
        inflation = 1e-4 * (1.0 + abs(kl_target))
    moment_set = BoxSet.around([kl_target], inflation)
    config = dro_config or DroConfig(radius=radius)
    if tolerance is None:
        tolerance = default_tolerance(config.radius)
    projection = solve(
        IProjectionProblem(empirical, features, moment_set, tolerance),
        iprojection_config,
    )
    scenarios = ScenarioSet.from_distribution(empirical, features)
    worst_case = worst_case_risk(
        None,
        projection.projection,
        features,
        moment_set,
        scenarios,
        config,
        LinearLoss(),
    )
    return OpeEstimate(worst_case.value, kl_target, projection, worst_case)


def inventory_instance(
    demand_rate: float = 0.2,
    capacity: int = 5,
    order_cost: float = 0.6,
    holding_cost: float = 0.3,
    price: float = 1.0,
    n_states: int = 5,
    n_actions: int = 4,
) -> TabularMdp:
    """Inventory with geometric demand over stock levels 1..n_states.

    Stock that would fall to zero or below is reported as the lowest state.
    """
    lam = demand_rate
    if not 0 < lam < 1:
        raise IllegalArgumentError(f"demand rate should be in (0, 1), got {lam}")
    if capacity < 1 or capacity > n_states:
        raise IllegalArgumentError(
            f"capacity should be between 1 and the number of states, got {capacity}"
        )
    if n_actions < 1:
        raise IllegalArgumentError("there should be at least one action")
    kernel = np.zeros((n_states, n_actions, n_states))
    cost = np.zeros((n_states, n_actions))
    for s in range(1, n_states + 1):
        for a in range(1, n_actions + 1):
            stock = min(capacity, s + a)
            row = kernel[s - 1, a - 1]
            for level in range(2, stock + 1):
                row[level - 1] = lam * (1 - lam) ** (stock - level)
            row[0] = (1 - lam) ** (stock - 1)
            expected_sales = (1 - lam) / lam * (1 - (1 - lam) ** (s + a))
            cost[s - 1, a - 1] = (
                order_cost * a + holding_cost * (s + a) - price * expected_sales
            )
    return TabularMdp(kernel, cost)


def random_policy(
    n_states: int, n_actions: int, rng: np.random.Generator
) -> StationaryPolicy:
    """Row-wise draws from the flat Dirichlet distribution."""
    if n_states < 1 or n_actions < 1:
        raise IllegalArgumentError("policy dimensions should be positive")
    return StationaryPolicy(rng.dirichlet(np.ones(n_actions), size=n_states))
