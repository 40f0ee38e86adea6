import logging
import math
from dataclasses import dataclass, replace
from functools import cached_property
from typing import Any, Dict, Optional, Tuple

import numpy as np
from scipy.optimize import bisect
from scipy.special import logsumexp, rel_entr

from .core import (
    CertificateError,
    DegenerateSetError,
    DivergenceError,
    IllegalArgumentError,
    InfeasibleError,
    NoAcceptanceError,
    SlaterError,
)
from .distributions import (
    MEMBERSHIP_TOLERANCE,
    ArrayLike,
    DiscreteDistribution,
    FeatureMap,
    MomentSet,
    SingletonSet,
    relative_entropy,
)


log = logging.getLogger(__name__)

OPTIMALITY_FACTOR = 2.0 * (1.0 + 2.0 * math.sqrt(3.0))


@dataclass(frozen=True)
class IProjectionConfig:
    # None runs the full certified iteration count
    max_iterations: Optional[int] = 1_000_000
    early_exit: bool = True
    check_every: int = 10
    restart: bool = False
    inflation: Optional[float] = None
    shortcut_tolerance: float = MEMBERSHIP_TOLERANCE
    slater_iterations: int = 20_000

    def __post_init__(self) -> None:
        if self.max_iterations is not None and self.max_iterations < 1:
            raise IllegalArgumentError("max_iterations should be positive")
        if self.check_every < 1:
            raise IllegalArgumentError("check_every should be positive")
        if self.shortcut_tolerance < 0:
            raise IllegalArgumentError("shortcut_tolerance should be nonnegative")
        if self.slater_iterations < 1:
            raise IllegalArgumentError("slater_iterations should be positive")


@dataclass(frozen=True, eq=False)
class IProjectionProblem:
    base: DiscreteDistribution
    features: FeatureMap
    moment_set: MomentSet
    tolerance: float = 1e-3
    slater_weights: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        if not (math.isfinite(self.tolerance) and self.tolerance > 0):
            raise IllegalArgumentError(
                f"tolerance should be positive, got {self.tolerance}"
            )
        if self.features.dim != self.moment_set.dim:
            raise IllegalArgumentError(
                f"features have dimension {self.features.dim} "
                f"but the moment set lives in R^{self.moment_set.dim}"
            )
        if self.slater_weights is not None:
            weights = np.asarray(self.slater_weights, dtype=float).reshape(-1)
            if weights.shape[0] != self.base.size:
                raise IllegalArgumentError(
                    f"got {weights.shape[0]} Slater weights "
                    f"for {self.base.size} base atoms"
                )
            if not np.all(np.isfinite(weights)) or np.any(weights < 0):
                raise IllegalArgumentError("Slater weights should be nonnegative")
            if weights.sum() <= 0:
                raise IllegalArgumentError("Slater weights should have a positive sum")
            weights = weights / weights.sum()
            weights.setflags(write=False)
            object.__setattr__(self, "slater_weights", weights)

    @cached_property
    def feature_values(self) -> np.ndarray:
        values = self.features.evaluate(self.base.atoms)
        if not np.all(np.isfinite(values)):
            raise IllegalArgumentError("feature values should be finite on base atoms")
        return values

    @property
    def base_moment(self) -> np.ndarray:
        return self.base.expectation(self.feature_values)


@dataclass(frozen=True)
class SmoothingSchedule:
    tolerance: float
    slater_entropy: float
    half_diameter: float
    slater_margin: float
    feature_bound: float
    eta1: float
    eta2: float
    lipschitz: float
    m1: float
    m2: float
    iterations: int

    @property
    def momentum(self) -> float:
        root_l = math.sqrt(self.lipschitz)
        root_eta = math.sqrt(self.eta2)
        return (root_l - root_eta) / (root_l + root_eta)

    @property
    def optimality_bound(self) -> float:
        return OPTIMALITY_FACTOR * self.tolerance

    @property
    def feasibility_bound(self) -> float:
        return 2.0 * self.tolerance * self.slater_margin / self.slater_entropy

    def to_payload(self) -> Dict[str, Any]:
        return {
            "C": self.slater_entropy,
            "D": self.half_diameter,
            "delta": self.slater_margin,
            "alpha": self.feature_bound,
            "eta1": self.eta1,
            "eta2": self.eta2,
            "L": self.lipschitz,
            "M1": self.m1,
            "M2": self.m2,
            "iterations": self.iterations,
        }


@dataclass(frozen=True, eq=False)
class IProjectionSolution:
    projection: DiscreteDistribution
    dual: np.ndarray
    entropy_value: float
    feasibility_gap: float
    certified_optimality_bound: float
    certified_feasibility_bound: float
    iterations_run: int
    moment_set: MomentSet
    schedule: Optional[SmoothingSchedule] = None

    @property
    def shortcut(self) -> bool:
        return self.schedule is None

    @property
    def converged(self) -> bool:
        return self.feasibility_gap <= self.certified_feasibility_bound

    def to_payload(self) -> Dict[str, Any]:
        return {
            "projection": self.projection.to_payload(),
            "dual": self.dual.tolist(),
            "entropy_value": self.entropy_value,
            "feasibility_gap": self.feasibility_gap,
            "certified_optimality_bound": self.certified_optimality_bound,
            "certified_feasibility_bound": self.certified_feasibility_bound,
            "iterations_run": self.iterations_run,
            "converged": self.converged,
            "moment_set": self.moment_set.to_payload(),
            "schedule": None if self.schedule is None else self.schedule.to_payload(),
        }


def schedule_from_constants(
    tolerance: float,
    slater_entropy: float,
    half_diameter: float,
    slater_margin: float,
    feature_bound: float,
) -> SmoothingSchedule:
    eps = tolerance
    c, d, delta, alpha = slater_entropy, half_diameter, slater_margin, feature_bound
    if not delta > 0:
        raise SlaterError(
            f"Slater moment is not interior to the moment set (margin {delta:.6g})"
        )
    if not d > 0:
        raise DegenerateSetError(
            "moment set reduces to {0}; shift the features by a constant "
            "so that the set moves away from the origin"
        )
    if not c > 0:
        raise DegenerateSetError(
            "Slater distribution coincides with the base distribution; "
            "the base moment already satisfies the constraints, "
            "solve() returns it unchanged"
        )
    eta1 = eps / (4.0 * d)
    eta2 = eps * delta ** 2 / (2.0 * c ** 2)
    lipschitz = 1.0 / eta1 + eta2 + alpha ** 2
    root = math.sqrt(
        8.0 * d * c ** 2 / (eps ** 2 * delta ** 2)
        + 2.0 * alpha ** 2 * c ** 2 / (eps * delta ** 2)
        + 1.0
    )
    m1 = 2.0 * root * math.log(10.0 * (eps + 2.0 * c) / eps)
    m2 = (
        2.0
        * root
        * math.log(
            c
            / (eps * delta * (2.0 - math.sqrt(3.0)))
            * math.sqrt(
                4.0
                * (4.0 * d / eps + alpha ** 2 + eps * delta ** 2 / (2.0 * c ** 2))
                * (c + eps / 2.0)
            )
        )
    )
    iterations = max(1, math.ceil(max(m1, m2)))
    return SmoothingSchedule(
        tolerance=eps,
        slater_entropy=c,
        half_diameter=d,
        slater_margin=delta,
        feature_bound=alpha,
        eta1=eta1,
        eta2=eta2,
        lipschitz=lipschitz,
        m1=m1,
        m2=m2,
        iterations=iterations,
    )


def compute_schedule(problem: IProjectionProblem) -> SmoothingSchedule:
    if problem.slater_weights is None:
        raise SlaterError(
            "problem has no Slater weights; supply them or use default_slater()"
        )
    values = problem.feature_values
    slater = problem.slater_weights
    slater_moment = slater @ values
    positive = problem.base.weights > 0
    schedule = schedule_from_constants(
        tolerance=problem.tolerance,
        slater_entropy=float(np.sum(rel_entr(slater, problem.base.weights))),
        half_diameter=0.5 * problem.moment_set.max_norm(),
        slater_margin=problem.moment_set.slater_margin(slater_moment),
        feature_bound=float(np.max(np.abs(values[positive]))),
    )
    log.debug("Smoothing schedule %s", schedule)
    return schedule


class _SmoothedDual:
    def __init__(
        self, problem: IProjectionProblem, schedule: SmoothingSchedule
    ) -> None:
        self._problem = problem
        self._schedule = schedule
        self._positive = problem.base.weights > 0
        self._log_weights = np.log(problem.base.weights[self._positive])
        self._values = problem.feature_values[self._positive]

    def gibbs(self, z: np.ndarray) -> Tuple[np.ndarray, float]:
        exponents = self._log_weights - self._values @ z
        normalizer = float(logsumexp(exponents))
        return np.exp(exponents - normalizer), normalizer

    def full_weights(self, z: np.ndarray) -> np.ndarray:
        weights = np.zeros(self._problem.base.size)
        weights[self._positive] = self.gibbs(z)[0]
        return weights

    def moment(self, z: np.ndarray) -> np.ndarray:
        return self.gibbs(z)[0] @ self._values

    def gradient(self, z: np.ndarray) -> np.ndarray:
        eta1, eta2 = self._schedule.eta1, self._schedule.eta2
        return (
            -self._problem.moment_set.project(z / eta1) - eta2 * z + self.moment(z)
        )

    def objective(self, z: np.ndarray) -> float:
        eta1, eta2 = self._schedule.eta1, self._schedule.eta2
        nearest = self._problem.moment_set.project(z / eta1)
        _, normalizer = self.gibbs(z)
        return float(
            -(nearest @ z - 0.5 * eta1 * nearest @ nearest)
            - normalizer
            - 0.5 * eta2 * z @ z
        )

    def duality_gap(self, z: np.ndarray) -> float:
        moment = self.moment(z)
        return abs(self._problem.moment_set.support_function(z) - float(z @ moment))


def _checked_dual_point(z: ArrayLike, dim: int) -> np.ndarray:
    z = np.asarray(z, dtype=float).reshape(-1)
    if z.shape[0] != dim:
        raise IllegalArgumentError(f"dual point should be in R^{dim}, got {z.shape}")
    if not np.all(np.isfinite(z)):
        raise IllegalArgumentError(f"dual point should be finite, got {z.tolist()}")
    return z


def smoothed_dual_gradient(
    z: ArrayLike, problem: IProjectionProblem, schedule: SmoothingSchedule
) -> np.ndarray:
    z = _checked_dual_point(z, problem.features.dim)
    return _SmoothedDual(problem, schedule).gradient(z)


def smoothed_dual_objective(
    z: ArrayLike, problem: IProjectionProblem, schedule: SmoothingSchedule
) -> float:
    z = _checked_dual_point(z, problem.features.dim)
    return _SmoothedDual(problem, schedule).objective(z)


def _project_simplex(vector: np.ndarray) -> np.ndarray:
    ordered = np.sort(vector)[::-1]
    cumulative = np.cumsum(ordered) - 1.0
    index = np.arange(1, vector.shape[0] + 1)
    active = ordered - cumulative / index > 0
    count = index[active][-1]
    shift = cumulative[active][-1] / count
    return np.maximum(vector - shift, 0.0)


def default_slater(
    problem: IProjectionProblem, config: Optional[IProjectionConfig] = None
) -> np.ndarray:
    """Find weights on the base atoms whose moment is interior to E.

    Minimizes the distance between the moment and the center of E over
    the simplex with an accelerated projected gradient method.
    """
    if config is None:
        config = IProjectionConfig()
    base = problem.base
    moment_set = problem.moment_set
    if moment_set.slater_margin(problem.base_moment) > 0:
        return base.weights.copy()

    positive = base.weights > 0
    values = problem.feature_values[positive]
    target = moment_set.center()
    lipschitz = 2.0 * np.linalg.norm(values, 2) ** 2
    weights = base.weights[positive].copy()
    if lipschitz > 0:
        scale = 1e-12 * (1.0 + float(np.linalg.norm(target)))
        current = weights
        momentum = 1.0
        for _ in range(config.slater_iterations):
            residual = current @ values - target
            step = _project_simplex(current - 2.0 * values @ residual / lipschitz)
            next_momentum = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * momentum ** 2))
            current = step + (momentum - 1.0) / next_momentum * (step - weights)
            weights, momentum = step, next_momentum
            if np.linalg.norm(weights @ values - target) <= scale:
                break

    margin = moment_set.slater_margin(weights @ values)
    if margin <= 0:
        raise SlaterError(
            "no distribution on the base atoms has its moment inside the moment "
            f"set (best margin {margin:.6g}); supply Slater weights or enlarge it"
        )
    ret = np.zeros(base.size)
    ret[positive] = weights
    log.debug("Default Slater point with margin %.6g", margin)
    return ret


def _shortcut_solution(
    problem: IProjectionProblem, moment_set: MomentSet
) -> IProjectionSolution:
    return IProjectionSolution(
        projection=problem.base,
        dual=np.zeros(problem.features.dim),
        entropy_value=0.0,
        feasibility_gap=0.0,
        certified_optimality_bound=0.0,
        certified_feasibility_bound=0.0,
        iterations_run=0,
        moment_set=moment_set,
    )


def _with_interior(
    problem: IProjectionProblem, config: IProjectionConfig
) -> IProjectionProblem:
    if isinstance(problem.moment_set, SingletonSet):
        inflated = problem.moment_set.inflate(config.inflation)
        log.debug("Singleton moment set inflated to %s", inflated)
        return replace(problem, moment_set=inflated)
    return problem


def solve(
    problem: IProjectionProblem, config: Optional[IProjectionConfig] = None
) -> IProjectionSolution:
    if config is None:
        config = IProjectionConfig()
    if problem.moment_set.distance(problem.base_moment) <= config.shortcut_tolerance:
        return _shortcut_solution(problem, problem.moment_set)
    working = _with_interior(problem, config)
    if working.moment_set.distance(working.base_moment) <= config.shortcut_tolerance:
        return _shortcut_solution(working, working.moment_set)
    if working.slater_weights is None:
        working = replace(working, slater_weights=default_slater(working, config))
    schedule = compute_schedule(working)
    dual = _SmoothedDual(working, schedule)

    budget = schedule.iterations
    if config.max_iterations is not None and config.max_iterations < budget:
        log.warning(
            "Certified iteration count %d capped at %d",
            schedule.iterations,
            config.max_iterations,
        )
        budget = config.max_iterations
    exit_gap = min(schedule.tolerance / 10.0, schedule.feasibility_bound)
    lipschitz = schedule.lipschitz
    momentum = schedule.momentum
    moment_set = working.moment_set

    progress_every = max(1, budget // 10)
    prev = current = np.zeros(working.features.dim)
    iteration = 0
    for iteration in range(1, budget + 1):
        gradient = dual.gradient(current)
        step = current + gradient / lipschitz
        if not np.all(np.isfinite(step)):
            raise DivergenceError(
                f"dual iterate became non-finite at iteration {iteration}", iteration
            )
        if config.restart and gradient @ (step - prev) < 0:
            current = step
        else:
            current = step + momentum * (step - prev)
        prev = step
        if iteration % progress_every == 0 and log.isEnabledFor(logging.DEBUG):
            log.debug(
                "Iteration %d of %d, moment distance %.3g",
                iteration,
                budget,
                moment_set.distance(dual.moment(prev)),
            )
        if config.early_exit and iteration % config.check_every == 0:
            gap = moment_set.distance(dual.moment(prev))
            if gap <= exit_gap and dual.duality_gap(prev) <= schedule.tolerance / 10:
                log.debug("Early exit at iteration %d", iteration)
                break

    projection = working.base.with_weights(dual.full_weights(prev))
    solution = IProjectionSolution(
        projection=projection,
        dual=prev,
        entropy_value=relative_entropy(projection, working.base),
        feasibility_gap=float(
            moment_set.distance(projection.expectation(working.feature_values))
        ),
        certified_optimality_bound=schedule.optimality_bound,
        certified_feasibility_bound=schedule.feasibility_bound,
        iterations_run=iteration,
        moment_set=moment_set,
        schedule=schedule,
    )
    if not solution.converged:
        raise CertificateError(
            f"feasibility gap {solution.feasibility_gap:.6g} exceeds the certified "
            f"bound {solution.certified_feasibility_bound:.6g} "
            f"after {iteration} iterations",
            solution,
        )
    return solution


def tilting_oracle(
    base: DiscreteDistribution, features: FeatureMap, target: float
) -> DiscreteDistribution:
    """Exponentially tilt the base so that the scalar feature mean hits target."""
    if features.dim != 1:
        raise IllegalArgumentError("tilting needs a scalar feature map")
    positive = base.weights > 0
    values = features.evaluate(base.atoms)[positive, 0]
    log_weights = np.log(base.weights[positive])
    low, high = float(values.min()), float(values.max())
    if not low < target < high:
        raise InfeasibleError(
            f"target {target:.12g} is outside the open range ({low:.12g}, {high:.12g})"
        )

    def tilted(lam: float) -> np.ndarray:
        exponents = log_weights + lam * values
        return np.exp(exponents - logsumexp(exponents))

    def excess(lam: float) -> float:
        return float(tilted(lam) @ values) - target

    if excess(0.0) == 0:
        return base
    lower, upper = -1.0, 1.0
    for _ in range(200):
        if excess(upper) >= 0:
            break
        upper *= 2.0
    for _ in range(200):
        if excess(lower) <= 0:
            break
        lower *= 2.0
    lam = bisect(excess, lower, upper, xtol=1e-14, maxiter=2000)
    weights = np.zeros(base.size)
    weights[positive] = tilted(lam)
    return base.with_weights(weights)


@dataclass(frozen=True)
class ConditionalLimitReport:
    conditional_mean: float
    projection_mean: float
    accepted_trials: int
    trials: int

    @property
    def acceptance_rate(self) -> float:
        return self.accepted_trials / self.trials


def conditional_limit_check(
    dist: DiscreteDistribution,
    features: FeatureMap,
    moment_set: MomentSet,
    losses: ArrayLike,
    sample_size: int,
    trials: int,
    seed: int,
    tolerance: float = 1e-3,
    config: Optional[IProjectionConfig] = None,
    batch_size: int = 50_000,
) -> ConditionalLimitReport:
    """Compare the conditional mean of a loss given an empirical moment
    in E with its mean under the I-projection."""
    losses = np.asarray(losses, dtype=float).reshape(-1)
    if losses.shape[0] != dist.size:
        raise IllegalArgumentError(
            f"got {losses.shape[0]} loss values for {dist.size} atoms"
        )
    if sample_size < 1 or trials < 1:
        raise IllegalArgumentError("sample size and trial count should be positive")
    values = features.evaluate(dist.atoms)
    rng = np.random.default_rng(seed)
    accepted = 0
    total = 0.0
    remaining = trials
    while remaining > 0:
        batch = min(batch_size, remaining)
        remaining -= batch
        counts = rng.multinomial(sample_size, dist.weights, size=batch)
        inside = moment_set.contains(counts @ values / sample_size)
        accepted += int(np.count_nonzero(inside))
        total += float(np.sum(counts[inside] @ losses)) / sample_size
    if accepted == 0:
        raise NoAcceptanceError(
            f"no trial out of {trials} produced an empirical moment inside the set; "
            "use a smaller sample size or a wider set"
        )
    solution = solve(IProjectionProblem(dist, features, moment_set, tolerance), config)
    return ConditionalLimitReport(
        conditional_mean=total / accepted,
        projection_mean=float(solution.projection.expectation(losses)),
        accepted_trials=accepted,
        trials=trials,
    )
