import abc
import logging
import math
from dataclasses import dataclass, replace
from functools import cached_property
from typing import Any, Callable, Dict, Optional, Tuple

import numpy as np
from scipy.optimize import linprog, minimize_scalar
from scipy.special import expit

from .core import EvaluationError, IllegalArgumentError, SupportError
from .distributions import (
    ArrayLike,
    BoxSet,
    DiscreteDistribution,
    FeatureMap,
    MomentSet,
    as_points,
    empirical_from_samples,
)
from .iprojection import (
    IProjectionConfig,
    IProjectionProblem,
    IProjectionSolution,
    solve,
)


log = logging.getLogger(__name__)

# consecutive iterations with a negligible decrease before the descent stops
STAGNATION_PATIENCE = 10
# kinks this close to the searched parameter (relative to the box) are tried too
KINK_WINDOW = 1e-3


class LossModel(abc.ABC):
    variant: str = ""
    # losses with kinks in theta are trained by a search over a scalar theta
    smooth: bool = True

    @property
    @abc.abstractmethod
    def theta_box(self) -> Optional[BoxSet]:
        pass

    @property
    def theta_dim(self) -> int:
        box = self.theta_box
        return 0 if box is None else box.dim

    @abc.abstractmethod
    def value(self, theta: Optional[np.ndarray], atoms: ArrayLike) -> np.ndarray:
        pass

    @abc.abstractmethod
    def gradient(self, theta: Optional[np.ndarray], atoms: ArrayLike) -> np.ndarray:
        """d/dtheta of the loss, one row per atom."""

    @abc.abstractmethod
    def _payload(self) -> Dict[str, Any]:
        pass

    def to_payload(self) -> Dict[str, Any]:
        return {"variant": self.variant, **self._payload()}

    def kinks(self, atoms: ArrayLike) -> np.ndarray:
        """Parameter values where the loss is not differentiable."""
        return np.zeros(0)

    def initial_theta(self) -> Optional[np.ndarray]:
        box = self.theta_box
        if box is None:
            return None
        return box.project(np.zeros(box.dim))

    def _check_theta(self, theta: Optional[np.ndarray]) -> np.ndarray:
        if self.theta_dim == 0:
            return np.zeros(0)
        if theta is None:
            raise IllegalArgumentError(f"{self.variant} loss needs a parameter vector")
        theta = np.asarray(theta, dtype=float).reshape(-1)
        if theta.shape[0] != self.theta_dim:
            raise IllegalArgumentError(
                f"{self.variant} loss expects theta in R^{self.theta_dim}, "
                f"got R^{theta.shape[0]}"
            )
        return theta


@dataclass(frozen=True, eq=False)
class LogisticLoss(LossModel):
    """log(1 + exp(-y theta'x)) for atoms (x, y) with the label last."""

    box: BoxSet
    variant = "logistic"

    @property
    def theta_box(self) -> Optional[BoxSet]:
        return self.box

    def _split(self, atoms: ArrayLike) -> Tuple[np.ndarray, np.ndarray]:
        points = as_points(atoms)
        if points.shape[1] != self.theta_dim + 1:
            raise EvaluationError(
                f"logistic loss expects atoms (x, y) in R^{self.theta_dim + 1}, "
                f"got R^{points.shape[1]}"
            )
        return points[:, :-1], points[:, -1]

    def value(self, theta: Optional[np.ndarray], atoms: ArrayLike) -> np.ndarray:
        x, y = self._split(atoms)
        margin = y * (x @ self._check_theta(theta))
        return np.logaddexp(0.0, -margin)

    def gradient(self, theta: Optional[np.ndarray], atoms: ArrayLike) -> np.ndarray:
        x, y = self._split(atoms)
        margin = y * (x @ self._check_theta(theta))
        return -(y * expit(-margin))[:, None] * x

    def _payload(self) -> Dict[str, Any]:
        return {"theta_box": self.box.to_payload()}


@dataclass(frozen=True)
class LinearLoss(LossModel):
    """The first atom coordinate itself; there is no parameter."""

    variant = "linear"

    @property
    def theta_box(self) -> Optional[BoxSet]:
        return None

    def value(self, theta: Optional[np.ndarray], atoms: ArrayLike) -> np.ndarray:
        return as_points(atoms)[:, 0].copy()

    def gradient(self, theta: Optional[np.ndarray], atoms: ArrayLike) -> np.ndarray:
        return np.zeros((as_points(atoms).shape[0], 0))

    def _payload(self) -> Dict[str, Any]:
        return {}


@dataclass(frozen=True, eq=False)
class NewsvendorLoss(LossModel):
    """Production cost plus a shortage penalty for a scalar demand."""

    production_cost: float
    shortage_cost: float
    box: BoxSet
    variant = "newsvendor"
    smooth = False

    def __post_init__(self) -> None:
        if self.box.dim != 1:
            raise IllegalArgumentError("newsvendor decision should be scalar")
        if self.production_cost < 0 or self.shortage_cost < 0:
            raise IllegalArgumentError("newsvendor unit costs should be nonnegative")

    @property
    def theta_box(self) -> Optional[BoxSet]:
        return self.box

    def kinks(self, atoms: ArrayLike) -> np.ndarray:
        return np.unique(as_points(atoms)[:, 0])

    def value(self, theta: Optional[np.ndarray], atoms: ArrayLike) -> np.ndarray:
        (order,) = self._check_theta(theta)
        demand = as_points(atoms)[:, 0]
        return self.production_cost * order + self.shortage_cost * np.maximum(
            demand - order, 0.0
        )

    def gradient(self, theta: Optional[np.ndarray], atoms: ArrayLike) -> np.ndarray:
        (order,) = self._check_theta(theta)
        demand = as_points(atoms)[:, 0]
        slope = self.production_cost - self.shortage_cost * (demand > order)
        return slope.reshape(-1, 1)

    def _payload(self) -> Dict[str, Any]:
        return {
            "production_cost": self.production_cost,
            "shortage_cost": self.shortage_cost,
            "theta_box": self.box.to_payload(),
        }


def _losses(loss: LossModel, theta: Optional[np.ndarray], atoms: np.ndarray) -> Any:
    values = loss.value(theta, atoms)
    if not np.all(np.isfinite(values)):
        bad = atoms[np.argmax(~np.isfinite(values))]
        raise EvaluationError(f"loss is not finite at atom {bad.tolist()}")
    return values


def risk(
    theta: Optional[ArrayLike], dist: DiscreteDistribution, loss: LossModel
) -> float:
    theta_arr = None if theta is None else np.asarray(theta, dtype=float)
    return float(dist.expectation(_losses(loss, theta_arr, dist.atoms)))


@dataclass(frozen=True, eq=False)
class ScenarioSet:
    points: np.ndarray
    feature_values: np.ndarray

    def __post_init__(self) -> None:
        points = as_points(self.points)
        values = as_points(self.feature_values)
        if points.shape[0] == 0:
            raise IllegalArgumentError("scenario set should not be empty")
        if points.shape[0] != values.shape[0]:
            raise IllegalArgumentError("each scenario needs its feature values")
        points.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "feature_values", values)

    @classmethod
    def build(cls, points: ArrayLike, features: FeatureMap) -> "ScenarioSet":
        points = np.unique(as_points(points), axis=0)
        return cls(points, features.evaluate(points))

    @classmethod
    def from_distribution(
        cls,
        dist: DiscreteDistribution,
        features: FeatureMap,
        extra: Optional[ArrayLike] = None,
    ) -> "ScenarioSet":
        points = dist.atoms
        if extra is not None:
            points = np.vstack([points, as_points(extra)])
        return cls.build(points, features)

    @cached_property
    def _index(self) -> Dict[Tuple[float, ...], int]:
        return {tuple(p): num for num, p in enumerate(self.points.tolist())}

    def check_covers(self, dist: DiscreteDistribution) -> None:
        for atom in dist.support.tolist():
            if tuple(atom) not in self._index:
                raise SupportError(
                    f"nominal atom {atom} is not among the scenarios; "
                    "the scenario set should contain the nominal support"
                )


def check_recession_condition(scenarios: ScenarioSet) -> bool:
    """Check that every nonzero z has some scenario with z'psi > 0.

    Only the finite scenario set is inspected; a warning is logged when
    the condition fails there.
    """
    values = scenarios.feature_values
    dim = values.shape[1]
    for k in range(dim):
        for sign in (1.0, -1.0):
            cost = np.zeros(dim)
            cost[k] = -sign
            result = linprog(
                cost,
                A_ub=values,
                b_ub=np.zeros(values.shape[0]),
                bounds=[(-1.0, 1.0)] * dim,
                method="highs",
            )
            if result.status == 0 and -result.fun > 1e-9:
                log.warning(
                    "Some nonzero dual direction is nonpositive on every scenario; "
                    "the worst-case risk may be discontinuous in the radius"
                )
                return False
    return True


@dataclass(frozen=True)
class DroConfig:
    radius: float
    tolerance: float = 1e-6
    max_iterations: int = 20_000
    armijo: float = 1e-4
    shrink: float = 0.5
    initial_step: float = 1.0
    min_step: float = 1e-14

    def __post_init__(self) -> None:
        if not (math.isfinite(self.radius) and self.radius > 0):
            raise IllegalArgumentError(f"radius should be positive, got {self.radius}")
        if self.tolerance <= 0:
            raise IllegalArgumentError("tolerance should be positive")
        if self.max_iterations < 1:
            raise IllegalArgumentError("max_iterations should be positive")
        if not 0 < self.armijo < 1 or not 0 < self.shrink < 1:
            raise IllegalArgumentError("backtracking parameters should be in (0, 1)")
        if self.initial_step <= 0 or self.min_step <= 0:
            raise IllegalArgumentError("step sizes should be positive")


@dataclass(frozen=True, eq=False)
class WorstCaseRisk:
    value: float
    alpha: float
    z: np.ndarray
    converged: bool
    first_order_residual: float
    iterations: int
    theta: Optional[np.ndarray] = None

    def to_payload(self) -> Dict[str, Any]:
        return {
            "theta": None if self.theta is None else self.theta.tolist(),
            "J": self.value,
            "alpha": self.alpha,
            "z": self.z.tolist(),
            "converged": self.converged,
            "first_order_residual": self.first_order_residual,
            "iterations": self.iterations,
        }


class DualProgram:
    """Convex dual of the worst-case risk over a relative entropy ball
    intersected with the moment constraints.

    Variables are alpha, z and (when the loss has one) theta. The
    robust constraint on alpha is enforced over the scenario set.
    """

    def __init__(
        self,
        loss: LossModel,
        nominal: DiscreteDistribution,
        features: FeatureMap,
        moment_set: MomentSet,
        scenarios: ScenarioSet,
        radius: float,
    ) -> None:
        if features.dim != moment_set.dim:
            raise IllegalArgumentError("features and moment set dimensions differ")
        if scenarios.feature_values.shape[1] != features.dim:
            raise IllegalArgumentError("scenario features have the wrong dimension")
        scenarios.check_covers(nominal)
        positive = nominal.weights > 0
        self.loss = loss
        self.moment_set = moment_set
        self.radius = radius
        self._weights = nominal.weights[positive]
        self._atoms = nominal.atoms[positive]
        self._features = features.evaluate(self._atoms)
        self._scenarios = scenarios
        self._discount = math.exp(-radius)

    @property
    def theta_dim(self) -> int:
        return self.loss.theta_dim

    @property
    def nominal_feasible(self) -> bool:
        """Whether the nominal moment lies in the moment set."""
        moment = self._weights @ self._features
        return self.moment_set.distance(moment) <= 1e-12

    @property
    def dual_dim(self) -> int:
        return int(self._features.shape[1])

    def alpha_floor(self, z: np.ndarray, theta: Optional[np.ndarray]) -> float:
        losses = _losses(self.loss, theta, self._scenarios.points)
        return float(np.max(losses - self._scenarios.feature_values @ z))

    def _log_arguments(
        self, alpha: float, z: np.ndarray, theta: Optional[np.ndarray]
    ) -> np.ndarray:
        losses = _losses(self.loss, theta, self._atoms)
        return alpha - losses + self._features @ z

    def objective(
        self, alpha: float, z: ArrayLike, theta: Optional[ArrayLike] = None
    ) -> float:
        """Dual objective, +inf outside the domain."""
        z = np.asarray(z, dtype=float)
        theta_arr = None if theta is None else np.asarray(theta, dtype=float)
        if alpha < self.alpha_floor(z, theta_arr):
            return math.inf
        arguments = self._log_arguments(alpha, z, theta_arr)
        if np.any(arguments <= 0):
            return math.inf
        mean = math.exp(float(self._weights @ np.log(arguments)))
        return alpha + self.moment_set.support_function(z) - self._discount * mean

    def smooth_gradient(
        self, alpha: float, z: ArrayLike, theta: Optional[ArrayLike] = None
    ) -> Tuple[float, np.ndarray, np.ndarray]:
        """Gradient of the objective without the support function term."""
        z = np.asarray(z, dtype=float)
        theta_arr = None if theta is None else np.asarray(theta, dtype=float)
        arguments = self._log_arguments(alpha, z, theta_arr)
        mean = math.exp(float(self._weights @ np.log(arguments)))
        scaled = self._discount * mean * self._weights / arguments
        d_alpha = 1.0 - float(scaled.sum())
        d_z = -(scaled @ self._features)
        if self.theta_dim:
            d_theta = scaled @ self.loss.gradient(theta_arr, self._atoms)
        else:
            d_theta = np.zeros(0)
        return d_alpha, d_z, d_theta

    def gradient(
        self, alpha: float, z: ArrayLike, theta: Optional[ArrayLike] = None
    ) -> Tuple[float, np.ndarray, np.ndarray]:
        d_alpha, d_z, d_theta = self.smooth_gradient(alpha, z, theta)
        return d_alpha, d_z + self.moment_set.support_point(z), d_theta

    # packed vector helpers: [alpha, z..., theta...]

    def _unpack(self, x: np.ndarray) -> Tuple[float, np.ndarray, Optional[np.ndarray]]:
        z = x[1 : 1 + self.dual_dim]
        theta = x[1 + self.dual_dim :] if self.theta_dim else None
        return float(x[0]), z, theta

    def _packed_objective(self, x: np.ndarray) -> float:
        return self.objective(*self._unpack(x))

    def _packed_gradient(self, x: np.ndarray) -> np.ndarray:
        d_alpha, d_z, d_theta = self.smooth_gradient(*self._unpack(x))
        return np.concatenate([[d_alpha], d_z, d_theta])

    def _prox(
        self, x: np.ndarray, gradient: np.ndarray, step: float, train: bool
    ) -> np.ndarray:
        alpha, z, theta = self._unpack(x - step * gradient)
        # prox of the support function is the residual of projecting onto E
        z = z - step * self.moment_set.project(z / step)
        if train:
            box = self.loss.theta_box
            assert box is not None and theta is not None
            theta = box.project(theta)
        else:
            theta = self._unpack(x)[2]
        alpha = max(alpha, self.alpha_floor(z, theta))
        parts = [np.array([alpha]), z]
        if theta is not None:
            parts.append(theta)
        return np.concatenate(parts)

    def start(self, theta: Optional[np.ndarray]) -> np.ndarray:
        z = np.zeros(self.dual_dim)
        alpha = float(np.max(_losses(self.loss, theta, self._scenarios.points))) + 1.0
        parts = [np.array([alpha]), z]
        if theta is not None:
            parts.append(np.asarray(theta, dtype=float))
        return np.concatenate(parts)


@dataclass(frozen=True, eq=False)
class _Descent:
    point: np.ndarray
    value: float
    converged: bool
    residual: float
    iterations: int


def _descend(
    objective: Callable[[np.ndarray], float],
    gradient: Callable[[np.ndarray], np.ndarray],
    prox: Callable[[np.ndarray, np.ndarray, float], np.ndarray],
    start: np.ndarray,
    config: DroConfig,
    theta_slice: Optional[slice] = None,
) -> _Descent:
    """Proximal gradient with Barzilai-Borwein steps and Armijo backtracking.

    The descent stops when the prox-gradient residual drops below the
    tolerance, or when the objective has stopped decreasing (relative
    decrease below the tolerance for ``STAGNATION_PATIENCE`` iterations).
    The latter is how minima on the boundary of the log domain are
    reached, where the residual stays bounded away from zero.

    Among iterates whose value is within tolerance of the best one the
    smallest parameter norm wins.
    """
    point = start
    value = objective(point)
    if not math.isfinite(value):
        raise IllegalArgumentError("starting point is outside the objective domain")
    grad = gradient(point)
    step = config.initial_step
    best = point
    best_value = value
    residual = math.inf
    converged = False
    stagnant = 0
    iteration = 0

    def theta_norm(x: np.ndarray) -> float:
        return 0.0 if theta_slice is None else float(np.linalg.norm(x[theta_slice]))

    for iteration in range(1, config.max_iterations + 1):
        while True:
            candidate = prox(point, grad, step)
            candidate_value = objective(candidate)
            decrease = config.armijo / (2.0 * step) * float(
                np.sum((candidate - point) ** 2)
            )
            if math.isfinite(candidate_value) and (
                candidate_value <= value - decrease
            ):
                break
            step *= config.shrink
            if step < config.min_step:
                break
        if step < config.min_step:
            log.debug("Line search stalled at iteration %d", iteration)
            converged = residual <= config.tolerance or stagnant > 0
            break
        residual = float(np.linalg.norm(candidate - point)) / step
        if value - candidate_value <= config.tolerance * max(1.0, abs(value)):
            stagnant += 1
        else:
            stagnant = 0
        new_grad = gradient(candidate)
        delta_x = candidate - point
        delta_g = new_grad - grad
        point, value, grad = candidate, candidate_value, new_grad

        if value < best_value - config.tolerance or (
            value <= best_value + config.tolerance
            and theta_norm(point) < theta_norm(best)
        ):
            best, best_value = point, value
        elif value < best_value:
            best, best_value = point, value

        if residual <= config.tolerance:
            converged = True
            break
        if stagnant >= STAGNATION_PATIENCE:
            log.debug("Objective stagnated at iteration %d", iteration)
            converged = True
            break
        curvature = float(delta_x @ delta_g)
        if curvature > 0:
            step = float(delta_x @ delta_x) / curvature
        else:
            step = step * 2.0
        step = min(max(step, 1e-12), 1e8)

    if not converged:
        log.warning(
            "Dual solver stopped after %d iterations with residual %.3g",
            iteration,
            residual,
        )
    return _Descent(best, best_value, converged, residual, iteration)


def _check_dominance(
    program: DualProgram, value: float, nominal_risk: float, tolerance: float
) -> None:
    if value >= nominal_risk - tolerance:
        return
    # a nominal outside the moment set need not be dominated, the projection
    # output may sit up to its certified gap outside
    level = logging.WARNING if program.nominal_feasible else logging.DEBUG
    log.log(
        level,
        "Worst-case risk %.12g is below the nominal risk %.12g",
        value,
        nominal_risk,
    )


def worst_case_risk(
    theta: Optional[ArrayLike],
    nominal: DiscreteDistribution,
    features: FeatureMap,
    moment_set: MomentSet,
    scenarios: ScenarioSet,
    config: DroConfig,
    loss: LossModel,
) -> WorstCaseRisk:
    program = DualProgram(loss, nominal, features, moment_set, scenarios, config.radius)
    theta_arr = None
    if loss.theta_dim:
        theta_arr = loss._check_theta(
            None if theta is None else np.asarray(theta, dtype=float)
        )
    descent = _descend(
        program._packed_objective,
        program._packed_gradient,
        lambda x, g, t: program._prox(x, g, t, train=False),
        program.start(theta_arr),
        config,
    )
    alpha, z, _ = program._unpack(descent.point)
    _check_dominance(
        program, descent.value, risk(theta_arr, nominal, loss), config.tolerance
    )
    return WorstCaseRisk(
        value=descent.value,
        alpha=alpha,
        z=z.copy(),
        converged=descent.converged,
        first_order_residual=descent.residual,
        iterations=descent.iterations,
        theta=theta_arr,
    )


def _scalar_search(
    evaluate: Callable[[np.ndarray], WorstCaseRisk],
    loss: LossModel,
    atoms: np.ndarray,
    config: DroConfig,
) -> WorstCaseRisk:
    """Minimize a convex function of a scalar parameter with kinks.

    A bounded Brent search locates the minimizer, then the box ends and
    the kinks next to it are compared against the search result.
    """
    box = loss.theta_box
    if box is None or box.dim != 1:
        raise IllegalArgumentError(
            f"{loss.variant} loss has kinks and is trained over a scalar parameter only"
        )
    lower, upper = float(box.lower[0]), float(box.upper[0])
    results: Dict[float, WorstCaseRisk] = {}

    def result(theta: float) -> WorstCaseRisk:
        if theta not in results:
            results[theta] = evaluate(np.array([theta]))
        return results[theta]

    found, success = lower, True
    if upper > lower:
        search = minimize_scalar(
            lambda t: result(float(t)).value,
            bounds=(lower, upper),
            method="bounded",
            options={"xatol": config.tolerance, "maxiter": 500},
        )
        found, success = float(search.x), bool(search.success)
        if not success:
            log.warning("Parameter search stopped: %s", search.message)
    kinks = loss.kinks(atoms)
    window = KINK_WINDOW * max(1.0, upper - lower)
    nearby = kinks[
        (np.abs(kinks - found) <= window) & (kinks >= lower) & (kinks <= upper)
    ]
    candidates = [found, lower, upper, *nearby.tolist()]
    best_value = min(result(t).value for t in candidates)
    theta = min(
        (t for t in candidates if result(t).value <= best_value + config.tolerance),
        key=abs,
    )
    log.debug("Parameter search used %d evaluations", len(results))
    best = result(theta)
    return replace(best, converged=success and best.converged)


def dro_train(
    loss: LossModel,
    nominal: DiscreteDistribution,
    features: FeatureMap,
    moment_set: MomentSet,
    scenarios: ScenarioSet,
    config: DroConfig,
) -> WorstCaseRisk:
    """Minimize the worst-case risk over theta.

    Smooth losses descend jointly over theta and the duals. Losses with
    kinks search over theta, evaluating the worst case at each trial
    point.
    """
    if loss.theta_dim == 0:
        return worst_case_risk(
            None, nominal, features, moment_set, scenarios, config, loss
        )
    if not loss.smooth:

        def evaluate(theta: np.ndarray) -> WorstCaseRisk:
            return worst_case_risk(
                theta, nominal, features, moment_set, scenarios, config, loss
            )

        return _scalar_search(evaluate, loss, scenarios.points, config)

    program = DualProgram(loss, nominal, features, moment_set, scenarios, config.radius)
    theta_slice = slice(1 + program.dual_dim, None)
    descent = _descend(
        program._packed_objective,
        program._packed_gradient,
        lambda x, g, t: program._prox(x, g, t, train=True),
        program.start(loss.initial_theta()),
        config,
        theta_slice,
    )
    alpha, z, theta = program._unpack(descent.point)
    assert theta is not None
    _check_dominance(
        program, descent.value, risk(theta, nominal, loss), config.tolerance
    )
    return WorstCaseRisk(
        value=descent.value,
        alpha=alpha,
        z=z.copy(),
        converged=descent.converged,
        first_order_residual=descent.residual,
        iterations=descent.iterations,
        theta=theta.copy(),
    )


def erm_train(
    loss: LossModel, dist: DiscreteDistribution, config: Optional[DroConfig] = None
) -> WorstCaseRisk:
    """Plain risk minimization over the parameter box.

    Reweighting ``dist`` beforehand gives importance-weighted ERM. Only the
    optimizer settings of ``config`` are used and the dual fields of the
    result are empty.
    """
    if config is None:
        config = DroConfig(radius=1.0)
    box = loss.theta_box
    if box is None:
        raise IllegalArgumentError("risk minimization needs a parameter box")
    atoms = dist.support
    weights = dist.weights[dist.weights > 0]

    def objective(theta: np.ndarray) -> float:
        return float(weights @ _losses(loss, theta, atoms))

    if not loss.smooth:

        def evaluate(theta: np.ndarray) -> WorstCaseRisk:
            return WorstCaseRisk(
                value=objective(theta),
                alpha=math.nan,
                z=np.zeros(0),
                converged=True,
                first_order_residual=0.0,
                iterations=0,
                theta=theta,
            )

        return _scalar_search(evaluate, loss, atoms, config)

    def gradient(theta: np.ndarray) -> Any:
        return weights @ loss.gradient(theta, atoms)

    def prox(theta: np.ndarray, grad: np.ndarray, step: float) -> np.ndarray:
        return box.project(theta - step * grad)

    start = loss.initial_theta()
    assert start is not None
    descent = _descend(objective, gradient, prox, start, config, slice(None))
    return WorstCaseRisk(
        value=descent.value,
        alpha=math.nan,
        z=np.zeros(0),
        converged=descent.converged,
        first_order_residual=descent.residual,
        iterations=descent.iterations,
        theta=descent.point.copy(),
    )


@dataclass(frozen=True, eq=False)
class PipelineResult:
    projection: IProjectionSolution
    training: WorstCaseRisk

    @property
    def theta(self) -> Optional[np.ndarray]:
        return self.training.theta

    @property
    def value(self) -> float:
        return self.training.value

    def to_payload(self) -> Dict[str, Any]:
        projection = self.projection.to_payload()
        return {
            **self.training.to_payload(),
            "projection_certificates": {
                key: projection[key]
                for key in (
                    "entropy_value",
                    "feasibility_gap",
                    "certified_optimality_bound",
                    "certified_feasibility_bound",
                    "iterations_run",
                )
            },
        }


def default_tolerance(radius: float) -> float:
    return min(1e-3, radius / 10.0)


def mdi_dro_pipeline(
    samples: ArrayLike,
    features: FeatureMap,
    moment_set: MomentSet,
    loss: LossModel,
    config: DroConfig,
    tolerance: Optional[float] = None,
    iprojection_config: Optional[IProjectionConfig] = None,
    check_recession: bool = True,
) -> PipelineResult:
    """Project the empirical distribution onto the moment constraints and
    train against the worst case around the projection."""
    if isinstance(samples, DiscreteDistribution):
        empirical = samples
    else:
        empirical = empirical_from_samples(samples)
    if tolerance is None:
        tolerance = default_tolerance(config.radius)
    projection = solve(
        IProjectionProblem(empirical, features, moment_set, tolerance),
        iprojection_config,
    )
    scenarios = ScenarioSet.from_distribution(empirical, features)
    if check_recession:
        check_recession_condition(scenarios)
    training = dro_train(
        loss, projection.projection, features, moment_set, scenarios, config
    )
    return PipelineResult(projection, training)
