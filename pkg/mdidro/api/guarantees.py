import math
from dataclasses import asdict, dataclass, field
from typing import Any, Dict

from .core import IllegalArgumentError


@dataclass(frozen=True)
class BoundReport:
    """Upper bound on the disappointment probability, kept in log space."""

    kind: str
    log_probability_bound: float
    inputs: Dict[str, Any] = field(default_factory=dict)

    @property
    def probability_bound(self) -> float:
        if self.log_probability_bound >= 0:
            return 1.0
        return math.exp(self.log_probability_bound)

    @property
    def vacuous(self) -> bool:
        return self.log_probability_bound >= 0

    def to_payload(self) -> Dict[str, Any]:
        payload = asdict(self)
        payload["probability_bound"] = self.probability_bound
        return payload


def _check_count(name: str, value: int) -> None:
    if isinstance(value, bool) or int(value) != value or value < 1:
        raise IllegalArgumentError(f"{name} should be a positive integer, got {value}")


def _check_radius(radius: float, allow_zero: bool = False) -> None:
    if not math.isfinite(radius) or radius < 0 or (radius == 0 and not allow_zero):
        bound = "nonnegative" if allow_zero else "positive"
        raise IllegalArgumentError(f"radius should be {bound}, got {radius}")


def finite_sample_bound(
    radius: float, sample_size: int, cardinality: int
) -> BoundReport:
    _check_radius(radius)
    _check_count("sample size", sample_size)
    _check_count("support cardinality", cardinality)
    log_bound = cardinality * math.log(sample_size + 1) - radius * sample_size
    return BoundReport(
        "finite",
        log_bound,
        {"radius": radius, "sample_size": sample_size, "cardinality": cardinality},
    )


def ope_bound(
    radius: float, sample_size: int, n_states: int, n_actions: int
) -> BoundReport:
    """Bound on the event that the true long-run cost exceeds the estimate.

    A zero radius is accepted and gives a vacuous bound.
    """
    _check_radius(radius, allow_zero=True)
    _check_count("sample size", sample_size)
    _check_count("number of states", n_states)
    _check_count("number of actions", n_actions)
    cardinality = n_states + n_actions
    log_bound = cardinality * math.log(sample_size + 1) - radius * sample_size
    return BoundReport(
        "ope",
        log_bound,
        {
            "radius": radius,
            "sample_size": sample_size,
            "n_states": n_states,
            "n_actions": n_actions,
        },
    )


def hoeffding_ips_bound(
    epsilon: float, sample_size: int, weight_bound: float
) -> BoundReport:
    if not epsilon > 0:
        raise IllegalArgumentError(f"epsilon should be positive, got {epsilon}")
    if not weight_bound > 0:
        raise IllegalArgumentError(
            f"weight bound should be positive, got {weight_bound}"
        )
    _check_count("sample size", sample_size)
    log_bound = -2.0 * sample_size * epsilon ** 2 / weight_bound ** 2
    return BoundReport(
        "hoeffding",
        log_bound,
        {"epsilon": epsilon, "sample_size": sample_size, "weight_bound": weight_bound},
    )


def radius_for_confidence(sample_size: int, cardinality: int, target: float) -> float:
    """Smallest radius whose finite-sample bound does not exceed ``target``."""
    _check_count("sample size", sample_size)
    _check_count("support cardinality", cardinality)
    if not 0 < target < 1:
        raise IllegalArgumentError(f"target should be in (0, 1), got {target}")
    return (cardinality * math.log(sample_size + 1) - math.log(target)) / sample_size
