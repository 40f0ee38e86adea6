import abc
import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.special import rel_entr

from .core import EvaluationError, IllegalArgumentError


log = logging.getLogger(__name__)

MEMBERSHIP_TOLERANCE = 1e-12

Atom = Tuple[float, ...]
ArrayLike = Union[np.ndarray, Sequence[float], Sequence[Sequence[float]]]


def _frozen(values: Any) -> np.ndarray:
    array = np.array(values, dtype=float)
    array.setflags(write=False)
    return array


def as_points(values: ArrayLike) -> np.ndarray:
    """Return a 2-D array of points.

    A flat sequence is read as a list of scalar points.
    """
    points = np.asarray(values, dtype=float)
    if points.ndim == 0:
        points = points.reshape(1, 1)
    elif points.ndim == 1:
        points = points.reshape(-1, 1)
    elif points.ndim != 2:
        raise IllegalArgumentError(
            f"points should be a list of vectors, got an array of shape {points.shape}"
        )
    return points


def _as_vector(values: Any, name: str) -> np.ndarray:
    vector = np.atleast_1d(np.asarray(values, dtype=float))
    if vector.ndim != 1:
        raise IllegalArgumentError(f"{name} should be a vector, got {vector.shape}")
    if not np.all(np.isfinite(vector)):
        raise IllegalArgumentError(f"{name} should be finite, got {vector.tolist()}")
    return vector


def _format_atom(atom: Iterable[float]) -> str:
    return "(" + ", ".join(f"{value:.12g}" for value in atom) + ")"


@dataclass(frozen=True, eq=False)
class DiscreteDistribution:
    """Finitely supported probability distribution.

    Atoms are stored in lexicographic order, duplicates are merged by
    summing their weights and the weights are renormalized to one.
    """

    atoms: np.ndarray
    weights: np.ndarray
    sample_count: Optional[int] = None

    def __post_init__(self) -> None:
        atoms = as_points(self.atoms)
        weights = np.asarray(self.weights, dtype=float).reshape(-1)
        if atoms.shape[0] == 0:
            raise IllegalArgumentError("distribution should have at least one atom")
        if atoms.shape[0] != weights.shape[0]:
            raise IllegalArgumentError(
                f"got {atoms.shape[0]} atoms but {weights.shape[0]} weights"
            )
        if not np.all(np.isfinite(atoms)):
            raise IllegalArgumentError("atoms should be finite")
        if not np.all(np.isfinite(weights)) or np.any(weights < 0):
            raise IllegalArgumentError("weights should be finite and nonnegative")
        unique, inverse = np.unique(atoms, axis=0, return_inverse=True)
        merged = np.zeros(unique.shape[0])
        np.add.at(merged, inverse.reshape(-1), weights)
        total = merged.sum()
        if total <= 0:
            raise IllegalArgumentError("weights should have a positive sum")
        if self.sample_count is not None and self.sample_count < 1:
            raise IllegalArgumentError("sample count should be positive")
        object.__setattr__(self, "atoms", _frozen(unique))
        object.__setattr__(self, "weights", _frozen(merged / total))

    @property
    def size(self) -> int:
        return int(self.atoms.shape[0])

    @property
    def dim(self) -> int:
        return int(self.atoms.shape[1])

    @property
    def support(self) -> np.ndarray:
        return self.atoms[self.weights > 0]

    def mean(self) -> np.ndarray:
        return self.weights @ self.atoms

    @cached_property
    def atom_index(self) -> Mapping[Atom, int]:
        return {tuple(atom): num for num, atom in enumerate(self.atoms.tolist())}

    def with_weights(self, weights: ArrayLike) -> "DiscreteDistribution":
        return DiscreteDistribution(self.atoms, weights, self.sample_count)

    def expectation(self, values: ArrayLike) -> Any:
        values = np.asarray(values, dtype=float)
        positive = self.weights > 0
        return self.weights[positive] @ values[positive]

    def to_payload(self) -> Dict[str, Any]:
        ret: Dict[str, Any] = {
            "atoms": self.atoms.tolist(),
            "weights": self.weights.tolist(),
        }
        if self.sample_count is not None:
            ret["sample_count"] = self.sample_count
        return ret

    @classmethod
    def from_payload(cls, payload: Mapping[str, Any]) -> "DiscreteDistribution":
        try:
            atoms = payload["atoms"]
            weights = payload["weights"]
        except KeyError as exc:
            raise IllegalArgumentError(f"distribution payload lacks {exc}")
        return cls(atoms, weights, payload.get("sample_count"))


def empirical_from_samples(samples: ArrayLike) -> DiscreteDistribution:
    if np.asarray(samples, dtype=float).size == 0:
        raise IllegalArgumentError(
            "cannot build an empirical distribution from no samples"
        )
    points = as_points(samples)
    count = points.shape[0]
    return DiscreteDistribution(points, np.full(count, 1.0 / count), count)


def _aligned(
    first: DiscreteDistribution, second: DiscreteDistribution
) -> Tuple[List[Atom], np.ndarray, np.ndarray]:
    if first.dim != second.dim:
        raise IllegalArgumentError(
            f"distributions live in R^{first.dim} and R^{second.dim}"
        )
    keys: Dict[Atom, int] = {}
    for atom in [*first.atom_index, *second.atom_index]:
        keys.setdefault(atom, len(keys))
    left = np.zeros(len(keys))
    right = np.zeros(len(keys))
    for atom, num in first.atom_index.items():
        left[keys[atom]] = first.weights[num]
    for atom, num in second.atom_index.items():
        right[keys[atom]] = second.weights[num]
    return list(keys), left, right


def relative_entropy(
    q_dist: DiscreteDistribution, p_dist: DiscreteDistribution
) -> float:
    """D(Q||P) in nats, +inf when Q is not absolutely continuous w.r.t. P."""
    _, q, p = _aligned(q_dist, p_dist)
    value = float(np.sum(rel_entr(q, p)))
    return max(value, 0.0)


def total_variation(
    q_dist: DiscreteDistribution, p_dist: DiscreteDistribution
) -> float:
    _, q, p = _aligned(q_dist, p_dist)
    return 0.5 * float(np.abs(q - p).sum())


class FeatureMap(abc.ABC):
    variant: str = ""

    @property
    @abc.abstractmethod
    def dim(self) -> int:
        pass

    @abc.abstractmethod
    def evaluate(self, atoms: ArrayLike) -> np.ndarray:
        """Feature values, one row per atom."""

    @abc.abstractmethod
    def _payload(self) -> Dict[str, Any]:
        pass

    def to_payload(self) -> Dict[str, Any]:
        return {"variant": self.variant, **self._payload()}


@dataclass(frozen=True)
class CoordinateFeatures(FeatureMap):
    indices: Tuple[int, ...]
    variant = "coordinate"

    def __post_init__(self) -> None:
        if not self.indices or min(self.indices) < 0:
            raise IllegalArgumentError(
                f"coordinate indices should be nonnegative, got {self.indices}"
            )
        object.__setattr__(self, "indices", tuple(int(i) for i in self.indices))

    @property
    def dim(self) -> int:
        return len(self.indices)

    def evaluate(self, atoms: ArrayLike) -> np.ndarray:
        points = as_points(atoms)
        if max(self.indices) >= points.shape[1]:
            raise EvaluationError(
                f"coordinate {max(self.indices)} is out of range "
                f"for atoms in R^{points.shape[1]}"
            )
        return points[:, list(self.indices)]

    def _payload(self) -> Dict[str, Any]:
        return {"indices": list(self.indices)}


@dataclass(frozen=True)
class IdentityFeatures(FeatureMap):
    size: int
    variant = "identity"

    def __post_init__(self) -> None:
        if self.size < 1:
            raise IllegalArgumentError("identity features need a positive dimension")

    @property
    def dim(self) -> int:
        return self.size

    def evaluate(self, atoms: ArrayLike) -> np.ndarray:
        points = as_points(atoms)
        if points.shape[1] != self.size:
            raise EvaluationError(
                f"identity features of dimension {self.size} "
                f"cannot evaluate atoms in R^{points.shape[1]}"
            )
        return points.copy()

    def _payload(self) -> Dict[str, Any]:
        return {"dim": self.size}


@dataclass(frozen=True, eq=False)
class AffineFeatures(FeatureMap):
    matrix: np.ndarray
    offset: np.ndarray
    variant = "affine"

    def __post_init__(self) -> None:
        matrix = np.atleast_2d(np.asarray(self.matrix, dtype=float))
        offset = _as_vector(self.offset, "offset")
        if matrix.shape[0] != offset.shape[0]:
            raise IllegalArgumentError(
                f"matrix has {matrix.shape[0]} rows but offset has {offset.shape[0]}"
            )
        object.__setattr__(self, "matrix", _frozen(matrix))
        object.__setattr__(self, "offset", _frozen(offset))

    @property
    def dim(self) -> int:
        return int(self.offset.shape[0])

    def evaluate(self, atoms: ArrayLike) -> np.ndarray:
        points = as_points(atoms)
        if points.shape[1] != self.matrix.shape[1]:
            raise EvaluationError(
                f"affine features expect atoms in R^{self.matrix.shape[1]}, "
                f"got R^{points.shape[1]}"
            )
        return points @ self.matrix.T + self.offset

    def _payload(self) -> Dict[str, Any]:
        return {"matrix": self.matrix.tolist(), "offset": self.offset.tolist()}


@dataclass(frozen=True, eq=False)
class TabularFeatures(FeatureMap):
    keys: np.ndarray
    values: np.ndarray
    variant = "tabular"

    def __post_init__(self) -> None:
        keys = as_points(self.keys)
        values = as_points(self.values)
        if keys.shape[0] != values.shape[0]:
            raise IllegalArgumentError(
                f"feature table has {keys.shape[0]} atoms but {values.shape[0]} rows"
            )
        if np.unique(keys, axis=0).shape[0] != keys.shape[0]:
            raise IllegalArgumentError("feature table atoms should be distinct")
        object.__setattr__(self, "keys", _frozen(keys))
        object.__setattr__(self, "values", _frozen(values))

    @cached_property
    def _index(self) -> Mapping[Atom, int]:
        return {tuple(atom): num for num, atom in enumerate(self.keys.tolist())}

    @property
    def dim(self) -> int:
        return int(self.values.shape[1])

    def evaluate(self, atoms: ArrayLike) -> np.ndarray:
        rows = []
        for atom in as_points(atoms).tolist():
            num = self._index.get(tuple(atom))
            if num is None:
                raise EvaluationError(
                    f"feature table has no entry for atom {_format_atom(atom)}"
                )
            rows.append(num)
        return self.values[rows].copy()

    def _payload(self) -> Dict[str, Any]:
        return {"atoms": self.keys.tolist(), "values": self.values.tolist()}


@dataclass(frozen=True, eq=False)
class LogRatioFeatures(FeatureMap):
    """psi(xi) = log(q(xi) / p(xi)) over a shared atom index."""

    keys: np.ndarray
    numerator: np.ndarray
    denominator: np.ndarray
    variant = "log-ratio"

    def __post_init__(self) -> None:
        keys = as_points(self.keys)
        numerator = _as_vector(self.numerator, "numerator")
        denominator = _as_vector(self.denominator, "denominator")
        if not (keys.shape[0] == numerator.shape[0] == denominator.shape[0]):
            raise IllegalArgumentError("log-ratio weights should match the atom index")
        if np.any(numerator < 0) or np.any(denominator < 0):
            raise IllegalArgumentError("log-ratio weights should be nonnegative")
        violated = (denominator == 0) & (numerator > 0)
        if np.any(violated):
            atom = keys[np.argmax(violated)]
            raise IllegalArgumentError(
                "numerator is not absolutely continuous w.r.t. denominator "
                f"at atom {_format_atom(atom)}"
            )
        object.__setattr__(self, "keys", _frozen(keys))
        object.__setattr__(self, "numerator", _frozen(numerator))
        object.__setattr__(self, "denominator", _frozen(denominator))

    @classmethod
    def between(
        cls, numerator: DiscreteDistribution, denominator: DiscreteDistribution
    ) -> "LogRatioFeatures":
        keys, q, p = _aligned(numerator, denominator)
        return cls(np.array(keys, dtype=float), q, p)

    @cached_property
    def _index(self) -> Mapping[Atom, int]:
        return {tuple(atom): num for num, atom in enumerate(self.keys.tolist())}

    @property
    def dim(self) -> int:
        return 1

    def evaluate(self, atoms: ArrayLike) -> np.ndarray:
        ret = []
        for atom in as_points(atoms).tolist():
            num = self._index.get(tuple(atom))
            if num is None or self.denominator[num] == 0:
                raise EvaluationError(
                    f"log-ratio is undefined at atom {_format_atom(atom)}"
                )
            if self.numerator[num] == 0:
                ret.append(-np.inf)
            else:
                ret.append(np.log(self.numerator[num] / self.denominator[num]))
        return np.array(ret, dtype=float).reshape(-1, 1)

    def _payload(self) -> Dict[str, Any]:
        return {
            "atoms": self.keys.tolist(),
            "numerator": self.numerator.tolist(),
            "denominator": self.denominator.tolist(),
        }


def moment(dist: DiscreteDistribution, features: FeatureMap) -> np.ndarray:
    values = features.evaluate(dist.atoms)
    return dist.expectation(values)


class MomentSet(abc.ABC):
    """Nonempty compact convex set E in R^d."""

    variant: str = ""

    @property
    @abc.abstractmethod
    def dim(self) -> int:
        pass

    @abc.abstractmethod
    def project(self, x: ArrayLike) -> np.ndarray:
        """Euclidean projection, applied row-wise to 2-D input."""

    @abc.abstractmethod
    def support_point(self, z: ArrayLike) -> np.ndarray:
        """A maximizer of y'z over the set."""

    @abc.abstractmethod
    def center(self) -> np.ndarray:
        pass

    @abc.abstractmethod
    def max_norm(self) -> float:
        """max of ||y||_2 over the set."""

    @abc.abstractmethod
    def slater_margin(self, point: ArrayLike) -> float:
        """Distance from the point to the complement, negative outside."""

    @abc.abstractmethod
    def _payload(self) -> Dict[str, Any]:
        pass

    def support_function(self, z: ArrayLike) -> float:
        z = np.asarray(z, dtype=float)
        return float(self.support_point(z) @ z)

    def distance(self, x: ArrayLike) -> Any:
        x = np.asarray(x, dtype=float)
        return np.linalg.norm(x - self.project(x), axis=-1)

    def contains(self, x: ArrayLike, tolerance: float = MEMBERSHIP_TOLERANCE) -> Any:
        return self.distance(x) <= tolerance

    def _check_dim(self, x: np.ndarray) -> None:
        if x.shape[-1] != self.dim:
            raise IllegalArgumentError(
                f"expected a point in R^{self.dim}, got shape {x.shape}"
            )

    def to_payload(self) -> Dict[str, Any]:
        return {"variant": self.variant, **self._payload()}


@dataclass(frozen=True, eq=False)
class BoxSet(MomentSet):
    lower: np.ndarray
    upper: np.ndarray
    variant = "box"

    def __post_init__(self) -> None:
        lower = _as_vector(self.lower, "lower bound")
        upper = _as_vector(self.upper, "upper bound")
        if lower.shape != upper.shape:
            raise IllegalArgumentError("box bounds should have the same dimension")
        if np.any(lower > upper):
            raise IllegalArgumentError(
                f"box lower bound {lower.tolist()} exceeds upper bound {upper.tolist()}"
            )
        object.__setattr__(self, "lower", _frozen(lower))
        object.__setattr__(self, "upper", _frozen(upper))

    @classmethod
    def around(cls, center: ArrayLike, half_width: Any) -> "BoxSet":
        center = _as_vector(center, "center")
        return cls(center - half_width, center + half_width)

    @property
    def dim(self) -> int:
        return int(self.lower.shape[0])

    def project(self, x: ArrayLike) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        self._check_dim(x)
        return np.clip(x, self.lower, self.upper)

    def support_point(self, z: ArrayLike) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        self._check_dim(z)
        middle = 0.5 * (self.lower + self.upper)
        return np.where(z > 0, self.upper, np.where(z < 0, self.lower, middle))

    def support_function(self, z: ArrayLike) -> float:
        z = np.asarray(z, dtype=float)
        self._check_dim(z)
        return float(np.maximum(self.lower * z, self.upper * z).sum())

    def center(self) -> np.ndarray:
        return 0.5 * (self.lower + self.upper)

    def max_norm(self) -> float:
        return float(np.linalg.norm(np.maximum(np.abs(self.lower), np.abs(self.upper))))

    def slater_margin(self, point: ArrayLike) -> float:
        point = np.asarray(point, dtype=float)
        self._check_dim(point)
        return float(np.min(np.minimum(point - self.lower, self.upper - point)))

    def _payload(self) -> Dict[str, Any]:
        return {"lower": self.lower.tolist(), "upper": self.upper.tolist()}


@dataclass(frozen=True, eq=False)
class BallSet(MomentSet):
    centre: np.ndarray
    radius: float
    variant = "ball"

    def __post_init__(self) -> None:
        if not np.isfinite(self.radius) or self.radius < 0:
            raise IllegalArgumentError(
                f"ball radius should be nonnegative, got {self.radius}"
            )
        object.__setattr__(self, "centre", _frozen(_as_vector(self.centre, "center")))
        object.__setattr__(self, "radius", float(self.radius))

    @property
    def dim(self) -> int:
        return int(self.centre.shape[0])

    def project(self, x: ArrayLike) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        self._check_dim(x)
        offset = x - self.centre
        norm = np.linalg.norm(offset, axis=-1, keepdims=True)
        scale = np.divide(
            self.radius, norm, out=np.ones_like(norm), where=norm > self.radius
        )
        return self.centre + offset * scale

    def support_point(self, z: ArrayLike) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        self._check_dim(z)
        norm = np.linalg.norm(z)
        if norm == 0:
            return self.centre.copy()
        return self.centre + self.radius * z / norm

    def support_function(self, z: ArrayLike) -> float:
        z = np.asarray(z, dtype=float)
        self._check_dim(z)
        return float(self.centre @ z + self.radius * np.linalg.norm(z))

    def center(self) -> np.ndarray:
        return self.centre.copy()

    def max_norm(self) -> float:
        return float(np.linalg.norm(self.centre) + self.radius)

    def slater_margin(self, point: ArrayLike) -> float:
        point = np.asarray(point, dtype=float)
        self._check_dim(point)
        return float(self.radius - np.linalg.norm(point - self.centre))

    def _payload(self) -> Dict[str, Any]:
        return {"center": self.centre.tolist(), "radius": self.radius}


@dataclass(frozen=True, eq=False)
class SingletonSet(MomentSet):
    point: np.ndarray
    variant = "singleton"

    def __post_init__(self) -> None:
        object.__setattr__(self, "point", _frozen(_as_vector(self.point, "point")))

    @property
    def dim(self) -> int:
        return int(self.point.shape[0])

    def project(self, x: ArrayLike) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        self._check_dim(x)
        return np.broadcast_to(self.point, x.shape).copy()

    def support_point(self, z: ArrayLike) -> np.ndarray:
        self._check_dim(np.asarray(z, dtype=float))
        return self.point.copy()

    def center(self) -> np.ndarray:
        return self.point.copy()

    def max_norm(self) -> float:
        return float(np.linalg.norm(self.point))

    def slater_margin(self, point: ArrayLike) -> float:
        point = np.asarray(point, dtype=float)
        self._check_dim(point)
        return -float(np.linalg.norm(point - self.point))

    def default_inflation(self) -> float:
        return 1e-6 * (1.0 + float(np.max(np.abs(self.point))))

    def inflate(self, tau: Optional[float] = None) -> BoxSet:
        if tau is None:
            tau = self.default_inflation()
        if tau <= 0:
            raise IllegalArgumentError(f"inflation width should be positive, got {tau}")
        return BoxSet.around(self.point, tau)

    def _payload(self) -> Dict[str, Any]:
        return {"point": self.point.tolist()}


def _require(payload: Mapping[str, Any], *names: str) -> List[Any]:
    missing = [name for name in names if name not in payload]
    if missing:
        raise IllegalArgumentError(
            f"{payload.get('variant')!r} payload lacks {', '.join(missing)}"
        )
    return [payload[name] for name in names]


def moment_set_from_payload(payload: Mapping[str, Any]) -> MomentSet:
    variant = payload.get("variant")
    if variant == BoxSet.variant:
        lower, upper = _require(payload, "lower", "upper")
        return BoxSet(lower, upper)
    if variant == BallSet.variant:
        center, radius = _require(payload, "center", "radius")
        return BallSet(center, radius)
    if variant == SingletonSet.variant:
        (point,) = _require(payload, "point")
        return SingletonSet(point)
    raise IllegalArgumentError(f"unknown moment set variant {variant!r}")


def feature_map_from_payload(payload: Mapping[str, Any]) -> FeatureMap:
    variant = payload.get("variant")
    if variant == CoordinateFeatures.variant:
        (indices,) = _require(payload, "indices")
        return CoordinateFeatures(tuple(indices))
    if variant == IdentityFeatures.variant:
        (dim,) = _require(payload, "dim")
        return IdentityFeatures(int(dim))
    if variant == AffineFeatures.variant:
        matrix, offset = _require(payload, "matrix", "offset")
        return AffineFeatures(matrix, offset)
    if variant == TabularFeatures.variant:
        keys, values = _require(payload, "atoms", "values")
        return TabularFeatures(keys, values)
    if variant == LogRatioFeatures.variant:
        keys, numerator, denominator = _require(
            payload, "atoms", "numerator", "denominator"
        )
        return LogRatioFeatures(keys, numerator, denominator)
    raise IllegalArgumentError(f"unknown feature map variant {variant!r}")
