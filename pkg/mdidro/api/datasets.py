import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import List, Tuple, Union

import numpy as np
import pandas as pd

from .config import ConfigError
from .core import IllegalArgumentError
from .distributions import ArrayLike, BoxSet, as_points


log = logging.getLogger(__name__)

HEART_REQUIRED_COLUMNS = ("age", "sex", "target")
HEART_ELDEST_SHARE = 0.2
DEFAULT_MEAN_HALF_WIDTH = 1e-3


@dataclass(frozen=True, eq=False)
class LabeledSamples:
    """Feature rows ``x`` with labels ``y`` in {-1, +1}."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self) -> None:
        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.y, dtype=float).reshape(-1)
        if x.ndim != 2 or x.shape[0] != y.shape[0]:
            raise IllegalArgumentError("features and labels should have matching rows")
        if not np.all(np.isfinite(x)):
            raise IllegalArgumentError("features should be finite")
        if not np.all(np.isin(y, (-1.0, 1.0))):
            raise IllegalArgumentError("labels should be -1 or +1")
        x.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @property
    def size(self) -> int:
        return int(self.y.shape[0])

    @property
    def dim(self) -> int:
        """Dimension of the atoms (x, y)."""
        return int(self.x.shape[1]) + 1

    def as_atoms(self) -> np.ndarray:
        return np.column_stack([self.x, self.y])

    def to_frame(self) -> pd.DataFrame:
        columns = [f"x{num}" for num in range(1, self.x.shape[1] + 1)]
        frame = pd.DataFrame(self.x, columns=columns)
        frame["y"] = self.y.astype(int)
        return frame

    @classmethod
    def from_atoms(cls, atoms: ArrayLike) -> "LabeledSamples":
        points = as_points(atoms)
        return cls(points[:, :-1], points[:, -1])


def _threshold_labels(x: np.ndarray) -> np.ndarray:
    # a mean of exactly one half is labeled -1
    return np.where(x.mean(axis=1) > 0.5, 1.0, -1.0)


def _check_shape(m: int, count: int) -> None:
    if m < 2:
        raise IllegalArgumentError(f"atom dimension m should be at least 2, got {m}")
    if count < 1:
        raise IllegalArgumentError(f"sample size should be positive, got {count}")


def synth_train(m: int, count: int, rng: np.random.Generator) -> LabeledSamples:
    """Features uniform on the unit cube in R^(m-1)."""
    _check_shape(m, count)
    x = rng.random((count, m - 1))
    return LabeledSamples(x, _threshold_labels(x))


def synth_test(m: int, count: int, rng: np.random.Generator) -> LabeledSamples:
    """Features with density (2/(m-1)) * sum(x) on the unit cube.

    The density is the uniform mixture over j of "x_j has density 2t,
    the rest uniform", which is sampled exactly.
    """
    _check_shape(m, count)
    x = rng.random((count, m - 1))
    tilted = rng.integers(0, m - 1, size=count)
    x[np.arange(count), tilted] = np.sqrt(rng.random(count))
    return LabeledSamples(x, _threshold_labels(x))


def density_ratio(x: ArrayLike) -> np.ndarray:
    """Ratio of the test to the training feature density."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x.reshape(1, -1)
    return 2.0 / x.shape[1] * x.sum(axis=1)


def covshift_mu_star(m: int) -> float:
    """Per-coordinate feature mean under the test distribution."""
    if m < 2:
        raise IllegalArgumentError(f"atom dimension m should be at least 2, got {m}")
    return (m - 2) / (2.0 * (m - 1)) + 2.0 / (3.0 * (m - 1))


def estimate_label_mean(
    m: int, budget: int, rng: np.random.Generator
) -> Tuple[float, float]:
    """Monte Carlo estimate of E[y] under the test distribution and its
    standard error."""
    labels = synth_test(m, budget, rng).y
    error = float(labels.std(ddof=1) / math.sqrt(budget)) if budget > 1 else math.inf
    return float(labels.mean()), error


def covshift_moment_set(
    m: int, slack: float, budget: int, rng: np.random.Generator
) -> BoxSet:
    if not slack > 0:
        raise IllegalArgumentError(f"slack should be positive, got {slack}")
    label_mean, error = estimate_label_mean(m, budget, rng)
    log.info("Test label mean %.6f (standard error %.2g)", label_mean, error)
    if label_mean <= 0:
        raise ConfigError(
            f"estimated test label mean {label_mean:.6f} should be positive; "
            "increase the Monte Carlo budget"
        )
    center = np.append(np.full(m - 1, covshift_mu_star(m)), label_mean)
    box = BoxSet.around(center, slack)
    if np.all(box.lower <= 0) and np.all(box.upper >= 0):
        raise ConfigError(
            f"slack {slack} is so large that the moment set contains the origin"
        )
    return box


@dataclass(frozen=True, eq=False)
class HeartData:
    """Standardized heart-disease table with the raw age and sex columns."""

    frame: pd.DataFrame
    feature_names: List[str]

    @property
    def size(self) -> int:
        return len(self.frame)

    def samples(self) -> LabeledSamples:
        return LabeledSamples(
            self.frame[self.feature_names].to_numpy(dtype=float),
            self.frame["target"].to_numpy(dtype=float),
        )


def load_heart_csv(path: Union[str, Path]) -> HeartData:
    """Read a heart-disease CSV; features are every column but age, sex and
    target, standardized over the whole file."""
    frame = pd.read_csv(path)
    missing = [name for name in HEART_REQUIRED_COLUMNS if name not in frame.columns]
    if missing:
        raise ConfigError(f"{path}: missing columns {', '.join(missing)}")
    features = [name for name in frame.columns if name not in HEART_REQUIRED_COLUMNS]
    if not features:
        raise ConfigError(f"{path}: there are no feature columns")
    if frame[[*HEART_REQUIRED_COLUMNS, *features]].isna().any().any():
        raise ConfigError(f"{path}: missing values are not supported")
    target = frame["target"].astype(float)
    values = set(target.unique())
    if values <= {0.0, 1.0}:
        target = 2.0 * target - 1.0
    elif not values <= {-1.0, 1.0}:
        raise ConfigError(f"{path}: target should be binary, got {sorted(values)}")
    result = pd.DataFrame({"age": frame["age"], "sex": frame["sex"], "target": target})
    for name in features:
        column = frame[name].astype(float)
        spread = column.std(ddof=0)
        if spread == 0:
            raise ConfigError(f"{path}: feature {name!r} is constant")
        result[name] = (column - column.mean()) / spread
    log.debug("Loaded %d rows with features %s from %s", len(result), features, path)
    return HeartData(result, features)


def eligible_rows(data: HeartData) -> pd.DataFrame:
    """The oldest fifth (rounded up) of the male patients."""
    males = data.frame[data.frame["sex"] == 1]
    ordered = males.sort_values("age", ascending=False, kind="mergesort")
    keep = math.ceil(len(ordered) * HEART_ELDEST_SHARE - 1e-9)
    return ordered.iloc[:keep]


def biased_subsample(
    data: HeartData, count: int, rng: np.random.Generator
) -> LabeledSamples:
    eligible = eligible_rows(data)
    if count < 1:
        raise IllegalArgumentError(f"sample size should be positive, got {count}")
    if len(eligible) < count:
        raise ConfigError(
            f"only {len(eligible)} eligible rows for a subsample of size {count}"
        )
    picks = rng.choice(len(eligible), size=count, replace=False)
    chosen = eligible.iloc[np.sort(picks)]
    return LabeledSamples(
        chosen[data.feature_names].to_numpy(dtype=float),
        chosen["target"].to_numpy(dtype=float),
    )


def empirical_mean_box(
    samples: LabeledSamples, half_width: float = DEFAULT_MEAN_HALF_WIDTH
) -> BoxSet:
    """Box of the given half-width around the mean of (x, y)."""
    if samples.size == 0:
        raise IllegalArgumentError("cannot center a box on no samples")
    if not half_width > 0:
        raise IllegalArgumentError(f"half width should be positive, got {half_width}")
    return BoxSet.around(samples.as_atoms().mean(axis=0), half_width)
