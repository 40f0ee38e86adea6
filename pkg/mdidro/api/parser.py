"""Textual feature-map and moment-set specifications used on the command line.

Features: ``identity``, ``coords:1,3`` (1-based coordinates) or
``affine:a11,a12;a21,a22:b1,b2``.
Moment sets: ``box:lo1,lo2:hi1,hi2``, ``ball:c1,c2:rho`` or ``singleton:m1,m2``.
"""
import math
from typing import List, Tuple

import numpy as np

from .core import IllegalArgumentError
from .distributions import (
    AffineFeatures,
    BallSet,
    BoxSet,
    CoordinateFeatures,
    FeatureMap,
    IdentityFeatures,
    MomentSet,
    SingletonSet,
)


def _numbers(text: str, what: str) -> List[float]:
    try:
        return [float(item) for item in text.split(",")]
    except ValueError:
        raise IllegalArgumentError(
            f"{what} should be comma separated numbers: {text!r}"
        )


def _scalar(text: str, what: str) -> float:
    values = _numbers(text, what)
    if len(values) != 1:
        raise IllegalArgumentError(f"{what} should be a single number: {text!r}")
    return values[0]


def _split(text: str, count: int, usage: str) -> List[str]:
    parts = text.split(":")
    if len(parts) != count:
        raise IllegalArgumentError(f"invalid specification {text!r}, use {usage}")
    return parts[1:]


def parse_features(text: str, dim: int) -> FeatureMap:
    """Parse a feature map for atoms in R^dim."""
    kind = text.split(":", 1)[0].strip().lower()
    if kind == "identity":
        _split(text, 1, "'identity'")
        return IdentityFeatures(dim)
    if kind == "coords":
        (body,) = _split(text, 2, "'coords:1,3'")
        indices = []
        for item in body.split(","):
            try:
                index = int(item)
            except ValueError:
                raise IllegalArgumentError(f"coordinate {item!r} is not an integer")
            if not 1 <= index <= dim:
                raise IllegalArgumentError(
                    f"coordinate {index} is out of range 1..{dim}"
                )
            indices.append(index - 1)
        return CoordinateFeatures(indices)
    if kind == "affine":
        matrix_text, offset_text = _split(text, 3, "'affine:a11,a12;a21,a22:b1,b2'")
        matrix = np.array(
            [_numbers(row, "affine row") for row in matrix_text.split(";")]
        )
        if matrix.shape[1] != dim:
            raise IllegalArgumentError(
                f"affine matrix has {matrix.shape[1]} columns, atoms live in R^{dim}"
            )
        return AffineFeatures(matrix, _numbers(offset_text, "affine offset"))
    raise IllegalArgumentError(
        f"unknown feature map {kind!r}, expected identity, coords or affine"
    )


def parse_moment_set(text: str) -> MomentSet:
    kind = text.split(":", 1)[0].strip().lower()
    if kind == "box":
        lower, upper = _split(text, 3, "'box:lo1,lo2:hi1,hi2'")
        return BoxSet(_numbers(lower, "lower bound"), _numbers(upper, "upper bound"))
    if kind == "ball":
        center, radius = _split(text, 3, "'ball:c1,c2:rho'")
        return BallSet(_numbers(center, "ball center"), _scalar(radius, "ball radius"))
    if kind == "singleton":
        (point,) = _split(text, 2, "'singleton:m1,m2'")
        return SingletonSet(_numbers(point, "singleton point"))
    raise IllegalArgumentError(
        f"unknown moment set {kind!r}, expected box, ball or singleton"
    )


def parse_vector(text: str, what: str = "vector") -> np.ndarray:
    return np.array(_numbers(text, what))


def parse_estimators(text: str) -> List[Tuple[str, float]]:
    """Parse ``ips,capped:4,mdi`` into (name, cap) pairs; the cap is only
    meaningful for ``capped``."""
    ret: List[Tuple[str, float]] = []
    for item in text.split(","):
        name, _, arg = item.strip().partition(":")
        if name == "capped":
            if not arg:
                raise IllegalArgumentError(
                    "capped estimator needs a cap, e.g. capped:4"
                )
            cap = _scalar(arg, "cap")
            if cap < 0:
                raise IllegalArgumentError(f"cap should be nonnegative, got {cap}")
            ret.append((f"capped:{arg}", cap))
        elif name in ("ips", "mdi") and not arg:
            ret.append((name, math.inf))
        else:
            raise IllegalArgumentError(
                f"unknown estimator {item!r}, expected ips, capped:<cap> or mdi"
            )
    if not ret:
        raise IllegalArgumentError("no estimators given")
    return ret
