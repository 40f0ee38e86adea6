import math
from decimal import Decimal, localcontext
from fractions import Fraction
from typing import Any

import pytest

from mdidro.api import (
    IllegalArgumentError,
    finite_sample_bound,
    hoeffding_ips_bound,
    ope_bound,
    radius_for_confidence,
)


def test_ope_bound() -> None:
    report = ope_bound(0.2, 500, 5, 4)
    assert report.kind == "ope"
    assert report.log_probability_bound == pytest.approx(9 * math.log(501) - 100)
    assert report.log_probability_bound == pytest.approx(-44.05, abs=0.01)
    assert not report.vacuous
    assert report.probability_bound == pytest.approx(math.exp(-44.0517), rel=1e-3)
    assert report.inputs == {
        "radius": 0.2,
        "sample_size": 500,
        "n_states": 5,
        "n_actions": 4,
    }


def test_ope_bound_zero_radius_is_vacuous() -> None:
    report = ope_bound(0.0, 10, 2, 2)
    assert report.vacuous
    assert report.probability_bound == 1.0


def test_finite_sample_bound() -> None:
    report = finite_sample_bound(0.1, 1000, 3)
    assert report.log_probability_bound == pytest.approx(3 * math.log(1001) - 100)
    assert report.probability_bound == pytest.approx(
        math.exp(3 * math.log(1001) - 100)
    )


def test_finite_sample_bound_clips_to_one() -> None:
    report = finite_sample_bound(0.01, 10, 5)
    assert report.log_probability_bound > 0
    assert report.vacuous
    assert report.probability_bound == 1.0


def test_hoeffding() -> None:
    report = hoeffding_ips_bound(0.1, 200, 2.0)
    assert report.kind == "hoeffding"
    assert report.log_probability_bound == pytest.approx(-2 * 200 * 0.01 / 4)


@pytest.mark.parametrize("sample_size,cardinality", [(100, 2), (5000, 10)])
def test_radius_for_confidence(sample_size: int, cardinality: int) -> None:
    radius = radius_for_confidence(sample_size, cardinality, 0.05)
    report = finite_sample_bound(radius, sample_size, cardinality)
    assert report.probability_bound == pytest.approx(0.05)


def test_payload() -> None:
    payload = finite_sample_bound(0.1, 1000, 3).to_payload()
    assert payload["kind"] == "finite"
    assert set(payload) == {
        "kind",
        "log_probability_bound",
        "inputs",
        "probability_bound",
    }


@pytest.mark.parametrize(
    "args,match",
    [
        ((0.0, 10, 2), "radius should be positive"),
        ((-1.0, 10, 2), "radius"),
        ((math.inf, 10, 2), "radius"),
        ((0.1, 0, 2), "sample size"),
        ((0.1, 10, 0), "support cardinality"),
        ((0.1, 2.5, 2), "sample size"),
    ],
)
def test_finite_sample_bound_errors(args: tuple, match: str) -> None:
    with pytest.raises(IllegalArgumentError, match=match):
        finite_sample_bound(*args)


def test_ope_bound_negative_radius() -> None:
    with pytest.raises(IllegalArgumentError, match="nonnegative"):
        ope_bound(-0.1, 10, 2, 2)


def test_hoeffding_errors() -> None:
    with pytest.raises(IllegalArgumentError, match="epsilon"):
        hoeffding_ips_bound(0.0, 10, 1.0)
    with pytest.raises(IllegalArgumentError, match="weight bound"):
        hoeffding_ips_bound(0.1, 10, -1.0)


@pytest.mark.parametrize("target", [0.0, 1.0, 1.5])
def test_radius_for_confidence_target(target: float) -> None:
    with pytest.raises(IllegalArgumentError, match="target"):
        radius_for_confidence(10, 2, target)


def exact_log_bound(radius: float, sample_size: int, cardinality: int) -> Decimal:
    with localcontext() as ctx:
        ctx.prec = 50
        return cardinality * Decimal(sample_size + 1).ln() - Decimal(
            radius
        ) * Decimal(sample_size)


def test_bounds_match_high_precision_arithmetic(rng: Any) -> None:
    for _ in range(200):
        radius = float(rng.uniform(1e-4, 2.0))
        sample_size = int(rng.integers(1, 10 ** 6))
        n_states = int(rng.integers(1, 50))
        n_actions = int(rng.integers(1, 50))
        scale = n_states * math.log(sample_size + 1) + radius * sample_size
        exact = float(exact_log_bound(radius, sample_size, n_states))
        report = finite_sample_bound(radius, sample_size, n_states)
        assert report.log_probability_bound == pytest.approx(exact, abs=1e-13 * scale)
        exact = float(exact_log_bound(radius, sample_size, n_states + n_actions))
        report = ope_bound(radius, sample_size, n_states, n_actions)
        scale += n_actions * math.log(sample_size + 1)
        assert report.log_probability_bound == pytest.approx(exact, abs=1e-13 * scale)


def test_radius_for_confidence_matches_high_precision_arithmetic(rng: Any) -> None:
    for _ in range(200):
        sample_size = int(rng.integers(1, 10 ** 6))
        cardinality = int(rng.integers(1, 50))
        target = float(rng.uniform(1e-6, 0.5))
        with localcontext() as ctx:
            ctx.prec = 50
            exact = (
                cardinality * Decimal(sample_size + 1).ln() - Decimal(target).ln()
            ) / sample_size
        assert radius_for_confidence(sample_size, cardinality, target) == (
            pytest.approx(float(exact), rel=1e-13)
        )


def test_hoeffding_matches_exact_fractions(rng: Any) -> None:
    for _ in range(200):
        epsilon = float(rng.uniform(1e-3, 1.0))
        sample_size = int(rng.integers(1, 10 ** 6))
        weight_bound = float(rng.uniform(0.1, 10.0))
        exact = (
            -2
            * sample_size
            * Fraction(epsilon) ** 2
            / Fraction(weight_bound) ** 2
        )
        report = hoeffding_ips_bound(epsilon, sample_size, weight_bound)
        assert report.log_probability_bound == pytest.approx(float(exact), rel=1e-14)


def test_bounds_shrink_with_the_radius() -> None:
    radii = [0.01, 0.05, 0.1, 0.5, 1.0]
    finite = [finite_sample_bound(r, 500, 4).log_probability_bound for r in radii]
    ope = [ope_bound(r, 500, 3, 2).log_probability_bound for r in radii]
    assert all(a > b for a, b in zip(finite, finite[1:]))
    assert all(a > b for a, b in zip(ope, ope[1:]))


def test_bounds_grow_with_the_support() -> None:
    finite = [
        finite_sample_bound(0.1, 500, k).log_probability_bound for k in range(1, 8)
    ]
    states = [ope_bound(0.1, 500, k, 2).log_probability_bound for k in range(1, 8)]
    actions = [ope_bound(0.1, 500, 2, k).log_probability_bound for k in range(1, 8)]
    for scan in (finite, states, actions):
        assert all(a < b for a, b in zip(scan, scan[1:]))


def test_bounds_shrink_with_the_sample_size() -> None:
    # the bound decreases once N + 1 exceeds cardinality / radius
    sizes = [100, 200, 500, 1000, 5000, 10 ** 5]
    finite = [finite_sample_bound(0.1, n, 4).log_probability_bound for n in sizes]
    ope = [ope_bound(0.1, n, 3, 2).log_probability_bound for n in sizes]
    assert all(a > b for a, b in zip(finite, finite[1:]))
    assert all(a > b for a, b in zip(ope, ope[1:]))


def test_radius_for_confidence_scans() -> None:
    by_size = [radius_for_confidence(n, 3, 0.05) for n in (1, 2, 10, 100, 10 ** 4)]
    by_support = [radius_for_confidence(1000, k, 0.05) for k in range(1, 8)]
    by_target = [radius_for_confidence(1000, 3, t) for t in (1e-4, 1e-2, 0.1, 0.5)]
    assert all(a > b for a, b in zip(by_size, by_size[1:]))
    assert all(a < b for a, b in zip(by_support, by_support[1:]))
    assert all(a > b for a, b in zip(by_target, by_target[1:]))
