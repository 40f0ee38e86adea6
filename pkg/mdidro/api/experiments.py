import asyncio
import logging
import math
import time
from concurrent.futures import Executor
from dataclasses import asdict, dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import humanize
import numpy as np
import pandas as pd

from .core import IllegalArgumentError, MdiError
from .datasets import (
    HeartData,
    LabeledSamples,
    biased_subsample,
    covshift_moment_set,
    density_ratio,
    empirical_mean_box,
    synth_test,
    synth_train,
)
from .distributions import (
    BoxSet,
    CoordinateFeatures,
    DiscreteDistribution,
    IdentityFeatures,
    empirical_from_samples,
)
from .dro import (
    DroConfig,
    LinearLoss,
    LogisticLoss,
    ScenarioSet,
    default_tolerance,
    erm_train,
    mdi_dro_pipeline,
    risk,
    worst_case_risk,
)
from .guarantees import ope_bound
from .iprojection import (
    IProjectionProblem,
    conditional_limit_check,
    solve,
    tilting_oracle,
)
from .mdp import (
    capped_ips_estimate,
    inventory_instance,
    ips_estimate,
    mdi_ope_estimate,
    occupation_measure,
    random_policy,
    sample_behavioral,
)


log = logging.getLogger(__name__)

Row = Dict[str, Any]
TrialFunc = Callable[[int, np.random.Generator], List[Row]]

SETUP_STREAM = 2 ** 32 - 1


def trial_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, index]))


def setup_rng(seed: int) -> np.random.Generator:
    """Generator for data shared by all trials, independent of every trial."""
    return np.random.default_rng(np.random.SeedSequence([seed, SETUP_STREAM]))


async def run_trials(
    func: TrialFunc,
    trials: int,
    seed: int,
    executor: Optional[Executor] = None,
) -> List[Row]:
    """Run ``func`` for every trial index and collect rows in trial order."""
    if trials < 1:
        raise IllegalArgumentError(f"trial count should be positive, got {trials}")
    loop = asyncio.get_event_loop()
    started = time.monotonic()
    done = 0

    def run_one(index: int) -> List[Row]:
        return func(index, trial_rng(seed, index))

    async def tracked(index: int) -> List[Row]:
        nonlocal done
        rows = await loop.run_in_executor(executor, run_one, index)
        done += 1
        if done % max(1, trials // 10) == 0 or done == trials:
            log.info(
                "%d of %d trials done in %s",
                done,
                trials,
                humanize.naturaldelta(time.monotonic() - started),
            )
        return rows

    chunks = await asyncio.gather(*(tracked(index) for index in range(trials)))
    return [row for chunk in chunks for row in chunk]


def _attempt(row: Row, func: Callable[[], Row]) -> Row:
    """Fill ``row`` from ``func``; a library failure is recorded in the row."""
    try:
        row.update(func())
        row["error"] = ""
    except MdiError as exc:
        log.debug("Trial %s failed: %s", row.get("trial"), exc)
        row["error"] = f"{type(exc).__name__}: {exc}"
    return row


@dataclass(frozen=True)
class ExperimentResult:
    name: str
    tidy: pd.DataFrame
    summary: pd.DataFrame
    config: Dict[str, Any] = field(default_factory=dict)


def _quantile(q: float) -> Callable[[pd.Series], float]:
    def inner(series: pd.Series) -> float:
        series = series.dropna()
        return float(series.quantile(q)) if len(series) else math.nan

    inner.__name__ = f"q{int(round(q * 100)):02d}"
    return inner


def _summarize(
    tidy: pd.DataFrame, keys: Sequence[str], method: str, stats: Dict[str, Any]
) -> pd.DataFrame:
    """Aggregate per (keys, method) and pivot so that every method is a column."""
    if "error" in tidy.columns:
        tidy = tidy[tidy["error"] == ""]
    if tidy.empty:
        return pd.DataFrame()
    grouped = tidy.groupby([*keys, method], sort=True)
    frames = []
    for statistic, (column, how) in stats.items():
        values = grouped[column].agg(how).rename("value").reset_index()
        values["statistic"] = statistic
        frames.append(values)
    stacked = pd.concat(frames, ignore_index=True)
    summary = stacked.pivot_table(
        index=[*keys, "statistic"], columns=method, values="value", aggfunc="first"
    )
    summary.columns.name = None
    return summary.reset_index()


def _logistic_risk(
    loss: LogisticLoss, theta: np.ndarray, test: LabeledSamples
) -> float:
    return float(np.mean(loss.value(theta, test.as_atoms())))


@dataclass(frozen=True)
class CovshiftConfig:
    m: int = 6
    sample_sizes: Tuple[int, ...] = (30, 100, 300)
    radii: Tuple[float, ...] = (1e-4,)
    trials: int = 100
    test_size: int = 20_000
    slack: float = 0.01
    label_budget: int = 1_000_000
    theta_bound: float = 10.0

    def __post_init__(self) -> None:
        if self.m < 2:
            raise IllegalArgumentError("m should be at least 2")
        if not self.sample_sizes or min(self.sample_sizes) < 1:
            raise IllegalArgumentError("sample sizes should be positive")
        if not self.radii or min(self.radii) <= 0:
            raise IllegalArgumentError("radii should be positive")
        if self.trials < 1 or self.test_size < 1 or self.label_budget < 2:
            raise IllegalArgumentError(
                "trial, test and budget sizes should be positive"
            )
        if self.theta_bound <= 0:
            raise IllegalArgumentError("theta bound should be positive")


async def covshift_experiment(
    config: CovshiftConfig, seed: int, executor: Optional[Executor] = None
) -> ExperimentResult:
    """MDI-DRO against ERM and importance-weighted ERM on synthetic data."""
    rng = setup_rng(seed)
    moment_set = covshift_moment_set(config.m, config.slack, config.label_budget, rng)
    test = synth_test(config.m, config.test_size, rng)
    loss = LogisticLoss(BoxSet.around(np.zeros(config.m - 1), config.theta_bound))
    features = IdentityFeatures(config.m)

    def trial(index: int, trial_gen: np.random.Generator) -> List[Row]:
        rows: List[Row] = []
        for size in config.sample_sizes:
            train = synth_train(config.m, size, trial_gen)
            empirical = empirical_from_samples(train.as_atoms())

            def erm() -> Row:
                fit = erm_train(loss, empirical)
                assert fit.theta is not None
                return {"oos_risk": _logistic_risk(loss, fit.theta, test)}

            def iwerm() -> Row:
                ratios = density_ratio(empirical.atoms[:, :-1])
                weighted = empirical.with_weights(empirical.weights * ratios)
                fit = erm_train(loss, weighted)
                assert fit.theta is not None
                return {"oos_risk": _logistic_risk(loss, fit.theta, test)}

            base = {"trial": index, "N": size, "radius": math.nan, "bound": math.nan}
            rows.append(_attempt({**base, "method": "erm"}, erm))
            rows.append(_attempt({**base, "method": "iwerm"}, iwerm))
            for radius in config.radii:

                def dro(radius: float = radius) -> Row:
                    result = mdi_dro_pipeline(
                        empirical,
                        features,
                        moment_set,
                        loss,
                        DroConfig(radius=radius),
                        check_recession=False,
                    )
                    assert result.theta is not None
                    oos = _logistic_risk(loss, result.theta, test)
                    return {
                        "oos_risk": oos,
                        "bound": result.value,
                        "disappointed": int(oos > result.value),
                        "converged": int(result.training.converged),
                    }

                rows.append(
                    _attempt({**base, "method": "mdi-dro", "radius": radius}, dro)
                )
        return rows

    tidy = pd.DataFrame(await run_trials(trial, config.trials, seed, executor))
    tidy = _ordered(
        tidy,
        ["trial", "N", "method", "radius", "oos_risk", "bound", "disappointed"],
    )
    labeled = tidy.assign(label=tidy.apply(_method_label, axis=1))
    summary = _summarize(
        labeled,
        ["N"],
        "label",
        {
            "mean_oos_risk": ("oos_risk", "mean"),
            "std_oos_risk": ("oos_risk", "std"),
            "q10_oos_risk": ("oos_risk", _quantile(0.1)),
            "q90_oos_risk": ("oos_risk", _quantile(0.9)),
            "reliability": ("disappointed", lambda s: 1.0 - s.mean()),
        },
    )
    return ExperimentResult("covshift", tidy, summary, _config_payload(config))


def _method_label(row: pd.Series) -> str:
    radius = row.get("radius")
    if radius is None or (isinstance(radius, float) and math.isnan(radius)):
        return str(row["method"])
    return f"{row['method']}(r={radius:g})"


def _ordered(tidy: pd.DataFrame, leading: List[str]) -> pd.DataFrame:
    for column in leading:
        if column not in tidy.columns:
            tidy[column] = math.nan
    rest = [name for name in tidy.columns if name not in leading]
    return tidy[leading + rest]


def _config_payload(config: Any) -> Dict[str, Any]:
    payload = asdict(config)
    return {
        key: list(val) if isinstance(val, tuple) else val
        for key, val in payload.items()
    }


@dataclass(frozen=True)
class HeartConfig:
    sample_size: int = 20
    radii: Tuple[float, ...] = (1e-2,)
    trials: int = 100
    half_width: float = 1e-3
    theta_bound: float = 10.0

    def __post_init__(self) -> None:
        if self.sample_size < 1 or self.trials < 1:
            raise IllegalArgumentError("sample size and trials should be positive")
        if not self.radii or min(self.radii) <= 0:
            raise IllegalArgumentError("radii should be positive")
        if self.half_width <= 0 or self.theta_bound <= 0:
            raise IllegalArgumentError("half width and theta bound should be positive")


async def heart_experiment(
    data: HeartData,
    config: HeartConfig,
    seed: int,
    executor: Optional[Executor] = None,
) -> ExperimentResult:
    """Train on biased subsamples, evaluate on the whole file."""
    population = data.samples()
    moment_set = empirical_mean_box(population, config.half_width)
    loss = LogisticLoss(
        BoxSet.around(np.zeros(population.dim - 1), config.theta_bound)
    )
    features = IdentityFeatures(population.dim)

    def trial(index: int, trial_gen: np.random.Generator) -> List[Row]:
        train = biased_subsample(data, config.sample_size, trial_gen)
        empirical = empirical_from_samples(train.as_atoms())
        base = {"trial": index, "N": config.sample_size, "radius": math.nan}

        def erm() -> Row:
            fit = erm_train(loss, empirical)
            assert fit.theta is not None
            return {"oos_risk": _logistic_risk(loss, fit.theta, population)}

        rows = [_attempt({**base, "method": "erm"}, erm)]
        for radius in config.radii:

            def dro(radius: float = radius) -> Row:
                result = mdi_dro_pipeline(
                    empirical,
                    features,
                    moment_set,
                    loss,
                    DroConfig(radius=radius),
                    check_recession=False,
                )
                assert result.theta is not None
                oos = _logistic_risk(loss, result.theta, population)
                return {
                    "oos_risk": oos,
                    "bound": result.value,
                    "disappointed": int(oos > result.value),
                }

            rows.append(_attempt({**base, "method": "mdi-dro", "radius": radius}, dro))
        return rows

    tidy = pd.DataFrame(await run_trials(trial, config.trials, seed, executor))
    tidy = _ordered(
        tidy, ["trial", "N", "method", "radius", "oos_risk", "bound", "disappointed"]
    )
    labeled = tidy.assign(label=tidy.apply(_method_label, axis=1))
    summary = _summarize(
        labeled,
        ["N"],
        "label",
        {
            "mean_oos_risk": ("oos_risk", "mean"),
            "std_oos_risk": ("oos_risk", "std"),
            "q10_oos_risk": ("oos_risk", _quantile(0.1)),
            "q90_oos_risk": ("oos_risk", _quantile(0.9)),
        },
    )
    return ExperimentResult("heart", tidy, summary, _config_payload(config))


@dataclass(frozen=True)
class InventoryConfig:
    demand_rate: float = 0.2
    capacity: int = 5
    order_cost: float = 0.6
    holding_cost: float = 0.3
    price: float = 1.0
    n_states: int = 5
    n_actions: int = 4


@dataclass(frozen=True)
class OpeConfig:
    sample_size: int = 500
    radius: float = 0.1
    trials: int = 500
    estimators: Tuple[Tuple[str, float], ...] = (
        ("ips", math.inf),
        ("capped:4", 4.0),
        ("mdi", math.inf),
    )
    tolerance: Optional[float] = None
    inventory: InventoryConfig = InventoryConfig()

    def __post_init__(self) -> None:
        if self.sample_size < 1 or self.trials < 1:
            raise IllegalArgumentError("sample size and trials should be positive")
        if self.radius <= 0:
            raise IllegalArgumentError(f"radius should be positive, got {self.radius}")
        if not self.estimators:
            raise IllegalArgumentError("no estimators given")


def ope_trial(
    config: OpeConfig, index: int, rng: np.random.Generator
) -> List[Row]:
    """Draw a behavior and an evaluation policy, sample under the behavior
    policy and run every estimator on the same samples."""
    mdp = inventory_instance(**asdict(config.inventory))
    behavior_policy = random_policy(mdp.n_states, mdp.n_actions, rng)
    target_policy = random_policy(mdp.n_states, mdp.n_actions, rng)
    behavior = occupation_measure(mdp, behavior_policy)
    target = occupation_measure(mdp, target_policy)
    samples = sample_behavioral(mdp, behavior_policy, config.sample_size, rng)
    truth = target.mean_cost
    rows = []
    for name, cap in config.estimators:

        def estimate(name: str = name, cap: float = cap) -> Row:
            if name == "mdi":
                value = mdi_ope_estimate(
                    samples,
                    target.table,
                    behavior.table,
                    config.radius,
                    tolerance=config.tolerance,
                ).value
            elif name == "ips":
                value = ips_estimate(samples, target.table, behavior.table)
            else:
                value = capped_ips_estimate(samples, target.table, behavior.table, cap)
            return {"estimate": value, "disappointed": int(truth > value)}

        rows.append(
            _attempt(
                {"trial": index, "estimator": name, "true_value": truth}, estimate
            )
        )
    return rows


async def ope_experiment(
    config: OpeConfig, seed: int, executor: Optional[Executor] = None
) -> ExperimentResult:
    def trial(index: int, rng: np.random.Generator) -> List[Row]:
        return ope_trial(config, index, rng)

    tidy = pd.DataFrame(await run_trials(trial, config.trials, seed, executor))
    tidy = _ordered(
        tidy, ["trial", "estimator", "estimate", "true_value", "disappointed"]
    )
    tidy = tidy.assign(abs_error=(tidy["estimate"] - tidy["true_value"]).abs())
    summary = _summarize(
        tidy,
        [],
        "estimator",
        {
            "mean_estimate": ("estimate", "mean"),
            "q05_estimate": ("estimate", _quantile(0.05)),
            "q95_estimate": ("estimate", _quantile(0.95)),
            "mean_abs_error": ("abs_error", "mean"),
            "disappointment": ("disappointed", "mean"),
        },
    )
    if not summary.empty:
        bound = ope_bound(
            config.radius,
            config.sample_size,
            config.inventory.n_states,
            config.inventory.n_actions,
        )
        summary = pd.concat(
            [
                summary,
                pd.DataFrame(
                    [{"statistic": "ope_bound", "mdi": bound.probability_bound}]
                ),
            ],
            ignore_index=True,
        )
    payload = _config_payload(config)
    payload["estimators"] = [name for name, _ in config.estimators]
    return ExperimentResult("ope-inventory", tidy, summary, payload)


CONSISTENCY_ATOMS = ((0.0, 0.0), (0.2, 1.0), (0.4, 0.0), (0.6, 1.0))
CONSISTENCY_WEIGHTS = (0.4, 0.3, 0.2, 0.1)
CONSISTENCY_BOUNDS = (0.5, 0.6)


@dataclass(frozen=True)
class ConsistencyConfig:
    sample_sizes: Tuple[int, ...] = (50, 200, 800, 3200)
    trials: int = 20

    def __post_init__(self) -> None:
        if not self.sample_sizes or min(self.sample_sizes) < 1 or self.trials < 1:
            raise IllegalArgumentError("sample sizes and trials should be positive")


def consistency_truth() -> float:
    """Loss mean under the I-projection of the fixed four-atom instance."""
    base = DiscreteDistribution(CONSISTENCY_ATOMS, CONSISTENCY_WEIGHTS)
    projection = tilting_oracle(base, CoordinateFeatures([1]), CONSISTENCY_BOUNDS[0])
    return risk(None, projection, LinearLoss())


async def consistency_experiment(
    config: ConsistencyConfig, seed: int, executor: Optional[Executor] = None
) -> ExperimentResult:
    """Worst-case risk with radius 1/N against the projected risk."""
    atoms = np.array(CONSISTENCY_ATOMS)
    weights = np.array(CONSISTENCY_WEIGHTS)
    features = CoordinateFeatures([1])
    moment_set = BoxSet([CONSISTENCY_BOUNDS[0]], [CONSISTENCY_BOUNDS[1]])
    truth = consistency_truth()

    def trial(index: int, rng: np.random.Generator) -> List[Row]:
        rows = []
        for size in config.sample_sizes:
            radius = 1.0 / size

            def estimate(size: int = size, radius: float = radius) -> Row:
                picks = rng.choice(atoms.shape[0], size=size, p=weights)
                empirical = empirical_from_samples(atoms[picks])
                projection = solve(
                    IProjectionProblem(
                        empirical, features, moment_set, default_tolerance(radius)
                    )
                )
                value = worst_case_risk(
                    None,
                    projection.projection,
                    features,
                    moment_set,
                    ScenarioSet.from_distribution(empirical, features),
                    DroConfig(radius=radius),
                    LinearLoss(),
                ).value
                return {"estimate": value, "gap": abs(value - truth)}

            rows.append(
                _attempt(
                    {"trial": index, "N": size, "radius": radius, "truth": truth},
                    estimate,
                )
            )
        return rows

    tidy = pd.DataFrame(await run_trials(trial, config.trials, seed, executor))
    tidy = _ordered(tidy, ["trial", "N", "radius", "estimate", "truth", "gap"])
    tidy = tidy.assign(method="mdi-dro")
    summary = _summarize(
        tidy,
        ["N"],
        "method",
        {"mean_gap": ("gap", "mean"), "mean_estimate": ("estimate", "mean")},
    )
    return ExperimentResult("consistency", tidy, summary, _config_payload(config))


@dataclass(frozen=True)
class ConditionalLimitConfig:
    sample_size: int = 40
    trials: int = 200_000
    lower: float = 0.7
    upper: float = 0.8


async def conditional_limit_experiment(
    config: ConditionalLimitConfig, seed: int, executor: Optional[Executor] = None
) -> ExperimentResult:
    """Fair coin conditioned on a high empirical frequency of heads."""
    coin = DiscreteDistribution([[0.0], [1.0]], [0.5, 0.5])
    moment_set = BoxSet([config.lower], [config.upper])
    loop = asyncio.get_event_loop()
    report = await loop.run_in_executor(
        executor,
        lambda: conditional_limit_check(
            coin,
            IdentityFeatures(1),
            moment_set,
            [0.0, 1.0],
            config.sample_size,
            config.trials,
            seed,
        ),
    )
    row = {
        "sample_size": config.sample_size,
        "trials": report.trials,
        "accepted_trials": report.accepted_trials,
        "acceptance_rate": report.acceptance_rate,
        "conditional_mean": report.conditional_mean,
        "projection_mean": report.projection_mean,
        "gap": abs(report.conditional_mean - report.projection_mean),
    }
    tidy = pd.DataFrame([row])
    return ExperimentResult(
        "conditional-limit", tidy, tidy.copy(), _config_payload(config)
    )
