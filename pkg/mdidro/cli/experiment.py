import logging
import math
from pathlib import Path
from typing import Any, Callable, Optional, Tuple

import click

from mdidro.api import load_heart_csv
from mdidro.api.experiments import (
    ConditionalLimitConfig,
    ConsistencyConfig,
    CovshiftConfig,
    ExperimentResult,
    HeartConfig,
    InventoryConfig,
    OpeConfig,
    conditional_limit_experiment,
    consistency_experiment,
    covshift_experiment,
    heart_experiment,
    ope_experiment,
)

from .click_types import FLOAT_GRID, INT_GRID
from .formatters import CsvFormatter, summary_path, write_output
from .ope import inventory_options
from .root import Root
from .utils import group, option, out_option, seed_option


log = logging.getLogger(__name__)


@group()
def experiment() -> None:
    """
    Reproducible experiment sweeps.

    Every sweep writes a tidy CSV with one row per trial, method and grid
    point, and a summary CSV with one method per column. A failed trial
    keeps its row with the error message.
    """


def summary_option(func: Callable[..., Any]) -> Callable[..., Any]:
    return option(
        "--summary",
        type=click.Path(dir_okay=False, writable=True),
        default=None,
        echo=False,
        metavar="PATH",
        help="Summary CSV [default: OUT with a .summary.csv suffix].",
    )(func)


def trials_option(default: int) -> Callable[..., Any]:
    return option(
        "--trials",
        type=int,
        default=default,
        show_default=True,
        help="Number of independent trials.",
    )


def _write_result(
    root: Root, result: ExperimentResult, out: Optional[str], summary: Optional[str]
) -> None:
    destination = root.resolve_out(out)
    fmt = CsvFormatter()
    write_output(fmt(result.tidy, root.command_params), destination)
    summary_destination: Optional[Path] = None
    if summary is not None:
        summary_destination = Path(summary)
    elif destination is not None:
        summary_destination = summary_path(destination)
    if summary_destination is None:
        log.info("No --out or --summary given, the summary is not written")
        return
    write_output(fmt(result.summary, root.command_params), summary_destination)
    log.info("Summary written to %s", summary_destination)


@experiment.command()
@option("--m", type=int, default=6, show_default=True, help="Dimension of (x, y).")
@option(
    "--sample-sizes",
    type=INT_GRID,
    default="30,100,300",
    show_default=True,
    help="Grid of training sample sizes.",
)
@option(
    "--radii",
    type=FLOAT_GRID,
    default="1e-4",
    show_default=True,
    help="Grid of relative entropy radii.",
)
@trials_option(100)
@option(
    "--test-size",
    type=int,
    default=20_000,
    show_default=True,
    help="Held-out samples from the shifted distribution.",
)
@option(
    "--slack",
    type=float,
    default=0.01,
    show_default=True,
    help="Half width of the box around the shifted feature mean.",
)
@option(
    "--label-budget",
    type=int,
    default=1_000_000,
    show_default=True,
    help="Monte Carlo samples estimating the shifted label mean.",
)
@option(
    "--theta-bound",
    type=float,
    default=10.0,
    show_default=True,
    help="Bound on every logistic regression coefficient.",
)
@seed_option
@out_option
@summary_option
async def covshift(
    root: Root,
    m: int,
    sample_sizes: Tuple[int, ...],
    radii: Tuple[float, ...],
    trials: int,
    test_size: int,
    slack: float,
    label_budget: int,
    theta_bound: float,
    seed: Optional[int],
    out: Optional[str],
    summary: Optional[str],
) -> None:
    """
    Covariate shift classification on synthetic data.

    Compares MDI-DRO with ERM and importance weighted ERM by out-of-sample
    logistic risk on held-out shifted samples; MDI-DRO rows also carry the
    risk bound and whether it was exceeded.

    Examples:

    mdi experiment covshift --trials 100 --sample-sizes 30,100,300 --out cs.csv
    """
    config = CovshiftConfig(
        m=m,
        sample_sizes=sample_sizes,
        radii=radii,
        trials=trials,
        test_size=test_size,
        slack=slack,
        label_budget=label_budget,
        theta_bound=theta_bound,
    )
    result = await covshift_experiment(config, root.resolve_seed(seed), root.executor)
    _write_result(root, result, out, summary)


@experiment.command()
@option(
    "--data",
    type=click.Path(exists=True, dir_okay=False),
    required=True,
    metavar="PATH",
    help="Heart disease CSV with age, sex and target columns.",
)
@option(
    "-N",
    "--N",
    "--sample-size",
    "sample_size",
    type=int,
    default=20,
    show_default=True,
    help="Training patients drawn per trial.",
)
@option(
    "--radii",
    type=FLOAT_GRID,
    default="1e-2",
    show_default=True,
    help="Grid of relative entropy radii.",
)
@trials_option(100)
@option(
    "--half-width",
    type=float,
    default=1e-3,
    show_default=True,
    help="Half width of the box around the population mean.",
)
@option(
    "--theta-bound",
    type=float,
    default=10.0,
    show_default=True,
    help="Bound on every logistic regression coefficient.",
)
@seed_option
@out_option
@summary_option
async def heart(
    root: Root,
    data: str,
    sample_size: int,
    radii: Tuple[float, ...],
    trials: int,
    half_width: float,
    theta_bound: float,
    seed: Optional[int],
    out: Optional[str],
    summary: Optional[str],
) -> None:
    """
    Heart disease classification from the oldest male patients.

    Training samples come from the eldest fifth of the male patients while
    the population feature means are known; risks are measured on the
    whole file.

    Examples:

    mdi experiment heart --data heart.csv --N 20 --radii 1e-3,1e-2 --out heart.csv
    """
    config = HeartConfig(
        sample_size=sample_size,
        radii=radii,
        trials=trials,
        half_width=half_width,
        theta_bound=theta_bound,
    )
    result = await heart_experiment(
        load_heart_csv(data), config, root.resolve_seed(seed), root.executor
    )
    _write_result(root, result, out, summary)


@experiment.command(name="ope-inventory")
@option(
    "-N",
    "--N",
    "--sample-size",
    "sample_size",
    type=int,
    default=500,
    show_default=True,
    help="Behavioral samples per trial.",
)
@option(
    "-r",
    "--r",
    "--radius",
    "radius",
    type=float,
    default=0.1,
    show_default=True,
    help="Relative entropy radius of the MDI estimator.",
)
@trials_option(500)
@option(
    "--cap",
    type=float,
    default=4.0,
    show_default=True,
    help="Weight cap of the capped IPS estimator.",
)
@inventory_options
@seed_option
@out_option
@summary_option
async def ope_inventory(
    root: Root,
    sample_size: int,
    radius: float,
    trials: int,
    cap: float,
    demand_rate: float,
    capacity: int,
    order_cost: float,
    holding_cost: float,
    price: float,
    n_states: int,
    n_actions: int,
    seed: Optional[int],
    out: Optional[str],
    summary: Optional[str],
) -> None:
    """
    Off-policy evaluation on the inventory control problem.

    Runs IPS, capped IPS and the MDI estimator on the same samples; the
    summary adds the finite-sample bound on the disappointment frequency.

    Examples:

    mdi experiment ope-inventory --trials 500 --N 500 --r 0.1 --out ope.csv
    """
    config = OpeConfig(
        sample_size=sample_size,
        radius=radius,
        trials=trials,
        estimators=(("ips", math.inf), (f"capped:{cap:g}", cap), ("mdi", math.inf)),
        inventory=InventoryConfig(
            demand_rate=demand_rate,
            capacity=capacity,
            order_cost=order_cost,
            holding_cost=holding_cost,
            price=price,
            n_states=n_states,
            n_actions=n_actions,
        ),
    )
    result = await ope_experiment(config, root.resolve_seed(seed), root.executor)
    _write_result(root, result, out, summary)


@experiment.command()
@option(
    "--sample-sizes",
    type=INT_GRID,
    default="50,200,800,3200",
    show_default=True,
    help="Grid of sample sizes N; the radius is 1/N.",
)
@trials_option(20)
@seed_option
@out_option
@summary_option
async def consistency(
    root: Root,
    sample_sizes: Tuple[int, ...],
    trials: int,
    seed: Optional[int],
    out: Optional[str],
    summary: Optional[str],
) -> None:
    """
    Worst-case risk with a shrinking radius against the projected risk.

    Examples:

    mdi experiment consistency --sample-sizes 50,200,800,3200 --out cons.csv
    """
    config = ConsistencyConfig(sample_sizes=sample_sizes, trials=trials)
    result = await consistency_experiment(
        config, root.resolve_seed(seed), root.executor
    )
    _write_result(root, result, out, summary)


@experiment.command(name="conditional-limit")
@option(
    "-N",
    "--N",
    "--sample-size",
    "sample_size",
    type=int,
    default=40,
    show_default=True,
    help="Coin flips per trial.",
)
@trials_option(200_000)
@option(
    "--lower",
    type=float,
    default=0.7,
    show_default=True,
    help="Lower end of the accepted frequency of heads.",
)
@option(
    "--upper",
    type=float,
    default=0.8,
    show_default=True,
    help="Upper end of the accepted frequency of heads.",
)
@seed_option
@out_option
@summary_option
async def conditional_limit(
    root: Root,
    sample_size: int,
    trials: int,
    lower: float,
    upper: float,
    seed: Optional[int],
    out: Optional[str],
    summary: Optional[str],
) -> None:
    """
    Fair coin flips conditioned on a rare frequency of heads.

    Compares the mean of the accepted empirical distributions with the
    mean of the I-projection of the coin onto the accepted frequencies.

    Examples:

    mdi experiment conditional-limit --N 40 --trials 200000 --out coin.csv
    """
    config = ConditionalLimitConfig(
        sample_size=sample_size, trials=trials, lower=lower, upper=upper
    )
    result = await conditional_limit_experiment(
        config, root.resolve_seed(seed), root.executor
    )
    _write_result(root, result, out, summary)
