import logging
from typing import Any, Callable, List, Optional, Tuple

import click

from mdidro.api.experiments import InventoryConfig, OpeConfig, ope_experiment

from .click_types import ESTIMATORS
from .formatters import CsvFormatter, write_output
from .root import Root
from .utils import command, option, out_option, seed_option


log = logging.getLogger(__name__)

OPE_COLUMNS = ["trial", "estimator", "estimate", "true_value", "disappointed", "error"]


def inventory_options(func: Callable[..., Any]) -> Callable[..., Any]:
    defaults = InventoryConfig()
    decorators = [
        option(
            "--demand-rate",
            type=float,
            default=defaults.demand_rate,
            show_default=True,
            help="Probability that a unit of demand arrives in a period.",
        ),
        option(
            "--capacity",
            type=int,
            default=defaults.capacity,
            show_default=True,
            help="Storage capacity.",
        ),
        option(
            "--order-cost",
            type=float,
            default=defaults.order_cost,
            show_default=True,
            help="Cost of ordering one unit.",
        ),
        option(
            "--holding-cost",
            type=float,
            default=defaults.holding_cost,
            show_default=True,
            help="Cost of storing one unit for a period.",
        ),
        option(
            "--price",
            type=float,
            default=defaults.price,
            show_default=True,
            help="Sales price of one unit.",
        ),
        option(
            "--n-states",
            "--nS",
            "n_states",
            type=int,
            default=defaults.n_states,
            show_default=True,
            help="Number of inventory levels.",
        ),
        option(
            "--n-actions",
            "--nA",
            "n_actions",
            type=int,
            default=defaults.n_actions,
            show_default=True,
            help="Number of order quantities.",
        ),
    ]
    for decorator in reversed(decorators):
        func = decorator(func)
    return func


@command()
@option(
    "--mdp",
    type=click.Choice(["inventory"]),
    default="inventory",
    show_default=True,
    help="Markov decision process instance.",
)
@option(
    "-N",
    "--N",
    "--sample-size",
    "sample_size",
    type=int,
    default=500,
    show_default=True,
    help="Number of behavioral state-action-cost samples per trial.",
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
@option("--trials", type=int, default=500, show_default=True, help="Trial count.")
@option(
    "--estimators",
    type=ESTIMATORS,
    default="ips,capped:4,mdi",
    show_default=True,
    help="Comma separated estimators: ips, capped:<cap>, mdi.",
)
@option(
    "--eps",
    "--tolerance",
    "tolerance",
    type=float,
    default=None,
    help="Projection accuracy [default: min(1e-3, radius / 10)].",
)
@inventory_options
@seed_option
@out_option
async def ope(
    root: Root,
    mdp: str,
    sample_size: int,
    radius: float,
    trials: int,
    estimators: List[Tuple[str, float]],
    tolerance: Optional[float],
    demand_rate: float,
    capacity: int,
    order_cost: float,
    holding_cost: float,
    price: float,
    n_states: int,
    n_actions: int,
    seed: Optional[int],
    out: Optional[str],
) -> None:
    """
    Off-policy evaluation on random policy pairs.

    Each trial draws a behavioral and an evaluation policy, samples the
    behavioral chain and runs every estimator on the same samples. Prints
    one CSV row per trial and estimator; a failed estimate keeps its row
    with the error message.

    Examples:

    mdi ope --mdp inventory --N 500 --radius 0.1 --trials 1000 --seed 7 --out res.csv
    mdi ope --estimators ips,capped:10,mdi --N 200 --trials 50
    """
    config = OpeConfig(
        sample_size=sample_size,
        radius=radius,
        trials=trials,
        estimators=tuple(estimators),
        tolerance=tolerance,
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
    root.command_params["estimators"] = [name for name, _ in estimators]
    result = await ope_experiment(config, root.resolve_seed(seed), root.executor)
    for estimator, frame in result.tidy.groupby("estimator", sort=False):
        log.info(
            "%s: disappointment frequency %.3g, mean absolute error %.3g",
            estimator,
            frame["disappointed"].mean(),
            frame["abs_error"].mean(),
        )
    fmt = CsvFormatter()
    write_output(
        fmt(result.tidy[OPE_COLUMNS], root.command_params), root.resolve_out(out)
    )
