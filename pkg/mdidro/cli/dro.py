import logging
import sys
from typing import Any, Callable, Dict, Optional

import click
import numpy as np

from mdidro.api import (
    BoxSet,
    DiscreteDistribution,
    DroConfig,
    IllegalArgumentError,
    IProjectionProblem,
    LinearLoss,
    LogisticLoss,
    LossModel,
    MomentSet,
    NewsvendorLoss,
    ScenarioSet,
    check_recession_condition,
    load_distribution,
    mdi_dro_pipeline,
    solve,
    worst_case_risk,
)
from mdidro.api.dro import default_tolerance
from mdidro.api.parser import parse_features

from .click_types import MOMENT_SET, VECTOR
from .const import EX_SOLVER
from .formatters import JsonFormatter, write_output
from .root import Root
from .utils import command, features_option, input_option, option, out_option


log = logging.getLogger(__name__)

LOSSES = ("logistic", "linear", "newsvendor")
DEFAULT_THETA_BOUND = 10.0


def build_loss(
    name: str,
    base: DiscreteDistribution,
    theta_box: Optional[float],
    production_cost: float,
    shortage_cost: float,
) -> LossModel:
    if name == "linear":
        return LinearLoss()
    if name == "logistic":
        bound = DEFAULT_THETA_BOUND if theta_box is None else theta_box
        return LogisticLoss(BoxSet.around(np.zeros(base.dim - 1), bound))
    assert name == "newsvendor"
    # production beyond the largest observed demand never pays off
    upper = float(base.atoms[:, 0].max()) if theta_box is None else theta_box
    if upper <= 0:
        raise IllegalArgumentError(
            f"production quantity bound should be positive, got {upper}"
        )
    return NewsvendorLoss(production_cost, shortage_cost, BoxSet([0.0], [upper]))


def resolve_moment_set(
    moment_set: Optional[MomentSet],
    demand_decline: Optional[float],
    base: DiscreteDistribution,
) -> MomentSet:
    if demand_decline is None:
        if moment_set is None:
            raise click.UsageError("Missing option '--set' (or '--demand-decline')")
        return moment_set
    if moment_set is not None:
        raise click.UsageError("--set and --demand-decline are mutually exclusive")
    if not 0 < demand_decline < 1:
        raise IllegalArgumentError(
            f"demand decline should be in (0, 1), got {demand_decline}"
        )
    mean = float(base.mean()[0])
    return BoxSet([0.0], [(1.0 - demand_decline) * mean])


def dro_options(func: Callable[..., Any]) -> Callable[..., Any]:
    decorators = [
        input_option,
        features_option,
        option(
            "--set",
            "moment_set",
            type=MOMENT_SET,
            default=None,
            metavar="SPEC",
            help="Moment set: box:lo:hi, ball:c:rho or singleton:m.",
        ),
        option(
            "--demand-decline",
            type=float,
            default=None,
            metavar="SHARE",
            help="Use the moment set [0, (1 - SHARE) * mean demand].",
        ),
        option(
            "--loss",
            type=click.Choice(LOSSES),
            default="logistic",
            show_default=True,
            help="Loss function; logistic atoms carry the +-1 label last.",
        ),
        option(
            "-r",
            "--r",
            "--radius",
            "radius",
            type=float,
            required=True,
            help="Relative entropy radius around the projection.",
        ),
        option(
            "--theta-box",
            type=float,
            default=None,
            help="Bound on the decision: |theta_i| for logistic, the largest "
            "production quantity for newsvendor.",
        ),
        option(
            "--production-cost",
            type=float,
            default=1.0,
            show_default=True,
            help="Newsvendor unit production cost.",
        ),
        option(
            "--shortage-cost",
            type=float,
            default=2.0,
            show_default=True,
            help="Newsvendor unit shortage penalty.",
        ),
        option(
            "--eps",
            "--tolerance",
            "tolerance",
            type=float,
            default=None,
            help="Projection accuracy [default: min(1e-3, radius / 10)].",
        ),
        option(
            "--dro-tolerance",
            type=float,
            default=1e-6,
            show_default=True,
            help="First order residual at which the dual descent stops.",
        ),
        option(
            "--max-iterations",
            type=int,
            default=20_000,
            show_default=True,
            help="Iteration cap of the dual descent.",
        ),
        out_option,
    ]
    for decorator in reversed(decorators):
        func = decorator(func)
    return func


def _emit(root: Root, payload: Dict[str, Any], out: Optional[str]) -> None:
    fmt = JsonFormatter()
    write_output(fmt(payload, root.command_params), root.resolve_out(out))
    if not payload["converged"]:
        log.error(
            "Dual descent stopped at the iteration cap with residual %.6g",
            payload["first_order_residual"],
        )
        sys.exit(EX_SOLVER)


@command()
@dro_options
async def dro_train(
    root: Root,
    input_path: str,
    features: str,
    moment_set: Optional[MomentSet],
    demand_decline: Optional[float],
    loss: str,
    radius: float,
    theta_box: Optional[float],
    production_cost: float,
    shortage_cost: float,
    tolerance: Optional[float],
    dro_tolerance: float,
    max_iterations: int,
    out: Optional[str],
) -> None:
    """
    Train a decision against the worst case around the I-projection.

    Prints JSON with the decision theta, the certified risk bound J, the
    dual variables and the projection certificates. The exit code is 3 if
    the descent hit its iteration cap; the result is written anyway.

    Examples:

    # logistic regression on labeled samples with a known feature mean box
    mdi dro-train --input train.csv --set box:0,0,-1:0.2,0.2,1 --r 1e-3

    # production planning after a 20% demand decline
    mdi dro-train --input demand.csv --loss newsvendor --demand-decline 0.2 --r 0.1
    """
    base = load_distribution(input_path)
    result = mdi_dro_pipeline(
        base,
        parse_features(features, base.dim),
        resolve_moment_set(moment_set, demand_decline, base),
        build_loss(loss, base, theta_box, production_cost, shortage_cost),
        DroConfig(radius, tolerance=dro_tolerance, max_iterations=max_iterations),
        tolerance=tolerance,
    )
    _emit(root, result.to_payload(), out)


@command()
@dro_options
@option(
    "--theta",
    type=VECTOR,
    default=None,
    metavar="VECTOR",
    help="Decision to evaluate, comma separated (not used by the linear loss).",
)
async def dro_eval(
    root: Root,
    input_path: str,
    features: str,
    moment_set: Optional[MomentSet],
    demand_decline: Optional[float],
    loss: str,
    radius: float,
    theta_box: Optional[float],
    production_cost: float,
    shortage_cost: float,
    tolerance: Optional[float],
    dro_tolerance: float,
    max_iterations: int,
    out: Optional[str],
    theta: Optional[np.ndarray],
) -> None:
    """
    Evaluate the worst-case risk of a fixed decision.

    Examples:

    mdi dro-eval --input demand.csv --loss newsvendor --set box:0:7.2 --r 0.1 --theta 8
    """
    base = load_distribution(input_path)
    feature_map = parse_features(features, base.dim)
    constraints = resolve_moment_set(moment_set, demand_decline, base)
    model = build_loss(loss, base, theta_box, production_cost, shortage_cost)
    if theta is None and model.theta_dim:
        raise click.UsageError(f"Missing option '--theta' for the {loss} loss")
    if tolerance is None:
        tolerance = default_tolerance(radius)
    projection = solve(IProjectionProblem(base, feature_map, constraints, tolerance))
    scenarios = ScenarioSet.from_distribution(base, feature_map)
    check_recession_condition(scenarios)
    result = worst_case_risk(
        theta,
        projection.projection,
        feature_map,
        constraints,
        scenarios,
        DroConfig(radius, tolerance=dro_tolerance, max_iterations=max_iterations),
        model,
    )
    _emit(root, result.to_payload(), out)
