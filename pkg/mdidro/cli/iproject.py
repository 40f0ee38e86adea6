import logging
import sys
from typing import Optional

from mdidro.api import (
    CertificateError,
    IProjectionConfig,
    IProjectionProblem,
    IProjectionSolution,
    MomentSet,
    load_distribution,
    solve,
)
from mdidro.api.parser import parse_features

from .const import EX_SOLVER
from .formatters import JsonFormatter, write_output
from .root import Root
from .utils import (
    command,
    features_option,
    input_option,
    option,
    out_option,
    set_option,
)


log = logging.getLogger(__name__)


@command()
@input_option
@features_option
@set_option
@option(
    "--eps",
    "--tolerance",
    "tolerance",
    type=float,
    default=1e-3,
    show_default=True,
    help="Target accuracy of the projection.",
)
@option(
    "--max-iterations",
    type=int,
    default=1_000_000,
    show_default=True,
    help="Hard cap on the certified iteration count.",
)
@option(
    "--check-every",
    type=int,
    default=10,
    show_default=True,
    help="Iterations between early exit checks.",
)
@option(
    "--restart/--no-restart",
    default=False,
    show_default=True,
    help="Restart momentum when the gradient turns against it.",
)
@option(
    "--early-exit/--no-early-exit",
    default=True,
    show_default=True,
    help="Stop once feasibility and duality gap are ten times below target.",
)
@option(
    "--inflation",
    type=float,
    default=None,
    help="Half width of the box replacing a singleton moment set.",
)
@out_option
async def iproject(
    root: Root,
    input_path: str,
    features: str,
    moment_set: MomentSet,
    tolerance: float,
    max_iterations: int,
    check_every: int,
    restart: bool,
    early_exit: bool,
    inflation: Optional[float],
    out: Optional[str],
) -> None:
    """
    Project a distribution onto a moment constrained family.

    Prints the I-projection with its dual vector and certificates as JSON.
    The exit code is 3 if the feasibility certificate is not met; the
    partial solution is written anyway.

    Examples:

    mdi iproject --input dist.json --set box:0.5:0.6 --eps 1e-3 --out sol.json
    mdi iproject --input samples.csv --features coords:2 --set singleton:0.3
    """
    base = load_distribution(input_path)
    problem = IProjectionProblem(
        base, parse_features(features, base.dim), moment_set, tolerance
    )
    config = IProjectionConfig(
        max_iterations=max_iterations,
        early_exit=early_exit,
        check_every=check_every,
        restart=restart,
        inflation=inflation,
    )
    failed = False
    try:
        solution = solve(problem, config)
    except CertificateError as exc:
        log.error("%s", exc)
        solution = exc.partial
        failed = True
    assert isinstance(solution, IProjectionSolution)
    fmt = JsonFormatter()
    write_output(fmt(solution.to_payload(), root.command_params), root.resolve_out(out))
    if failed:
        sys.exit(EX_SOLVER)
