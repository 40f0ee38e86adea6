from typing import Any, Callable, Dict, Optional

import click

from mdidro.api import (
    BoundReport,
    finite_sample_bound,
    hoeffding_ips_bound,
    ope_bound,
    radius_for_confidence,
)

from .formatters import JsonFormatter, write_output
from .root import Root
from .utils import command, option, out_option


KINDS = ("finite", "ope", "hoeffding", "radius")

# parameters each kind needs, by option name
REQUIRED = {
    "finite": ("radius", "sample_size", "cardinality"),
    "ope": ("radius", "sample_size", "n_states", "n_actions"),
    "hoeffding": ("epsilon", "sample_size", "weight_bound"),
    "radius": ("sample_size", "cardinality", "target"),
}

BOUNDS: Dict[str, Callable[..., BoundReport]] = {
    "finite": finite_sample_bound,
    "ope": ope_bound,
    "hoeffding": hoeffding_ips_bound,
}


def _check_required(kind: str, values: Dict[str, Any]) -> None:
    missing = [name for name in REQUIRED[kind] if values[name] is None]
    if missing:
        flags = ", ".join("--" + name.replace("_", "-") for name in missing)
        raise click.UsageError(f"--kind {kind} needs {flags}")


@command()
@option(
    "--kind",
    type=click.Choice(KINDS),
    required=True,
    help="finite: disappointment of a KL-ball predictor; ope: of the "
    "off-policy estimate; hoeffding: deviation of capped IPS; radius: "
    "smallest radius reaching --target.",
)
@option("-r", "--r", "--radius", "radius", type=float, help="Radius r.")
@option("-N", "--N", "--sample-size", "sample_size", type=int, help="Sample size N.")
@option("--cardinality", type=int, help="Support size of the feature values.")
@option("--n-states", "--nS", "n_states", type=int, help="Number of states.")
@option("--n-actions", "--nA", "n_actions", type=int, help="Number of actions.")
@option("--epsilon", type=float, help="Deviation of the IPS estimate.")
@option(
    "--weight-bound",
    "--b",
    "weight_bound",
    type=float,
    help="Upper bound on the capped importance weights.",
)
@option("--target", type=float, help="Acceptable disappointment probability.")
@out_option
async def bound(
    root: Root,
    kind: str,
    radius: Optional[float],
    sample_size: Optional[int],
    cardinality: Optional[int],
    n_states: Optional[int],
    n_actions: Optional[int],
    epsilon: Optional[float],
    weight_bound: Optional[float],
    target: Optional[float],
    out: Optional[str],
) -> None:
    """
    Evaluate a finite-sample guarantee.

    Prints the natural log of the probability bound and the bound clipped
    to [0, 1] as JSON; a nonnegative log bound is vacuous.

    Examples:

    mdi bound --kind ope --r 0.2 --N 500 --nS 5 --nA 4
    mdi bound --kind finite --r 0.05 --N 1000 --cardinality 3
    mdi bound --kind radius --N 1000 --cardinality 3 --target 0.05
    """
    values = {
        "radius": radius,
        "sample_size": sample_size,
        "cardinality": cardinality,
        "n_states": n_states,
        "n_actions": n_actions,
        "epsilon": epsilon,
        "weight_bound": weight_bound,
        "target": target,
    }
    _check_required(kind, values)
    args = {name: values[name] for name in REQUIRED[kind]}
    payload: Dict[str, Any]
    if kind == "radius":
        payload = {
            "kind": "radius",
            "radius": radius_for_confidence(**args),
            "inputs": args,
        }
    else:
        payload = BOUNDS[kind](**args).to_payload()
    fmt = JsonFormatter()
    write_output(fmt(payload, root.command_params), root.resolve_out(out))
