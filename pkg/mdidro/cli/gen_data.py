from typing import Optional

import click

from mdidro.api import biased_subsample, load_heart_csv, synth_test, synth_train
from mdidro.api.experiments import trial_rng

from .formatters import CsvFormatter, write_output
from .root import Root
from .utils import command, option, out_option, seed_option


KINDS = ("covshift-train", "covshift-test", "heart-biased")


@command()
@option("--kind", type=click.Choice(KINDS), required=True, help="Data set to draw.")
@option(
    "--m",
    type=int,
    default=6,
    show_default=True,
    help="Dimension of the synthetic samples (x, y).",
)
@option(
    "-N",
    "--N",
    "--sample-size",
    "sample_size",
    type=int,
    default=100,
    show_default=True,
    help="Number of samples.",
)
@option(
    "--heart",
    type=click.Path(exists=True, dir_okay=False),
    default=None,
    metavar="PATH",
    help="Heart disease CSV for heart-biased.",
)
@seed_option
@out_option
async def gen_data(
    root: Root,
    kind: str,
    m: int,
    sample_size: int,
    heart: Optional[str],
    seed: Optional[int],
    out: Optional[str],
) -> None:
    """
    Draw a labeled data set as CSV.

    Samples are drawn with the generator of trial 0 for the seed. Columns
    are x1, x2, ... and the +-1 label y.

    Examples:

    # training sample of the covariate shift experiment
    mdi gen-data --kind covshift-train --m 6 --N 300 --seed 1 --out train.csv

    # 20 of the oldest male patients
    mdi gen-data --kind heart-biased --heart heart.csv --N 20
    """
    rng = trial_rng(root.resolve_seed(seed), 0)
    if kind == "covshift-train":
        samples = synth_train(m, sample_size, rng)
    elif kind == "covshift-test":
        samples = synth_test(m, sample_size, rng)
    else:
        if heart is None:
            raise click.UsageError("Missing option '--heart' for heart-biased")
        samples = biased_subsample(load_heart_csv(heart), sample_size, rng)
    fmt = CsvFormatter()
    write_output(fmt(samples.to_frame(), root.command_params), root.resolve_out(out))
