import json
from pathlib import Path
from typing import Union

import pandas as pd

from .core import IllegalArgumentError
from .distributions import DiscreteDistribution, empirical_from_samples


def load_distribution(path: Union[str, Path]) -> DiscreteDistribution:
    """Read a distribution from a file.

    ``*.json`` holds ``{"atoms": [[...], ...], "weights": [...]}``; any
    other file is a CSV of samples, one row per sample, whose empirical
    distribution is returned. Lines starting with ``#`` are skipped.
    """
    path = Path(path)
    if path.suffix == ".json":
        with path.open(encoding="utf-8") as f:
            try:
                payload = json.load(f)
            except ValueError as exc:
                raise IllegalArgumentError(f"{path}: {exc}")
        if not isinstance(payload, dict):
            raise IllegalArgumentError(f"{path}: a JSON object is expected")
        return DiscreteDistribution.from_payload(payload)
    try:
        frame = pd.read_csv(path, comment="#")
    except ValueError as exc:
        raise IllegalArgumentError(f"{path}: {exc}")
    try:
        values = frame.to_numpy(dtype=float)
    except ValueError:
        raise IllegalArgumentError(f"{path}: samples should be numeric")
    return empirical_from_samples(values)
