import io
import json
from pathlib import Path
from typing import Any, Mapping, Optional

import click
import numpy as np
import pandas as pd
from atomicwrites import atomic_write

import mdidro


NUMBER_FORMAT = "%.12g"


def _jsonable(value: Any) -> Any:
    if hasattr(value, "to_payload"):
        return value.to_payload()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f"{type(value).__name__} is not JSON serializable")


def _config_line(config: Mapping[str, Any]) -> str:
    return json.dumps(config, sort_keys=True, default=_jsonable, allow_nan=True)


class JsonFormatter:
    """Sorted two-space JSON with the version and the resolved config."""

    def __call__(self, payload: Mapping[str, Any], config: Mapping[str, Any]) -> str:
        document = {
            **payload,
            "version": mdidro.__version__,
            "config": json.loads(_config_line(config)),
        }
        return json.dumps(document, sort_keys=True, indent=2, default=_jsonable) + "\n"


class CsvFormatter:
    """Tidy CSV preceded by ``#`` lines naming the version and the config."""

    def __call__(self, frame: pd.DataFrame, config: Mapping[str, Any]) -> str:
        buf = io.StringIO()
        buf.write(f"# mdidro {mdidro.__version__}\n")
        buf.write(f"# config: {_config_line(config)}\n")
        frame.to_csv(buf, index=False, float_format=NUMBER_FORMAT)
        return buf.getvalue()


def summary_path(out: Path) -> Path:
    return out.with_name(out.stem + ".summary.csv")


def write_output(text: str, out: Optional[Path]) -> None:
    if out is None:
        click.echo(text, nl=False)
        return
    with atomic_write(str(out), overwrite=True, encoding="utf-8") as f:
        f.write(text)
