import json
import numbers
import os
from pathlib import Path
from typing import Any, Dict, Mapping, Union

import toml

from .core import MdiError


class ConfigError(MdiError, RuntimeError):
    pass


_PathLike = Union[str, "os.PathLike[str]"]

_REAL = numbers.Real
_INT = numbers.Integral

_SAMPLE_PARAMS: Dict[str, Any] = {
    "input": str,
    "features": str,
    "set": str,
    "tolerance": _REAL,
}
_DRO_PARAMS: Dict[str, Any] = {
    **_SAMPLE_PARAMS,
    "loss": str,
    "demand-decline": _REAL,
    "radius": _REAL,
    "theta-box": _REAL,
    "production-cost": _REAL,
    "shortage-cost": _REAL,
    "dro-tolerance": _REAL,
    "max-iterations": _INT,
}
_INVENTORY_PARAMS: Dict[str, Any] = {
    "demand-rate": _REAL,
    "capacity": _INT,
    "order-cost": _REAL,
    "holding-cost": _REAL,
    "price": _REAL,
    "n-states": _INT,
    "n-actions": _INT,
}

SCHEMA: Dict[str, Dict[str, Any]] = {
    "iproject": {
        **_SAMPLE_PARAMS,
        "max-iterations": _INT,
        "check-every": _INT,
        "restart": bool,
        "early-exit": bool,
        "inflation": _REAL,
    },
    "dro-train": _DRO_PARAMS,
    "dro-eval": {**_DRO_PARAMS, "theta": str},
    "ope": {
        "mdp": str,
        "seed": _INT,
        "sample-size": _INT,
        "radius": _REAL,
        "trials": _INT,
        "estimators": str,
        "tolerance": _REAL,
        **_INVENTORY_PARAMS,
    },
    "bound": {
        "kind": str,
        "radius": _REAL,
        "sample-size": _INT,
        "cardinality": _INT,
        "n-states": _INT,
        "n-actions": _INT,
        "epsilon": _REAL,
        "weight-bound": _REAL,
        "target": _REAL,
    },
    "gen-data": {
        "kind": str,
        "seed": _INT,
        "m": _INT,
        "sample-size": _INT,
        "heart": str,
    },
}

EXPERIMENT_SCHEMA: Dict[str, Dict[str, Any]] = {
    "covshift": {
        "m": _INT,
        "sample-sizes": (list, _INT),
        "radii": (list, _REAL),
        "trials": _INT,
        "test-size": _INT,
        "slack": _REAL,
        "label-budget": _INT,
        "theta-bound": _REAL,
    },
    "heart": {
        "data": str,
        "sample-size": _INT,
        "radii": (list, _REAL),
        "trials": _INT,
        "half-width": _REAL,
        "theta-bound": _REAL,
    },
    "ope-inventory": {
        "sample-size": _INT,
        "radius": _REAL,
        "trials": _INT,
        "cap": _REAL,
        **_INVENTORY_PARAMS,
    },
    "consistency": {"sample-sizes": (list, _INT), "trials": _INT},
    "conditional-limit": {
        "sample-size": _INT,
        "trials": _INT,
        "lower": _REAL,
        "upper": _REAL,
    },
}

GLOBAL_PARAMS: Dict[str, Any] = {"seed": _INT, "threads": _INT, "out": str}


def _check_item(val: Any, validator: Any, full_name: str, filename: _PathLike) -> None:
    if isinstance(validator, tuple):
        container_type, item_type = validator
        if not isinstance(val, container_type):
            raise ConfigError(
                f"{filename}: invalid type for {full_name}, "
                f"{container_type.__name__} is expected"
            )
        for num, i in enumerate(val):
            _check_item(i, item_type, f"{full_name}[{num}]", filename)
    else:
        # bool is an Integral; it is accepted only where bool is expected
        if not isinstance(val, validator) or (
            isinstance(val, bool) and validator is not bool
        ):
            raise ConfigError(
                f"{filename}: invalid type for {full_name}, "
                f"{validator.__name__} is expected"
            )


def _check_section(
    section: Mapping[str, Any],
    prefix: str,
    params: Mapping[str, Any],
    filename: _PathLike,
) -> None:
    if not isinstance(section, dict):
        raise ConfigError(f"{filename}: {prefix!r} should be a section")
    diff = section.keys() - params.keys()
    if diff:
        diff_str = ", ".join(f"{prefix}.{name}" for name in sorted(diff))
        raise ConfigError(f"{filename}: unknown parameters {diff_str}")
    for name, validator in params.items():
        val = section.get(name)
        if val is None:
            continue
        _check_item(val, validator, f"{prefix}.{name}", filename)


def validate_run_config(config: Mapping[str, Any], filename: _PathLike) -> None:
    sections = {*SCHEMA, "experiment"}
    for key, val in config.items():
        if key in GLOBAL_PARAMS:
            _check_item(val, GLOBAL_PARAMS[key], key, filename)
        elif key in SCHEMA:
            _check_section(val, key, SCHEMA[key], filename)
        elif key == "experiment":
            if not isinstance(val, dict):
                raise ConfigError(f"{filename}: 'experiment' should be a section")
            unknown = val.keys() - EXPERIMENT_SCHEMA.keys()
            if unknown:
                diff_str = ", ".join(f"experiment.{name}" for name in sorted(unknown))
                raise ConfigError(f"{filename}: unsupported config sections {diff_str}")
            for name, section in val.items():
                params = {**EXPERIMENT_SCHEMA[name], "seed": _INT}
                _check_section(section, f"experiment.{name}", params, filename)
        else:
            expected = ", ".join(sorted({*sections, *GLOBAL_PARAMS}))
            raise ConfigError(
                f"{filename}: unknown parameters {key} (expected one of {expected})"
            )


# file keys whose command line parameter is stored under another name
_PARAM_NAMES = {"input": "input_path", "set": "moment_set"}


def _identifiers(config: Mapping[str, Any], depth: int) -> Dict[str, Any]:
    # sections keep their command names, parameters become python names
    ret: Dict[str, Any] = {}
    for key, val in config.items():
        if isinstance(val, dict) and depth < 2:
            ret[key] = _identifiers(val, depth + 1)
        else:
            ret[_PARAM_NAMES.get(key, key.replace("-", "_"))] = val
    return ret


def load_run_config(filename: _PathLike) -> Dict[str, Any]:
    """Read a JSON or TOML run configuration.

    The result is shaped like click's ``default_map``: global parameters
    at the top level and one nested mapping per command.
    """
    path = Path(filename)
    try:
        if path.suffix == ".toml":
            config = toml.load(path)
        else:
            with path.open(encoding="utf-8") as f:
                config = json.load(f)
    except ValueError as exc:
        raise ConfigError(f"{filename}: {exc}")
    if not isinstance(config, dict):
        raise ConfigError(f"{filename}: top level should be a mapping")
    validate_run_config(config, filename)
    return _identifiers(config, 0)
