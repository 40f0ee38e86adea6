import json
import math
from pathlib import Path
from typing import Callable, List

import pytest

from mdidro.cli.const import EX_CONFIG, EX_OK

from .conftest import SysCapWithCode


_RunCli = Callable[[List[str]], SysCapWithCode]

OPE_ARGS = [
    "bound",
    "--kind",
    "ope",
    "--r",
    "0.2",
    "--N",
    "500",
    "--nS",
    "5",
    "--nA",
    "4",
]


def test_ope(run_cli: _RunCli) -> None:
    capture = run_cli(OPE_ARGS)
    assert capture.code == EX_OK, capture.err
    payload = json.loads(capture.out)
    assert payload["kind"] == "ope"
    assert payload["log_probability_bound"] == pytest.approx(9 * math.log(501) - 100)
    assert payload["probability_bound"] > 0
    assert payload["config"]["kind"] == "ope"
    assert payload["config"]["radius"] == 0.2
    assert payload["config"]["seed"] == 0
    assert "version" in payload


def test_output_is_reproducible(run_cli: _RunCli) -> None:
    assert run_cli(OPE_ARGS).out == run_cli(OPE_ARGS).out


def test_finite_vacuous(run_cli: _RunCli) -> None:
    capture = run_cli(
        ["bound", "--kind", "finite", "--r", "0.01", "--N", "10", "--cardinality", "5"]
    )
    payload = json.loads(capture.out)
    assert payload["probability_bound"] == 1.0


def test_hoeffding(run_cli: _RunCli) -> None:
    capture = run_cli(
        ["bound", "--kind", "hoeffding", "--epsilon", "0.1", "--N", "200", "--b", "2"]
    )
    payload = json.loads(capture.out)
    assert payload["log_probability_bound"] == pytest.approx(-1.0)


def test_radius(run_cli: _RunCli) -> None:
    capture = run_cli(
        [
            "bound",
            "--kind",
            "radius",
            "--N",
            "1000",
            "--cardinality",
            "3",
            "--target",
            "0.05",
        ]
    )
    payload = json.loads(capture.out)
    expected = (3 * math.log(1001) - math.log(0.05)) / 1000
    assert payload["radius"] == pytest.approx(expected)
    assert payload["inputs"] == {"sample_size": 1000, "cardinality": 3, "target": 0.05}


def test_missing_parameters(run_cli: _RunCli) -> None:
    capture = run_cli(["bound", "--kind", "ope", "--r", "0.2"])
    assert capture.code == EX_CONFIG
    assert "--kind ope needs --sample-size, --n-states, --n-actions" in capture.err


def test_unknown_kind(run_cli: _RunCli) -> None:
    capture = run_cli(["bound", "--kind", "chernoff"])
    assert capture.code == EX_CONFIG
    assert "Invalid value for" in capture.err
    assert "chernoff" in capture.err


def test_out_file(run_cli: _RunCli, tmp_path: Path) -> None:
    out = tmp_path / "bound.json"
    capture = run_cli(["--out", str(out)] + OPE_ARGS)
    assert capture.code == EX_OK
    assert capture.out == ""
    assert json.loads(out.read_text())["kind"] == "ope"
    # output paths are not part of the echoed configuration
    assert "out" not in json.loads(out.read_text())["config"]
