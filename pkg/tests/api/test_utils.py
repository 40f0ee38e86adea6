import json
from pathlib import Path

import pytest

from mdidro.api import IllegalArgumentError, load_distribution


def test_json(tmp_path: Path) -> None:
    path = tmp_path / "dist.json"
    path.write_text(json.dumps({"atoms": [[1.0], [0.0]], "weights": [0.25, 0.75]}))
    dist = load_distribution(path)
    assert dist.atoms.tolist() == [[0.0], [1.0]]
    assert dist.weights.tolist() == [0.75, 0.25]


def test_csv_samples(tmp_path: Path) -> None:
    path = tmp_path / "demand.csv"
    path.write_text("# weekly demand\nd\n1\n2\n2\n3\n")
    dist = load_distribution(path)
    assert dist.atoms.tolist() == [[1.0], [2.0], [3.0]]
    assert dist.weights.tolist() == [0.25, 0.5, 0.25]
    assert dist.sample_count == 4


def test_json_not_an_object(tmp_path: Path) -> None:
    path = tmp_path / "dist.json"
    path.write_text("[0.5, 0.5]")
    with pytest.raises(IllegalArgumentError, match="a JSON object is expected"):
        load_distribution(path)


def test_malformed_json(tmp_path: Path) -> None:
    path = tmp_path / "dist.json"
    path.write_text("{")
    with pytest.raises(IllegalArgumentError, match="dist.json"):
        load_distribution(path)


def test_non_numeric_csv(tmp_path: Path) -> None:
    path = tmp_path / "samples.csv"
    path.write_text("x\n1\nlots\n")
    with pytest.raises(IllegalArgumentError, match="numeric"):
        load_distribution(path)


def test_missing_file(tmp_path: Path) -> None:
    with pytest.raises(FileNotFoundError):
        load_distribution(tmp_path / "absent.csv")
