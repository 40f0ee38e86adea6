import asyncio
import math
from pathlib import Path
from typing import List

import numpy as np
import pandas as pd
import pytest

from mdidro.api import IllegalArgumentError, load_heart_csv
from mdidro.api.experiments import (
    ConditionalLimitConfig,
    ConsistencyConfig,
    CovshiftConfig,
    HeartConfig,
    OpeConfig,
    Row,
    conditional_limit_experiment,
    consistency_experiment,
    consistency_truth,
    covshift_experiment,
    heart_experiment,
    ope_experiment,
    run_trials,
    setup_rng,
    trial_rng,
)


IPS_ONLY = (("ips", math.inf), ("capped:2", 2.0))


class TestGenerators:
    def test_trial_rng_is_reproducible(self) -> None:
        assert trial_rng(7, 3).random() == trial_rng(7, 3).random()

    def test_streams_differ(self) -> None:
        draws = {trial_rng(7, 0).random(), trial_rng(7, 1).random()}
        draws.add(setup_rng(7).random())
        assert len(draws) == 3


class TestRunTrials:
    def test_rows_keep_trial_order(self) -> None:
        def trial(index: int, rng: np.random.Generator) -> List[Row]:
            return [{"trial": index, "part": part} for part in range(2)]

        rows = asyncio.run(run_trials(trial, 4, seed=1))
        assert [(row["trial"], row["part"]) for row in rows] == [
            (index, part) for index in range(4) for part in range(2)
        ]

    def test_trials_positive(self) -> None:
        def trial(index: int, rng: np.random.Generator) -> List[Row]:
            return []

        with pytest.raises(IllegalArgumentError, match="trial count"):
            asyncio.run(run_trials(trial, 0, seed=1))


class TestConfigs:
    def test_covshift(self) -> None:
        with pytest.raises(IllegalArgumentError, match="radii"):
            CovshiftConfig(radii=(0.0,))

    def test_heart(self) -> None:
        with pytest.raises(IllegalArgumentError, match="half width"):
            HeartConfig(half_width=0.0)

    def test_ope(self) -> None:
        with pytest.raises(IllegalArgumentError, match="radius"):
            OpeConfig(radius=0.0)

    def test_consistency(self) -> None:
        with pytest.raises(IllegalArgumentError):
            ConsistencyConfig(sample_sizes=())


class TestOpeExperiment:
    config = OpeConfig(sample_size=100, trials=3, estimators=IPS_ONLY)

    def test_tidy(self) -> None:
        result = asyncio.run(ope_experiment(self.config, seed=5))
        assert result.name == "ope-inventory"
        tidy = result.tidy
        assert list(tidy.columns[:5]) == [
            "trial",
            "estimator",
            "estimate",
            "true_value",
            "disappointed",
        ]
        assert len(tidy) == 6
        assert tidy["estimator"].tolist() == ["ips", "capped:2"] * 3
        assert set(tidy["error"]) == {""}
        assert result.config["estimators"] == ["ips", "capped:2"]

    def test_summary(self) -> None:
        summary = asyncio.run(ope_experiment(self.config, seed=5)).summary
        assert {"ips", "capped:2"} <= set(summary.columns)
        bound = summary[summary["statistic"] == "ope_bound"]["mdi"].tolist()
        assert bound == [1.0]
        assert "mean_abs_error" in set(summary["statistic"])

    def test_same_seed_same_table(self) -> None:
        first = asyncio.run(ope_experiment(self.config, seed=5))
        second = asyncio.run(ope_experiment(self.config, seed=5))
        pd.testing.assert_frame_equal(first.tidy, second.tidy)
        pd.testing.assert_frame_equal(first.summary, second.summary)

    def test_seed_matters(self) -> None:
        first = asyncio.run(ope_experiment(self.config, seed=5))
        second = asyncio.run(ope_experiment(self.config, seed=6))
        assert first.tidy["true_value"].tolist() != second.tidy["true_value"].tolist()

    @pytest.mark.slow
    def test_mdi_estimator(self) -> None:
        config = OpeConfig(sample_size=500, trials=2)
        tidy = asyncio.run(ope_experiment(config, seed=1)).tidy
        mdi = tidy[tidy["estimator"] == "mdi"]
        assert len(mdi) == 2
        assert set(mdi["error"]) == {""}


class TestConsistency:
    def test_truth(self) -> None:
        assert consistency_truth() == pytest.approx(0.26 / 1.2, abs=1e-6)

    def test_small_run(self) -> None:
        config = ConsistencyConfig(sample_sizes=(50,), trials=2)
        result = asyncio.run(consistency_experiment(config, seed=3))
        tidy = result.tidy
        assert len(tidy) == 2
        assert tidy["N"].tolist() == [50, 50]
        assert tidy["radius"].tolist() == [0.02, 0.02]
        assert tidy["truth"].tolist() == pytest.approx([0.26 / 1.2] * 2, abs=1e-6)


class TestConditionalLimit:
    def test_fair_coin(self) -> None:
        config = ConditionalLimitConfig(sample_size=10, trials=20_000)
        result = asyncio.run(conditional_limit_experiment(config, seed=0))
        (row,) = result.tidy.to_dict("records")
        assert row["trials"] == 20_000
        assert row["acceptance_rate"] == pytest.approx(165 / 1024, abs=0.02)
        assert row["conditional_mean"] == pytest.approx(1200 / 1650, abs=0.01)
        assert row["projection_mean"] == pytest.approx(0.7, abs=2e-3)
        assert result.summary.equals(result.tidy)


@pytest.mark.slow
def test_covshift_small_run() -> None:
    config = CovshiftConfig(
        m=3,
        sample_sizes=(20,),
        radii=(1e-3,),
        trials=2,
        test_size=500,
        label_budget=2000,
    )
    result = asyncio.run(covshift_experiment(config, seed=2))
    tidy = result.tidy
    assert tidy["method"].tolist() == ["erm", "iwerm", "mdi-dro"] * 2
    assert "erm" in result.summary.columns
    assert result.config["radii"] == [1e-3]


def test_heart_small_run(heart_csv: Path) -> None:
    data = load_heart_csv(heart_csv)
    config = HeartConfig(sample_size=4, trials=2)
    result = asyncio.run(heart_experiment(data, config, seed=2))
    tidy = result.tidy
    assert tidy["method"].tolist() == ["erm", "mdi-dro"] * 2
    erm = tidy[tidy["method"] == "erm"]
    assert set(erm["error"]) == {""}
    assert (erm["oos_risk"] > 0).all()
