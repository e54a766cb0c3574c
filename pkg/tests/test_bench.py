import json

import numpy as np
import pytest

from combu.bench import (
    DatasetSpec,
    ExperimentConfig,
    load_dataset,
    run_experiment,
    summarize,
)
from combu.errors import ParameterError
from combu.training import TrainConfig


def tiny_config(**overrides) -> ExperimentConfig:
    """Small enough to train in about a second."""
    base = dict(
        dataset=DatasetSpec(generator="ar", n=160),
        schemes=["relu", "combu"],
        task="regression",
        model_size="small",
        train=TrainConfig(batch_size=32, epochs=3, dropout_rate=0.1, learning_rate=1e-3),
        repeats=2,
        base_seed=5,
    )
    base.update(overrides)
    return ExperimentConfig(**base)


def fake_config(schemes, task="regression") -> ExperimentConfig:
    return tiny_config(schemes=schemes, task=task)


class TestSummarize:
    def test_single_scheme_rank_is_one(self):
        cfg = fake_config(["relu"])
        per_repeat = [{"relu": {"mae": 0.5, "mse": 0.3}}, {"relu": {"mae": 0.6, "mse": 0.4}}]
        report = summarize(cfg, per_repeat)
        assert report.avg_ranks["relu"] == {"mae": 1.0, "mse": 1.0}

    def test_strictly_better_scheme_ranks_first_everywhere(self):
        cfg = fake_config(["relu", "combu"])
        per_repeat = [
            {"relu": {"mae": 0.5, "mse": 0.30}, "combu": {"mae": 0.4, "mse": 0.20}},
            {"relu": {"mae": 0.7, "mse": 0.50}, "combu": {"mae": 0.3, "mse": 0.15}},
        ]
        report = summarize(cfg, per_repeat)
        assert report.avg_ranks["combu"] == {"mae": 1.0, "mse": 1.0}
        assert report.avg_ranks["relu"] == {"mae": 2.0, "mse": 2.0}

    def test_score_metrics_rank_descending(self):
        cfg = fake_config(["relu", "combu"], task="classification")
        per_repeat = [
            {"relu": {"accuracy": 0.9, "f1": 0.9}, "combu": {"accuracy": 0.8, "f1": 0.8}},
        ]
        report = summarize(cfg, per_repeat)
        assert report.avg_ranks["relu"]["accuracy"] == 1.0
        assert report.avg_ranks["combu"]["accuracy"] == 2.0

    def test_aggregates_recompute_from_per_run_values(self):
        cfg = fake_config(["relu"])
        per_repeat = [{"relu": {"mae": 0.5, "mse": 0.3}}, {"relu": {"mae": 0.7, "mse": 0.5}}]
        report = summarize(cfg, per_repeat)
        values = report.values["relu"]["mae"]
        mean, std = report.aggregates["relu"]["mae"]
        assert mean == np.mean(values)
        assert std == np.std(values, ddof=1)

    def test_diverged_runs_excluded_and_reported(self):
        cfg = fake_config(["relu", "combu"])
        per_repeat = [
            {"relu": {"mae": 0.5, "mse": 0.3}, "combu": None},
            {"relu": {"mae": 0.7, "mse": 0.5}, "combu": {"mae": 0.1, "mse": 0.05}},
        ]
        report = summarize(cfg, per_repeat)
        assert report.diverged["combu"] == [0]
        assert report.aggregates["combu"]["mae"][0] == 0.1
        # repeat 0 ranks relu alone; repeat 1 ranks both
        assert report.avg_ranks["relu"]["mae"] == 1.5
        assert report.avg_ranks["combu"]["mae"] == 1.0


class TestRunExperiment:
    def test_regression_end_to_end(self):
        report = run_experiment(tiny_config())
        assert report.scheme_names == ["relu", "combu"]
        assert report.metric_names == ["mae", "mse"]
        for s in report.scheme_names:
            assert len(report.values[s]["mae"]) == 2
            assert all(v is not None for v in report.values[s]["mae"])
            assert report.aggregates[s]["mae"][1] >= 0.0

    def test_classification_end_to_end(self):
        report = run_experiment(tiny_config(task="classification", n_bins=3))
        assert report.metric_names == ["accuracy", "f1"]
        for s in report.scheme_names:
            for v in report.values[s]["accuracy"]:
                assert 0.0 <= v <= 1.0

    def test_repeats_are_reproducible(self):
        a = run_experiment(tiny_config())
        b = run_experiment(tiny_config())
        assert a.to_json() == b.to_json()

    def test_parallel_equals_serial(self):
        a = run_experiment(tiny_config(), jobs=1)
        b = run_experiment(tiny_config(), jobs=2)
        assert a.to_json() == b.to_json()

    def test_report_csv_shape(self):
        report = run_experiment(tiny_config())
        lines = report.to_csv().strip().splitlines()
        assert lines[0] == "scheme,metric,mean,std,avg_rank"
        assert len(lines) == 1 + 2 * 2

    def test_report_json_round_trips(self):
        report = run_experiment(tiny_config())
        parsed = json.loads(report.to_json())
        assert parsed["schemes"] == ["relu", "combu"]
        assert parsed["repeats"] == 2


class TestConfig:
    def test_from_dict(self):
        cfg = ExperimentConfig.from_dict(
            {
                "dataset": {"generator": "gs", "n": 500},
                "schemes": ["relu", "nlrelu", "combu"],
                "task": "regression",
                "model_size": "large",
                "train": {"epochs": 10},
                "repeats": 5,
                "base_seed": 42,
            }
        )
        assert cfg.train.epochs == 10
        assert cfg.train.batch_size == 500  # untouched defaults stay standard
        assert [s.name for s in cfg.schemes] == ["relu", "nlrelu", "combu"]

    def test_dataset_spec_validation(self):
        with pytest.raises(ParameterError):
            DatasetSpec()
        with pytest.raises(ParameterError):
            DatasetSpec(generator="unknown")

    def test_empty_schemes_rejected(self):
        with pytest.raises(ParameterError):
            tiny_config(schemes=[])

    def test_csv_dataset_loads(self, tmp_path):
        from combu.data import csv_write, gen_ar
        from combu.rng import Rng

        path = tmp_path / "ar.csv"
        csv_write(gen_ar(100, Rng(0)), path)
        cfg = tiny_config(dataset=DatasetSpec(csv=str(path)))
        ds = load_dataset(cfg)
        assert ds.n == 100

    def test_generated_classification_has_requested_bins(self):
        cfg = tiny_config(task="classification", n_bins=4)
        ds = load_dataset(cfg)
        assert ds.n_classes == 4
        assert set(np.unique(ds.target)) == {0, 1, 2, 3}
