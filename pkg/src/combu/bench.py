"""Multi-run experiment protocol: repeats, aggregation, and average ranks.

One experiment trains every scheme on identical data for each repeat.
Repeat i derives its seed as base_seed XOR i; that seed drives the split,
weight init, mixture assignment, dropout, and shuffling, so a report is
reproducible from its config alone and repeats may run in parallel.
"""

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .data import GENERATORS, SplitData, csv_read, make_classification, split_and_fit
from .errors import ParameterError, TrainingDiverged
from .metrics import accuracy, macro_f1, mae, mse, rank_values
from .rng import Rng
from .training import TrainConfig, build_mlp, parse_scheme, predict, train

TASK_METRICS = {"regression": ("mae", "mse"), "classification": ("accuracy", "f1")}
HIGHER_IS_BETTER = {"mae": False, "mse": False, "accuracy": True, "f1": True}


@dataclass
class DatasetSpec:
    generator: str | None = None
    n: int = 5000
    csv: str | None = None
    target: str = "target"
    categorical: tuple = ()

    def __post_init__(self):
        if (self.generator is None) == (self.csv is None):
            raise ParameterError("dataset spec needs exactly one of generator or csv")
        if self.generator is not None and self.generator not in GENERATORS:
            raise ParameterError(f"unknown generator {self.generator!r}")
        self.categorical = tuple(self.categorical)


@dataclass
class ExperimentConfig:
    dataset: DatasetSpec
    schemes: list
    task: str = "regression"
    n_bins: int = 5
    model_size: str = "large"
    train: TrainConfig = field(default_factory=TrainConfig)
    repeats: int = 5
    base_seed: int = 0
    test_fraction: float = 0.2
    name: str = "experiment"

    def __post_init__(self):
        if self.repeats < 1:
            raise ParameterError(f"repeats must be >= 1, got {self.repeats}")
        if not self.schemes:
            raise ParameterError("scheme list must be non-empty")
        self.schemes = [parse_scheme(s) for s in self.schemes]
        if self.task not in TASK_METRICS:
            raise ParameterError(f"unknown task {self.task!r}")

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        dataset = DatasetSpec(**d.pop("dataset"))
        train_cfg = TrainConfig(**d.pop("train", {}))
        return cls(dataset=dataset, train=train_cfg, **d)

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


@dataclass
class RunReport:
    scheme_names: list
    metric_names: list
    values: dict  # scheme -> metric -> list over repeats (None = diverged)
    aggregates: dict  # scheme -> metric -> (mean, std)
    avg_ranks: dict  # scheme -> metric -> float or None
    diverged: dict  # scheme -> sorted repeat indices
    repeats: int
    base_seed: int
    name: str = "experiment"

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "base_seed": self.base_seed,
            "repeats": self.repeats,
            "schemes": self.scheme_names,
            "metrics": self.metric_names,
            "values": self.values,
            "aggregates": {
                s: {m: {"mean": a[0], "std": a[1]} for m, a in per.items()}
                for s, per in self.aggregates.items()
            },
            "avg_ranks": self.avg_ranks,
            "diverged": self.diverged,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    def to_csv(self) -> str:
        lines = ["scheme,metric,mean,std,avg_rank"]
        for s in self.scheme_names:
            for m in self.metric_names:
                mean, std = self.aggregates[s][m]
                rank = self.avg_ranks[s][m]
                lines.append(f"{s},{m},{mean!r},{std!r},{rank!r}")
        return "\n".join(lines) + "\n"


def load_dataset(cfg: ExperimentConfig):
    spec = cfg.dataset
    if spec.generator is not None:
        ds = GENERATORS[spec.generator](spec.n, Rng(cfg.base_seed).child(0))
        if cfg.task == "classification":
            ds = make_classification(ds, cfg.n_bins)
    else:
        # a classification CSV must already carry class indices
        ds = csv_read(
            spec.csv,
            target_column=spec.target,
            categorical=spec.categorical,
            task=cfg.task,
        )
    return ds


def _metric_values(scheme_net, test: SplitData) -> dict:
    preds = predict(scheme_net, test.X, test.task)
    if test.task == "regression":
        return {"mae": mae(preds, test.y), "mse": mse(preds, test.y)}
    return {
        "accuracy": accuracy(preds, test.y),
        "f1": macro_f1(preds, test.y, test.n_classes),
    }


def run_repeat(cfg: ExperimentConfig, ds, repeat: int) -> dict:
    """All schemes on one (re-split) repeat; returns scheme -> metrics or None."""
    seed = cfg.base_seed ^ repeat
    r = Rng(seed)
    train_d, test_d, _ = split_and_fit(ds, cfg.test_fraction, r.child(1))
    out_dim = ds.n_classes if cfg.task == "classification" else 1
    head = "softmax" if cfg.task == "classification" else "identity"
    results = {}
    for j, scheme in enumerate(cfg.schemes):
        srng = r.child(2 + j)
        net = build_mlp(train_d.X.shape[1], out_dim, cfg.model_size, scheme, srng, head=head)
        try:
            train(net, train_d, cfg.train, rng=srng)
        except TrainingDiverged:
            results[scheme.name] = None
            continue
        results[scheme.name] = _metric_values(net, test_d)
    return results


def _repeat_worker(args):
    return run_repeat(*args)


def run_experiment(cfg: ExperimentConfig, jobs: int = 1) -> RunReport:
    ds = load_dataset(cfg)
    tasks = [(cfg, ds, i) for i in range(cfg.repeats)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            per_repeat = list(pool.map(_repeat_worker, tasks))
    else:
        per_repeat = [run_repeat(*t) for t in tasks]
    return summarize(cfg, per_repeat)


def summarize(cfg: ExperimentConfig, per_repeat: list) -> RunReport:
    scheme_names = [s.name for s in cfg.schemes]
    metric_names = list(TASK_METRICS[cfg.task])
    values = {s: {m: [] for m in metric_names} for s in scheme_names}
    diverged = {s: [] for s in scheme_names}
    for i, rep in enumerate(per_repeat):
        for s in scheme_names:
            if rep[s] is None:
                diverged[s].append(i)
                for m in metric_names:
                    values[s][m].append(None)
            else:
                for m in metric_names:
                    values[s][m].append(rep[s][m])

    aggregates = {}
    for s in scheme_names:
        aggregates[s] = {}
        for m in metric_names:
            ok = [v for v in values[s][m] if v is not None]
            if not ok:
                aggregates[s][m] = (float("nan"), float("nan"))
            else:
                mean = float(np.mean(ok))
                std = float(np.std(ok, ddof=1)) if len(ok) > 1 else 0.0
                aggregates[s][m] = (mean, std)

    # rank each repeat among the schemes that finished it, then average
    rank_sums = {s: {m: 0.0 for m in metric_names} for s in scheme_names}
    rank_counts = {s: {m: 0 for m in metric_names} for s in scheme_names}
    for rep in per_repeat:
        alive = [s for s in scheme_names if rep[s] is not None]
        if not alive:
            continue
        for m in metric_names:
            ranks = rank_values([rep[s][m] for s in alive], ascending=not HIGHER_IS_BETTER[m])
            for s, rank in zip(alive, ranks):
                rank_sums[s][m] += rank
                rank_counts[s][m] += 1
    avg_ranks = {
        s: {
            m: (rank_sums[s][m] / rank_counts[s][m] if rank_counts[s][m] else None)
            for m in metric_names
        }
        for s in scheme_names
    }

    return RunReport(
        scheme_names=scheme_names,
        metric_names=metric_names,
        values=values,
        aggregates=aggregates,
        avg_ranks=avg_ranks,
        diverged=diverged,
        repeats=cfg.repeats,
        base_seed=cfg.base_seed,
        name=cfg.name,
    )
