"""Two-phase experiment orchestration: random search, then seeded train/test."""

from __future__ import annotations

import csv
import io
import json
import logging
import os
import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import data as data_mod
from . import net as net_mod
from .data import TabularDataset, SplitIndices, standardize_apply, standardize_fit
from .homology import families_from_graph
from .metrics import ConfusionMatrix, accuracy, macro_f1, mcc
from .net import HcnnConfig, TrainConfig
from .rng import STREAM_BOOTSTRAP, STREAM_SEARCH, make_rng, mix_seed
from .similarity import BootstrapSpec, iter_replicas, mean_similarity
from .tmfg import BOOTSTRAP_NET, MEAN_SIM_MATRIX, bootstrap_net, build_tmfg, count_edges

logger = logging.getLogger(__name__)

# Experiment seed roster used throughout the benchmark runs.
DEFAULT_SEEDS = (12, 190, 903, 7687, 8279, 9433, 12555, 22443, 67822, 9822127)


@dataclass(frozen=True)
class SearchSpace:
    """Hyperparameter grids for the two model variants."""

    n_filters_l1: tuple[int, ...] = (4, 8, 12, 16)
    n_filters_l2: tuple[int, ...] = tuple(range(32, 65, 4))
    tmfg_iterations: tuple[int, ...] = (100, 400, 700, 1000)
    tmfg_confidence: tuple[float, ...] = (0.90, 0.95, 0.99)
    tmfg_similarity: tuple[str, ...] = ("pearson", "spearman")

    def sample(self, rng: np.random.Generator, variant: str) -> dict:
        point = {
            "n_filters_l1": int(rng.choice(self.n_filters_l1)),
            "n_filters_l2": int(rng.choice(self.n_filters_l2)),
            "tmfg_iterations": int(rng.choice(self.tmfg_iterations)),
            "tmfg_similarity": str(rng.choice(self.tmfg_similarity)),
        }
        if variant == BOOTSTRAP_NET:
            point["tmfg_confidence"] = float(rng.choice(self.tmfg_confidence))
        return point


@dataclass
class ExperimentConfig:
    dataset: str                      # "openml:ID" or "csv:PATH"
    variant: str = MEAN_SIM_MATRIX
    search_budget: int = 50
    seeds: tuple[int, ...] = DEFAULT_SEEDS
    train_config: TrainConfig = field(default_factory=TrainConfig)
    output_dir: str | None = None
    label_column: str | int = -1
    cache_dir: str | None = None
    search_space: SearchSpace = field(default_factory=SearchSpace)

    def __post_init__(self):
        if self.variant not in (MEAN_SIM_MATRIX, BOOTSTRAP_NET):
            raise ValueError(f"unknown variant {self.variant!r}")
        if not 1 <= self.search_budget <= 500:
            raise ValueError("search_budget must lie in [1, 500]")
        if not self.seeds:
            raise ValueError("seed list must be nonempty")


@dataclass
class RunResult:
    seed: int
    hyperparameters: dict
    f1: float
    accuracy: float
    mcc: float
    tune_seconds: float
    train_test_seconds: float
    param_count: int
    error: str | None = None


def load_dataset(config: ExperimentConfig) -> TabularDataset:
    kind, _, ref = config.dataset.partition(":")
    if kind == "openml":
        cache = config.cache_dir or os.environ.get(
            data_mod.CACHE_ENV_VAR,
            os.path.join(os.path.expanduser("~"), ".cache", "homconv"))
        return data_mod.fetch_openml(int(ref), cache)
    if kind == "csv":
        return data_mod.load_csv(ref, config.label_column)
    raise ValueError(f"dataset source must be 'openml:ID' or 'csv:PATH', got {config.dataset!r}")


def build_graph(train_features: np.ndarray, hyperparameters: dict,
                variant: str, seed: int):
    """Bootstrap the similarity estimate on training rows and filter it."""
    spec = BootstrapSpec(
        replica_count=hyperparameters["tmfg_iterations"],
        master_seed=mix_seed(seed, STREAM_BOOTSTRAP),
        method=hyperparameters["tmfg_similarity"],
    )
    if variant == MEAN_SIM_MATRIX:
        return build_tmfg(mean_similarity(iter_replicas(train_features, spec)))
    table = count_edges(build_tmfg(r) for r in iter_replicas(train_features, spec))
    return bootstrap_net(table, hyperparameters["tmfg_confidence"])


def _fit_and_score(dataset: TabularDataset, split: SplitIndices,
                   hyperparameters: dict, variant: str,
                   train_config: TrainConfig, eval_rows: np.ndarray):
    """Build graph + families + model on the train split, score on eval_rows."""
    params = standardize_fit(dataset, split.train)
    standardized = standardize_apply(dataset, params)
    graph = build_graph(standardized.features[split.train], hyperparameters,
                        variant, train_config.seed)
    families = families_from_graph(graph)
    model = net_mod.compile(
        families,
        HcnnConfig(zeta=hyperparameters["n_filters_l1"],
                   xi=hyperparameters["n_filters_l2"],
                   n_classes=dataset.n_classes),
        seed=train_config.seed,
    )
    model, history = net_mod.train(
        model,
        (standardized.features[split.train], standardized.labels[split.train]),
        (standardized.features[split.validation], standardized.labels[split.validation]),
        train_config,
    )
    predictions = net_mod.predict(model, standardized.features[eval_rows])
    cm = ConfusionMatrix.from_predictions(standardized.labels[eval_rows],
                                          predictions, dataset.n_classes)
    return model, cm, history


def random_search(dataset: TabularDataset, split: SplitIndices,
                  config: ExperimentConfig, seed: int) -> dict:
    """Sample up to search_budget points and return the validation-F1 argmax.

    Ties go to the earliest-sampled point; a trial that raises is recorded
    and skipped.
    """
    rng = make_rng(mix_seed(seed, STREAM_SEARCH))
    train_config = replace(config.train_config, seed=seed)
    best_point = None
    best_score = -np.inf
    failures = []
    seen = set()
    for trial in range(config.search_budget):
        point = config.search_space.sample(rng, config.variant)
        key = tuple(sorted(point.items()))
        if key in seen:
            continue
        seen.add(key)
        try:
            _, cm, _ = _fit_and_score(dataset, split, point, config.variant,
                                      train_config, split.validation)
            score = macro_f1(cm)
        except Exception as exc:  # noqa: BLE001 - per-trial diagnostics
            failures.append(f"trial {trial} {point}: {exc}")
            continue
        if score > best_score:
            best_score = score
            best_point = point
    if best_point is None:
        raise RuntimeError("every search trial failed:\n" + "\n".join(failures))
    return best_point


def run_seed(dataset: TabularDataset, config: ExperimentConfig, seed: int) -> RunResult:
    split = data_mod.split(dataset, seed)
    tune_start = time.perf_counter()
    chosen = random_search(dataset, split, config, seed)
    tune_seconds = time.perf_counter() - tune_start

    train_config = replace(config.train_config, seed=seed)
    run_start = time.perf_counter()
    model, cm, _ = _fit_and_score(dataset, split, chosen, config.variant,
                                  train_config, split.test)
    train_test_seconds = time.perf_counter() - run_start
    return RunResult(
        seed=seed,
        hyperparameters=chosen,
        f1=macro_f1(cm),
        accuracy=accuracy(cm),
        mcc=mcc(cm),
        tune_seconds=tune_seconds,
        train_test_seconds=train_test_seconds,
        param_count=net_mod.param_count(model),
    )


def run_experiment(config: ExperimentConfig) -> list[RunResult]:
    """Per seed: split, search, retrain with chosen point, score on test.

    A failing seed yields a RunResult with an error message; the remaining
    seeds still run.
    """
    dataset = load_dataset(config)
    results = []
    for seed in config.seeds:
        try:
            results.append(run_seed(dataset, config, seed))
        except Exception as exc:  # noqa: BLE001 - partial-failure contract
            logger.exception("seed %d failed", seed)
            results.append(RunResult(seed=seed, hyperparameters={}, f1=0.0,
                                     accuracy=0.0, mcc=0.0, tune_seconds=0.0,
                                     train_test_seconds=0.0, param_count=0,
                                     error=str(exc)))
    if config.output_dir:
        emit_results(results, config.output_dir)
    return results


def aggregate(results: list[RunResult]) -> dict:
    """Mean and population std per metric over the successful seeds."""
    ok = [r for r in results if r.error is None]
    summary = {"seeds": len(results), "failed_seeds": len(results) - len(ok)}
    for name in ("f1", "accuracy", "mcc"):
        values = np.array([getattr(r, name) for r in ok], dtype=np.float64)
        summary[f"{name}_mean"] = float(values.mean()) if ok else float("nan")
        summary[f"{name}_std"] = float(values.std()) if ok else float("nan")
    return summary


CSV_COLUMNS = ("seed", "hyperparameters", "f1", "accuracy", "mcc",
               "tune_s", "traintest_s", "params", "error")


def results_csv_text(results: list[RunResult], include_timings: bool = True) -> str:
    """Deterministic per-seed CSV; timings can be zeroed for comparisons."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in results:
        writer.writerow([
            r.seed,
            json.dumps(r.hyperparameters, sort_keys=True),
            f"{r.f1:.6f}", f"{r.accuracy:.6f}", f"{r.mcc:.6f}",
            f"{r.tune_seconds:.3f}" if include_timings else "0",
            f"{r.train_test_seconds:.3f}" if include_timings else "0",
            r.param_count,
            r.error or "",
        ])
    return buffer.getvalue()


def emit_results(results: list[RunResult], output_dir: str) -> dict[str, str]:
    """Write the per-seed CSV and a structured aggregate summary."""
    if not results:
        raise ValueError("no results to emit")
    os.makedirs(output_dir, exist_ok=True)
    csv_path = os.path.join(output_dir, "per_seed.csv")
    with open(csv_path, "w", encoding="utf-8", newline="") as handle:
        handle.write(results_csv_text(results))
    summary_path = os.path.join(output_dir, "summary.json")
    with open(summary_path, "w", encoding="utf-8") as handle:
        json.dump(aggregate(results), handle, indent=2, sort_keys=True)
        handle.write("\n")
    return {"per_seed": csv_path, "summary": summary_path}
