"""Command-line entry points: run experiments and inspect pipeline stages."""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import data as data_mod
from .harness import (DEFAULT_SEEDS, ExperimentConfig, aggregate, build_graph,
                      load_dataset, run_experiment)
from .homology import families_from_graph, families_report
from .net import TrainConfig
from .rng import STREAM_BOOTSTRAP, mix_seed
from .similarity import BootstrapSpec, iter_replicas, mean_similarity
from .tmfg import (BOOTSTRAP_NET, MEAN_SIM_MATRIX, build_tmfg, export_edge_list,
                   verify_structure)

EXIT_OK = 0
EXIT_PARTIAL = 1
EXIT_CONFIG = 2

VARIANTS = {"mean": MEAN_SIM_MATRIX, "bootstrap": BOOTSTRAP_NET,
            MEAN_SIM_MATRIX: MEAN_SIM_MATRIX, BOOTSTRAP_NET: BOOTSTRAP_NET}


def _parse_seeds(text: str) -> tuple[int, ...]:
    return tuple(int(s) for s in text.split(",") if s.strip())


def _config_from_args(args) -> ExperimentConfig:
    values = {}
    if getattr(args, "config", None):
        with open(args.config, "r", encoding="utf-8") as handle:
            values = json.load(handle)
    if args.dataset:
        values["dataset"] = args.dataset
    if getattr(args, "variant", None):
        values["variant"] = VARIANTS[args.variant]
    if getattr(args, "budget", None):
        values["search_budget"] = args.budget
    if getattr(args, "seeds", None):
        values["seeds"] = _parse_seeds(args.seeds)
    if getattr(args, "out", None):
        values["output_dir"] = args.out
    if "train_config" in values and isinstance(values["train_config"], dict):
        values["train_config"] = TrainConfig(**values["train_config"])
    if "seeds" in values:
        values["seeds"] = tuple(values["seeds"])
    if "dataset" not in values:
        raise ValueError("a dataset source is required (--dataset or --config)")
    return ExperimentConfig(**values)


def _dataset_graph(args):
    config = ExperimentConfig(dataset=args.dataset, search_budget=1)
    dataset = load_dataset(config)
    hyperparameters = {
        "tmfg_iterations": args.replicas,
        "tmfg_similarity": args.similarity,
        "tmfg_confidence": args.confidence,
    }
    variant = VARIANTS[args.variant]
    graph = build_graph(dataset.features, hyperparameters, variant, args.seed)
    return dataset, graph


def cmd_run(args) -> int:
    try:
        config = _config_from_args(args)
    except (ValueError, OSError, KeyError, TypeError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        results = run_experiment(config)
    except (ValueError, OSError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    summary = aggregate(results)
    for result in results:
        status = result.error or (
            f"f1={result.f1:.4f} acc={result.accuracy:.4f} mcc={result.mcc:.4f} "
            f"params={result.param_count}")
        print(f"seed {result.seed}: {status}")
    print(f"aggregate: f1={summary['f1_mean']:.4f}±{summary['f1_std']:.4f} "
          f"acc={summary['accuracy_mean']:.4f}±{summary['accuracy_std']:.4f} "
          f"mcc={summary['mcc_mean']:.4f}±{summary['mcc_std']:.4f}")
    return EXIT_PARTIAL if summary["failed_seeds"] else EXIT_OK


def cmd_tmfg(args) -> int:
    try:
        dataset, graph = _dataset_graph(args)
        spec = BootstrapSpec(replica_count=args.replicas,
                             master_seed=mix_seed(args.seed, STREAM_BOOTSTRAP),
                             method=args.similarity)
        similarity = mean_similarity(iter_replicas(dataset.features, spec))
    except (ValueError, OSError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(f"# n={graph.n} edges={graph.edge_count} construction={graph.construction} "
          f"total_gain={graph.total_gain:.6f}")
    sys.stdout.write(export_edge_list(graph, similarity))
    return EXIT_OK


def cmd_families(args) -> int:
    try:
        _, graph = _dataset_graph(args)
    except (ValueError, OSError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    sys.stdout.write(families_report(families_from_graph(graph)))
    return EXIT_OK


def cmd_verify(args) -> int:
    try:
        _, graph = _dataset_graph(args)
    except (ValueError, OSError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    report = verify_structure(graph)
    for name, passed in report.checks.items():
        print(f"{name}: {'pass' if passed else 'FAIL'}")
    return EXIT_OK if report.all_passed else EXIT_PARTIAL


def _add_stage_args(parser):
    parser.add_argument("--dataset", required=True, help="openml:ID or csv:PATH")
    parser.add_argument("--variant", choices=sorted(VARIANTS), default="mean")
    parser.add_argument("--seed", type=int, default=DEFAULT_SEEDS[0])
    parser.add_argument("--replicas", type=int, default=100)
    parser.add_argument("--similarity", choices=("pearson", "spearman"), default="pearson")
    parser.add_argument("--confidence", type=float, default=0.95)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="homconv",
        description="Clique-structured convolutional classifiers for tabular data")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="full two-phase experiment")
    run.add_argument("--dataset", help="openml:ID or csv:PATH")
    run.add_argument("--variant", choices=sorted(VARIANTS))
    run.add_argument("--budget", type=int)
    run.add_argument("--seeds", help="comma-separated 64-bit seeds")
    run.add_argument("--out", help="output directory for result files")
    run.add_argument("--config", help="JSON config mirroring ExperimentConfig")
    run.set_defaults(func=cmd_run)

    for name, func, text in (("tmfg", cmd_tmfg, "print the filtered graph edge list"),
                             ("families", cmd_families, "print the simplicial families"),
                             ("verify", cmd_verify, "check graph structural invariants")):
        stage = sub.add_parser(name, help=text)
        _add_stage_args(stage)
        stage.set_defaults(func=func)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
