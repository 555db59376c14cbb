import json
import os
from dataclasses import replace

import numpy as np
import pytest

from homconv import data as D
from homconv import harness as H
from homconv.net import TrainConfig
from homconv.similarity import BootstrapSpec, iter_replicas, mean_similarity
from homconv.tmfg import BOOTSTRAP_NET, MEAN_SIM_MATRIX, build_tmfg


def toy_csv(tmp_path, total=60, n_features=4, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(total, n_features))
    y = (X[:, 0] + X[:, 1] > 0).astype(int)
    lines = [",".join(f"f{j}" for j in range(n_features)) + ",label"]
    for row, label in zip(X, y):
        lines.append(",".join(f"{v:.6f}" for v in row) + f",c{label}")
    path = tmp_path / "toy.csv"
    path.write_text("\n".join(lines) + "\n")
    return str(path)


def fast_config(dataset, **overrides):
    values = dict(
        dataset=dataset,
        search_budget=2,
        seeds=(12, 190),
        train_config=TrainConfig(max_epochs=15, patience=5),
        label_column="label",
    )
    values.update(overrides)
    return H.ExperimentConfig(**values)


class TestSearchSpace:
    def test_grids_match_declared_steps(self):
        space = H.SearchSpace()
        assert space.n_filters_l1 == (4, 8, 12, 16)
        assert space.n_filters_l2 == tuple(range(32, 65, 4))
        assert space.tmfg_iterations == (100, 400, 700, 1000)
        assert space.tmfg_confidence == (0.90, 0.95, 0.99)
        assert set(space.tmfg_similarity) == {"pearson", "spearman"}

    def test_variant_axes(self):
        space = H.SearchSpace()
        rng = np.random.default_rng(0)
        mean_point = space.sample(rng, MEAN_SIM_MATRIX)
        assert "tmfg_confidence" not in mean_point
        boot_point = space.sample(rng, BOOTSTRAP_NET)
        assert boot_point["tmfg_confidence"] in space.tmfg_confidence


class TestRandomSearch:
    def test_budget_one_returns_single_point(self, tmp_path):
        config = fast_config("csv:" + toy_csv(tmp_path), search_budget=1)
        dataset = H.load_dataset(config)
        split = D.split(dataset, 12)
        chosen = H.random_search(dataset, split, config, 12)
        assert set(chosen) >= {"n_filters_l1", "n_filters_l2", "tmfg_iterations",
                               "tmfg_similarity"}

    def test_collapsed_space_returns_that_point(self, tmp_path):
        space = H.SearchSpace(n_filters_l1=(4,), n_filters_l2=(32,),
                              tmfg_iterations=(100,), tmfg_similarity=("pearson",))
        config = fast_config("csv:" + toy_csv(tmp_path), search_budget=5,
                             search_space=space)
        dataset = H.load_dataset(config)
        chosen = H.random_search(dataset, D.split(dataset, 12), config, 12)
        assert chosen == {"n_filters_l1": 4, "n_filters_l2": 32,
                          "tmfg_iterations": 100, "tmfg_similarity": "pearson"}

    def test_argmax_contract(self, tmp_path, monkeypatch):
        config = fast_config("csv:" + toy_csv(tmp_path), search_budget=4)
        dataset = H.load_dataset(config)
        split = D.split(dataset, 12)
        from homconv.metrics import ConfusionMatrix

        scores = iter([0.2, 0.9, 0.5, 0.9])
        seen_points = []

        def fake_fit(ds, sp, point, variant, train_config, rows):
            seen_points.append(dict(point))
            score = next(scores)
            # confusion matrix with the requested macro-F1 on a binary task
            correct = int(round(score * 100))
            counts = np.array([[correct, 100 - correct], [0, 100]])
            return None, ConfusionMatrix(counts), None

        monkeypatch.setattr(H, "_fit_and_score", fake_fit)
        chosen = H.random_search(dataset, split, config, 12)
        assert chosen == seen_points[1]  # earliest of the tied best trials

    def test_all_trials_failed(self, tmp_path, monkeypatch):
        config = fast_config("csv:" + toy_csv(tmp_path), search_budget=3)
        dataset = H.load_dataset(config)

        def broken(*args, **kwargs):
            raise RuntimeError("boom")

        monkeypatch.setattr(H, "_fit_and_score", broken)
        with pytest.raises(RuntimeError, match="every search trial failed"):
            H.random_search(dataset, D.split(dataset, 12), config, 12)


class TestRunExperiment:
    def test_one_result_per_seed_plus_aggregate(self, tmp_path):
        config = fast_config("csv:" + toy_csv(tmp_path))
        results = H.run_experiment(config)
        assert [r.seed for r in results] == [12, 190]
        summary = H.aggregate(results)
        assert 0.0 <= summary["f1_mean"] <= 1.0
        assert summary["failed_seeds"] == 0

    def test_rerun_identical_metrics(self, tmp_path):
        config = fast_config("csv:" + toy_csv(tmp_path))
        a = H.run_experiment(config)
        b = H.run_experiment(config)
        assert H.results_csv_text(a, include_timings=False) == \
            H.results_csv_text(b, include_timings=False)

    def test_seed_isolation(self, tmp_path):
        config = fast_config("csv:" + toy_csv(tmp_path), seeds=(12, 190))
        permuted = replace(config, seeds=(190, 12))
        by_seed = {r.seed: r for r in H.run_experiment(config)}
        for r in H.run_experiment(permuted):
            assert r.f1 == by_seed[r.seed].f1
            assert r.hyperparameters == by_seed[r.seed].hyperparameters

    def test_failed_seed_recorded_and_others_run(self, tmp_path, monkeypatch):
        config = fast_config("csv:" + toy_csv(tmp_path))
        real_run_seed = H.run_seed

        def flaky(dataset, cfg, seed):
            if seed == 12:
                raise RuntimeError("seed failure")
            return real_run_seed(dataset, cfg, seed)

        monkeypatch.setattr(H, "run_seed", flaky)
        results = H.run_experiment(config)
        assert results[0].error == "seed failure"
        assert results[1].error is None
        assert H.aggregate(results)["failed_seeds"] == 1

    def test_bootstrap_net_variant_runs(self, tmp_path):
        config = fast_config("csv:" + toy_csv(tmp_path), variant=BOOTSTRAP_NET,
                             seeds=(12,), search_budget=1)
        # keep replica counts small for speed
        config = replace(config, search_space=H.SearchSpace(tmfg_iterations=(20,)))
        results = H.run_experiment(config)
        assert results[0].error is None
        assert "tmfg_confidence" in results[0].hyperparameters


class TestNoLeakage:
    def test_pipeline_build_touches_only_train_rows(self, tmp_path):
        # poisoning validation/test rows must not change the fitted
        # standardization or the bootstrapped graph
        config = fast_config("csv:" + toy_csv(tmp_path))
        dataset = H.load_dataset(config)
        split = D.split(dataset, 12)
        poisoned_features = dataset.features.copy()
        non_train = np.concatenate([split.validation, split.test])
        poisoned_features[non_train] = 1e9
        poisoned = D.TabularDataset(poisoned_features, dataset.labels,
                                    dataset.n_classes, dataset.feature_names)

        clean_params = D.standardize_fit(dataset, split.train)
        poisoned_params = D.standardize_fit(poisoned, split.train)
        assert np.array_equal(clean_params.mean, poisoned_params.mean)
        assert np.array_equal(clean_params.std_dev, poisoned_params.std_dev)

        point = {"tmfg_iterations": 50, "tmfg_similarity": "pearson"}
        clean_graph = H.build_graph(dataset.features[split.train], point,
                                    MEAN_SIM_MATRIX, 12)
        poisoned_graph = H.build_graph(poisoned.features[split.train], point,
                                       MEAN_SIM_MATRIX, 12)
        assert np.array_equal(clean_graph.adjacency, poisoned_graph.adjacency)
        assert clean_graph.total_gain == poisoned_graph.total_gain


class TestEmitResults:
    def make_results(self):
        return [
            H.RunResult(seed=1, hyperparameters={"n_filters_l1": 4}, f1=0.5,
                        accuracy=0.6, mcc=0.2, tune_seconds=1.0,
                        train_test_seconds=0.5, param_count=100),
            H.RunResult(seed=2, hyperparameters={"n_filters_l1": 8}, f1=0.7,
                        accuracy=0.8, mcc=0.4, tune_seconds=2.0,
                        train_test_seconds=0.6, param_count=200),
            H.RunResult(seed=3, hyperparameters={"n_filters_l1": 4}, f1=0.9,
                        accuracy=0.9, mcc=0.9, tune_seconds=3.0,
                        train_test_seconds=0.7, param_count=100),
        ]

    def test_csv_layout(self, tmp_path):
        paths = H.emit_results(self.make_results(), str(tmp_path))
        lines = open(paths["per_seed"]).read().splitlines()
        assert lines[0] == "seed,hyperparameters,f1,accuracy,mcc,tune_s,traintest_s,params,error"
        assert len(lines) == 4

    def test_rewrite_is_byte_identical(self, tmp_path):
        results = self.make_results()
        paths = H.emit_results(results, str(tmp_path))
        first = open(paths["per_seed"], "rb").read()
        H.emit_results(results, str(tmp_path))
        assert open(paths["per_seed"], "rb").read() == first

    def test_aggregate_hand_values(self, tmp_path):
        paths = H.emit_results(self.make_results(), str(tmp_path))
        summary = json.load(open(paths["summary"]))
        # spreadsheet oracle on f1 = [0.5, 0.7, 0.9]
        assert summary["f1_mean"] == pytest.approx(0.7)
        assert summary["f1_std"] == pytest.approx(np.sqrt((0.04 + 0.0 + 0.04) / 3))

    def test_empty_results_rejected(self, tmp_path):
        with pytest.raises(ValueError):
            H.emit_results([], str(tmp_path))


class TestConfigValidation:
    def test_unknown_variant(self):
        with pytest.raises(ValueError):
            H.ExperimentConfig(dataset="csv:x.csv", variant="nope")

    def test_budget_bounds(self):
        with pytest.raises(ValueError):
            H.ExperimentConfig(dataset="csv:x.csv", search_budget=0)
        with pytest.raises(ValueError):
            H.ExperimentConfig(dataset="csv:x.csv", search_budget=501)

    def test_empty_seed_list(self):
        with pytest.raises(ValueError):
            H.ExperimentConfig(dataset="csv:x.csv", seeds=())

    def test_default_seed_roster(self):
        config = H.ExperimentConfig(dataset="csv:x.csv")
        assert config.seeds == (12, 190, 903, 7687, 8279, 9433, 12555, 22443,
                                67822, 9822127)

    def test_cache_env_var(self, tmp_path, monkeypatch):
        monkeypatch.setenv(D.CACHE_ENV_VAR, str(tmp_path))
        config = H.ExperimentConfig(dataset="openml:123")
        with pytest.raises(Exception):
            H.load_dataset(config)  # no network; must have tried the env cache dir
