import numpy as np
import pytest

from homconv.similarity import (BootstrapSpec, SimilarityMatrix, bootstrap_replica,
                                iter_replicas, mean_similarity, squared_correlation)


def pearson_by_hand(x, y):
    x, y = np.asarray(x, float), np.asarray(y, float)
    cov = np.mean((x - x.mean()) * (y - y.mean()))
    return cov / (x.std() * y.std())


class TestSquaredCorrelation:
    def test_identical_columns(self):
        sim = squared_correlation(np.array([[1, 1], [2, 2], [3, 3]], float))
        assert sim.values[0, 1] == pytest.approx(1.0)

    def test_sign_erased_by_squaring(self):
        sim = squared_correlation(np.array([[1, 3], [2, 2], [3, 1]], float))
        assert sim.values[0, 1] == pytest.approx(1.0)

    def test_derived_rho_squared(self):
        x, y = [1, 2, 3, 4], [1, 3, 2, 4]
        rho = pearson_by_hand(x, y)
        assert rho == pytest.approx(0.8)
        sim = squared_correlation(np.column_stack([x, y]).astype(float))
        assert sim.values[0, 1] == pytest.approx(rho ** 2)
        assert sim.values[0, 1] == pytest.approx(0.64)

    def test_constant_column_is_zero_similarity(self):
        features = np.column_stack([np.ones(10), np.arange(10.0)])
        sim = squared_correlation(features)
        assert sim.values[0, 1] == 0.0
        assert sim.values[0, 0] == 1.0

    def test_spearman_average_ranks_on_ties(self):
        # monotone transform of x gives spearman 1 even with ties
        x = np.array([1.0, 2.0, 2.0, 5.0])
        y = x ** 3
        sim = squared_correlation(np.column_stack([x, y]), "spearman")
        assert sim.values[0, 1] == pytest.approx(1.0)

    def test_too_few_rows(self):
        with pytest.raises(ValueError):
            squared_correlation(np.ones((1, 3)))

    def test_unknown_method(self):
        with pytest.raises(ValueError):
            squared_correlation(np.ones((5, 2)), "kendall")


class TestProperties:
    def test_symmetry_diagonal_range_fuzz(self):
        rng = np.random.default_rng(7)
        for _ in range(1000):
            total = int(rng.integers(2, 20))
            cols = int(rng.integers(1, 6))
            method = ("pearson", "spearman")[int(rng.integers(0, 2))]
            sim = squared_correlation(rng.normal(size=(total, cols)), method)
            assert np.array_equal(sim.values, sim.values.T)
            assert np.allclose(np.diag(sim.values), 1.0)
            assert sim.values.min() >= 0.0 and sim.values.max() <= 1.0

    def test_pearson_affine_invariance(self):
        rng = np.random.default_rng(8)
        features = rng.normal(size=(40, 4))
        scale = rng.uniform(0.5, 3.0, size=4) * rng.choice([-1.0, 1.0], size=4)
        shift = rng.normal(size=4)
        base = squared_correlation(features)
        mapped = squared_correlation(features * scale + shift)
        assert np.allclose(base.values, mapped.values, atol=1e-12)

    def test_spearman_monotone_invariance(self):
        rng = np.random.default_rng(9)
        features = rng.normal(size=(40, 3))
        transformed = np.column_stack([
            np.exp(features[:, 0]), features[:, 1] ** 3, np.arctan(features[:, 2])])
        base = squared_correlation(features, "spearman")
        mapped = squared_correlation(transformed, "spearman")
        assert np.allclose(base.values, mapped.values, atol=1e-12)


class TestBootstrap:
    def test_replica_determinism(self):
        rng = np.random.default_rng(10)
        features = rng.normal(size=(30, 3))
        a = bootstrap_replica(features, 123)
        b = bootstrap_replica(features, 123)
        assert np.array_equal(a.values, b.values)

    def test_replica_stream_pure_function_of_spec(self):
        rng = np.random.default_rng(11)
        features = rng.normal(size=(25, 3))
        spec = BootstrapSpec(replica_count=5, master_seed=77)
        first = [r.values.copy() for r in iter_replicas(features, spec)]
        second = [r.values.copy() for r in iter_replicas(features, spec)]
        for a, b in zip(first, second):
            assert np.array_equal(a, b)

    def test_identical_rows_degenerate(self):
        features = np.tile([1.0, 2.0, 3.0], (10, 1))
        replica = bootstrap_replica(features, 5)
        off_diag = replica.values[~np.eye(3, dtype=bool)]
        assert np.all(off_diag == 0.0)

    def test_replica_count_validated(self):
        with pytest.raises(ValueError):
            BootstrapSpec(replica_count=0, master_seed=1)


class TestMeanSimilarity:
    def test_mean_of_identical_replicas(self):
        rng = np.random.default_rng(12)
        sim = squared_correlation(rng.normal(size=(20, 3)))
        merged = mean_similarity([sim] * 5)
        assert np.allclose(merged.values, sim.values)

    def test_two_matrix_mean(self):
        def mat(v):
            return SimilarityMatrix(np.array([[1.0, v], [v, 1.0]]), "pearson")

        merged = mean_similarity([mat(0.2), mat(0.6)])
        assert merged.values[0, 1] == pytest.approx(0.4)

    def test_monte_carlo_uncorrelated(self):
        # E[rho^2] of independent normals is about 1/(T-1) = 0.002
        rng = np.random.default_rng(13)
        features = rng.normal(size=(500, 3))
        spec = BootstrapSpec(replica_count=100, master_seed=99)
        merged = mean_similarity(iter_replicas(features, spec))
        off_diag = merged.values[~np.eye(3, dtype=bool)]
        assert np.all(off_diag < 0.05)

    def test_empty_sequence(self):
        with pytest.raises(ValueError):
            mean_similarity([])

    def test_shape_mismatch(self):
        a = SimilarityMatrix(np.eye(2), "pearson")
        b = SimilarityMatrix(np.eye(3), "pearson")
        with pytest.raises(ValueError):
            mean_similarity([a, b])
