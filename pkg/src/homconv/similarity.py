"""Squared-correlation similarity matrices and their bootstrap replicas."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np
from scipy.stats import rankdata

from .rng import make_rng, mix_seed

METHODS = ("pearson", "spearman")


@dataclass(frozen=True)
class SimilarityMatrix:
    """Symmetric n x n matrix of squared correlations, unit diagonal."""

    values: np.ndarray
    method: str

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", values)
        if self.method not in METHODS:
            raise ValueError(f"unknown similarity method {self.method!r}")
        n = values.shape[0]
        if values.shape != (n, n):
            raise ValueError(f"similarity matrix must be square, got {values.shape}")
        if not np.allclose(values, values.T, atol=1e-12):
            raise ValueError("similarity matrix must be symmetric")
        if values.min() < -1e-12 or values.max() > 1 + 1e-12:
            raise ValueError("similarity entries must lie in [0, 1]")
        if not np.allclose(np.diag(values), 1.0):
            raise ValueError("similarity diagonal must be 1")

    @property
    def n(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class BootstrapSpec:
    """How many resampled replicas to draw and from which master seed."""

    replica_count: int
    master_seed: int
    method: str = "pearson"

    def __post_init__(self):
        if self.replica_count < 1:
            raise ValueError("replica_count must be >= 1")
        if self.method not in METHODS:
            raise ValueError(f"unknown similarity method {self.method!r}")

    def replica_seed(self, index: int) -> int:
        return mix_seed(self.master_seed, index)


def squared_correlation(features: np.ndarray, method: str = "pearson") -> SimilarityMatrix:
    """Column-pairwise squared correlation (Pearson, or Pearson of average ranks).

    Constant columns get similarity 0 with every other column and 1 on the
    diagonal, so degenerate bootstrap draws stay well-defined.
    """
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2 or features.shape[0] < 2:
        raise ValueError("need a T x n matrix with T >= 2")
    if method not in METHODS:
        raise ValueError(f"unknown similarity method {method!r}")

    data = features
    if method == "spearman":
        data = rankdata(features, axis=0)  # average ranks on ties

    centered = data - data.mean(axis=0)
    norms = np.sqrt((centered ** 2).sum(axis=0))
    constant = norms == 0.0
    safe_norms = np.where(constant, 1.0, norms)
    unit = centered / safe_norms
    corr = unit.T @ unit
    values = corr ** 2
    values[constant, :] = 0.0
    values[:, constant] = 0.0
    np.fill_diagonal(values, 1.0)
    values = np.clip(values, 0.0, 1.0)
    values = (values + values.T) / 2.0
    return SimilarityMatrix(values, method)


def bootstrap_replica(features: np.ndarray, replica_seed: int,
                      method: str = "pearson") -> SimilarityMatrix:
    """Similarity of one with-replacement row resample of `features`."""
    features = np.asarray(features, dtype=np.float64)
    total = features.shape[0]
    rows = make_rng(replica_seed).integers(0, total, size=total)
    return squared_correlation(features[rows], method)


def iter_replicas(features: np.ndarray, spec: BootstrapSpec) -> Iterator[SimilarityMatrix]:
    """Stream the replica similarity matrices without retaining them."""
    for i in range(spec.replica_count):
        yield bootstrap_replica(features, spec.replica_seed(i), spec.method)


def mean_similarity(replicas: Iterable[SimilarityMatrix]) -> SimilarityMatrix:
    """Entry-wise mean of replica matrices, folded in stream order."""
    total = None
    count = 0
    method = None
    shape = None
    for replica in replicas:
        if total is None:
            total = np.zeros_like(replica.values)
            method = replica.method
            shape = replica.values.shape
        if replica.values.shape != shape:
            raise ValueError("replica shape mismatch")
        if replica.method != method:
            raise ValueError("replica method mismatch")
        total += replica.values
        count += 1
    if count == 0:
        raise ValueError("cannot average an empty replica sequence")
    values = total / count
    np.fill_diagonal(values, 1.0)
    values = np.clip((values + values.T) / 2.0, 0.0, 1.0)
    return SimilarityMatrix(values, method)
