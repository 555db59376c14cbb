"""Triangulated Maximally Filtered Graph construction and bootstrap filtering."""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable

import numpy as np

from .similarity import SimilarityMatrix

MEAN_SIM_MATRIX = "mean_sim_matrix"
BOOTSTRAP_NET = "bootstrap_net"

# Exhaustive seed search is quartic in the candidate pool; above this many
# vertices only the best rows by similarity sum are considered.
SEED_POOL_LIMIT = 15


@dataclass
class FilteredGraph:
    """Sparse adjacency plus the clique bookkeeping of the greedy build."""

    n: int
    adjacency: np.ndarray
    tetrahedra: list[tuple[int, int, int, int]] = field(default_factory=list)
    triangles: list[tuple[int, int, int]] = field(default_factory=list)
    separators: list[tuple[int, int, int]] = field(default_factory=list)
    total_gain: float = 0.0
    construction: str = MEAN_SIM_MATRIX
    chordal_guaranteed: bool = False

    def __post_init__(self):
        self.adjacency = np.asarray(self.adjacency, dtype=bool)
        if self.adjacency.shape != (self.n, self.n):
            raise ValueError("adjacency shape must be n x n")
        if np.any(np.diag(self.adjacency)):
            raise ValueError("adjacency must have a zero diagonal")
        if not np.array_equal(self.adjacency, self.adjacency.T):
            raise ValueError("adjacency must be symmetric")

    @property
    def edge_count(self) -> int:
        return int(self.adjacency.sum()) // 2

    def edges(self) -> list[tuple[int, int]]:
        rows, cols = np.nonzero(np.triu(self.adjacency, k=1))
        return list(zip(rows.tolist(), cols.tolist()))


@dataclass
class EdgeFrequencyTable:
    """Across-replica counts of TMFG edges."""

    n: int
    counts: dict[tuple[int, int], int]
    replica_count: int


def _complete_graph(similarity: SimilarityMatrix) -> FilteredGraph:
    n = similarity.n
    adjacency = np.ones((n, n), dtype=bool)
    np.fill_diagonal(adjacency, False)
    gain = float(np.triu(similarity.values, k=1).sum()) if n >= 2 else 0.0
    return FilteredGraph(n=n, adjacency=adjacency, total_gain=gain,
                         construction=MEAN_SIM_MATRIX, chordal_guaranteed=True)


def _seed_tetrahedron(values: np.ndarray) -> tuple[int, int, int, int]:
    """The 4-set maximizing the sum of its six pairwise similarities.

    Exhaustive up to SEED_POOL_LIMIT vertices; beyond that the pool is the
    SEED_POOL_LIMIT vertices with largest similarity row sums.  Ties go to
    the lexicographically smallest tuple (strict > while scanning in lex
    order).
    """
    n = values.shape[0]
    if n <= SEED_POOL_LIMIT:
        pool = range(n)
    else:
        row_sums = values.sum(axis=1) - 1.0
        ranked = sorted(range(n), key=lambda v: (-row_sums[v], v))
        pool = sorted(ranked[:SEED_POOL_LIMIT])
    best = None
    best_score = -np.inf
    for quad in combinations(pool, 4):
        score = sum(values[a, b] for a, b in combinations(quad, 2))
        if score > best_score:
            best_score = score
            best = quad
    return best


def build_tmfg(similarity: SimilarityMatrix) -> FilteredGraph:
    """Greedy TMFG: seed tetrahedron, then n-4 best vertex-into-face insertions.

    Each insertion picks the (face, remaining vertex) pair with maximal
    gain, the sum of the vertex's similarities to the three face vertices;
    the chosen face becomes a separator and three new faces appear.  For
    n in {1, 2, 3} the complete graph is returned instead.
    """
    values = similarity.values
    n = similarity.n
    if n < 4:
        return _complete_graph(similarity)

    adjacency = np.zeros((n, n), dtype=bool)
    seed = _seed_tetrahedron(values)
    total_gain = float(sum(values[a, b] for a, b in combinations(seed, 2)))
    for a, b in combinations(seed, 2):
        adjacency[a, b] = adjacency[b, a] = True

    tetrahedra = [tuple(seed)]
    faces = [tuple(sorted(f)) for f in combinations(seed, 3)]
    separators: list[tuple[int, int, int]] = []
    remaining = sorted(set(range(n)) - set(seed))

    # gains[i, j]: gain of inserting remaining[j] into faces[i]
    gains = np.array([[values[list(face), v].sum() for v in remaining] for face in faces])

    while remaining:
        flat = np.argmax(gains)
        best_gain = gains.flat[flat]
        ties = np.argwhere(gains == best_gain)
        face_idx, vert_idx = min(ties, key=lambda ij: (faces[ij[0]], remaining[ij[1]]))
        face = faces[face_idx]
        vertex = remaining[vert_idx]
        total_gain += float(best_gain)

        for u in face:
            adjacency[u, vertex] = adjacency[vertex, u] = True
        tetrahedra.append(tuple(sorted(face + (vertex,))))
        separators.append(face)
        new_faces = [tuple(sorted((face[0], face[1], vertex))),
                     tuple(sorted((face[0], face[2], vertex))),
                     tuple(sorted((face[1], face[2], vertex)))]

        remaining.pop(vert_idx)
        gains = np.delete(gains, vert_idx, axis=1)
        faces.pop(face_idx)
        gains = np.delete(gains, face_idx, axis=0)
        if remaining:
            new_rows = np.array([[values[list(f), v].sum() for v in remaining] for f in new_faces])
            gains = np.vstack([gains, new_rows])
        faces.extend(new_faces)

    return FilteredGraph(
        n=n,
        adjacency=adjacency,
        tetrahedra=tetrahedra,
        triangles=faces,
        separators=separators,
        total_gain=total_gain,
        construction=MEAN_SIM_MATRIX,
        chordal_guaranteed=True,
    )


def count_edges(replica_stream: Iterable[FilteredGraph]) -> EdgeFrequencyTable:
    """Fold a stream of replica TMFGs into per-edge appearance counts."""
    counts: dict[tuple[int, int], int] = {}
    n = None
    replicas = 0
    for graph in replica_stream:
        if n is None:
            n = graph.n
        elif graph.n != n:
            raise ValueError("replica graphs must share the vertex count")
        for edge in graph.edges():
            counts[edge] = counts.get(edge, 0) + 1
        replicas += 1
    if replicas == 0:
        raise ValueError("empty replica stream")
    return EdgeFrequencyTable(n=n, counts=counts, replica_count=replicas)


def bootstrap_net(table: EdgeFrequencyTable, threshold: float) -> FilteredGraph:
    """Keep edges whose across-replica frequency is >= threshold.

    threshold = 1.0 keeps exactly the edges present in every replica; the
    result may be disconnected and carries no clique bookkeeping.
    """
    if not 0.0 < threshold <= 1.0:
        raise ValueError(f"threshold must lie in (0, 1], got {threshold}")
    if table.replica_count < 1:
        raise ValueError("replica_count must be >= 1")
    adjacency = np.zeros((table.n, table.n), dtype=bool)
    for (a, b), count in table.counts.items():
        if count / table.replica_count >= threshold:
            adjacency[a, b] = adjacency[b, a] = True
    return FilteredGraph(n=table.n, adjacency=adjacency, total_gain=0.0,
                         construction=BOOTSTRAP_NET, chordal_guaranteed=False)


def perfect_elimination_ordering(adjacency: np.ndarray) -> list[int] | None:
    """Maximum cardinality search; returns a PEO or None if not chordal."""
    n = adjacency.shape[0]
    weights = np.zeros(n, dtype=np.int64)
    visited = np.zeros(n, dtype=bool)
    order: list[int] = []
    for _ in range(n):
        candidates = np.flatnonzero(~visited)
        pick = candidates[np.argmax(weights[candidates])]
        visited[pick] = True
        order.append(int(pick))
        weights[adjacency[pick] & ~visited] += 1
    order.reverse()  # elimination order
    position = {v: i for i, v in enumerate(order)}
    for v in order:
        later = [u for u in np.flatnonzero(adjacency[v]) if position[u] > position[v]]
        if not later:
            continue
        pivot = min(later, key=lambda u: position[u])
        for u in later:
            if u != pivot and not adjacency[pivot, u]:
                return None
    return order


@dataclass
class StructureReport:
    """Pass/fail per structural invariant of a filtered graph."""

    checks: dict[str, bool]

    @property
    def all_passed(self) -> bool:
        return all(self.checks.values())


def verify_structure(graph: FilteredGraph) -> StructureReport:
    """Report-only check of the TMFG structural invariants."""
    from .homology import maximal_cliques  # local import avoids a cycle

    checks: dict[str, bool] = {}
    checks["symmetric_zero_diagonal"] = (
        not np.any(np.diag(graph.adjacency))
        and np.array_equal(graph.adjacency, graph.adjacency.T)
    )
    chordal = perfect_elimination_ordering(graph.adjacency) is not None
    checks["chordal"] = chordal
    if graph.construction == MEAN_SIM_MATRIX and graph.n >= 4:
        checks["edge_count"] = graph.edge_count == 3 * graph.n - 6
        checks["tetrahedra_count"] = len(graph.tetrahedra) == graph.n - 3
        checks["separator_count"] = len(graph.separators) == graph.n - 4
        checks["triangle_count"] = len(graph.triangles) == 2 * graph.n - 4
        cliques = maximal_cliques(graph)
        checks["maximal_cliques_size_4"] = all(len(c) == 4 for c in cliques)
    return StructureReport(checks)


def export_edge_list(graph: FilteredGraph, similarity: SimilarityMatrix | None = None) -> str:
    """One 'u v weight' line per edge, 0-based vertices."""
    lines = []
    for a, b in graph.edges():
        weight = similarity.values[a, b] if similarity is not None else 1.0
        lines.append(f"{a} {b} {weight:.12g}")
    return "\n".join(lines) + ("\n" if lines else "")


def read_edge_list(text: str, n: int) -> FilteredGraph:
    """Read back an exported edge list as a bootstrap_net-style graph."""
    adjacency = np.zeros((n, n), dtype=bool)
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        a, b = int(line.split()[0]), int(line.split()[1])
        adjacency[a, b] = adjacency[b, a] = True
    return FilteredGraph(n=n, adjacency=adjacency, construction=BOOTSTRAP_NET,
                         chordal_guaranteed=False)
