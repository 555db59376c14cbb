"""Maximal clique extraction and simplicial family assembly."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .tmfg import FilteredGraph, perfect_elimination_ordering

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SimplicialFamilies:
    """Tetrahedra / triangle / edge families plus their flat index vectors."""

    tetrahedra: list[tuple[int, ...]]
    triangles: list[tuple[int, ...]]
    edges: list[tuple[int, ...]]
    singletons: list[int]
    h_indices: np.ndarray = field(init=False)
    r_indices: np.ndarray = field(init=False)
    e_indices: np.ndarray = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "h_indices", _flatten(self.tetrahedra))
        object.__setattr__(self, "r_indices", _flatten(self.triangles))
        object.__setattr__(self, "e_indices", _flatten(self.edges))

    def nonempty(self) -> dict[str, list[tuple[int, ...]]]:
        """Populated families keyed by name, in tetrahedra/triangles/edges order."""
        out = {}
        if self.tetrahedra:
            out["tetrahedra"] = self.tetrahedra
        if self.triangles:
            out["triangles"] = self.triangles
        if self.edges:
            out["edges"] = self.edges
        return out


def _flatten(tuples: list[tuple[int, ...]]) -> np.ndarray:
    if not tuples:
        return np.empty(0, dtype=np.int64)
    return np.concatenate([np.asarray(t, dtype=np.int64) for t in tuples])


def _bron_kerbosch_pivot(adjacency: np.ndarray) -> list[tuple[int, ...]]:
    n = adjacency.shape[0]
    neighbors = [frozenset(np.flatnonzero(adjacency[v]).tolist()) for v in range(n)]
    cliques: list[tuple[int, ...]] = []

    def expand(clique: list[int], candidates: set[int], excluded: set[int]) -> None:
        if not candidates and not excluded:
            cliques.append(tuple(sorted(clique)))
            return
        pivot = max(candidates | excluded,
                    key=lambda u: len(candidates & neighbors[u]))
        for v in sorted(candidates - neighbors[pivot]):
            expand(clique + [v], candidates & neighbors[v], excluded & neighbors[v])
            candidates.remove(v)
            excluded.add(v)

    expand([], set(range(n)), set())
    return cliques


def _chordal_cliques(adjacency: np.ndarray, peo: list[int]) -> list[tuple[int, ...]]:
    """Maximal cliques of a chordal graph from a perfect elimination ordering."""
    position = {v: i for i, v in enumerate(peo)}
    candidates = []
    for v in peo:
        later = [u for u in np.flatnonzero(adjacency[v]) if position[u] > position[v]]
        candidates.append(frozenset([v, *later]))
    # drop candidates contained in another candidate
    cliques = []
    for i, c in enumerate(candidates):
        if not any(c < other for other in candidates):
            cliques.append(c)
    return sorted(set(tuple(sorted(c)) for c in cliques))


def maximal_cliques(graph: FilteredGraph) -> list[tuple[int, ...]]:
    """All maximal cliques, each sorted, the list in lexicographic order.

    Chordal graphs go through the linear-time elimination-ordering route;
    anything else falls back to pivoted Bron-Kerbosch.  Isolated vertices
    appear as size-1 cliques.
    """
    adjacency = np.asarray(graph.adjacency, dtype=bool)
    if graph.chordal_guaranteed:
        peo = perfect_elimination_ordering(adjacency)
        if peo is not None:
            return _chordal_cliques(adjacency, peo)
    return sorted(_bron_kerbosch_pivot(adjacency))


def build_families(cliques: list[tuple[int, ...]]) -> SimplicialFamilies:
    """Group maximal cliques by size into the three simplicial families.

    Cliques of size s > 4 (possible only for frequency-filtered graphs)
    are decomposed into s-3 tetrahedra by a width-4 sliding window over
    the sorted vertex list.  Singletons are kept out of the network input
    and logged.
    """
    if not cliques:
        raise ValueError("empty clique set")
    tetrahedra: list[tuple[int, ...]] = []
    triangles: list[tuple[int, ...]] = []
    edges: list[tuple[int, ...]] = []
    singletons: list[int] = []
    for clique in cliques:
        clique = tuple(sorted(clique))
        size = len(clique)
        if size == 1:
            singletons.append(clique[0])
        elif size == 2:
            edges.append(clique)
        elif size == 3:
            triangles.append(clique)
        elif size == 4:
            tetrahedra.append(clique)
        else:
            tetrahedra.extend(clique[i:i + 4] for i in range(size - 3))
    if singletons:
        logger.warning("dropping isolated features from the network input: %s",
                       sorted(singletons))
    return SimplicialFamilies(
        tetrahedra=sorted(set(tetrahedra)),
        triangles=sorted(set(triangles)),
        edges=sorted(set(edges)),
        singletons=sorted(singletons),
    )


def families_from_graph(graph: FilteredGraph) -> SimplicialFamilies:
    return build_families(maximal_cliques(graph))


def families_report(families: SimplicialFamilies) -> str:
    """Human-readable dump of each family's simplices, for audit."""
    lines = []
    for name, members in (("tetrahedra", families.tetrahedra),
                          ("triangles", families.triangles),
                          ("edges", families.edges)):
        lines.append(f"{name} ({len(members)}):")
        for member in members:
            lines.append("  " + " ".join(str(v) for v in member))
    if families.singletons:
        lines.append(f"singletons ({len(families.singletons)}): "
                     + " ".join(str(v) for v in families.singletons))
    return "\n".join(lines) + "\n"
