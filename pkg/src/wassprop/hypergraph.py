"""Hypergraphs, weighted graphs, clique expansion, and Laplacian spectra."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Iterable, Sequence, Tuple

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import InputError, StructureError

# Above this size the spectral gap switches from dense eigendecomposition to a
# deflated iterative eigensolver.
DENSE_EIG_LIMIT = 512


@dataclass(frozen=True)
class Hypergraph:
    """Vertex count plus a list of hyperedges (vertex subsets of size >= 2).

    Hyperedges are stored as sorted tuples. Duplicate hyperedges are allowed
    and act as a multiset (their contributions accumulate downstream);
    duplicate vertices inside one hyperedge are rejected.
    """

    n: int
    edges: Tuple[Tuple[int, ...], ...]

    def __init__(self, n: int, edges: Iterable[Sequence[int]]):
        if n < 1:
            raise InputError(f"vertex count must be >= 1, got {n}")
        canon = []
        for e in edges:
            t = tuple(sorted(int(v) for v in e))
            if len(t) < 2:
                raise InputError(f"hyperedge {t} has fewer than 2 vertices")
            if len(set(t)) != len(t):
                raise InputError(f"hyperedge {t} contains duplicate vertices")
            if t[0] < 0 or t[-1] >= n:
                raise InputError(f"hyperedge {t} has vertices outside [0, {n})")
            canon.append(t)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "edges", tuple(canon))

    def incident_edges(self) -> list:
        """For each vertex, the list of indices of hyperedges containing it."""
        inc = [[] for _ in range(self.n)]
        for idx, e in enumerate(self.edges):
            for v in e:
                inc[v].append(idx)
        return inc


@dataclass(frozen=True)
class WeightedGraph:
    """Sparse symmetric graph: map from unordered vertex pairs to positive weights."""

    n: int
    edges: Dict[Tuple[int, int], float]

    def __init__(self, n: int, edges: Dict[Tuple[int, int], float]):
        if n < 1:
            raise InputError(f"vertex count must be >= 1, got {n}")
        canon: Dict[Tuple[int, int], float] = {}
        for (i, j), w in edges.items():
            i, j = int(i), int(j)
            if i == j:
                raise InputError(f"self-loop at vertex {i}")
            if not (0 <= i < n and 0 <= j < n):
                raise InputError(f"edge ({i},{j}) outside [0, {n})")
            key = (min(i, j), max(i, j))
            if key in canon:
                raise InputError(f"duplicate edge {key}")
            w = float(w)
            if w <= 0:
                raise InputError(f"edge {key} has non-positive weight {w}")
            canon[key] = w
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "edges", canon)

    def adjacency(self) -> sp.csr_matrix:
        """Symmetric weighted adjacency matrix."""
        if not self.edges:
            return sp.csr_matrix((self.n, self.n))
        ii, jj, ww = [], [], []
        for (i, j), w in self.edges.items():
            ii += [i, j]
            jj += [j, i]
            ww += [w, w]
        return sp.csr_matrix((ww, (ii, jj)), shape=(self.n, self.n))

    def degrees(self) -> np.ndarray:
        """Weighted degree of every vertex."""
        deg = np.zeros(self.n)
        for (i, j), w in self.edges.items():
            deg[i] += w
            deg[j] += w
        return deg


@dataclass(frozen=True)
class LaplacianView:
    """Laplacian L = D - W of a weighted graph, as degrees + a matrix action."""

    graph: WeightedGraph
    degrees: np.ndarray = field(repr=False)
    matrix: sp.csr_matrix = field(repr=False)

    def apply(self, x: np.ndarray) -> np.ndarray:
        """Compute L @ x; accepts a vector or an (n, k) block of vectors."""
        return self.matrix @ x


def clique_expand(h: Hypergraph) -> WeightedGraph:
    """Weighted graph whose edges carry, for each hyperedge of size k covering
    the pair, an additive contribution 1/k^2.

    With these weights the pairwise-sum regularizer on the expanded graph
    reproduces the sum of per-hyperedge barycenter energies exactly.
    """
    weights: Dict[Tuple[int, int], float] = {}
    for e in h.edges:
        k = len(e)
        contrib = 1.0 / (k * k)
        for a in range(k):
            for b in range(a + 1, k):
                key = (e[a], e[b])
                weights[key] = weights.get(key, 0.0) + contrib
    return WeightedGraph(h.n, weights)


def laplacian(g: WeightedGraph) -> LaplacianView:
    """Assemble L = D - W as a sparse symmetric matrix with its degree vector."""
    deg = g.degrees()
    adj = g.adjacency()
    lap = sp.diags(deg) - adj
    return LaplacianView(graph=g, degrees=deg, matrix=lap.tocsr())


def is_connected(g: WeightedGraph) -> bool:
    """True iff every vertex is reachable from vertex 0 (single component)."""
    if g.n == 1:
        return True
    neighbors = [[] for _ in range(g.n)]
    for (i, j) in g.edges:
        neighbors[i].append(j)
        neighbors[j].append(i)
    seen = np.zeros(g.n, dtype=bool)
    stack = [0]
    seen[0] = True
    while stack:
        v = stack.pop()
        for u in neighbors[v]:
            if not seen[u]:
                seen[u] = True
                stack.append(u)
    return bool(seen.all())


def spectral_gap(g: WeightedGraph) -> float:
    """Smallest non-zero Laplacian eigenvalue of a connected weighted graph.

    Dense eigendecomposition up to DENSE_EIG_LIMIT vertices; above that, an
    iterative smallest-eigenvalue solve on the Laplacian with the constant
    nullvector deflated by a rank-one shift.
    """
    if not is_connected(g):
        raise StructureError("spectral gap undefined: graph is disconnected")
    if g.n == 1:
        raise StructureError("spectral gap undefined on a single vertex")
    lap = laplacian(g)
    if g.n <= DENSE_EIG_LIMIT:
        eigvals = np.linalg.eigvalsh(lap.matrix.toarray())
        return float(eigvals[1])
    # Shift the constant eigenvector's eigenvalue from 0 up to c > lambda_max
    # (Gershgorin: lambda_max <= 2 max degree), leaving lambda_1 the minimum.
    n = g.n
    c = 2.0 * float(lap.degrees.max()) + 1.0
    ones = np.ones(n) / np.sqrt(n)

    def matvec(x):
        return lap.matrix @ x + c * ones * (ones @ x)

    op = spla.LinearOperator((n, n), matvec=matvec, dtype=float)
    vals = spla.eigsh(op, k=1, which="SA", tol=1e-10, return_eigenvectors=False)
    return float(vals[0])
