"""Network topologies, graph Laplacians and consensus quadratic forms.

The Laplacian here is the plain combinatorial one: degree on the diagonal,
-1 for every edge. Stacked node variables live in R^(m*n) but the Kronecker
factor is never materialized; everything network-level operates blockwise on
(m, n) arrays.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .rng import Purpose, stream

__all__ = [
    "TopologySpec",
    "Graph",
    "build_topology",
    "laplacian",
    "lambda_max",
    "sqrt_laplacian",
    "consensus_quadratic",
]

_ER_RETRY_BUDGET = 100


@dataclass(frozen=True)
class TopologySpec:
    """Declarative description of a network topology.

    Attributes:
        kind: one of "complete", "erdos_renyi", "cycle", "star".
        m: node count, at least 2.
        er_edge_prob: edge probability, required iff kind is "erdos_renyi".
        seed: edge-sampling seed, required iff kind is "erdos_renyi".
    """

    kind: str
    m: int
    er_edge_prob: Optional[float] = None
    seed: Optional[int] = None

    def validate(self) -> None:
        if self.kind not in ("complete", "erdos_renyi", "cycle", "star"):
            raise ValueError(f"unknown topology kind {self.kind!r}")
        if self.m < 2:
            raise ValueError(f"topology needs m >= 2 nodes, got {self.m}")
        if self.kind == "erdos_renyi":
            if self.er_edge_prob is None or self.seed is None:
                raise ValueError("erdos_renyi topology requires er_edge_prob and seed")
            if not 0.0 < self.er_edge_prob <= 1.0:
                raise ValueError(f"er_edge_prob must be in (0, 1], got {self.er_edge_prob}")
        elif self.er_edge_prob is not None:
            raise ValueError(f"er_edge_prob is only valid for erdos_renyi, not {self.kind}")


@dataclass(frozen=True)
class Graph:
    """Undirected connected graph as sorted adjacency lists.

    Attributes:
        m: node count.
        adjacency: tuple of m sorted neighbor tuples.
    """

    m: int
    adjacency: tuple

    @property
    def degrees(self) -> np.ndarray:
        return np.array([len(a) for a in self.adjacency], dtype=int)

    @property
    def edges(self) -> list:
        """Undirected edge list with i < j."""
        return [(i, j) for i in range(self.m) for j in self.adjacency[i] if i < j]


def _from_edge_set(m: int, edges: set) -> Graph:
    neigh = [set() for _ in range(m)]
    for i, j in edges:
        neigh[i].add(j)
        neigh[j].add(i)
    return Graph(m=m, adjacency=tuple(tuple(sorted(s)) for s in neigh))


def _is_connected(m: int, adjacency) -> bool:
    seen = {0}
    frontier = [0]
    while frontier:
        nxt = []
        for i in frontier:
            for j in adjacency[i]:
                if j not in seen:
                    seen.add(j)
                    nxt.append(j)
        frontier = nxt
    return len(seen) == m


def build_topology(spec: TopologySpec) -> Graph:
    """Construct the graph described by spec.

    Erdos-Renyi samples are redrawn with an incremented sub-seed until
    connected, up to a fixed retry budget.
    """
    spec.validate()
    m = spec.m
    if spec.kind == "complete":
        edges = {(i, j) for i in range(m) for j in range(i + 1, m)}
        return _from_edge_set(m, edges)
    if spec.kind == "cycle":
        edges = {(i, (i + 1) % m) if i < (i + 1) % m else ((i + 1) % m, i) for i in range(m)}
        return _from_edge_set(m, edges)
    if spec.kind == "star":
        return _from_edge_set(m, {(0, j) for j in range(1, m)})
    # erdos_renyi
    for attempt in range(_ER_RETRY_BUDGET):
        rng = stream(spec.seed, Purpose.TOPOLOGY, attempt)
        draws = rng.random(m * (m - 1) // 2)
        edges = set()
        idx = 0
        for i in range(m):
            for j in range(i + 1, m):
                if draws[idx] < spec.er_edge_prob:
                    edges.add((i, j))
                idx += 1
        g = _from_edge_set(m, edges)
        if _is_connected(m, g.adjacency):
            return g
    raise RuntimeError(
        f"erdos_renyi(m={m}, p={spec.er_edge_prob}) stayed disconnected "
        f"after {_ER_RETRY_BUDGET} attempts"
    )


def laplacian(g: Graph) -> np.ndarray:
    """Dense symmetric m x m Laplacian: degree diagonal, -1 per edge."""
    L = np.zeros((g.m, g.m))
    for i, neigh in enumerate(g.adjacency):
        L[i, i] = len(neigh)
        for j in neigh:
            L[i, j] = -1.0
    return L


def lambda_max(L: np.ndarray, tol: float = 1e-10) -> float:
    """Largest eigenvalue of a symmetric PSD matrix.

    Dense symmetric eigensolve up to m = 1000; power iteration with a cap
    above that.
    """
    m = L.shape[0]
    if m <= 1000:
        return float(np.linalg.eigvalsh(L)[-1])
    rng = np.random.default_rng(0)
    x = rng.standard_normal(m)
    x /= np.linalg.norm(x)
    lam = 0.0
    for _ in range(100_000):
        y = L @ x
        norm = np.linalg.norm(y)
        if norm == 0.0:
            return 0.0
        y /= norm
        lam_new = float(y @ L @ y)
        if abs(lam_new - lam) <= tol * max(1.0, abs(lam_new)):
            return lam_new
        lam, x = lam_new, y
    raise RuntimeError("power iteration did not converge within the iteration cap")


def sqrt_laplacian(L: np.ndarray) -> np.ndarray:
    """Symmetric PSD square root via eigendecomposition (test scale, m <= 1000).

    Eigenvalues in [-1e-10, 1e-10] are flushed to exactly 0 so the root
    annihilates the null space instead of turning eps-level eigensolver
    noise into sqrt(eps)-level leakage; anything below -1e-10 is treated
    as a broken input.
    """
    if L.shape[0] > 1000:
        raise ValueError("sqrt_laplacian is a test-scale operation (m <= 1000)")
    vals, vecs = np.linalg.eigh(L)
    if vals[0] < -1e-10:
        raise ValueError(f"matrix is not PSD: smallest eigenvalue {vals[0]}")
    vals = np.where(vals <= 1e-10, 0.0, vals)
    return (vecs * np.sqrt(vals)) @ vecs.T


def consensus_quadratic(g: Graph, x: np.ndarray) -> float:
    """Sum over edges of ||x_i - x_j||^2 for blockwise x of shape (m, n).

    Equals the Laplacian quadratic form of the stacked vector, i.e. the
    squared consensus distance, without materializing any matrix root.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.shape[0] != g.m:
        raise ValueError(f"expected {g.m} blocks, got {x.shape[0]}")
    total = 0.0
    for i, j in g.edges:
        d = x[i] - x[j]
        total += float(d @ d)
    return total
