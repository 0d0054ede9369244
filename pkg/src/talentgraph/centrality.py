"""Degree, closeness, betweenness, and eigenvector centrality of the structure graph.

The first three use the unweighted skeleton (hop distances and shortest-path
counts). Eigenvector centrality uses edge weights.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .graphs import WeightedGraph

MEASURES = ("degree", "closeness", "betweenness", "eigenvector")


class ConvergenceError(ArithmeticError):
    def __init__(self, residual: float, iterations: int):
        super().__init__(f"power iteration did not converge after {iterations} steps "
                         f"(last residual {residual:.3e})")
        self.residual = residual
        self.iterations = iterations


@dataclass
class CentralityVector:
    order: list[str]
    degree: np.ndarray
    closeness: np.ndarray
    betweenness: np.ndarray
    eigenvector: np.ndarray

    def as_matrix(self) -> np.ndarray:
        return np.column_stack([getattr(self, m) for m in MEASURES])

    def as_dict(self, measure: str) -> dict[str, float]:
        return dict(zip(self.order, getattr(self, measure).tolist()))

    def write_csv(self, path) -> None:
        with Path(path).open("w", encoding="utf-8") as fh:
            fh.write("employee_id," + ",".join(MEASURES) + "\n")
            for k, e in enumerate(self.order):
                vals = ",".join(repr(float(getattr(self, m)[k])) for m in MEASURES)
                fh.write(f"{e},{vals}\n")

    @classmethod
    def read_csv(cls, path) -> "CentralityVector":
        rows = [ln.split(",") for ln in Path(path).read_text(encoding="utf-8").splitlines()[1:]]
        order = [r[0] for r in rows]
        cols = np.asarray([[float(v) for v in r[1:]] for r in rows]).reshape(len(rows), 4)
        return cls(order, *(cols[:, k] for k in range(4)))


def degree_centrality(g: WeightedGraph) -> np.ndarray:
    d = np.zeros(g.n)
    for i, j, _ in g.edges:
        d[i] += 1
        d[j] += 1
    return d


def _bfs(nb: list[list[int]], s: int):
    dist = [-1] * len(nb)
    dist[s] = 0
    q = deque([s])
    while q:
        v = q.popleft()
        for w in nb[v]:
            if dist[w] < 0:
                dist[w] = dist[v] + 1
                q.append(w)
    return dist


def closeness_centrality(g: WeightedGraph) -> np.ndarray:
    """1 / (sum of hop distances within the component), scaled by (|C| - 1) / (n - 1)."""
    nb = g.neighbours()
    out = np.zeros(g.n)
    if g.n < 2:
        return out
    for v in range(g.n):
        dist = [d for d in _bfs(nb, v) if d > 0]
        if dist:
            out[v] = (1.0 / sum(dist)) * len(dist) / (g.n - 1)
    return out


def betweenness_centrality(g: WeightedGraph) -> np.ndarray:
    """Brandes accumulation; each unordered endpoint pair counted once."""
    nb = g.neighbours()
    cb = np.zeros(g.n)
    for s in range(g.n):
        stack = []
        preds: list[list[int]] = [[] for _ in range(g.n)]
        sigma = np.zeros(g.n)
        sigma[s] = 1.0
        dist = [-1] * g.n
        dist[s] = 0
        q = deque([s])
        while q:
            v = q.popleft()
            stack.append(v)
            for w in nb[v]:
                if dist[w] < 0:
                    dist[w] = dist[v] + 1
                    q.append(w)
                if dist[w] == dist[v] + 1:
                    sigma[w] += sigma[v]
                    preds[w].append(v)
        delta = np.zeros(g.n)
        while stack:
            w = stack.pop()
            for v in preds[w]:
                delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w])
            if w != s:
                cb[w] += delta[w]
    return cb / 2.0


def connected_components(g: WeightedGraph) -> list[list[int]]:
    nb = g.neighbours()
    seen = [False] * g.n
    comps = []
    for s in range(g.n):
        if seen[s]:
            continue
        seen[s] = True
        comp, q = [s], deque([s])
        while q:
            v = q.popleft()
            for w in nb[v]:
                if not seen[w]:
                    seen[w] = True
                    comp.append(w)
                    q.append(w)
        comps.append(sorted(comp))
    return comps


def eigenvector_centrality(g: WeightedGraph, tol: float = 1e-9, max_iter: int = 10_000) -> np.ndarray:
    """Principal eigenvector of the weighted adjacency, per component, max-norm 1.

    Iterates on A / max(A) + I, which has the same eigenvectors as A but a
    unique dominant eigenvalue on bipartite components.
    """
    out = np.zeros(g.n)
    if not g.edges:
        return out
    a = g.adjacency()
    a = a / a.max()
    for comp in connected_components(g):
        if len(comp) < 2:
            continue
        sub = a[comp][:, comp]
        x = np.ones(len(comp))
        residual = np.inf
        for _ in range(max_iter):
            y = sub @ x + x
            y /= np.abs(y).max()
            residual = np.abs(y - x).max()
            x = y
            if residual < tol:
                break
        else:
            raise ConvergenceError(residual, max_iter)
        out[comp] = x
    return out


def compute_all(g: WeightedGraph, tol: float = 1e-9, max_iter: int = 10_000) -> CentralityVector:
    return CentralityVector(
        list(g.order),
        degree_centrality(g),
        closeness_centrality(g),
        betweenness_centrality(g),
        eigenvector_centrality(g, tol, max_iter),
    )
