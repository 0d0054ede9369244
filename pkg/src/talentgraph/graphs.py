"""Structure and semantic-similarity graphs and their GCN propagation operators."""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .embed import NodeSemantics
from .orgdata import EmailRecord

DEFAULT_TAU = 0.75


class GraphMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class WeightedGraph:
    """Undirected weighted graph. ``edges`` holds each unordered pair once with i < j."""

    order: tuple[str, ...]
    edges: tuple[tuple[int, int, float], ...]

    def __post_init__(self):
        seen = set()
        for i, j, w in self.edges:
            if not (0 <= i < j < self.n):
                raise ValueError(f"edge ({i}, {j}) must satisfy 0 <= i < j < n")
            if not (w > 0 and np.isfinite(w)):
                raise ValueError(f"edge ({i}, {j}) has non-positive or non-finite weight {w}")
            if (i, j) in seen:
                raise ValueError(f"duplicate edge ({i}, {j})")
            seen.add((i, j))

    @property
    def n(self) -> int:
        return len(self.order)

    @property
    def node_index(self) -> dict[str, int]:
        return {e: k for k, e in enumerate(self.order)}

    def adjacency(self) -> sp.csr_matrix:
        if not self.edges:
            return sp.csr_matrix((self.n, self.n))
        i, j, w = (np.asarray(c) for c in zip(*self.edges))
        a = sp.coo_matrix((w.astype(float), (i.astype(int), j.astype(int))), shape=(self.n, self.n))
        return (a + a.T).tocsr()

    def dense(self) -> np.ndarray:
        a = np.zeros((self.n, self.n))
        for i, j, w in self.edges:
            a[i, j] = a[j, i] = w
        return a

    def neighbours(self) -> list[list[int]]:
        nb: list[list[int]] = [[] for _ in range(self.n)]
        for i, j, _ in self.edges:
            nb[i].append(j)
            nb[j].append(i)
        return [sorted(x) for x in nb]

    def permuted(self, perm: Sequence[int]) -> "WeightedGraph":
        """Relabel so that old node ``k`` becomes new node ``perm[k]``."""
        order = [None] * self.n
        for k, p in enumerate(perm):
            order[p] = self.order[k]
        edges = []
        for i, j, w in self.edges:
            a, b = perm[i], perm[j]
            edges.append((min(a, b), max(a, b), w))
        return WeightedGraph(tuple(order), tuple(sorted(edges)))

    @classmethod
    def from_dense(cls, order, a: np.ndarray) -> "WeightedGraph":
        iu, ju = np.nonzero(np.triu(a, k=1))
        return cls(tuple(order), tuple((int(i), int(j), float(a[i, j])) for i, j in zip(iu, ju)))

    def save(self, stem) -> None:
        """Write ``<stem>.csv`` (i,j,weight) and ``<stem>.json`` header."""
        stem = Path(stem)
        with stem.with_suffix(".csv").open("w", encoding="utf-8") as fh:
            fh.write("i,j,weight\n")
            for i, j, w in self.edges:
                fh.write(f"{i},{j},{w!r}\n")
        header = {"n": self.n, "node_index": self.node_index}
        stem.with_suffix(".json").write_text(json.dumps(header, indent=1), encoding="utf-8")

    @classmethod
    def load(cls, stem) -> "WeightedGraph":
        stem = Path(stem)
        header = json.loads(stem.with_suffix(".json").read_text(encoding="utf-8"))
        order = [None] * header["n"]
        for e, k in header["node_index"].items():
            order[k] = e
        edges = []
        for ln in stem.with_suffix(".csv").read_text(encoding="utf-8").splitlines()[1:]:
            i, j, w = ln.split(",")
            edges.append((int(i), int(j), float(w)))
        return cls(tuple(order), tuple(edges))


def build_structure_network(
    records: Sequence[EmailRecord], order: Sequence[str], log_weights: bool = False
) -> WeightedGraph:
    """Weight of {i, j} is the number of emails exchanged in either direction."""
    pos = {e: k for k, e in enumerate(order)}
    counts: Counter = Counter()
    for r in records:
        a, b = pos[r.sender], pos[r.recipient]
        if a != b:
            counts[(min(a, b), max(a, b))] += 1
    edges = []
    for (i, j), c in sorted(counts.items()):
        w = float(np.log1p(c)) if log_weights else float(c)
        edges.append((i, j, w))
    return WeightedGraph(tuple(order), tuple(edges))


def cosine_matrix(x: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(x, axis=1)
    safe = np.where(norms > 0, norms, 1.0)
    u = x / safe[:, None]
    sim = u @ u.T
    sim[norms == 0, :] = 0.0
    sim[:, norms == 0] = 0.0
    return np.clip(sim, -1.0, 1.0)


def rescale_similarity(sim, tau: float):
    """Affine map of [tau, 1] onto [0.5, 1]."""
    return 0.5 + 0.5 * (np.asarray(sim) - tau) / (1.0 - tau)


def build_semantic_network(sem: NodeSemantics, tau: float = DEFAULT_TAU) -> WeightedGraph:
    if not 0.0 < tau < 1.0:
        raise ValueError("tau must lie in (0, 1)")
    sim = cosine_matrix(sem.centroids)
    covered = np.asarray(sem.coverage) > 0
    keep = (sim >= tau) & covered[:, None] & covered[None, :]
    iu, ju = np.nonzero(np.triu(keep, k=1))
    w = rescale_similarity(sim[iu, ju], tau)
    edges = tuple((int(i), int(j), float(x)) for i, j, x in zip(iu, ju, w))
    return WeightedGraph(tuple(sem.order), edges)


def percentile_tau(sem: NodeSemantics, q: float = 50.0) -> float:
    """Threshold at the ``q``-th percentile of off-diagonal covered-pair cosines."""
    covered = np.asarray(sem.coverage) > 0
    sim = cosine_matrix(sem.centroids[covered])
    iu, ju = np.triu_indices(sim.shape[0], k=1)
    return float(np.clip(np.percentile(sim[iu, ju], q), 1e-6, 1 - 1e-6))


@dataclass(frozen=True)
class NormalizedOperator:
    base: WeightedGraph
    matrix: sp.csr_matrix

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def __matmul__(self, x):
        return self.matrix @ x


def normalize(g: WeightedGraph) -> NormalizedOperator:
    """Entries (A_ij + [i == j]) / sqrt((d_i + 1)(d_j + 1)), d the weighted degree of A."""
    a = (g.adjacency() + sp.identity(g.n, format="csr")).tocoo()
    deg = np.asarray(a.sum(axis=1)).ravel()
    dinv = 1.0 / np.sqrt(deg)
    # a * (dinv_i * dinv_j): exactly symmetric, and on 0/1 graphs bit-identical
    # to the dense product D^-1/2 (A + I) D^-1/2
    vals = a.data * (dinv[a.row] * dinv[a.col])
    m = sp.csr_matrix((vals, (a.row, a.col)), shape=a.shape)
    m.sort_indices()
    return NormalizedOperator(g, m)


def early_fuse(g1: WeightedGraph, g2: WeightedGraph) -> WeightedGraph:
    """Union of both edge sets; each graph max-normalised to [0, 1] and then summed."""
    if g1.order != g2.order:
        raise GraphMismatchError("early fusion needs identical node sets in identical order")
    total: dict[tuple[int, int], float] = {}
    for g in (g1, g2):
        if not g.edges:
            continue
        top = max(w for _, _, w in g.edges)
        for i, j, w in g.edges:
            total[(i, j)] = total.get((i, j), 0.0) + w / top
    return WeightedGraph(g1.order, tuple((i, j, w) for (i, j), w in sorted(total.items())))
