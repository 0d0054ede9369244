"""Node feature assembly and the feature-validation analytics.

Layout of a feature row: semantic centroid in columns 0-99, then degree,
closeness, betweenness, eigenvector in columns 100-103. Centrality columns
are min-max scaled over nodes; the semantic block is left as is.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from sklearn.model_selection import StratifiedKFold

from .centrality import MEASURES, CentralityVector
from .embed import NodeSemantics

FEATURE_KEYS = ("s", "d", "c", "b", "e")
CENTRALITY_KEYS = ("d", "c", "b", "e")


class NodeMismatchError(ValueError):
    pass


class StratificationError(ValueError):
    pass


def minmax(col: np.ndarray) -> np.ndarray:
    lo, hi = col.min(), col.max()
    if hi == lo:
        return np.zeros_like(col, dtype=float)
    return (col - lo) / (hi - lo)


@dataclass
class NodeFeatures:
    order: list[str]
    matrix: np.ndarray
    sem_dim: int = 100

    @property
    def layout(self) -> dict[str, slice]:
        k = self.sem_dim
        return {"s": slice(0, k), "d": slice(k, k + 1), "c": slice(k + 1, k + 2),
                "b": slice(k + 2, k + 3), "e": slice(k + 3, k + 4)}

    def columns(self, keys: Sequence[str]) -> np.ndarray:
        lay = self.layout
        return np.concatenate([self.matrix[:, lay[k]] for k in keys], axis=1)

    def centralities(self) -> np.ndarray:
        return self.columns(CENTRALITY_KEYS)

    def semantic(self) -> np.ndarray:
        return self.matrix[:, self.layout["s"]]

    def write_csv(self, path) -> None:
        with Path(path).open("w", encoding="utf-8") as fh:
            names = [f"s{k}" for k in range(self.sem_dim)] + list(CENTRALITY_KEYS)
            fh.write("employee_id," + ",".join(names) + "\n")
            for e, row in zip(self.order, self.matrix):
                fh.write(e + "," + ",".join(repr(float(v)) for v in row) + "\n")

    @classmethod
    def read_csv(cls, path) -> "NodeFeatures":
        lines = Path(path).read_text(encoding="utf-8").splitlines()
        sem_dim = len(lines[0].split(",")) - 1 - 4
        order, rows = [], []
        for ln in lines[1:]:
            parts = ln.split(",")
            order.append(parts[0])
            rows.append([float(v) for v in parts[1:]])
        return cls(order, np.asarray(rows, float), sem_dim)


def assemble_features(sem: NodeSemantics, cent: CentralityVector) -> NodeFeatures:
    if list(sem.order) != list(cent.order):
        raise NodeMismatchError("semantic centroids and centralities cover different nodes")
    scaled = [minmax(np.asarray(getattr(cent, m), float)) for m in MEASURES]
    mat = np.column_stack([sem.centroids] + scaled)
    return NodeFeatures(list(sem.order), mat, sem.centroids.shape[1])


# --- separability -----------------------------------------------------------


def silhouette(x: np.ndarray, labels: Sequence) -> float:
    """Mean silhouette with Euclidean distance; singleton clusters score 0."""
    x = np.asarray(x, float)
    if x.ndim == 1:
        x = x[:, None]
    labels = np.asarray(labels)
    uniq = np.unique(labels)
    if len(uniq) < 2:
        raise ValueError("silhouette needs at least two distinct labels")
    if len(labels) < 2:
        raise ValueError("silhouette needs at least two points")
    sq = (x * x).sum(axis=1)
    dist = np.sqrt(np.maximum(sq[:, None] + sq[None, :] - 2.0 * x @ x.T, 0.0))
    np.fill_diagonal(dist, 0.0)
    masks = labels[None, :] == uniq[:, None]                     # k x n
    sizes = masks.sum(axis=1)
    sums = dist @ masks.T                                       # n x k
    own = np.searchsorted(uniq, labels)
    own_size = sizes[own]
    a = sums[np.arange(len(labels)), own] / np.maximum(own_size - 1, 1)
    other = sums / sizes[None, :]
    other[np.arange(len(labels)), own] = np.inf
    b = other.min(axis=1)
    s = np.where(own_size > 1, (b - a) / np.maximum(np.maximum(a, b), 1e-300), 0.0)
    s = np.where((own_size > 1) & (np.maximum(a, b) == 0), 0.0, s)
    return float(s.mean())


def rank_auc(score: np.ndarray, positive: np.ndarray) -> float:
    """Mann-Whitney AUC with midranks for ties."""
    score = np.asarray(score, float)
    positive = np.asarray(positive, bool)
    n_pos, n_neg = positive.sum(), (~positive).sum()
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC needs both classes present")
    order = np.argsort(score, kind="mergesort")
    ranks = np.empty(len(score))
    sorted_scores = score[order]
    i = 0
    while i < len(score):
        j = i
        while j + 1 < len(score) and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    u = ranks[positive].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def first_principal_component(x: np.ndarray) -> np.ndarray:
    """PC1 scores, sign fixed so the largest-magnitude loading is positive."""
    xc = x - x.mean(axis=0)
    _, _, vt = np.linalg.svd(xc, full_matrices=False)
    v = vt[0]
    if v[np.argmax(np.abs(v))] < 0:
        v = -v
    return xc @ v


def pca_2d(x: np.ndarray) -> np.ndarray:
    xc = x - x.mean(axis=0)
    _, _, vt = np.linalg.svd(xc, full_matrices=False)
    comps = vt[:2].copy()
    for k in range(len(comps)):
        if comps[k][np.argmax(np.abs(comps[k]))] < 0:
            comps[k] = -comps[k]
    return xc @ comps.T


def role_auc(x: np.ndarray, roles: Sequence[str], positive_role: str = "leader") -> float:
    """AUC of a scalar feature (or PC1 of a vector feature) for leader vs the rest."""
    x = np.asarray(x, float)
    if x.ndim == 2 and x.shape[1] > 1:
        x = first_principal_component(x)
    return rank_auc(x.ravel(), np.asarray(roles) == positive_role)


# --- classification over feature combinations -------------------------------


def all_combos(keys: Sequence[str] = FEATURE_KEYS) -> list[tuple[str, ...]]:
    out = []
    for r in range(len(keys), 0, -1):
        out.extend(itertools.combinations(keys, r))
    return out


@dataclass
class SoftmaxConfig:
    epochs: int = 500
    learning_rate: float = 0.1
    l2: float = 1e-4


def fit_softmax(x: np.ndarray, y: np.ndarray, n_classes: int, cfg: SoftmaxConfig):
    """Multinomial logistic regression by full-batch gradient descent."""
    n, d = x.shape
    w = np.zeros((d, n_classes))
    b = np.zeros(n_classes)
    onehot = np.eye(n_classes)[y]
    for _ in range(cfg.epochs):
        z = x @ w + b
        z -= z.max(axis=1, keepdims=True)
        p = np.exp(z)
        p /= p.sum(axis=1, keepdims=True)
        g = (p - onehot) / n
        w -= cfg.learning_rate * (x.T @ g + cfg.l2 * w)
        b -= cfg.learning_rate * g.sum(axis=0)
    return w, b


def macro_f1(y_true: np.ndarray, y_pred: np.ndarray, n_classes: int) -> float:
    scores = []
    for c in range(n_classes):
        tp = np.sum((y_pred == c) & (y_true == c))
        fp = np.sum((y_pred == c) & (y_true != c))
        fn = np.sum((y_pred != c) & (y_true == c))
        denom = 2 * tp + fp + fn
        scores.append(0.0 if denom == 0 else 2 * tp / denom)
    return float(np.mean(scores))


def cv_macro_f1(x: np.ndarray, labels: Sequence, folds: int = 5, seed: int = 0,
                cfg: SoftmaxConfig | None = None) -> float:
    cfg = cfg or SoftmaxConfig()
    classes, y = np.unique(np.asarray(labels), return_inverse=True)
    counts = np.bincount(y)
    if counts.min() < folds:
        raise StratificationError(
            f"class {classes[counts.argmin()]!r} has {counts.min()} members, fewer than {folds} folds")
    skf = StratifiedKFold(n_splits=folds, shuffle=True, random_state=seed)
    scores = []
    for tr, te in skf.split(x, y):
        mu = x[tr].mean(axis=0)
        sd = x[tr].std(axis=0)
        sd[sd == 0] = 1.0
        w, b = fit_softmax((x[tr] - mu) / sd, y[tr], len(classes), cfg)
        pred = np.argmax(((x[te] - mu) / sd) @ w + b, axis=1)
        scores.append(macro_f1(y[te], pred, len(classes)))
    return float(np.mean(scores))


def combo_f1(feats: NodeFeatures, families: Sequence[str], roles: Sequence[str],
             combos: Sequence[tuple[str, ...]] | None = None, seed: int = 0,
             cfg: SoftmaxConfig | None = None) -> dict[tuple[str, ...], tuple[float, float]]:
    combos = all_combos() if combos is None else combos
    table = {}
    for combo in combos:
        x = feats.columns(combo)
        table[tuple(combo)] = (cv_macro_f1(x, families, seed=seed, cfg=cfg),
                               cv_macro_f1(x, roles, seed=seed, cfg=cfg))
    return table


# --- semantic alignment with families ----------------------------------------


def family_similarity_matrix(centroids: np.ndarray, families: Sequence[str],
                             coverage: Sequence[int] | None = None):
    """Mean pairwise cosine between family blocks; diagonal over distinct pairs only."""
    fam = np.asarray(families)
    mask = np.ones(len(fam), bool) if coverage is None else np.asarray(coverage) > 0
    names = sorted(set(fam[mask]))
    norms = np.linalg.norm(centroids, axis=1)
    u = centroids / np.where(norms > 0, norms, 1.0)[:, None]
    sim = u @ u.T
    k = len(names)
    out = np.zeros((k, k))
    for a in range(k):
        ia = np.flatnonzero(mask & (fam == names[a]))
        for b in range(a, k):
            ib = np.flatnonzero(mask & (fam == names[b]))
            block = sim[np.ix_(ia, ib)]
            if a == b:
                m = len(ia)
                val = (block.sum() - np.trace(block)) / (m * (m - 1)) if m > 1 else 1.0
            else:
                val = block.mean()
            out[a, b] = out[b, a] = val
    return names, out


@dataclass
class KMeansResult:
    labels: np.ndarray
    centers: np.ndarray
    inertia: float


def kmeans(x: np.ndarray, k: int = 5, seed: int = 0, restarts: int = 10,
           max_iter: int = 300) -> KMeansResult:
    """Lloyd iterations from k-means++ seeds; the lowest-inertia restart wins."""
    x = np.asarray(x, float)
    n = len(x)
    if k > n:
        raise ValueError(f"k={k} exceeds the {n} available points")
    rng = np.random.default_rng(seed)
    best = None
    for _ in range(restarts):
        centers = [x[rng.integers(n)]]
        d2 = ((x - centers[0]) ** 2).sum(axis=1)
        for _ in range(1, k):
            total = d2.sum()
            idx = rng.choice(n, p=d2 / total) if total > 0 else rng.integers(n)
            centers.append(x[idx])
            d2 = np.minimum(d2, ((x - x[idx]) ** 2).sum(axis=1))
        c = np.array(centers)
        labels = None
        for _ in range(max_iter):
            dist = ((x[:, None, :] - c[None, :, :]) ** 2).sum(axis=2)
            new = dist.argmin(axis=1)
            if labels is not None and np.array_equal(new, labels):
                break
            labels = new
            for j in range(k):
                members = x[labels == j]
                if len(members):
                    c[j] = members.mean(axis=0)
        inertia = float(((x - c[labels]) ** 2).sum())
        if best is None or inertia < best.inertia:
            best = KMeansResult(labels.copy(), c.copy(), inertia)
    return best


def contingency(clusters: np.ndarray, families: Sequence[str]):
    names = sorted(set(families))
    k = int(clusters.max()) + 1
    table = np.zeros((k, len(names)), dtype=int)
    pos = {f: j for j, f in enumerate(names)}
    for c, f in zip(clusters, families):
        table[c, pos[f]] += 1
    return names, table


# --- full report ---------------------------------------------------------------


@dataclass
class ValidationReport:
    silhouette_by_feature: dict[str, float]
    auc_by_feature: dict[str, float]
    f1_table: dict[tuple[str, ...], tuple[float, float]]
    family_names: list[str]
    family_similarity: np.ndarray
    kmeans_alignment: np.ndarray
    pca: np.ndarray = field(repr=False)

    def to_json(self) -> dict:
        return {
            "silhouette_by_feature": self.silhouette_by_feature,
            "auc_by_feature": self.auc_by_feature,
            "f1_table": [{"features": list(k), "f1_family": v[0], "f1_role": v[1]}
                         for k, v in self.f1_table.items()],
            "family_names": self.family_names,
            "family_similarity": self.family_similarity.tolist(),
            "kmeans_alignment": self.kmeans_alignment.tolist(),
        }


def validate_features(feats: NodeFeatures, families: Sequence[str], roles: Sequence[str],
                      coverage: Sequence[int] | None = None, seed: int = 0,
                      with_f1: bool = True) -> ValidationReport:
    sil, auc = {}, {}
    for key in FEATURE_KEYS:
        x = feats.columns([key])
        sil[key] = silhouette(x, families)
        auc[key] = role_auc(x, roles)
    f1 = combo_f1(feats, families, roles, seed=seed) if with_f1 else {}
    names, sim = family_similarity_matrix(feats.semantic(), families, coverage)
    km = kmeans(feats.semantic(), k=len(names), seed=seed)
    _, table = contingency(km.labels, families)
    return ValidationReport(sil, auc, f1, names, sim, table, pca_2d(feats.semantic()))
