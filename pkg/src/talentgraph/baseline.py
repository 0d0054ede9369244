"""Score-based heuristic recommender: semantic similarity minus centrality gaps."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .features import NodeFeatures

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class BaselineWeights:
    alpha_s: float = 0.8
    alpha_d: float = 0.05
    alpha_c: float = 0.05
    alpha_b: float = 0.05
    alpha_e: float = 0.05

    def __post_init__(self):
        if min(self.alpha_s, *self.penalties) < 0:
            raise ValueError("baseline weights must be non-negative")

    @property
    def penalties(self) -> np.ndarray:
        return np.array([self.alpha_d, self.alpha_c, self.alpha_b, self.alpha_e])


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0 or nv == 0:
        return 0.0
    return float(np.clip(u @ v / (nu * nv), -1.0, 1.0))


def heuristic_score(i: int, j: int, feats: NodeFeatures, w: BaselineWeights = BaselineWeights()):
    """Return ``(score, flagged)``; ``flagged`` marks a zero semantic vector on either side."""
    s = feats.semantic()
    cent = feats.centralities()
    flagged = not (np.any(s[i]) and np.any(s[j]))
    sim = 0.0 if flagged else cosine(s[i], s[j])
    gap = np.abs(cent[i] - cent[j])
    return w.alpha_s * sim - float(w.penalties @ gap), flagged


def score_matrix(feats: NodeFeatures, w: BaselineWeights = BaselineWeights()) -> np.ndarray:
    """All-pairs heuristic scores, n x n."""
    s = feats.semantic()
    norms = np.linalg.norm(s, axis=1)
    u = s / np.where(norms > 0, norms, 1.0)[:, None]
    sim = np.clip(u @ u.T, -1.0, 1.0)
    sim[norms == 0] = 0.0
    sim[:, norms == 0] = 0.0
    cent = feats.centralities()
    pen = np.zeros_like(sim)
    for k, a in enumerate(w.penalties):
        pen += a * np.abs(cent[:, k][:, None] - cent[:, k][None, :])
    return w.alpha_s * sim - pen


def heuristic_rank(query: str, pool: Sequence[str], feats: NodeFeatures,
                   w: BaselineWeights = BaselineWeights()) -> list[tuple[str, float]]:
    if not pool:
        raise ValueError("empty candidate pool")
    if query in pool:
        raise ValueError("candidate pool must exclude the query")
    pos = {e: k for k, e in enumerate(feats.order)}
    q = pos[query]
    scored = []
    for cand in pool:
        score, flagged = heuristic_score(q, pos[cand], feats, w)
        if flagged:
            log.warning("zero semantic vector in pair (%s, %s)", query, cand)
        scored.append((cand, score))
    scored.sort(key=lambda t: (-t[1], t[0]))
    return scored
