"""Weak-label pairs, margin ranking loss, and the full-batch training loop."""

from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .model import FusionModel, unit_rows
from .orgdata import OrgRoster

log = logging.getLogger(__name__)


class SplitError(ValueError):
    pass


class NumericError(ArithmeticError):
    pass


@dataclass
class TrainConfig:
    margin: float = 0.5
    negatives_per_positive: int = 5
    epochs: int = 300
    learning_rate: float = 0.01
    seed: int = 0
    query_holdout_fraction: float = 0.2
    hidden: int = 64
    out_dim: int = 64
    alpha: float = 0.8
    weight_decay: float = 0.0
    grad_clip: float = 0.25         # global L2 norm; 0 disables
    lr_decay: bool = True           # linear decay to 10% of the initial rate

    def __post_init__(self):
        if self.margin <= 0:
            raise ValueError("margin must be positive")
        if not 0.0 < self.query_holdout_fraction < 1.0:
            raise ValueError("query_holdout_fraction must lie in (0, 1)")
        if self.negatives_per_positive < 1:
            raise ValueError("negatives_per_positive must be >= 1")


@dataclass
class Split:
    query_nodes: list[str]
    candidate_pool: list[str]

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, obj) -> "Split":
        return cls(list(obj["query_nodes"]), list(obj["candidate_pool"]))


def make_split(roster: OrgRoster, cfg: TrainConfig) -> Split:
    """Hold out a family-stratified sample of queries, never from singleton cells.

    Within each family, round(fraction * eligible) nodes are drawn (at least
    one when the family has any eligible node).
    """
    rng = np.random.default_rng(cfg.seed)
    cells: dict[tuple[str, str], list[str]] = {}
    for e in roster.employees:
        cells.setdefault((e.job_family, e.role), []).append(e.id)
    eligible: dict[str, list[str]] = {}
    for (fam, _), members in sorted(cells.items()):
        if len(members) > 1:
            eligible.setdefault(fam, []).extend(members)
    if not eligible:
        raise SplitError("no employee shares a (family, role) cell; nothing to evaluate")
    queries = []
    for fam in sorted(eligible):
        members = sorted(eligible[fam])
        k = max(1, int(math.floor(cfg.query_holdout_fraction * len(members) + 0.5)))
        picked = rng.choice(len(members), size=min(k, len(members)), replace=False)
        queries.extend(members[i] for i in sorted(picked))
    return Split(sorted(queries), list(roster.ids))


def training_pairs(roster: OrgRoster, split: Split) -> list[tuple[int, int]]:
    """Index pairs (i < j) of same-cell employees, neither of them a query node.

    Query labels are never read here.
    """
    held = set(split.query_nodes)
    pos = {e: k for k, e in enumerate(roster.ids)}
    cells: dict[tuple[str, str], list[int]] = {}
    for e in roster.employees:
        if e.id not in held:
            cells.setdefault((e.job_family, e.role), []).append(pos[e.id])
    pairs = []
    for members in cells.values():
        for a in range(len(members)):
            for b in range(a + 1, len(members)):
                i, j = members[a], members[b]
                pairs.append((min(i, j), max(i, j)))
    return sorted(pairs)


@dataclass
class Triples:
    anchor: np.ndarray
    positive: np.ndarray
    negative: np.ndarray
    replaced: bool = False

    def __len__(self):
        return len(self.anchor)

    def as_list(self) -> list[tuple[int, int, int]]:
        return list(zip(self.anchor.tolist(), self.positive.tolist(), self.negative.tolist()))


class TripleSampler:
    """Draws (anchor, positive, negative) index triples from a fixed positive set.

    Each positive pair is used in both orientations, with k negatives per
    oriented pair. A negative n for anchor a satisfies n != a and (a, n) not
    in ``positives``. Anchors with fewer than k valid negatives make the
    sampler draw with replacement and set ``replaced``.
    """

    def __init__(self, positives: Sequence[tuple[int, int]], n_nodes: int, k: int):
        if not positives:
            raise ValueError("no positive pairs to sample from")
        pos_arr = np.asarray(positives, dtype=np.int64)
        self.n_nodes, self.k = n_nodes, k
        self.anchor = np.concatenate([pos_arr[:, 0], pos_arr[:, 1]])
        self.positive = np.concatenate([pos_arr[:, 1], pos_arr[:, 0]])
        forbidden = np.zeros((n_nodes, n_nodes), dtype=bool)
        forbidden[self.anchor, self.positive] = True
        np.fill_diagonal(forbidden, True)
        self.forbidden = forbidden
        self.n_valid = n_nodes - forbidden.sum(axis=1)
        self.replaced = bool((self.n_valid[self.anchor] < k).any())

    def sample(self, seed) -> "Triples":
        rng = np.random.default_rng(seed)
        n_nodes, k = self.n_nodes, self.k
        a_rep = np.repeat(self.anchor, k)
        neg = rng.integers(0, n_nodes, size=len(a_rep))
        open_ = self.n_valid[a_rep] > 0
        bad = self.forbidden[a_rep, neg] & open_
        while bad.any():
            neg[bad] = rng.integers(0, n_nodes, size=int(bad.sum()))
            bad = self.forbidden[a_rep, neg] & open_
        stuck = ~open_
        if stuck.any():
            # no valid negative exists at all: any node other than the anchor
            neg[stuck] = (a_rep[stuck] + 1 + rng.integers(0, n_nodes - 1, size=int(stuck.sum()))) % n_nodes
        if self.replaced:
            log.warning("some anchors have fewer than %d valid negatives; sampled with replacement", k)
        return Triples(a_rep, np.repeat(self.positive, k), neg, self.replaced)


def sample_triples(positives: Sequence[tuple[int, int]], n_nodes: int, k: int, seed) -> Triples:
    return TripleSampler(positives, n_nodes, k).sample(seed)


def ranking_loss(H: np.ndarray, triples: Triples, margin: float):
    """Mean hinge max(0, margin - cos(a, p) + cos(a, n)) and its gradient w.r.t. H."""
    u, norms = unit_rows(H)
    zero = norms == 0
    S = u @ u.T
    S[zero] = 0.0
    S[:, zero] = 0.0
    a, p, n = triples.anchor, triples.positive, triples.negative
    slack = margin - S[a, p] + S[a, n]
    active = slack > 0
    T = len(a)
    loss = float(np.maximum(slack, 0.0).sum() / T)   # NaN propagates
    w = active / T
    N = H.shape[0]
    # gradient w.r.t. the cosine matrix, then dS_ij/du_i = u_j
    G = (np.bincount(a * N + n, weights=w, minlength=N * N)
         - np.bincount(a * N + p, weights=w, minlength=N * N)).reshape(N, N)
    du = (G + G.T) @ u
    # through the row normalisation u = h / |h|
    radial = (du * u).sum(axis=1, keepdims=True)
    dH = (du - radial * u) / np.where(zero, 1.0, norms)[:, None]
    dH[zero] = 0.0
    return loss, dH


class Adam:
    def __init__(self, lr: float, beta1=0.9, beta2=0.999, eps=1e-8, weight_decay=0.0):
        self.lr, self.b1, self.b2, self.eps, self.wd = lr, beta1, beta2, eps, weight_decay
        self.m: dict[str, np.ndarray] = {}
        self.v: dict[str, np.ndarray] = {}
        self.t = 0

    def step(self, params: dict[str, np.ndarray], grads: Mapping[str, np.ndarray]):
        self.t += 1
        c1 = 1.0 - self.b1 ** self.t
        c2 = 1.0 - self.b2 ** self.t
        for k in sorted(params):
            g = grads[k]
            if self.wd:
                g = g + self.wd * params[k]
            m = self.m.setdefault(k, np.zeros_like(g))
            v = self.v.setdefault(k, np.zeros_like(g))
            m *= self.b1
            m += (1 - self.b1) * g
            v *= self.b2
            v += (1 - self.b2) * g * g
            params[k] = params[k] - self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


def clip_global_norm(grads: dict[str, np.ndarray], max_norm: float) -> float:
    """Rescale all gradients in place so their joint L2 norm is at most ``max_norm``."""
    norm = float(np.sqrt(sum(float((g * g).sum()) for _, g in sorted(grads.items()))))
    if norm > max_norm:
        scale = max_norm / norm
        for k in grads:
            grads[k] = grads[k] * scale
    return norm


@dataclass
class TrainResult:
    model: FusionModel
    loss_curve: list[float] = field(default_factory=list)


def train(kind: str, ops: Mapping[str, object], x: np.ndarray,
          positives: Sequence[tuple[int, int]], cfg: TrainConfig) -> TrainResult:
    """Full-batch Adam on the ranking loss; negatives are redrawn every epoch."""
    model = FusionModel(kind, in_dim=x.shape[1], hidden=cfg.hidden, out_dim=cfg.out_dim,
                        alpha=cfg.alpha, seed=cfg.seed)
    opt = Adam(cfg.learning_rate, weight_decay=cfg.weight_decay)
    sampler = TripleSampler(positives, x.shape[0], cfg.negatives_per_positive)
    curve: list[float] = []
    for epoch in range(cfg.epochs):
        triples = sampler.sample((cfg.seed, epoch))
        H = model.forward(x, ops).H
        loss, dH = ranking_loss(H, triples, cfg.margin)
        if not np.isfinite(loss):
            raise NumericError(f"non-finite loss {loss} at epoch {epoch} ({kind})")
        curve.append(loss)
        grads = model.backward(dH)
        if cfg.grad_clip > 0:
            clip_global_norm(grads, cfg.grad_clip)
        if cfg.lr_decay:
            opt.lr = cfg.learning_rate * (1.0 - 0.9 * epoch / max(cfg.epochs, 1))
        opt.step(model.params, grads)
    return TrainResult(model, curve)


def write_loss_curve(path, curve: Sequence[float]) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        fh.write("epoch,loss\n")
        for k, v in enumerate(curve):
            fh.write(f"{k},{v!r}\n")


def save_split(path, split: Split) -> None:
    Path(path).write_text(json.dumps(split.to_json(), indent=1), encoding="utf-8")


def load_split(path) -> Split:
    return Split.from_json(json.loads(Path(path).read_text(encoding="utf-8")))
