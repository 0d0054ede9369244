"""Skip-gram word vectors with negative sampling, and mean pooling into node vectors."""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .orgdata import EmailRecord

DIM = 100


class VocabularyError(ValueError):
    pass


@dataclass
class WordEmbeddings:
    vocab: list[str]
    vectors: np.ndarray
    loss_curve: list[float] = field(default_factory=list)

    def __post_init__(self):
        if len(set(self.vocab)) != len(self.vocab):
            raise VocabularyError("duplicate tokens in vocabulary")
        self.index = {t: k for k, t in enumerate(self.vocab)}

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def to_json(self) -> dict:
        return {"dim": self.dim, "vocab": self.vocab, "vectors": self.vectors.tolist()}

    @classmethod
    def from_json(cls, obj: dict) -> "WordEmbeddings":
        vectors = np.asarray(obj["vectors"], dtype=float).reshape(len(obj["vocab"]), obj["dim"])
        return cls(list(obj["vocab"]), vectors)

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json()), encoding="utf-8")

    @classmethod
    def load(cls, path) -> "WordEmbeddings":
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


@dataclass
class SkipGramConfig:
    dim: int = DIM
    window: int = 5
    negatives: int = 5
    epochs: int = 10
    learning_rate: float = 0.025
    min_learning_rate: float = 1e-4
    batch_size: int = 1024
    seed: int = 0


def _sentences(records: Sequence[EmailRecord], extra: Sequence[Sequence[str]] = ()):
    return [list(r.subject_tokens) for r in records] + [list(s) for s in extra]


def _context_pairs(sentences: list[np.ndarray], window: int, rng: np.random.Generator):
    """(center, context) index pairs with a per-center shrunken window, as in word2vec."""
    if not sentences:
        return np.empty(0, np.int64), np.empty(0, np.int64)
    tokens = np.concatenate(sentences)
    sid = np.repeat(np.arange(len(sentences)), [len(s) for s in sentences])
    reach = rng.integers(1, window + 1, size=len(tokens))
    centers, contexts = [], []
    for off in range(1, window + 1):
        same = sid[:-off] == sid[off:] if off < len(tokens) else np.zeros(0, bool)
        fwd = np.flatnonzero(same & (reach[:-off] >= off))
        bwd = np.flatnonzero(same & (reach[off:] >= off))
        centers += [tokens[fwd], tokens[bwd + off]]
        contexts += [tokens[fwd + off], tokens[bwd]]
    return np.concatenate(centers), np.concatenate(contexts)


def _scatter_add(target: np.ndarray, idx: np.ndarray, vals: np.ndarray) -> None:
    """target[idx] += vals, repeated indices averaged rather than summed.

    Averaging keeps a row that occurs hundreds of times in one batch (tiny
    vocabularies) from taking hundreds of steps at once.
    """
    m = sp.csr_matrix((np.ones(len(idx)), (idx, np.arange(len(idx)))), shape=(target.shape[0], len(idx)))
    counts = np.bincount(idx, minlength=target.shape[0]).astype(float)
    target += (m @ vals) / np.maximum(counts, 1.0)[:, None]


def _log_sigmoid(x):
    return -np.logaddexp(0.0, -x)


def train_skipgram(
    records: Sequence[EmailRecord],
    cfg: SkipGramConfig | None = None,
    extra_sentences: Sequence[Sequence[str]] = (),
) -> WordEmbeddings:
    """Train SGNS vectors over subject token lists.

    ``extra_sentences`` (e.g. job-description noun lists) are appended to the
    corpus and may extend the vocabulary. Updates are applied in fixed-order
    mini-batches, so a given seed always produces the same matrix.
    """
    cfg = cfg or SkipGramConfig()
    sentences = _sentences(records, extra_sentences)
    counts = Counter(t for s in sentences for t in s)
    if len(counts) < 2:
        raise VocabularyError(f"need at least 2 distinct tokens, got {len(counts)}")
    vocab = sorted(counts, key=lambda t: (-counts[t], t))
    index = {t: k for k, t in enumerate(vocab)}
    V = len(vocab)

    rng = np.random.default_rng(cfg.seed)
    w_in = (rng.random((V, cfg.dim)) - 0.5) / cfg.dim
    w_out = np.zeros((V, cfg.dim))
    freq = np.array([counts[t] for t in vocab], float) ** 0.75
    noise_cdf = np.cumsum(freq / freq.sum())
    encoded = [np.array([index[t] for t in s], dtype=np.int64) for s in sentences]

    curve: list[float] = []
    total_steps = None
    step = 0
    for _ in range(cfg.epochs):
        c, o = _context_pairs(encoded, cfg.window, rng)
        order = rng.permutation(len(c))
        c, o = c[order], o[order]
        n_batches = max(1, -(-len(c) // cfg.batch_size))
        if total_steps is None:
            total_steps = n_batches * cfg.epochs
        epoch_loss = 0.0
        for b in range(n_batches):
            lr = cfg.learning_rate - (cfg.learning_rate - cfg.min_learning_rate) * step / total_steps
            step += 1
            cb = c[b * cfg.batch_size:(b + 1) * cfg.batch_size]
            ob = o[b * cfg.batch_size:(b + 1) * cfg.batch_size]
            if len(cb) == 0:
                continue
            neg = np.searchsorted(noise_cdf, rng.random((len(cb), cfg.negatives)))
            neg = np.minimum(neg, V - 1)
            targets = np.concatenate([ob[:, None], neg], axis=1)       # B x (1+k)
            labels = np.zeros(targets.shape)
            labels[:, 0] = 1.0
            h = w_in[cb]                                               # B x d
            u = w_out[targets]                                         # B x (1+k) x d
            logits = np.einsum("bd,bkd->bk", h, u)
            sign = 2.0 * labels - 1.0
            epoch_loss -= _log_sigmoid(sign * logits).sum()
            # d(-log sigma(s x))/dx = -s * sigma(-s x) = sigma(x) - label
            g = 1.0 / (1.0 + np.exp(-logits)) - labels
            grad_h = np.einsum("bk,bkd->bd", g, u)
            grad_u = g[:, :, None] * h[:, None, :]
            _scatter_add(w_out, targets.ravel(), -lr * grad_u.reshape(-1, cfg.dim))
            _scatter_add(w_in, cb, -lr * grad_h)
        curve.append(epoch_loss / max(len(c), 1))
    return WordEmbeddings(vocab, w_in, curve)


def pool_subject(tokens: Sequence[str], emb: WordEmbeddings) -> tuple[np.ndarray, bool]:
    """Mean of the in-vocabulary token vectors; ``(zeros, False)`` if none are known."""
    rows = [emb.index[t] for t in tokens if t in emb.index]
    if not rows:
        return np.zeros(emb.dim), False
    return emb.vectors[rows].mean(axis=0), True


@dataclass
class NodeSemantics:
    order: list[str]
    centroids: np.ndarray          # n x dim, row k belongs to order[k]
    coverage: np.ndarray           # emails pooled per node

    @property
    def uncovered(self) -> list[str]:
        return [e for e, c in zip(self.order, self.coverage) if c == 0]

    def centroid(self, emp_id: str) -> np.ndarray:
        return self.centroids[self.order.index(emp_id)]

    def write_csv(self, path) -> None:
        dim = self.centroids.shape[1]
        with Path(path).open("w", encoding="utf-8") as fh:
            fh.write("employee_id,coverage," + ",".join(f"v{k}" for k in range(dim)) + "\n")
            for e, c, row in zip(self.order, self.coverage, self.centroids):
                fh.write(f"{e},{int(c)}," + ",".join(repr(float(v)) for v in row) + "\n")

    @classmethod
    def read_csv(cls, path) -> "NodeSemantics":
        lines = Path(path).read_text(encoding="utf-8").splitlines()[1:]
        order, cov, rows = [], [], []
        for ln in lines:
            parts = ln.split(",")
            order.append(parts[0])
            cov.append(int(parts[1]))
            rows.append([float(v) for v in parts[2:]])
        return cls(order, np.asarray(rows, float), np.asarray(cov, int))


def node_centroids(records: Sequence[EmailRecord], emb: WordEmbeddings, order: Sequence[str]) -> NodeSemantics:
    """Average pooled subject vectors over every email a node sent or received.

    Emails whose subject is entirely out of vocabulary carry no vector and
    are not counted toward coverage.
    """
    pos = {e: k for k, e in enumerate(order)}
    sums = np.zeros((len(order), emb.dim))
    cov = np.zeros(len(order), dtype=int)
    for r in records:
        vec, ok = pool_subject(r.subject_tokens, emb)
        if not ok:
            continue
        for e in (r.sender, r.recipient):
            k = pos[e]
            sums[k] += vec
            cov[k] += 1
    cent = np.divide(sums, np.maximum(cov, 1)[:, None])
    return NodeSemantics(list(order), cent, cov)
