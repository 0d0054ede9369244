"""Dual GCN towers and the fusion heads, with hand-written reverse-mode gradients.

Parameter names are flat strings (``"str.W0"``, ``"gate.W"`` ...) so a model is
just a dict of arrays plus its kind; the optimizer and the checkpoint format
work on that dict directly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

import numpy as np

CHECKPOINT_VERSION = 1

KINDS = (
    "single_str",
    "single_ssim",
    "early_concat",
    "late_concat",
    "weighted_sum",
    "attention",
    "gating",
)
FUSED_KINDS = ("late_concat", "weighted_sum", "attention", "gating")
VIEW_OF_SINGLE = {"single_str": "str", "single_ssim": "ssim", "early_concat": "early"}


class ShapeError(ValueError):
    pass


def sigmoid(x):
    x = np.asarray(x, float)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _prop(op, h):
    m = getattr(op, "matrix", op)
    return np.asarray(m @ h)


def glorot(rng: np.random.Generator, fan_in: int, fan_out: int, shape=None) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape or (fan_in, fan_out))


# --- GCN tower ----------------------------------------------------------------


def gcn_forward(x: np.ndarray, op, layers, cache: list | None = None) -> np.ndarray:
    """Each layer computes act(Â H W + b); rectifier between layers, identity at the end."""
    n = getattr(op, "shape", None) or op.matrix.shape
    if x.shape[0] != n[0]:
        raise ShapeError(f"features have {x.shape[0]} rows, operator is {n[0]} x {n[1]}")
    h = x
    last = len(layers) - 1
    for l, (w, b) in enumerate(layers):
        if h.shape[1] != w.shape[0]:
            raise ShapeError(f"layer {l}: input width {h.shape[1]} != weight rows {w.shape[0]}")
        ah = _prop(op, h)
        z = ah @ w + b
        if cache is not None:
            cache.append((ah, z))
        h = np.maximum(z, 0.0) if l < last else z
    return h


def gcn_backward(dout: np.ndarray, op, layers, cache: list) -> list[tuple[np.ndarray, np.ndarray]]:
    grads = [None] * len(layers)
    g = dout
    last = len(layers) - 1
    for l in range(last, -1, -1):
        w, _ = layers[l]
        ah, z = cache[l]
        if l < last:
            g = g * (z > 0)
        grads[l] = (ah.T @ g, g.sum(axis=0))
        if l > 0:
            # Â is symmetric, so its transpose is itself
            g = _prop(op, g @ w.T)
    return grads


# --- fusion heads -------------------------------------------------------------


@dataclass
class FusionHead:
    kind: str
    alpha: float = 0.8
    attn_w: np.ndarray | None = None     # 2*out
    attn_b: float | np.ndarray = 0.0
    gate_w: np.ndarray | None = None     # out x 2*out
    gate_b: np.ndarray | None = None     # out


@dataclass
class FusedEmbeddings:
    H: np.ndarray
    gate_values: np.ndarray | None = None


def fuse(h_str: np.ndarray, h_ssim: np.ndarray, head: FusionHead) -> FusedEmbeddings:
    if h_str.shape != h_ssim.shape:
        raise ShapeError(f"tower outputs differ in shape: {h_str.shape} vs {h_ssim.shape}")
    kind = head.kind
    if kind == "late_concat":
        return FusedEmbeddings(np.concatenate([h_str, h_ssim], axis=1))
    if kind == "weighted_sum":
        return FusedEmbeddings(head.alpha * h_str + (1.0 - head.alpha) * h_ssim)
    both = np.concatenate([h_str, h_ssim], axis=1)
    if kind == "attention":
        a = sigmoid(both @ head.attn_w + head.attn_b)
        return FusedEmbeddings(a[:, None] * h_str + (1.0 - a[:, None]) * h_ssim, a)
    if kind == "gating":
        g = sigmoid(both @ head.gate_w.T + head.gate_b)
        return FusedEmbeddings(g * h_str + (1.0 - g) * h_ssim, g)
    raise ValueError(f"{kind!r} has no fusion head")


def fuse_backward(dH: np.ndarray, h_str: np.ndarray, h_ssim: np.ndarray,
                  head: FusionHead, fused: FusedEmbeddings):
    """Return (d h_str, d h_ssim, head-parameter grads)."""
    kind = head.kind
    d = h_str.shape[1]
    if kind == "late_concat":
        return dH[:, :d], dH[:, d:], {}
    if kind == "weighted_sum":
        return head.alpha * dH, (1.0 - head.alpha) * dH, {}
    both = np.concatenate([h_str, h_ssim], axis=1)
    diff = h_str - h_ssim
    if kind == "attention":
        a = fused.gate_values
        du = (dH * diff).sum(axis=1) * a * (1.0 - a)
        dboth = np.outer(du, head.attn_w)
        grads = {"attn.w": both.T @ du, "attn.b": np.array([du.sum()])}
        return a[:, None] * dH + dboth[:, :d], (1.0 - a[:, None]) * dH + dboth[:, d:], grads
    if kind == "gating":
        g = fused.gate_values
        du = dH * diff * g * (1.0 - g)
        dboth = du @ head.gate_w
        grads = {"gate.W": du.T @ both, "gate.b": du.sum(axis=0)}
        return g * dH + dboth[:, :d], (1.0 - g) * dH + dboth[:, d:], grads
    raise ValueError(f"{kind!r} has no fusion head")


# --- scoring ------------------------------------------------------------------


def unit_rows(H: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    norms = np.linalg.norm(H, axis=1)
    return H / np.where(norms > 0, norms, 1.0)[:, None], norms


def score_pair(H, i: int, j: int) -> float:
    """Cosine similarity of rows i and j; 0 when either row is zero."""
    H = getattr(H, "H", H)
    a, b = H[i], H[j]
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        return 0.0
    return float(a @ b / (na * nb))


def cosine_scores(H) -> np.ndarray:
    H = getattr(H, "H", H)
    u, norms = unit_rows(H)
    s = u @ u.T
    s[norms == 0] = 0.0
    s[:, norms == 0] = 0.0
    return s


# --- full model -----------------------------------------------------------------


class FusionModel:
    """Towers plus (for late-fusion kinds) one fusion head."""

    def __init__(self, kind: str, in_dim: int = 104, hidden: int = 64, out_dim: int = 64,
                 n_layers: int = 2, alpha: float = 0.8, seed: int = 0, init: bool = True):
        if kind not in KINDS:
            raise ValueError(f"unknown model kind {kind!r}; expected one of {KINDS}")
        if not 0.0 <= alpha <= 1.0:
            raise ValueError("alpha must lie in [0, 1]")
        self.kind = kind
        self.dims = [in_dim] + [hidden] * (n_layers - 1) + [out_dim]
        self.alpha = alpha
        self.seed = seed
        self.params: dict[str, np.ndarray] = {}
        self._cache = None
        if init:
            self._init_params(np.random.default_rng(seed))

    @property
    def views(self) -> tuple[str, ...]:
        if self.kind in VIEW_OF_SINGLE:
            return (VIEW_OF_SINGLE[self.kind],)
        return ("str", "ssim")

    @property
    def out_dim(self) -> int:
        return self.dims[-1] * (2 if self.kind == "late_concat" else 1)

    def _init_params(self, rng):
        for view in self.views:
            for l in range(len(self.dims) - 1):
                self.params[f"{view}.W{l}"] = glorot(rng, self.dims[l], self.dims[l + 1])
                self.params[f"{view}.b{l}"] = np.zeros(self.dims[l + 1])
        out = self.dims[-1]
        if self.kind == "attention":
            self.params["attn.w"] = glorot(rng, 2 * out, 1, shape=(2 * out,))
            self.params["attn.b"] = np.zeros(1)
        elif self.kind == "gating":
            self.params["gate.W"] = glorot(rng, 2 * out, out, shape=(out, 2 * out))
            self.params["gate.b"] = np.zeros(out)

    def layers(self, view: str):
        return [(self.params[f"{view}.W{l}"], self.params[f"{view}.b{l}"])
                for l in range(len(self.dims) - 1)]

    def head(self) -> FusionHead:
        p = self.params
        return FusionHead(
            self.kind, self.alpha,
            attn_w=p.get("attn.w"), attn_b=p["attn.b"][0] if "attn.b" in p else 0.0,
            gate_w=p.get("gate.W"), gate_b=p.get("gate.b"),
        )

    def forward(self, x: np.ndarray, ops: Mapping[str, object]) -> FusedEmbeddings:
        caches, towers = {}, {}
        for view in self.views:
            if view not in ops:
                raise KeyError(f"model kind {self.kind!r} needs the {view!r} operator")
            caches[view] = []
            towers[view] = gcn_forward(x, ops[view], self.layers(view), caches[view])
        if self.kind in VIEW_OF_SINGLE:
            fused = FusedEmbeddings(towers[self.views[0]])
        else:
            fused = fuse(towers["str"], towers["ssim"], self.head())
        self._cache = (ops, caches, towers, fused)
        return fused

    def backward(self, dH: np.ndarray) -> dict[str, np.ndarray]:
        if self._cache is None:
            raise RuntimeError("backward called before forward")
        ops, caches, towers, fused = self._cache
        grads: dict[str, np.ndarray] = {}
        if self.kind in VIEW_OF_SINGLE:
            upstream = {self.views[0]: dH}
        else:
            d_str, d_ssim, head_grads = fuse_backward(dH, towers["str"], towers["ssim"],
                                                      self.head(), fused)
            grads.update(head_grads)
            upstream = {"str": d_str, "ssim": d_ssim}
        for view, g in upstream.items():
            for l, (dw, db) in enumerate(gcn_backward(g, ops[view], self.layers(view), caches[view])):
                grads[f"{view}.W{l}"] = dw
                grads[f"{view}.b{l}"] = db
        return grads

    # checkpoint format

    def to_json(self) -> dict:
        return {
            "format": "talentgraph-checkpoint",
            "version": CHECKPOINT_VERSION,
            "kind": self.kind,
            "dims": self.dims,
            "alpha": self.alpha,
            "seed": self.seed,
            "params": {k: {"shape": list(v.shape), "data": v.ravel().tolist()}
                       for k, v in sorted(self.params.items())},
        }

    @classmethod
    def from_json(cls, obj: dict) -> "FusionModel":
        if obj.get("version") != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {obj.get('version')!r}")
        dims = obj["dims"]
        m = cls(obj["kind"], in_dim=dims[0], hidden=dims[1] if len(dims) > 2 else dims[-1],
                out_dim=dims[-1], n_layers=len(dims) - 1, alpha=obj["alpha"],
                seed=obj["seed"], init=False)
        m.dims = list(dims)
        m.params = {k: np.asarray(v["data"], float).reshape(v["shape"])
                    for k, v in obj["params"].items()}
        return m

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json()), encoding="utf-8")

    @classmethod
    def load(cls, path) -> "FusionModel":
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))
