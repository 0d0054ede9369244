"""Slow, obviously-correct reference implementations used only by the tests."""

import itertools

import numpy as np


def floyd_warshall(adj: np.ndarray) -> np.ndarray:
    n = len(adj)
    d = np.full((n, n), np.inf)
    d[adj > 0] = 1.0
    np.fill_diagonal(d, 0.0)
    for k in range(n):
        d = np.minimum(d, d[:, [k]] + d[[k], :])
    return d


def closeness(adj: np.ndarray) -> np.ndarray:
    n = len(adj)
    d = floyd_warshall(adj)
    out = np.zeros(n)
    for v in range(n):
        reach = [d[v, u] for u in range(n) if u != v and np.isfinite(d[v, u])]
        if reach:
            out[v] = 1.0 / sum(reach) * len(reach) / (n - 1)
    return out


def _shortest_paths(adj, d, s, t):
    """Every shortest s-t path as a vertex tuple, by depth-first enumeration."""
    out = []

    def walk(path):
        v = path[-1]
        if v == t:
            out.append(tuple(path))
            return
        for w in np.flatnonzero(adj[v]):
            if d[s, w] == d[s, v] + 1 and d[w, t] == d[v, t] - 1:
                walk(path + [int(w)])

    walk([s])
    return out


def betweenness(adj: np.ndarray) -> np.ndarray:
    n = len(adj)
    d = floyd_warshall(adj)
    out = np.zeros(n)
    for s, t in itertools.combinations(range(n), 2):
        if not np.isfinite(d[s, t]):
            continue
        paths = _shortest_paths(adj, d, s, t)
        for v in range(n):
            if v in (s, t):
                continue
            out[v] += sum(v in p for p in paths) / len(paths)
    return out


def components(adj: np.ndarray) -> list[list[int]]:
    d = floyd_warshall(adj)
    seen, comps = set(), []
    for v in range(len(adj)):
        if v not in seen:
            comp = [u for u in range(len(adj)) if np.isfinite(d[v, u])]
            seen.update(comp)
            comps.append(comp)
    return comps


def eigenvector(adj: np.ndarray) -> np.ndarray:
    """Perron vector of each component from a dense symmetric eigensolve, max-norm 1."""
    out = np.zeros(len(adj))
    for comp in components(adj):
        if len(comp) < 2:
            continue
        vals, vecs = np.linalg.eigh(adj[np.ix_(comp, comp)])
        v = np.abs(vecs[:, np.argmax(vals)])
        out[comp] = v / v.max()
    return out


def normalized_dense(a: np.ndarray) -> np.ndarray:
    a_hat = a + np.eye(len(a))
    dinv = np.diag(1.0 / np.sqrt(a_hat.sum(axis=1)))
    return dinv @ a_hat @ dinv


def gcn_chain(x, a_norm, layers):
    h = x
    for l, (w, b) in enumerate(layers):
        z = a_norm @ h @ w + b
        h = np.maximum(z, 0.0) if l < len(layers) - 1 else z
    return h


def hit_at_k(scores, order, queries, pool, cell, ks):
    """Full sort per query: score descending, id ascending; hit if any same-cell id in the top K."""
    hits = {k: 0 for k in ks}
    n_eval = 0
    for q in queries:
        qi = order.index(q)
        cands = [c for c in pool if c != q]
        pos = {c for c in cands if cell[c] == cell[q]}
        if not pos:
            continue
        n_eval += 1
        ranked = sorted(cands, key=lambda c: (-scores[qi][order.index(c)], c))
        for k in ks:
            hits[k] += any(c in pos for c in ranked[:k])
    return {k: hits[k] / n_eval for k in ks}


def central_difference(f, x: np.ndarray, h: float = 1e-5) -> np.ndarray:
    """Gradient of scalar f at array x (x is perturbed in place and restored)."""
    g = np.zeros_like(x)
    it = np.nditer(x, flags=["multi_index"])
    for _ in it:
        idx = it.multi_index
        old = x[idx]
        x[idx] = old + h
        fp = f()
        x[idx] = old - h
        fm = f()
        x[idx] = old
        g[idx] = (fp - fm) / (2 * h)
    return g


def random_graph_adj(rng, n, p, weighted=False):
    a = np.triu((rng.random((n, n)) < p).astype(float), k=1)
    if weighted:
        a *= rng.uniform(0.5, 3.0, size=a.shape)
    return a + a.T


def model_grad_errors(model, x, ops, seed=0, h=1e-5):
    """Relative error (per parameter array) of model.backward against central differences.

    The probe loss is sum(R * H) + 0.5 * sum(H**2) with a fixed random R, so dL/dH = R + H.
    """
    r = np.random.default_rng(seed).normal(size=model.forward(x, ops).H.shape)

    def loss():
        H = model.forward(x, ops).H
        return float((r * H).sum() + 0.5 * (H * H).sum())

    H = model.forward(x, ops).H
    analytic = model.backward(r + H)
    errs = {}
    for name, p in model.params.items():
        num = central_difference(loss, p, h)
        a = analytic[name]
        errs[name] = float(np.linalg.norm(a - num) / max(np.linalg.norm(a) + np.linalg.norm(num), 1e-12))
    return errs
