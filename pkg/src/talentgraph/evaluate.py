"""Hit@K retrieval, recommendation lists, and learned-gate analysis."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .model import FusionModel, cosine_scores
from .orgdata import OrgRoster
from .trainer import Split

log = logging.getLogger(__name__)

DEFAULT_KS = (30, 100)


class UnknownQueryError(KeyError):
    pass


@dataclass
class RankingReport:
    per_query: dict[str, list[tuple[str, float]]]
    hit_at: dict[int, float]
    model_kind: str
    seed: int
    excluded: list[str] = field(default_factory=list)

    def to_json(self, top: int | None = None) -> dict:
        return {
            "model_kind": self.model_kind,
            "seed": self.seed,
            "hit_at": {str(k): v for k, v in sorted(self.hit_at.items())},
            "excluded_queries": self.excluded,
            "per_query": {q: [[c, s] for c, s in lst[:top]] for q, lst in sorted(self.per_query.items())},
        }

    def write_rankings_csv(self, path, top: int | None = None) -> None:
        with Path(path).open("w", encoding="utf-8") as fh:
            fh.write("query,candidate,rank,score\n")
            for q in sorted(self.per_query):
                for r, (c, s) in enumerate(self.per_query[q][:top], start=1):
                    fh.write(f"{q},{c},{r},{s!r}\n")


def rank_candidates(scores_row: np.ndarray, order: Sequence[str], pool_idx: np.ndarray,
                    query_idx: int) -> list[tuple[str, float]]:
    """Pool members other than the query, by score descending then id ascending."""
    idx = pool_idx[pool_idx != query_idx]
    ids = np.asarray(order, dtype=object)[idx]
    vals = scores_row[idx]
    # lexsort keys: last key is primary
    perm = np.lexsort((ids.astype(str), -vals))
    return [(str(ids[k]), float(vals[k])) for k in perm]


def positives_of(roster: OrgRoster) -> dict[str, set[str]]:
    cells: dict[tuple[str, str], set[str]] = {}
    for e in roster.employees:
        cells.setdefault((e.job_family, e.role), set()).add(e.id)
    return {e.id: cells[(e.job_family, e.role)] - {e.id} for e in roster.employees}


def hit_at_k(scores: np.ndarray, order: Sequence[str], split: Split, roster: OrgRoster,
             ks: Sequence[int] = DEFAULT_KS, model_kind: str = "", seed: int = 0) -> RankingReport:
    """Fraction of queries with at least one same-cell candidate in their top K.

    ``scores`` is an n x n score matrix indexed like ``order``.
    """
    pos = {e: k for k, e in enumerate(order)}
    pool_idx = np.array(sorted(pos[c] for c in split.candidate_pool))
    partners = positives_of(roster)
    per_query, excluded = {}, []
    hits = {k: 0 for k in ks}
    for q in split.query_nodes:
        pool_pos = partners[q] & set(split.candidate_pool)
        if not pool_pos:
            log.warning("query %s has no positive in the pool; excluded", q)
            excluded.append(q)
            continue
        ranked = rank_candidates(np.asarray(scores[pos[q]]), order, pool_idx, pos[q])
        per_query[q] = ranked
        first = next(r for r, (c, _) in enumerate(ranked, start=1) if c in pool_pos)
        for k in ks:
            hits[k] += first <= k
    n = len(per_query)
    hit_at = {k: (hits[k] / n if n else 0.0) for k in ks}
    return RankingReport(per_query, hit_at, model_kind, seed, excluded)


def model_scores(model: FusionModel, x: np.ndarray, ops: Mapping[str, object]) -> np.ndarray:
    return cosine_scores(model.forward(x, ops).H)


@dataclass
class Recommendation:
    query: str
    candidates: list[tuple[str, float]]
    gate_summary: dict[str, float] | None = None


def recommend(query: str, model: FusionModel, x: np.ndarray, ops: Mapping[str, object],
              order: Sequence[str], top_k: int = 30, pool: Sequence[str] | None = None) -> Recommendation:
    if query not in order:
        raise UnknownQueryError(f"unknown employee id {query!r}")
    fused = model.forward(x, ops)
    scores = cosine_scores(fused.H)
    pos = {e: k for k, e in enumerate(order)}
    pool_idx = np.array(sorted(pos[c] for c in (order if pool is None else pool)))
    ranked = rank_candidates(scores[pos[query]], order, pool_idx, pos[query])[:top_k]
    summary = None
    if model.kind == "gating":
        g = fused.gate_values[pos[query]]
        summary = {"mean": float(g.mean()), "min": float(g.min()), "max": float(g.max())}
    return Recommendation(query, ranked, summary)


@dataclass
class GateReport:
    per_family_mean_gate: dict[str, float]
    per_role_gate_variance: dict[str, float]
    per_role_mean_gate: dict[str, float]
    node_share: dict[str, float]

    def to_json(self) -> dict:
        return {
            "per_family_mean_gate": self.per_family_mean_gate,
            "per_role_gate_variance": self.per_role_gate_variance,
            "per_role_mean_gate": self.per_role_mean_gate,
        }


def gate_analysis(model: FusionModel, x: np.ndarray, ops: Mapping[str, object],
                  roster: OrgRoster, order: Sequence[str]) -> GateReport:
    """Structural share (mean gate weight on the structure tower) per node, family, and role."""
    if model.kind != "gating":
        raise ValueError(f"gate analysis needs a gating checkpoint, got {model.kind!r}")
    g = model.forward(x, ops).gate_values
    share = g.mean(axis=1)
    by_id = roster.by_id()
    fam_vals: dict[str, list[float]] = {}
    role_vals: dict[str, list[float]] = {}
    for k, e in enumerate(order):
        emp = by_id[e]
        fam_vals.setdefault(emp.job_family, []).append(share[k])
        role_vals.setdefault(emp.role, []).append(share[k])
    return GateReport(
        {f: float(np.mean(v)) for f, v in sorted(fam_vals.items())},
        {r: float(np.var(v)) for r, v in sorted(role_vals.items())},
        {r: float(np.mean(v)) for r, v in sorted(role_vals.items())},
        dict(zip(order, share.tolist())),
    )


def write_report(path, ranking: RankingReport, gates: GateReport | None = None, top: int = 100) -> None:
    obj = {"ranking": ranking.to_json(top=top)}
    if gates is not None:
        obj["gates"] = gates.to_json()
    Path(path).write_text(json.dumps(obj, indent=1), encoding="utf-8")
