"""In-memory end-to-end runs on a synthetic organization (used by scripts and tests)."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

from . import centrality, graphs
from .baseline import BaselineWeights, score_matrix
from .embed import NodeSemantics, SkipGramConfig, WordEmbeddings, node_centroids, train_skipgram
from .evaluate import RankingReport, gate_analysis, hit_at_k, model_scores
from .features import NodeFeatures, assemble_features
from .model import KINDS
from .orgdata import EmailRecord, OrgRoster, SyntheticOrgConfig, generate_synthetic_org
from .textprep import build_corpus_stats, prune_tokens
from .trainer import Split, TrainConfig, make_split, train, training_pairs

log = logging.getLogger(__name__)

MODEL_CHOICES = ("heuristic",) + KINDS


@dataclass
class Prepared:
    roster: OrgRoster
    records: list[EmailRecord]
    emb: WordEmbeddings
    sem: NodeSemantics
    g_str: graphs.WeightedGraph
    g_ssim: graphs.WeightedGraph
    cent: centrality.CentralityVector
    feats: NodeFeatures
    ops: dict = field(repr=False)

    @property
    def order(self) -> list[str]:
        return self.feats.order


def build_operators(g_str, g_ssim) -> dict:
    return {
        "str": graphs.normalize(g_str),
        "ssim": graphs.normalize(g_ssim),
        "early": graphs.normalize(graphs.early_fuse(g_str, g_ssim)),
    }


def prepare(roster: OrgRoster, records: list[EmailRecord], sg: SkipGramConfig | None = None,
            tau: float = graphs.DEFAULT_TAU, blocklist=frozenset(), tfidf_floor: float = 0.05) -> Prepared:
    stats = build_corpus_stats(records)
    pruned = prune_tokens(records, stats, blocklist, tfidf_floor)
    emb = train_skipgram(pruned, sg or SkipGramConfig())
    order = roster.ids
    sem = node_centroids(pruned, emb, order)
    g_str = graphs.build_structure_network(records, order)
    g_ssim = graphs.build_semantic_network(sem, tau)
    cent = centrality.compute_all(g_str)
    feats = assemble_features(sem, cent)
    return Prepared(roster, pruned, emb, sem, g_str, g_ssim, cent, feats, build_operators(g_str, g_ssim))


def prepare_synthetic(seed: int, org_cfg: SyntheticOrgConfig | None = None, **kw) -> Prepared:
    cfg = replace(org_cfg or SyntheticOrgConfig(), rng_seed=seed)
    org = generate_synthetic_org(cfg)
    sg = kw.pop("sg", None) or SkipGramConfig(seed=seed)
    return prepare(org.roster, org.records, sg=sg, **kw)


@dataclass
class ModelRun:
    kind: str
    report: RankingReport
    loss_curve: list[float]
    model: object = None


def run_model(kind: str, prep: Prepared, split: Split, cfg: TrainConfig) -> ModelRun:
    if kind == "heuristic":
        scores = score_matrix(prep.feats, BaselineWeights())
        rep = hit_at_k(scores, prep.order, split, prep.roster, model_kind=kind, seed=cfg.seed)
        return ModelRun(kind, rep, [])
    pairs = training_pairs(prep.roster, split)
    res = train(kind, prep.ops, prep.feats.matrix, pairs, cfg)
    scores = model_scores(res.model, prep.feats.matrix, prep.ops)
    rep = hit_at_k(scores, prep.order, split, prep.roster, model_kind=kind, seed=cfg.seed)
    return ModelRun(kind, rep, res.loss_curve, res.model)


def run_all(seed: int, kinds=MODEL_CHOICES, org_cfg=None, train_cfg: TrainConfig | None = None):
    prep = prepare_synthetic(seed, org_cfg)
    cfg = replace(train_cfg or TrainConfig(), seed=seed)
    split = make_split(prep.roster, cfg)
    runs = {k: run_model(k, prep, split, cfg) for k in kinds}
    gates = None
    if "gating" in runs:
        gates = gate_analysis(runs["gating"].model, prep.feats.matrix, prep.ops, prep.roster, prep.order)
    return prep, split, runs, gates


def summary_rows(hits: dict[str, dict[int, float]]) -> list[dict]:
    """One row per strategy; the two single-view GCNs share a row (best of both).

    ``hits`` maps model kind to its Hit@K dict. Rows are ordered by Hit@100,
    then Hit@30, then name.
    """
    rows = []
    singles = [k for k in ("single_str", "single_ssim") if k in hits]
    for kind, h in hits.items():
        if kind in singles:
            continue
        rows.append({"model": kind, **{f"hit@{k}": v for k, v in sorted(h.items())}})
    if singles:
        best = max(singles, key=lambda k: (hits[k].get(100, 0.0), hits[k].get(30, 0.0)))
        rows.append({"model": "single", "source": best,
                     **{f"hit@{k}": v for k, v in sorted(hits[best].items())}})
    rows.sort(key=lambda r: (-r.get("hit@100", 0.0), -r.get("hit@30", 0.0), r["model"]))
    return rows
