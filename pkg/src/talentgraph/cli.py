"""Command-line pipeline over one work directory.

Every stage reads its inputs from the work directory, writes its outputs
atomically (temp file + rename) and records input/output hashes in
``manifest.json``. A stage whose recorded inputs and parameters are
unchanged is skipped. An artifact edited behind the manifest's back raises
a stale-cache error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import os
import shutil
import sys
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Callable, Sequence

from . import centrality, graphs
from .baseline import BaselineWeights, score_matrix
from .embed import NodeSemantics, SkipGramConfig, VocabularyError, node_centroids, train_skipgram
from .evaluate import DEFAULT_KS, UnknownQueryError, gate_analysis, hit_at_k, model_scores, recommend, write_report
from .experiment import MODEL_CHOICES, build_operators, summary_rows
from .features import NodeFeatures, NodeMismatchError, StratificationError, assemble_features, validate_features
from .graphs import GraphMismatchError
from .model import FusionModel
from .orgdata import (DataError, OrgRoster, SyntheticOrgConfig, generate_synthetic_org, load_email_log,
                      load_roster, write_email_log, write_roster)
from .textprep import build_corpus_stats, load_blocklist, prune_tokens
from .trainer import NumericError, SplitError, TrainConfig, load_split, make_split, save_split, train, \
    training_pairs, write_loss_curve

log = logging.getLogger("talentgraph")

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4
MANIFEST = "manifest.json"

ALIASES = {
    "single-str": "single_str", "single-ssim": "single_ssim", "early-concat": "early_concat",
    "late-concat": "late_concat", "weighted": "weighted_sum", "weighted-sum": "weighted_sum",
}


class ConfigError(ValueError):
    pass


class MissingArtifactError(DataError):
    pass


class StaleCacheError(DataError):
    pass


# --- configuration ------------------------------------------------------------


@dataclass
class Paths:
    emails: str | None = None
    roster: str | None = None
    blocklist: str | None = None
    workdir: str = "work"


@dataclass
class PipelineConfig:
    paths: Paths = field(default_factory=Paths)
    seed: int = 0
    tau: float = graphs.DEFAULT_TAU
    tfidf_floor: float = 0.05
    embedding: SkipGramConfig = field(default_factory=SkipGramConfig)
    models: list[str] = field(default_factory=lambda: list(MODEL_CHOICES))
    train: TrainConfig = field(default_factory=TrainConfig)
    ks: list[int] = field(default_factory=lambda: list(DEFAULT_KS))
    synthetic: SyntheticOrgConfig = field(default_factory=SyntheticOrgConfig)

    @classmethod
    def from_json(cls, obj: dict) -> "PipelineConfig":
        if not isinstance(obj, dict):
            raise ConfigError("config root must be a JSON object")
        sections = {"paths": Paths, "embedding": SkipGramConfig, "train": TrainConfig,
                    "synthetic": SyntheticOrgConfig}
        kw = {}
        known = {f.name for f in fields(cls)}
        for key, val in obj.items():
            if key not in known:
                raise ConfigError(f"unknown config key {key!r}")
            if key in sections:
                if not isinstance(val, dict):
                    raise ConfigError(f"config section {key!r} must be an object")
                try:
                    kw[key] = sections[key](**{k: tuple(v) if isinstance(v, list) else v
                                               for k, v in val.items()})
                except (TypeError, ValueError) as exc:
                    raise ConfigError(f"bad {key!r} section: {exc}") from None
            else:
                kw[key] = val
        cfg = cls(**kw)
        cfg.models = [normalize_model(m) for m in cfg.models]
        if not (0.0 <= float(cfg.tau) <= 1.0):
            raise ConfigError(f"tau must lie in [0, 1], got {cfg.tau}")
        if not cfg.ks or any(int(k) < 1 for k in cfg.ks):
            raise ConfigError("ks must be a non-empty list of positive integers")
        return cfg

    @classmethod
    def load(cls, path) -> "PipelineConfig":
        try:
            obj = json.loads(Path(path).read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
        return cls.from_json(obj)

    def with_seed(self, seed: int) -> "PipelineConfig":
        return replace(self, seed=seed,
                       embedding=replace(self.embedding, seed=seed),
                       train=replace(self.train, seed=seed),
                       synthetic=replace(self.synthetic, rng_seed=seed))

    def to_json(self) -> dict:
        return json.loads(json.dumps(asdict(self)))


def normalize_model(name: str) -> str:
    kind = ALIASES.get(name, name)
    if kind not in MODEL_CHOICES:
        raise ConfigError(f"unknown model {name!r}; choose from {', '.join(MODEL_CHOICES)}")
    return kind


# --- hashed, atomic work directory ----------------------------------------------


def file_hash(path) -> str:
    h = hashlib.sha256()
    with Path(path).open("rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def params_hash(params) -> str:
    return hashlib.sha256(json.dumps(params, sort_keys=True, default=list).encode()).hexdigest()


def producer_of(name: str) -> str:
    if name.startswith("runs/"):
        model = name.split("/")[1]
        if model == "heuristic":
            return "baseline"
        return f"train --model {model}" if name.endswith(("checkpoint.json", "loss_curve.csv")) \
            else f"evaluate --model {model}"
    table = {
        "emails.csv": "ingest", "roster.csv": "ingest",
        "embeddings.json": "embed", "centroids.csv": "embed",
        "structure.csv": "graphs", "structure.json": "graphs",
        "semantic.csv": "graphs", "semantic.json": "graphs",
        "centrality.csv": "features", "features.csv": "features",
        "split.json": "split",
    }
    return table.get(name, "unknown")


class Workspace:
    def __init__(self, root):
        self.root = Path(root)
        try:
            self.root.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise ConfigError(f"workdir {self.root} is not writable: {exc}") from None
        mpath = self.root / MANIFEST
        self.manifest = json.loads(mpath.read_text(encoding="utf-8")) if mpath.exists() \
            else {"version": 1, "stages": {}}

    def path(self, name: str) -> Path:
        return self.root / name

    def _recorded(self, name: str) -> tuple[str, str] | None:
        for stage, entry in self.manifest["stages"].items():
            if name in entry["outputs"]:
                return stage, entry["outputs"][name]
        return None

    def require(self, name: str) -> str:
        p = self.path(name)
        if not p.exists():
            raise MissingArtifactError(
                f"missing artifact {name}; run the `{producer_of(name)}` stage first (or pass --from-scratch)")
        digest = file_hash(p)
        rec = self._recorded(name)
        if rec is not None and rec[1] != digest:
            raise StaleCacheError(
                f"{name} no longer matches the hash recorded by stage `{rec[0]}`; "
                f"rerun that stage or pass --from-scratch")
        return digest

    def save_manifest(self) -> None:
        tmp = self.path(MANIFEST + ".tmp")
        tmp.write_text(json.dumps(self.manifest, indent=1, sort_keys=True) + "\n", encoding="utf-8")
        os.replace(tmp, self.path(MANIFEST))

    def run(self, stage: str, inputs: Sequence[str], params, outputs: Sequence[str],
            body: Callable[[Path], None], external: dict[str, str] | None = None,
            force: bool = False) -> bool:
        """Run ``body`` unless the cached outputs are current. Returns True if it ran.

        ``body`` receives a scratch directory and must write every name in
        ``outputs`` relative to it; the files are then renamed into place.
        """
        in_hashes = {name: self.require(name) for name in inputs}
        in_hashes.update(external or {})
        ph = params_hash(params)
        entry = self.manifest["stages"].get(stage)
        if (not force and entry is not None and entry["inputs"] == in_hashes and entry["params"] == ph
                and all(self.path(o).exists() and file_hash(self.path(o)) == entry["outputs"].get(o)
                        for o in outputs)):
            log.info("stage %s: cached", stage)
            return False
        scratch = self.root / f".tmp-{stage.replace('/', '_').replace(' ', '_')}"
        shutil.rmtree(scratch, ignore_errors=True)
        scratch.mkdir(parents=True)
        try:
            body(scratch)
            out_hashes = {}
            for o in outputs:
                src = scratch / o
                if not src.exists():
                    raise RuntimeError(f"stage {stage} did not produce {o}")
                dst = self.path(o)
                dst.parent.mkdir(parents=True, exist_ok=True)
                os.replace(src, dst)
                out_hashes[o] = file_hash(dst)
        finally:
            shutil.rmtree(scratch, ignore_errors=True)
        self.manifest["stages"][stage] = {"inputs": in_hashes, "params": ph, "outputs": out_hashes}
        self.save_manifest()
        log.info("stage %s: done", stage)
        return True


# --- stages ------------------------------------------------------------------------

GRAPH_FILES = ["structure.csv", "structure.json", "semantic.csv", "semantic.json"]


class Pipeline:
    def __init__(self, cfg: PipelineConfig, workdir=None, from_scratch: bool = False):
        self.cfg = cfg
        self.ws = Workspace(workdir or cfg.paths.workdir)
        self.from_scratch = from_scratch

    # loaders

    def roster(self) -> OrgRoster:
        return load_roster(self.ws.path("roster.csv"))

    def records(self, roster: OrgRoster):
        return load_email_log(self.ws.path("emails.csv"), roster).records

    def features(self) -> NodeFeatures:
        return NodeFeatures.read_csv(self.ws.path("features.csv"))

    def operators(self) -> dict:
        g_str = graphs.WeightedGraph.load(self.ws.path("structure"))
        g_ssim = graphs.WeightedGraph.load(self.ws.path("semantic"))
        return build_operators(g_str, g_ssim)

    def _upstream(self, *stages: str) -> None:
        if self.from_scratch:
            for s in stages:
                getattr(self, s)()

    # ingestion

    def ingest(self) -> None:
        p = self.cfg.paths
        if not p.emails or not p.roster:
            if self.from_scratch:
                return self.synth()
            raise ConfigError("paths.emails and paths.roster must be set for `ingest`")
        for src in (p.emails, p.roster):
            if not Path(src).exists():
                raise ConfigError(f"input file {src} does not exist")
        ext = {"source:emails": file_hash(p.emails), "source:roster": file_hash(p.roster)}

        def body(tmp: Path):
            roster = load_roster(p.roster)
            res = load_email_log(p.emails, roster)
            log.info("ingested %d emails (%d dropped)", len(res.records), res.dropped)
            write_roster(tmp / "roster.csv", roster)
            write_email_log(tmp / "emails.csv", res.records)

        self.ws.run("ingest", [], {"source": "files"}, ["emails.csv", "roster.csv"], body,
                    external=ext, force=self.from_scratch)

    def synth(self) -> None:
        scfg = self.cfg.synthetic

        def body(tmp: Path):
            org = generate_synthetic_org(scfg)
            write_roster(tmp / "roster.csv", org.roster)
            write_email_log(tmp / "emails.csv", org.records)

        self.ws.run("ingest", [], {"source": "synthetic", "config": asdict(scfg)},
                    ["emails.csv", "roster.csv"], body, force=self.from_scratch)

    # representation

    def embed(self) -> None:
        self._upstream("ingest")
        bl_path = self.cfg.paths.blocklist
        ext = {}
        if bl_path:
            if not Path(bl_path).exists():
                raise ConfigError(f"blocklist {bl_path} does not exist")
            ext["source:blocklist"] = file_hash(bl_path)
        params = {"embedding": asdict(self.cfg.embedding), "tfidf_floor": self.cfg.tfidf_floor}

        def body(tmp: Path):
            roster = self.roster()
            records = self.records(roster)
            stats = build_corpus_stats(records)
            blocklist = load_blocklist(bl_path) if bl_path else frozenset()
            pruned = prune_tokens(records, stats, blocklist, self.cfg.tfidf_floor)
            emb = train_skipgram(pruned, self.cfg.embedding)
            emb.save(tmp / "embeddings.json")
            sem = node_centroids(pruned, emb, roster.ids)
            if sem.uncovered:
                log.warning("%d employees have no embeddable email", len(sem.uncovered))
            sem.write_csv(tmp / "centroids.csv")

        self.ws.run("embed", ["emails.csv", "roster.csv"], params,
                    ["embeddings.json", "centroids.csv"], body, external=ext, force=self.from_scratch)

    def graphs(self) -> None:
        self._upstream("embed")

        def body(tmp: Path):
            roster = self.roster()
            records = self.records(roster)
            sem = NodeSemantics.read_csv(self.ws.path("centroids.csv"))
            graphs.build_structure_network(records, roster.ids).save(tmp / "structure")
            graphs.build_semantic_network(sem, self.cfg.tau).save(tmp / "semantic")

        self.ws.run("graphs", ["emails.csv", "roster.csv", "centroids.csv"], {"tau": self.cfg.tau},
                    GRAPH_FILES, body, force=self.from_scratch)

    def features_stage(self) -> None:
        self._upstream("graphs")

        def body(tmp: Path):
            g = graphs.WeightedGraph.load(self.ws.path("structure"))
            cent = centrality.compute_all(g)
            cent.write_csv(tmp / "centrality.csv")
            sem = NodeSemantics.read_csv(self.ws.path("centroids.csv"))
            assemble_features(sem, cent).write_csv(tmp / "features.csv")

        self.ws.run("features", ["structure.csv", "structure.json", "centroids.csv"], {},
                    ["centrality.csv", "features.csv"], body, force=self.from_scratch)

    def validate(self) -> dict:
        self._upstream("features_stage")

        def body(tmp: Path):
            feats = self.features()
            by_id = self.roster().by_id()
            fams = [by_id[e].job_family for e in feats.order]
            roles = [by_id[e].role for e in feats.order]
            cov = NodeSemantics.read_csv(self.ws.path("centroids.csv")).coverage
            rep = validate_features(feats, fams, roles, coverage=cov, seed=self.cfg.seed)
            (tmp / "validation_report.json").write_text(
                json.dumps(rep.to_json(), indent=1) + "\n", encoding="utf-8")
            with (tmp / "f1_table.csv").open("w", newline="", encoding="utf-8") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["features", "f1_family", "f1_role"])
                for combo, (ff, fr) in rep.f1_table.items():
                    w.writerow(["+".join(combo), repr(ff), repr(fr)])
            with (tmp / "pca2d.csv").open("w", newline="", encoding="utf-8") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["employee_id", "job_family", "role", "pc1", "pc2"])
                for e, row in zip(feats.order, rep.pca):
                    w.writerow([e, by_id[e].job_family, by_id[e].role, repr(float(row[0])), repr(float(row[1]))])

        self.ws.run("validate", ["features.csv", "roster.csv", "centroids.csv"], {"seed": self.cfg.seed},
                    ["validation_report.json", "f1_table.csv", "pca2d.csv"], body, force=self.from_scratch)
        return json.loads(self.ws.path("validation_report.json").read_text(encoding="utf-8"))

    # retrieval

    def split(self) -> None:
        self._upstream("ingest")
        tc = self.cfg.train

        def body(tmp: Path):
            save_split(tmp / "split.json", make_split(self.roster(), tc))

        self.ws.run("split", ["roster.csv"],
                    {"seed": tc.seed, "fraction": tc.query_holdout_fraction},
                    ["split.json"], body, force=self.from_scratch)

    def _report_files(self, kind: str) -> list[str]:
        return [f"runs/{kind}/report.json", f"runs/{kind}/rankings.csv"]

    def baseline(self) -> dict:
        self._upstream("features_stage", "split")
        if not self.from_scratch and not self.ws.path("split.json").exists():
            self.split()

        def body(tmp: Path):
            feats = self.features()
            rep = hit_at_k(score_matrix(feats, BaselineWeights()), feats.order,
                           load_split(self.ws.path("split.json")), self.roster(),
                           ks=self.cfg.ks, model_kind="heuristic", seed=self.cfg.seed)
            (tmp / "runs/heuristic").mkdir(parents=True)
            write_report(tmp / "runs/heuristic/report.json", rep)
            rep.write_rankings_csv(tmp / "runs/heuristic/rankings.csv")

        self.ws.run("baseline", ["features.csv", "roster.csv", "split.json"],
                    {"ks": list(self.cfg.ks), "weights": asdict(BaselineWeights())},
                    self._report_files("heuristic"), body, force=self.from_scratch)
        return self.report("heuristic")

    def train(self, kind: str) -> None:
        kind = normalize_model(kind)
        if kind == "heuristic":
            self.baseline()
            return
        self._upstream("features_stage", "split")
        if not self.from_scratch and not self.ws.path("split.json").exists():
            self.split()
        tc = self.cfg.train

        def body(tmp: Path):
            feats = self.features()
            pairs = training_pairs(self.roster(), load_split(self.ws.path("split.json")))
            res = train(kind, self.operators(), feats.matrix, pairs, tc)
            out = tmp / "runs" / kind
            out.mkdir(parents=True)
            res.model.save(out / "checkpoint.json")
            write_loss_curve(out / "loss_curve.csv", res.loss_curve)

        self.ws.run(f"train/{kind}", ["features.csv", "roster.csv", "split.json"] + GRAPH_FILES,
                    {"kind": kind, "train": asdict(tc)},
                    [f"runs/{kind}/checkpoint.json", f"runs/{kind}/loss_curve.csv"], body,
                    force=self.from_scratch)

    def evaluate(self, kind: str) -> dict:
        kind = normalize_model(kind)
        if kind == "heuristic":
            return self.baseline()
        if self.from_scratch:
            self.train(kind)
        ckpt = f"runs/{kind}/checkpoint.json"

        def body(tmp: Path):
            model = FusionModel.load(self.ws.path(ckpt))
            feats = self.features()
            ops = self.operators()
            roster = self.roster()
            rep = hit_at_k(model_scores(model, feats.matrix, ops), feats.order,
                           load_split(self.ws.path("split.json")), roster,
                           ks=self.cfg.ks, model_kind=kind, seed=self.cfg.seed)
            gates = gate_analysis(model, feats.matrix, ops, roster, feats.order) if kind == "gating" else None
            (tmp / "runs" / kind).mkdir(parents=True)
            write_report(tmp / f"runs/{kind}/report.json", rep, gates)
            rep.write_rankings_csv(tmp / f"runs/{kind}/rankings.csv")

        self.ws.run(f"evaluate/{kind}", [ckpt, "features.csv", "roster.csv", "split.json"] + GRAPH_FILES,
                    {"ks": list(self.cfg.ks)}, self._report_files(kind), body, force=self.from_scratch)
        return self.report(kind)

    def report(self, kind: str) -> dict:
        return json.loads(self.ws.path(f"runs/{kind}/report.json").read_text(encoding="utf-8"))

    def compare(self, kinds: Sequence[str]) -> list[dict]:
        hits = {}
        for kind in kinds:
            if kind != "heuristic":
                self.train(kind)
            rep = self.evaluate(kind)
            hits[kind] = {int(k): v for k, v in rep["ranking"]["hit_at"].items()}
        rows = summary_rows(hits)
        cols = ["model", "source"] + [f"hit@{k}" for k in sorted(self.cfg.ks)]

        def body(tmp: Path):
            with (tmp / "compare.csv").open("w", newline="", encoding="utf-8") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(cols)
                for r in rows:
                    w.writerow([r.get(c, "") for c in cols])

        inputs = [f for k in kinds for f in self._report_files(k)[:1]]
        self.ws.run("compare", inputs, {"models": list(kinds)}, ["compare.csv"], body)
        return rows

    def gates(self) -> dict:
        if self.from_scratch:
            self.train("gating")
        ckpt = "runs/gating/checkpoint.json"

        def body(tmp: Path):
            model = FusionModel.load(self.ws.path(ckpt))
            feats = self.features()
            rep = gate_analysis(model, feats.matrix, self.operators(), self.roster(), feats.order)
            (tmp / "gates.json").write_text(json.dumps(rep.to_json(), indent=1) + "\n", encoding="utf-8")

        self.ws.run("gates", [ckpt, "features.csv", "roster.csv"] + GRAPH_FILES, {}, ["gates.json"], body)
        return json.loads(self.ws.path("gates.json").read_text(encoding="utf-8"))

    def all(self, synthetic: bool) -> list[dict]:
        self.synth() if synthetic else self.ingest()
        self.embed()
        self.graphs()
        self.features_stage()
        self.validate()
        self.split()
        rows = self.compare(self.cfg.models)
        if "gating" in self.cfg.models:
            self.gates()
        return rows


# --- argument parsing ----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON pipeline config")
    common.add_argument("--workdir", help="work directory (overrides paths.workdir)")
    common.add_argument("--seed", type=int, help="seed for synthesis, embeddings, split and training")
    common.add_argument("--from-scratch", action="store_true", help="rerun this stage and everything upstream")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="talentgraph", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    ing = sub.add_parser("ingest", parents=[common], help="load emails.csv and roster.csv into the workdir")
    ing.add_argument("--emails")
    ing.add_argument("--roster")
    sub.add_parser("synth", parents=[common], help="generate a planted synthetic organization")
    sub.add_parser("embed", parents=[common], help="prune subjects, train word vectors, pool node centroids")
    sub.add_parser("graphs", parents=[common], help="build the structure and semantic networks")
    sub.add_parser("features", parents=[common], help="centralities and 104-d node features")
    sub.add_parser("validate", parents=[common], help="silhouette, AUC, macro-F1 and similarity analytics")
    sub.add_parser("baseline", parents=[common], help="heuristic ranking and its Hit@K report")
    for name in ("train", "evaluate"):
        sp = sub.add_parser(name, parents=[common], help=f"{name} one model")
        sp.add_argument("--model", required=True)
        if name == "train":
            sp.add_argument("--epochs", type=int)
    cmp_ = sub.add_parser("compare", parents=[common], help="train/evaluate several models and tabulate Hit@K")
    cmp_.add_argument("--models", default="all", help="'all' or a comma-separated list")
    sub.add_parser("gates", parents=[common], help="per-family and per-role gate statistics")
    rec = sub.add_parser("recommend", parents=[common], help="top candidates for one employee")
    rec.add_argument("--query", required=True)
    rec.add_argument("--model", default="gating")
    rec.add_argument("--top-k", type=int, default=30)
    pipe = sub.add_parser("pipeline", parents=[common], help="run every stage")
    pipe.add_argument("target", choices=["all"])
    pipe.add_argument("--synthetic", action="store_true", help="synthesize the organization instead of ingesting")
    return p


def _config_from_args(args) -> PipelineConfig:
    cfg = PipelineConfig.load(args.config) if args.config else PipelineConfig()
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    else:
        cfg = cfg.with_seed(cfg.seed)
    if getattr(args, "emails", None):
        cfg.paths.emails = args.emails
    if getattr(args, "roster", None):
        cfg.paths.roster = args.roster
    if getattr(args, "epochs", None):
        cfg.train = replace(cfg.train, epochs=args.epochs)
    return cfg


def _print_rows(rows: list[dict], ks: Sequence[int]) -> None:
    head = f"{'model':<26}" + "".join(f"{'Hit@' + str(k):>10}" for k in ks)
    print(head)
    for r in rows:
        label = r["model"] + (f" ({r['source']})" if "source" in r else "")
        print(f"{label:<26}" + "".join(f"{r.get(f'hit@{k}', float('nan')):>10.3f}" for k in ks))


def run(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _config_from_args(args)
        pipe = Pipeline(cfg, args.workdir, args.from_scratch)
        cmd = args.command
        if cmd == "ingest":
            pipe.ingest()
        elif cmd == "synth":
            pipe.synth()
        elif cmd == "embed":
            pipe.embed()
        elif cmd == "graphs":
            pipe.graphs()
        elif cmd == "features":
            pipe.features_stage()
        elif cmd == "validate":
            rep = pipe.validate()
            print(json.dumps({k: rep[k] for k in ("silhouette_by_feature", "auc_by_feature")}, indent=1))
        elif cmd == "baseline":
            print(json.dumps(pipe.baseline()["ranking"]["hit_at"]))
        elif cmd == "train":
            pipe.train(args.model)
        elif cmd == "evaluate":
            print(json.dumps(pipe.evaluate(args.model)["ranking"]["hit_at"]))
        elif cmd == "compare":
            kinds = list(MODEL_CHOICES) if args.models == "all" else \
                [normalize_model(m.strip()) for m in args.models.split(",")]
            _print_rows(pipe.compare(kinds), sorted(cfg.ks))
        elif cmd == "gates":
            print(json.dumps(pipe.gates(), indent=1))
        elif cmd == "recommend":
            kind = normalize_model(args.model)
            if kind == "heuristic":
                raise ConfigError("recommend needs a trained GNN model")
            ckpt = f"runs/{kind}/checkpoint.json"
            pipe.ws.require(ckpt)
            feats = pipe.features()
            recm = recommend(args.query, FusionModel.load(pipe.ws.path(ckpt)), feats.matrix,
                             pipe.operators(), feats.order, top_k=args.top_k)
            for rank, (c, s) in enumerate(recm.candidates, start=1):
                print(f"{rank}\t{c}\t{s:.6f}")
            if recm.gate_summary:
                print("gate", json.dumps(recm.gate_summary))
        elif cmd == "pipeline":
            _print_rows(pipe.all(args.synthetic), sorted(cfg.ks))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, VocabularyError, SplitError, NodeMismatchError, GraphMismatchError,
            StratificationError, UnknownQueryError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (NumericError, centrality.ConvergenceError, FloatingPointError) as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
