"""Train every model on planted synthetic orgs and tabulate Hit@K, gates and feature analytics.

    python3 scripts/run_synthetic_comparison.py --seeds 1 2 3 4 5 --out results/comparison.json

Besides Hit@30/100 the script reports R-precision (fraction of a query's
positives found in its top-|positives|), which still separates models when
Hit@K saturates.
"""

import argparse
import json
import time
from pathlib import Path

import numpy as np

from talentgraph.evaluate import positives_of
from talentgraph.experiment import MODEL_CHOICES, run_all, summary_rows
from talentgraph.features import family_similarity_matrix, role_auc, silhouette


def r_precision(report, roster) -> float:
    pos = positives_of(roster)
    vals = []
    for q, ranked in report.per_query.items():
        m = len(pos[q])
        vals.append(len({c for c, _ in ranked[:m]} & pos[q]) / m)
    return float(np.mean(vals))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--seeds", type=int, nargs="+", default=[1, 2, 3, 4, 5])
    ap.add_argument("--models", nargs="+", default=list(MODEL_CHOICES))
    ap.add_argument("--out", type=Path)
    args = ap.parse_args()

    per_seed = []
    for seed in args.seeds:
        t0 = time.time()
        prep, split, runs, gates = run_all(seed, kinds=args.models)
        fams = [e.job_family for e in prep.roster.employees]
        roles = [e.role for e in prep.roster.employees]
        names, sim = family_similarity_matrix(prep.feats.semantic(), fams, prep.sem.coverage)
        row = {
            "seed": seed,
            "hit_at": {k: {str(kk): v for kk, v in r.report.hit_at.items()} for k, r in runs.items()},
            "r_precision": {k: r_precision(r.report, prep.roster) for k, r in runs.items()},
            "silhouette": {c: silhouette(prep.feats.columns([c]), fams) for c in "sdcbe"},
            "role_auc": {c: role_auc(prep.feats.columns([c]), roles) for c in "sdcbe"},
            "family_similarity": {"names": names, "matrix": sim.tolist()},
            "gates": gates.to_json() if gates else None,
        }
        per_seed.append(row)
        print(f"seed {seed} ({time.time() - t0:.0f}s)")
        for k in args.models:
            h = row["hit_at"][k]
            print(f"  {k:<13} hit@30 {h['30']:.3f}  hit@100 {h['100']:.3f}  r-prec {row['r_precision'][k]:.3f}")
        if gates:
            print("  gate share by family:", {f: round(v, 3) for f, v in gates.per_family_mean_gate.items()})

    mean_hits = {k: {int(K): float(np.mean([r["hit_at"][k][K] for r in per_seed])) for K in ("30", "100")}
                 for k in args.models}
    print("\nmean over seeds")
    for r in summary_rows(mean_hits):
        src = f" ({r['source']})" if "source" in r else ""
        rp = np.mean([s["r_precision"][r.get("source", r["model"])] for s in per_seed])
        print(f"  {r['model'] + src:<26} hit@30 {r['hit@30']:.3f}  hit@100 {r['hit@100']:.3f}  r-prec {rp:.3f}")
    if args.out:
        args.out.parent.mkdir(parents=True, exist_ok=True)
        args.out.write_text(json.dumps({"per_seed": per_seed}, indent=1), encoding="utf-8")


if __name__ == "__main__":
    main()
