"""Train only the gating model and report per-family structural gate share.

    python3 scripts/gate_study.py --seeds 1 2 3 --structure 0.4 0.5 0.5 1.0 0.5 --text 0.9 0.85 0.85 0.0 0.85

Useful for probing how the planted per-family informativeness knobs move the
learned gate. Family order follows orgdata.FAMILY_NAMES.
"""

import argparse
import logging

import numpy as np

from talentgraph.experiment import run_all
from talentgraph.orgdata import FAMILY_NAMES, SyntheticOrgConfig
from talentgraph.trainer import TrainConfig


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--seeds", type=int, nargs="+", default=[1, 2, 3, 4, 5])
    ap.add_argument("--structure", type=float, nargs="+", help="per-family structure informativeness")
    ap.add_argument("--text", type=float, nargs="+", help="per-family text informativeness")
    ap.add_argument("--epochs", type=int)
    args = ap.parse_args()
    logging.disable(logging.WARNING)

    kw = {}
    if args.structure:
        kw["structure_informativeness"] = tuple(args.structure)
    if args.text:
        kw["text_informativeness"] = tuple(args.text)
    org = SyntheticOrgConfig(**kw)
    train_cfg = TrainConfig(epochs=args.epochs) if args.epochs is not None else None

    fams = list(FAMILY_NAMES[:org.n_families])
    print("seed " + " ".join(f"{f:>6}" for f in fams))
    table = []
    for seed in args.seeds:
        _, _, _, gates = run_all(seed, kinds=("gating",), org_cfg=org, train_cfg=train_cfg)
        row = [gates.per_family_mean_gate[f] for f in fams]
        table.append(row)
        print(f"{seed:>4} " + " ".join(f"{v:6.3f}" for v in row))
    print("mean " + " ".join(f"{v:6.3f}" for v in np.mean(table, axis=0)))


if __name__ == "__main__":
    main()
