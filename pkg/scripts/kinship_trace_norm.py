"""Train TuckER on Kinship with and without IVR and compare trace norms and MRR.

    python scripts/kinship_trace_norm.py --dim 16 --epochs 100 --out reports/
"""

import argparse
import json
import time
from pathlib import Path

import numpy as np

from tdbkgc.data import load_dataset
from tdbkgc.diagnostics import check_bounds
from tdbkgc.evaluate import evaluate
from tdbkgc.model import TdbModel, get_preset, save_checkpoint
from tdbkgc.regularizers import RegConfig
from tdbkgc.trainer import TrainConfig, fit


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--dim", type=int, default=16)
    ap.add_argument("--epochs", type=int, default=100)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--lr", type=float, default=0.1)
    ap.add_argument("--batch", type=int, default=100)
    ap.add_argument("--valid-every", type=int, default=10)
    ap.add_argument("--alpha", type=float, default=2.0)
    ap.add_argument("--lambda1", type=float, default=1e-3)
    ap.add_argument("--lambda2", type=float, default=3e-3)
    ap.add_argument("--out", type=Path, default=None, help="directory for checkpoints and reports")
    args = ap.parse_args()

    ds = load_dataset("kinship")
    regs = {"none": RegConfig(), "ivr": RegConfig("ivr", args.lambda1, args.lambda2, alpha=args.alpha)}
    rows = {}
    for label, reg in regs.items():
        start = time.perf_counter()
        init = TdbModel.initialize(get_preset("tucker", args.dim), ds.n_entities, ds.n_relations,
                                   args.dim, seed=args.seed)
        cfg = TrainConfig(lr=args.lr, batch_size=args.batch, epochs=args.epochs, seed=args.seed,
                          reg=reg, valid_every=args.valid_every)
        res = fit(init, ds, cfg)
        rep = check_bounds(res.model.astype(np.float64), reg, strict=False)
        rows[label] = {
            "L2": rep.L2,
            "trace_norms": rep.trace_norms,
            "mrr": evaluate(res.model, ds, "test").mrr,
            "mrr_average_ties": evaluate(res.model, ds, "test", ties="average").mrr,
            "hits10": evaluate(res.model, ds, "test").hits[10],
            "best_epoch": res.best_epoch,
            "seconds": time.perf_counter() - start,
        }
        if args.out:
            args.out.mkdir(parents=True, exist_ok=True)
            save_checkpoint(res.model, args.out / f"kinship_tucker_{label}.npz",
                            extra={"reg": reg.to_dict(), "dataset": "kinship", "seed": args.seed})
            (args.out / f"bounds_{label}.json").write_text(json.dumps(rep.to_dict(), indent=2))

    print(f"{'model':<8}{'L(X;2)':>12}{'MRR':>9}{'MRR avg':>9}{'H@10':>8}{'best':>6}{'sec':>7}")
    for label, r in rows.items():
        print(f"{label:<8}{r['L2']:>12,.1f}{r['mrr']:>9.4f}{r['mrr_average_ties']:>9.4f}"
              f"{r['hits10']:>8.4f}{r['best_epoch'] or 0:>6}{r['seconds']:>7.1f}")
    print(f"L(X;2) ratio ivr/none: {rows['ivr']['L2'] / rows['none']['L2']:.3f}")
    print(f"MRR gain: {rows['ivr']['mrr'] - rows['none']['mrr']:+.4f}")


if __name__ == "__main__":
    main()
