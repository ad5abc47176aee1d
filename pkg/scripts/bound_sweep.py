"""Scaled gaps of both regularizer bounds on random models, by preset, alpha and block count.

Negative gaps can only appear for alpha > 2 with more than one block, where the
per-block sum is not guaranteed to dominate the overlapped trace norm.

    python scripts/bound_sweep.py --draws 50
"""

import argparse
import itertools

import numpy as np

from tdbkgc.diagnostics import check_bounds
from tdbkgc.model import PRESETS, CoreTensor, TdbModel, build_preset_core, get_preset
from tdbkgc.regularizers import RegConfig


def random_model(name, rng, blocks, n_ent=5, n_rel=3):
    p = 3 if name == "tucker" else get_preset(name, 4).parts
    preset = get_preset(name, p * blocks, parts=p)
    if name == "tucker":
        core = CoreTensor(rng.normal(size=(p, p, p)), trainable=True)
    else:
        core = build_preset_core(preset, p * blocks)
    head = rng.normal(size=(n_ent, blocks, p))
    tail = head if preset.tied else rng.normal(size=(n_ent, blocks, p))
    return TdbModel(head, rng.normal(size=(n_rel, blocks, p)), tail, core, preset.tied, name)


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--draws", type=int, default=50)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--alphas", default="1.5,2,2.25,3")
    ap.add_argument("--blocks", default="1,2,4")
    ap.add_argument("--entities", default="2,5")
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    alphas = [float(a) for a in args.alphas.split(",")]
    blocks_list = [int(b) for b in args.blocks.split(",")]
    entities = [int(e) for e in args.entities.split(",")]
    print(f"{'preset':<10}{'alpha':>6}{'blocks':>7}{'ents':>5}{'min gap':>12}{'violations':>11}")
    for name, alpha, blocks, n_ent in itertools.product(PRESETS, alphas, blocks_list, entities):
        gaps = []
        for _ in range(args.draws):
            m = random_model(name, rng, blocks, n_ent=n_ent, n_rel=2)
            rep = check_bounds(m, RegConfig("ivr", 1.0, 1.0, alpha=alpha), strict=False)
            gaps += [rep.gap_factor / max(1.0, rep.rhs_factor), rep.gap_pair / max(1.0, rep.rhs_pair)]
        gaps = np.array(gaps)
        print(f"{name:<10}{alpha:>6}{blocks:>7}{n_ent:>5}{gaps.min():>12.3e}{int((gaps < -1e-8).sum()):>11}")


if __name__ == "__main__":
    main()
