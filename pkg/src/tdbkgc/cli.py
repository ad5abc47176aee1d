"""Command-line entry point: ``tdbkgc {train,eval,diagnose,rules}``."""

from __future__ import annotations

import argparse
import json
import os
import sys
from contextlib import nullcontext
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .data import DatasetError, load_dataset
from .diagnostics import check_bounds
from .evaluate import evaluate
from .model import (PRESETS, CheckpointError, MemoryBudgetError, PresetError, TdbModel,
                    build_preset_core, get_preset, load_checkpoint, save_checkpoint, DEFAULT_BUDGET)
from .regularizers import KINDS, RegConfig
from .rules import learnability_report
from .trainer import TrainConfig, TrainingError, fit

THREADS_ENV = "KGC_THREADS"
DURA_MESSAGE = "regularizer 'dura' is not implemented (formula not specified)"


class CliError(Exception):
    pass


@dataclass
class CliConfig:
    subcommand: str
    dataset: str | None = None
    model: str = "tucker"
    dim: int = 32
    parts: int | None = None
    reg: RegConfig = field(default_factory=RegConfig)
    lr: float = 0.1
    batch: int = 100
    epochs: int = 200
    seed: int = 0
    checkpoint: str | None = None

    def __post_init__(self):
        if self.dataset is None:
            raise CliError("--dataset is required")
        if self.epochs < 0 or self.batch < 1 or self.lr <= 0:
            raise CliError("need --epochs >= 0, --batch >= 1 and --lr > 0")
        try:
            self.preset = get_preset(self.model, self.dim, parts=self.parts)
        except PresetError as exc:
            raise CliError(str(exc)) from exc
        self.parts = self.preset.parts


def _reg_from_args(args) -> RegConfig:
    if args.reg == "dura":
        raise CliError(DURA_MESSAGE)
    lam1 = args.lambda1 if args.lambda1 is not None else 0.0
    lam2 = args.lambda2 if args.lambda2 is not None else 0.0
    try:
        return RegConfig(args.reg, lam1, lam2, args.lambda3, args.lambda4, alpha=args.alpha)
    except (ValueError, NotImplementedError) as exc:
        raise CliError(str(exc)) from exc


def _parse_grid(text: str) -> list[tuple[float, float, float]]:
    out = []
    for item in text.split(";"):
        if not item.strip():
            continue
        vals = item.split(",")
        if len(vals) != 3:
            raise CliError(f"grid entry {item!r} must be 'alpha,lambda1,lambda2'")
        try:
            out.append(tuple(float(v) for v in vals))
        except ValueError as exc:
            raise CliError(f"grid entry {item!r}: {exc}") from exc
    if not out:
        raise CliError("empty --grid")
    return out


def _thread_limit():
    value = os.environ.get(THREADS_ENV)
    if not value:
        return nullcontext()
    try:
        n = int(value)
    except ValueError as exc:
        raise CliError(f"{THREADS_ENV} must be an integer, got {value!r}") from exc
    if n < 1:
        raise CliError(f"{THREADS_ENV} must be at least 1")
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=n)


def _emit(args, text: str, payload: dict) -> None:
    print(text)
    if getattr(args, "json", False):
        print(json.dumps(payload, sort_keys=True))


def _load_data(args):
    ds = load_dataset(args.dataset)
    return ds.with_inverse_relations() if getattr(args, "inverse", False) else ds


def _build_model(cfg: CliConfig, ds, tied):
    preset = cfg.preset if tied is None else replace(cfg.preset, tied=tied)
    return TdbModel.initialize(preset, ds.n_entities, ds.n_relations, cfg.dim, seed=cfg.seed)


def cmd_train(args) -> int:
    reg = _reg_from_args(args)
    cfg = CliConfig("train", args.dataset, args.model, args.dim, args.parts, reg, args.lr,
                    args.batch, args.epochs, args.seed, args.checkpoint)
    ds = _load_data(args)
    tied = None if args.tied is None else args.tied == "yes"
    grid = _parse_grid(args.grid) if args.grid else [None]
    best = None
    for point in grid:
        run_reg = reg
        if point is not None:
            alpha, lam1, lam2 = point
            run_reg = RegConfig("ivr" if reg.kind in ("none", "ivr") else reg.kind, lam1, lam2,
                                alpha=alpha)
        tcfg = TrainConfig(lr=cfg.lr, batch_size=cfg.batch, epochs=cfg.epochs, seed=cfg.seed,
                           reg=run_reg, dtype=args.dtype, valid_every=args.valid_every,
                           log_path=args.log, verbose=not args.quiet)
        res = fit(_build_model(cfg, ds, tied), ds, tcfg)
        valid_mrr = max((m for _, m in res.valid), default=None)
        if point is not None:
            print(f"grid alpha={point[0]} lambda1={point[1]} lambda2={point[2]} "
                  f"valid_mrr={valid_mrr}")
        if best is None or (valid_mrr is not None and valid_mrr > best[0]):
            best = (valid_mrr if valid_mrr is not None else -1.0, res, run_reg)
    _, res, run_reg = best
    metrics = evaluate(res.model, ds, "test", ties=args.ties)
    extra = {"reg": run_reg.to_dict(), "dataset": str(args.dataset), "seed": cfg.seed,
             "epochs": cfg.epochs, "best_epoch": res.best_epoch, "inverse": bool(args.inverse)}
    if cfg.checkpoint:
        save_checkpoint(res.model, cfg.checkpoint, extra)
    payload = {"metrics": metrics.to_dict(), "losses": res.losses, "valid": res.valid,
               "best_epoch": res.best_epoch, "reg": run_reg.to_dict(), "checkpoint": cfg.checkpoint}
    _emit(args, metrics.to_tsv(), payload)
    return 0


def cmd_eval(args) -> int:
    model, meta = load_checkpoint(args.checkpoint)
    ds = load_dataset(args.dataset)
    if meta.get("extra", {}).get("inverse"):
        ds = ds.with_inverse_relations()
    if (model.n_entities, model.n_relations) != (ds.n_entities, ds.n_relations):
        raise CliError(f"checkpoint has {model.n_entities} entities / {model.n_relations} relations, "
                       f"dataset has {ds.n_entities} / {ds.n_relations}")
    metrics = evaluate(model, ds, args.split, ties=args.ties)
    _emit(args, metrics.to_tsv(), metrics.to_dict())
    return 0


def cmd_diagnose(args) -> int:
    model, meta = load_checkpoint(args.checkpoint)
    reg_meta = meta.get("extra", {}).get("reg")
    reg = RegConfig(**reg_meta) if reg_meta else None
    if args.alpha is not None:
        reg = RegConfig(alpha=args.alpha) if reg is None else replace(reg, alpha=args.alpha)
    report = check_bounds(model.astype(np.float64), reg, strict=False, budget=args.budget)
    text = json.dumps(report.to_dict(), sort_keys=True, indent=2)
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(report.to_json() + "\n")
    print(text)
    return 0


def _read_core(path: str) -> np.ndarray:
    p = Path(path)
    if not p.is_file():
        raise CliError(f"core file not found: {path}")
    try:
        if p.suffix == ".npy":
            core = np.load(p, allow_pickle=False)
        else:
            core = np.asarray(json.loads(p.read_text()), dtype=np.float64)
    except (ValueError, OSError) as exc:
        raise CliError(f"cannot parse core file {path}: {exc}") from exc
    if core.ndim != 3 or len(set(core.shape)) != 1:
        raise CliError(f"core file {path}: expected a P x P x P array, got shape {core.shape}")
    if not np.all(np.isfinite(core)):
        raise CliError(f"core file {path}: non-finite entries")
    return core


def cmd_rules(args) -> int:
    if (args.preset is None) == (args.core is None):
        raise CliError("give exactly one of --preset or --core")
    if args.preset is not None:
        if args.preset == "tucker":
            raise CliError("tucker has a learned core; pass it with --core")
        preset = get_preset(args.preset, 4)
        core = build_preset_core(preset, preset.parts).values
        tied = preset.tied
    else:
        core = _read_core(args.core)
        tied = True
    report = learnability_report(core, tied=tied)
    _emit(args, report.to_text(), report.to_dict())
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="tdbkgc", description="Tensor-decomposition KG completion.")
    sub = ap.add_subparsers(dest="command", required=True)

    tr = sub.add_parser("train", help="train a model and write a checkpoint")
    tr.add_argument("--dataset", required=True, help="dataset directory or bundled name (kinship)")
    tr.add_argument("--model", choices=PRESETS, default="tucker")
    tr.add_argument("--dim", type=int, default=32, help="total embedding dimension D")
    tr.add_argument("--parts", type=int, default=None, help="number of parts P (tucker only; default D)")
    tr.add_argument("--tied", choices=("yes", "no"), default=None,
                    help="share head and tail embeddings (default: preset)")
    tr.add_argument("--reg", choices=KINDS + ("dura",), default="none")
    tr.add_argument("--alpha", type=float, default=2.0)
    tr.add_argument("--lambda1", type=float, default=None)
    tr.add_argument("--lambda2", type=float, default=None)
    tr.add_argument("--lambda3", type=float, default=None, help="default: lambda1")
    tr.add_argument("--lambda4", type=float, default=None, help="default: lambda2")
    tr.add_argument("--lr", type=float, default=0.1)
    tr.add_argument("--batch", type=int, default=100)
    tr.add_argument("--epochs", type=int, default=200)
    tr.add_argument("--seed", type=int, default=0)
    tr.add_argument("--valid-every", type=int, default=5)
    tr.add_argument("--dtype", choices=("float32", "float64"), default="float32")
    tr.add_argument("--inverse", action="store_true", help="add inverse relations to training")
    tr.add_argument("--ties", choices=("optimistic", "average"), default="optimistic")
    tr.add_argument("--grid", default=None, help="'alpha,lambda1,lambda2;...' runs, best valid MRR kept")
    tr.add_argument("--checkpoint", default=None, help="output .npz path")
    tr.add_argument("--log", default=None, help="append-only epoch log (TSV)")
    tr.add_argument("--quiet", action="store_true")
    tr.add_argument("--json", action="store_true")
    tr.set_defaults(func=cmd_train)

    ev = sub.add_parser("eval", help="filtered ranking metrics of a checkpoint")
    ev.add_argument("--checkpoint", required=True)
    ev.add_argument("--dataset", required=True)
    ev.add_argument("--split", choices=("train", "valid", "test"), default="test")
    ev.add_argument("--ties", choices=("optimistic", "average"), default="optimistic")
    ev.add_argument("--json", action="store_true")
    ev.set_defaults(func=cmd_eval)

    dg = sub.add_parser("diagnose", help="overlapped trace norm and bound report")
    dg.add_argument("--checkpoint", required=True)
    dg.add_argument("--alpha", type=float, default=None, help="override the checkpoint's alpha")
    dg.add_argument("--budget", type=int, default=DEFAULT_BUDGET,
                    help="maximum entries of the materialized tensor")
    dg.add_argument("--out", default=None, help="write the report JSON here")
    dg.set_defaults(func=cmd_diagnose)

    ru = sub.add_parser("rules", help="symmetry / antisymmetry / inverse learnability")
    ru.add_argument("--preset", choices=PRESETS, default=None)
    ru.add_argument("--core", default=None, help="core tensor as .npy or JSON nested list")
    ru.add_argument("--json", action="store_true")
    ru.set_defaults(func=cmd_rules)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        with _thread_limit():
            return args.func(args)
    except (CliError, DatasetError, PresetError, CheckpointError, MemoryBudgetError,
            TrainingError, FileNotFoundError, NotImplementedError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
