"""Multiclass log-loss training with Adagrad and hand-derived gradients."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .model import TdbModel, contract_second, head_rel_products, outer_sum, w_x2
from .regularizers import RegConfig, penalty_rows

ADAGRAD_EPS = 1e-10


class TrainingError(RuntimeError):
    pass


@dataclass
class TrainConfig:
    lr: float = 0.1
    batch_size: int = 100
    epochs: int = 200
    seed: int = 0
    reg: RegConfig = field(default_factory=RegConfig)
    dtype: str = "float32"
    valid_every: int = 5
    log_path: str | None = None
    verbose: bool = False

    def __post_init__(self):
        if self.lr <= 0:
            raise ValueError("learning rate must be positive")
        if self.batch_size < 1:
            raise ValueError("batch size must be at least 1")
        if self.epochs < 0:
            raise ValueError("epochs must be non-negative")
        if self.valid_every < 0:
            raise ValueError("valid_every must be non-negative")


@dataclass
class AdagradState:
    accum: dict[str, np.ndarray]
    eps: float = ADAGRAD_EPS

    @classmethod
    def for_params(cls, params: dict[str, np.ndarray], eps: float = ADAGRAD_EPS):
        return cls({k: np.zeros_like(v) for k, v in params.items()}, eps)


def logsumexp(scores: np.ndarray, axis: int = -1) -> np.ndarray:
    m = np.max(scores, axis=axis, keepdims=True)
    out = m + np.log(np.sum(np.exp(scores - m), axis=axis, keepdims=True))
    return np.squeeze(out, axis=axis)


def loss_triplet(scores, k: int, penalty: float = 0.0) -> float:
    scores = np.asarray(scores, dtype=np.float64)
    return float(-scores[k] + logsumexp(scores) + penalty)


def batch_gradients(model: TdbModel, batch, reg: RegConfig):
    """Gradients of the summed loss over ``batch`` and the mean loss.

    Returns ``(grads, mean_loss)``; ``grads`` is keyed like
    ``model.params()``. For a tied model the tail-role gradient is folded
    into ``head``.
    """
    tr = np.asarray(batch, dtype=np.int64).reshape(-1, 3)
    if len(tr) == 0:
        raise ValueError("empty batch")
    i, j, k = tr[:, 0], tr[:, 1], tr[:, 2]
    b = len(tr)
    w = model.core.values
    h, r, t = model.head[i], model.rel[j], model.tail[k]
    a_h, q = head_rel_products(w, h, r)
    tails = model.tail.reshape(model.n_tails, -1)
    qf = q.reshape(b, -1)
    scores = qf @ tails.T

    pen, pgrads = penalty_rows(model, reg, h, r, t, a_h=a_h, grads=True)
    m = scores.max(axis=1, keepdims=True)
    e = np.exp(scores - m)
    z = e.sum(axis=1, keepdims=True)
    rows = np.arange(b)
    losses = -scores[rows, k] + (m[:, 0] + np.log(z[:, 0])) + pen

    g = e / z
    g[rows, k] -= 1.0
    d_tail = (g.T @ qf).reshape(model.tail.shape)
    dq = (g @ tails).reshape(q.shape)
    dh = contract_second(w_x2(w, r), dq)
    dr = contract_second(a_h, dq)

    ph, pr, pt, pw = pgrads
    d_head = np.zeros_like(model.head)
    d_rel = np.zeros_like(model.rel)
    np.add.at(d_head, i, dh + ph)
    np.add.at(d_rel, j, dr + pr)
    np.add.at(d_tail, k, pt)

    grads = {"head": d_head, "rel": d_rel}
    if model.tied:
        d_head += d_tail
    else:
        grads["tail"] = d_tail
    if model.core.trainable:
        dw = outer_sum(h, r, dq)
        if pw is not None:
            dw = dw + pw
        grads["core"] = dw
    return grads, float(np.mean(losses))


def adagrad_update(state: AdagradState, params: dict[str, np.ndarray],
                   grads: dict[str, np.ndarray], lr: float) -> None:
    for name, g in grads.items():
        p = params[name]
        acc = state.accum[name]
        if acc.shape != g.shape or p.shape != g.shape:
            raise ValueError(f"shape mismatch for {name}: {p.shape} vs {g.shape}")
        acc += g * g
        p -= lr * g / (np.sqrt(acc) + state.eps)


@dataclass
class FitResult:
    model: TdbModel
    losses: list[float]
    valid: list[tuple[int, float]] = field(default_factory=list)
    best_epoch: int | None = None


def fit(model: TdbModel, dataset, cfg: TrainConfig, validate: bool = True) -> FitResult:
    """Train ``model`` on ``dataset.train``.

    When ``validate`` is set and the dataset has a validation split, filtered
    validation MRR is computed every ``cfg.valid_every`` epochs (and at the
    last one) and the best snapshot is returned.
    """
    from .evaluate import evaluate

    model = model.astype(np.dtype(cfg.dtype))
    params = model.params()
    state = AdagradState.for_params(params)
    rng = np.random.default_rng(cfg.seed)
    train = np.asarray(dataset.train, dtype=np.int64)
    n = len(train)
    if n == 0:
        raise TrainingError("empty training split")
    use_valid = validate and cfg.valid_every > 0 and len(dataset.valid) > 0

    log = None
    if cfg.log_path:
        Path(cfg.log_path).parent.mkdir(parents=True, exist_ok=True)
        log = open(cfg.log_path, "a")
    losses, history = [], []
    best, best_mrr, best_epoch = None, -math.inf, None
    try:
        for epoch in range(1, cfg.epochs + 1):
            perm = rng.permutation(n)
            total = 0.0
            for bi, start in enumerate(range(0, n, cfg.batch_size)):
                batch = train[perm[start:start + cfg.batch_size]]
                grads, loss = batch_gradients(model, batch, cfg.reg)
                if not math.isfinite(loss):
                    raise TrainingError(f"non-finite loss at epoch {epoch}, batch {bi}")
                adagrad_update(state, params, grads, cfg.lr)
                total += loss * len(batch)
            losses.append(total / n)
            mrr = None
            if use_valid and (epoch % cfg.valid_every == 0 or epoch == cfg.epochs):
                mrr = evaluate(model, dataset, "valid").mrr
                history.append((epoch, mrr))
                if mrr > best_mrr:
                    best, best_mrr, best_epoch = model.copy(), mrr, epoch
            line = f"{epoch}\t{losses[-1]:.6f}\t{'' if mrr is None else f'{mrr:.6f}'}"
            if log:
                log.write(line + "\n")
                log.flush()
            if cfg.verbose:
                print(line, flush=True)
    finally:
        if log:
            log.close()
    if best is not None:
        return FitResult(best, losses, history, best_epoch)
    return FitResult(model, losses, history, None)
