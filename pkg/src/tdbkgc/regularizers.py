"""Penalties on the sampled embedding rows: IVR, squared Frobenius (F2), N3.

The per-triplet IVR penalty collects the powered Frobenius norms of every
intermediate that appears when a score is evaluated in one of the three
contraction orders::

    lam1 * (|h|^a + |r|^a + |t|^a)
  + lam2 * (|t|^a |r|^a + |t|^a |h|^a + |r|^a |h|^a)
  + lam3 * (|W x1 h|^a + |W x2 r|^a + |W x3 t|^a)
  + lam4 * (|W x2 r x3 t|^a + |W x3 t x1 h|^a + |W x1 h x2 r|^a)

summed over the D/P blocks, where h, r, t are the length-P rows of one block.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .model import (TdbModel, contract_first, contract_second, head_rel_products, outer_sum,
                    w_x1, w_x1_adjoint, w_x2, w_x2_adjoint, w_x3, w_x3_adjoint)

KINDS = ("none", "f2", "n3", "ivr")


@dataclass
class RegConfig:
    kind: str = "none"
    lam1: float = 0.0
    lam2: float = 0.0
    lam3: float | None = None
    lam4: float | None = None
    alpha: float = 2.0

    def __post_init__(self):
        if self.kind == "dura":
            raise NotImplementedError("DURA is not implemented: its formula is not specified here")
        if self.kind not in KINDS:
            raise ValueError(f"unknown regularizer {self.kind!r}; choose from {', '.join(KINDS)}")
        # lam3/lam4 default to lam1/lam2
        if self.lam3 is None:
            self.lam3 = self.lam1
        if self.lam4 is None:
            self.lam4 = self.lam2
        lams = (self.lam1, self.lam2, self.lam3, self.lam4)
        if any(x < 0 for x in lams):
            raise ValueError("regularization coefficients must be non-negative")
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")
        if self.kind == "ivr" and not any(x > 0 for x in lams):
            raise ValueError("ivr needs at least one positive coefficient")

    @property
    def lambdas(self) -> tuple[float, float, float, float]:
        return (self.lam1, self.lam2, self.lam3, self.lam4)

    def to_dict(self) -> dict:
        return asdict(self)


def _pow_norm(v: np.ndarray, alpha: float, naxes: int):
    """``|v|^alpha`` over the last ``naxes`` axes and the gradient coefficient.

    d|v|^a / dv = a |v|^(a-2) v; the coefficient is set to 0 where v = 0.
    """
    axes = tuple(range(v.ndim - naxes, v.ndim))
    n = np.sqrt(np.sum(v * v, axis=axes))
    val = n ** alpha
    with np.errstate(divide="ignore", invalid="ignore"):
        coef = np.where(n > 0, alpha * n ** (alpha - 2.0), 0.0)
    return val, coef


def _bc(coef: np.ndarray, naxes: int) -> np.ndarray:
    return coef.reshape(coef.shape + (1,) * naxes)


def _outer_1(x: np.ndarray, g: np.ndarray) -> np.ndarray:
    """``sum over rows of x[i] g[j, k]`` as ``(P, P, P)``."""
    p = x.shape[-1]
    return (x.reshape(-1, p).T @ g.reshape(-1, p * p)).reshape(p, p, p)


def ivr_rows(core, h, r, t, cfg: RegConfig, a_h=None, grads: bool = False, core_grad: bool = False):
    """IVR over batched rows ``h, r, t`` of shape ``(b, D/P, P)``.

    Returns ``(penalty, grads)`` where ``penalty`` has shape ``(b,)`` and
    ``grads`` is ``(dh, dr, dt, dW)`` (``dW`` None unless ``core_grad``) or
    None. ``a_h = W x1 h`` may be passed in from the scoring pass.
    """
    lam1, lam2, lam3, lam4 = cfg.lambdas
    alpha = cfg.alpha
    w = core
    if a_h is None:
        a_h = w_x1(w, h)
    a_r = w_x2(w, r)
    a_t = w_x3(w, t)
    v_hr = contract_first(a_h, r)  # W x1 h x2 r, over n
    v_rt = contract_second(a_r, t)  # W x2 r x3 t, over l
    v_th = contract_first(a_t, h)  # W x3 t x1 h, over m

    nh, ch = _pow_norm(h, alpha, 1)
    nr, cr = _pow_norm(r, alpha, 1)
    nt, ct = _pow_norm(t, alpha, 1)
    nah, cah = _pow_norm(a_h, alpha, 2)
    nar, car = _pow_norm(a_r, alpha, 2)
    nat, cat = _pow_norm(a_t, alpha, 2)
    nhr, chr_ = _pow_norm(v_hr, alpha, 1)
    nrt, crt = _pow_norm(v_rt, alpha, 1)
    nth, cth = _pow_norm(v_th, alpha, 1)

    per_block = (
        lam1 * (nh + nr + nt)
        + lam2 * (nt * nr + nt * nh + nr * nh)
        + lam3 * (nah + nar + nat)
        + lam4 * (nrt + nth + nhr)
    )
    penalty = per_block.sum(axis=1)
    if not grads:
        return penalty, None

    dh = _bc((lam1 + lam2 * (nt + nr)) * ch, 1) * h
    dr = _bc((lam1 + lam2 * (nt + nh)) * cr, 1) * r
    dt = _bc((lam1 + lam2 * (nr + nh)) * ct, 1) * t

    g_ah = lam3 * _bc(cah, 2) * a_h
    g_ar = lam3 * _bc(car, 2) * a_r
    g_at = lam3 * _bc(cat, 2) * a_t
    dh += w_x1_adjoint(w, g_ah)
    dr += w_x2_adjoint(w, g_ar)
    dt += w_x3_adjoint(w, g_at)

    g_hr = lam4 * _bc(chr_, 1) * v_hr
    g_rt = lam4 * _bc(crt, 1) * v_rt
    g_th = lam4 * _bc(cth, 1) * v_th
    # W x1 h x2 r
    dh += contract_second(a_r, g_hr)
    dr += contract_second(a_h, g_hr)
    # W x2 r x3 t
    dr += contract_first(a_t, g_rt)
    dt += contract_first(a_r, g_rt)
    # W x3 t x1 h
    dt += contract_first(a_h, g_th)
    dh += contract_second(a_t, g_th)

    dw = None
    if core_grad:
        dw = (
            _outer_1(h, g_ah)
            + _outer_1(r, g_ar).transpose(1, 0, 2)
            + _outer_1(t, g_at).transpose(1, 2, 0)
            + outer_sum(h, r, g_hr)
            + outer_sum(g_rt, r, t)
            + outer_sum(h, g_th, t)
        )
    return penalty, (dh, dr, dt, dw)


def f2_rows(h, r, t, lam: float, grads: bool = False):
    penalty = lam * (np.sum(h * h, axis=(1, 2)) + np.sum(r * r, axis=(1, 2)) + np.sum(t * t, axis=(1, 2)))
    if not grads:
        return penalty, None
    return penalty, (2 * lam * h, 2 * lam * r, 2 * lam * t, None)


def n3_rows(h, r, t, lam: float, grads: bool = False):
    penalty = lam * (
        np.sum(np.abs(h) ** 3, axis=(1, 2))
        + np.sum(np.abs(r) ** 3, axis=(1, 2))
        + np.sum(np.abs(t) ** 3, axis=(1, 2))
    )
    if not grads:
        return penalty, None
    g = lambda x: 3 * lam * x * np.abs(x)  # noqa: E731
    return penalty, (g(h), g(r), g(t), None)


def penalty_rows(model: TdbModel, cfg: RegConfig, h, r, t, a_h=None, grads: bool = False):
    """Dispatch on ``cfg.kind``; returns ``(penalty[b], grads | None)``."""
    if cfg.kind == "none":
        z = np.zeros(h.shape[0], dtype=h.dtype)
        return z, ((np.zeros_like(h), np.zeros_like(r), np.zeros_like(t), None) if grads else None)
    if cfg.kind == "f2":
        return f2_rows(h, r, t, cfg.lam1, grads)
    if cfg.kind == "n3":
        return n3_rows(h, r, t, cfg.lam1, grads)
    return ivr_rows(model.core.values, h, r, t, cfg, a_h=a_h, grads=grads,
                    core_grad=grads and model.core.trainable)


def _rows(model: TdbModel, triplet):
    i, j, k = (int(x) for x in triplet)
    return model.head[i][None], model.rel[j][None], model.tail[k][None]


def ivr_triplet(model: TdbModel, triplet, cfg: RegConfig) -> float:
    h, r, t = _rows(model, triplet)
    return float(ivr_rows(model.core.values, h, r, t, cfg)[0][0])


def ivr_with_score(model: TdbModel, triplet, cfg: RegConfig) -> tuple[float, float]:
    """Score and IVR penalty sharing the ``W x1 h`` intermediate."""
    h, r, t = _rows(model, triplet)
    a_h, q = head_rel_products(model.core.values, h, r)
    reg = ivr_rows(model.core.values, h, r, t, cfg, a_h=a_h)[0][0]
    return float(np.sum(q * t)), float(reg)


def f2_triplet(model: TdbModel, triplet, lam: float) -> float:
    return float(f2_rows(*_rows(model, triplet), lam)[0][0])


def n3_triplet(model: TdbModel, triplet, lam: float) -> float:
    return float(n3_rows(*_rows(model, triplet), lam)[0][0])


def ivr_full_terms(model: TdbModel, alpha: float) -> dict[str, np.ndarray]:
    """Powered norms of the full-slice intermediates, each of shape ``(D/P, 3)``.

    Keys ``row1`` .. ``row4`` follow the coefficient they are weighted by.
    Column order: row1 (H, R, T); row2 (TR, TH, RH); row3 (W x1 H, W x2 R,
    W x3 T); row4 (W x2 R x3 T, W x3 T x1 H, W x1 H x2 R).
    """
    w = model.core.values.astype(np.float64)
    nb = model.blocks
    rows = {key: np.zeros((nb, 3)) for key in ("row1", "row2", "row3", "row4")}
    fro = lambda x: float(np.sqrt(np.sum(x * x))) ** alpha  # noqa: E731
    for d in range(nb):
        H = model.head[:, d, :].astype(np.float64)
        R = model.rel[:, d, :].astype(np.float64)
        T = model.tail[:, d, :].astype(np.float64)
        nh, nr, nt = fro(H), fro(R), fro(T)
        rows["row1"][d] = (nh, nr, nt)
        rows["row2"][d] = (nt * nr, nt * nh, nr * nh)
        wh = np.einsum("lmn,il->imn", w, H)
        wr = np.einsum("lmn,jm->ljn", w, R)
        wt = np.einsum("lmn,kn->lmk", w, T)
        rows["row3"][d] = (fro(wh), fro(wr), fro(wt))
        rows["row4"][d] = (
            fro(np.einsum("ljn,kn->ljk", wr, T)),
            fro(np.einsum("lmk,il->imk", wt, H)),
            fro(np.einsum("imn,jm->ijn", wh, R)),
        )
    return rows


def ivr_full(model: TdbModel, cfg: RegConfig) -> float:
    terms = ivr_full_terms(model, cfg.alpha)
    lam1, lam2, lam3, lam4 = cfg.lambdas
    return float(
        lam1 * terms["row1"].sum() + lam2 * terms["row2"].sum()
        + lam3 * terms["row3"].sum() + lam4 * terms["row4"].sum()
    )
