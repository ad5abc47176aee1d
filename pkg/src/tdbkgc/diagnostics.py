"""Overlapped trace norm and the regularizer upper bounds on it.

For any decomposition of X,

    2 sqrt(lam1 lam4) L(X; a) <= rhs_factor = sum_d lam1 * row1 + lam4 * row4
    2 sqrt(lam2 lam3) L(X; a) <= rhs_pair = sum_d lam2 * row2 + lam3 * row3

where ``L(X; a) = sum_n |X_(n)|_*^(a/2)`` and the rows are the full-slice
intermediate norms from :func:`tdbkgc.regularizers.ivr_full_terms`.

Both bounds follow from the matrix identity
``|Z|_*^a = min_{Z = U V^T} (lam |U|_F^(2a) + |V|_F^(2a) / lam) / 2`` applied
per unfolding. With more than one block the per-block sum is only guaranteed
to dominate for ``a <= 2``; ``check_bounds`` reports whether the bound is
guaranteed for the model at hand.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from . import kernels
from .model import CoreTensor, TdbModel, materialize_tensor, DEFAULT_BUDGET
from .regularizers import RegConfig, ivr_full_terms

SVD_CUTOFF = 1e-12


class BoundViolation(AssertionError):
    pass


@dataclass
class BoundReport:
    alpha: float
    lambdas: tuple[float, float, float, float]
    trace_norms: tuple[float, float, float]
    L: float
    lhs_factor: float
    rhs_factor: float
    lhs_pair: float
    rhs_pair: float
    guaranteed: bool

    @property
    def gap_factor(self) -> float:
        return self.rhs_factor - self.lhs_factor

    @property
    def gap_pair(self) -> float:
        return self.rhs_pair - self.lhs_pair

    @property
    def L2(self) -> float:
        """Overlapped trace norm at alpha = 2 (plain sum of trace norms)."""
        return float(sum(self.trace_norms))

    def to_dict(self) -> dict:
        d = asdict(self)
        d.update(gap_factor=self.gap_factor, gap_pair=self.gap_pair, L2=self.L2, L2_rounded=int(round(self.L2)),
                 trace_norms_rounded=[int(round(x)) for x in self.trace_norms])
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def bound_tolerance(rhs: float) -> float:
    return 1e-8 * max(1.0, abs(rhs))


def mode_trace_norms(x) -> tuple[float, float, float]:
    return tuple(kernels.trace_norm(kernels.unfold(x, m)) for m in (1, 2, 3))


def overlapped_trace_norm(x, alpha: float = 2.0) -> float:
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    return float(sum(tn ** (alpha / 2.0) for tn in mode_trace_norms(x)))


def rhs_factor_bound(model: TdbModel, lam1: float, lam4: float, alpha: float) -> float:
    terms = ivr_full_terms(model, alpha)
    return float(lam1 * terms["row1"].sum() + lam4 * terms["row4"].sum())


def rhs_pair_bound(model: TdbModel, lam2: float, lam3: float, alpha: float) -> float:
    terms = ivr_full_terms(model, alpha)
    return float(lam2 * terms["row2"].sum() + lam3 * terms["row3"].sum())


def bound_guaranteed(model: TdbModel, alpha: float) -> bool:
    return model.blocks == 1 or alpha <= 2.0


def check_bounds(model: TdbModel, cfg: RegConfig | None = None, strict: bool = True,
                 budget: int = DEFAULT_BUDGET) -> BoundReport:
    """Materialize X and compare both sides of both bounds.

    Coefficients and alpha come from ``cfg``; a missing or non-IVR config
    uses unit coefficients. With ``strict`` a violation beyond tolerance
    raises :class:`BoundViolation` when the bound is guaranteed to hold.
    """
    if cfg is None or cfg.kind != "ivr":
        alpha = cfg.alpha if cfg is not None else 2.0
        lams = (1.0, 1.0, 1.0, 1.0)
    else:
        alpha, lams = cfg.alpha, cfg.lambdas
    lam1, lam2, lam3, lam4 = lams
    x = materialize_tensor(model, budget)
    tns = mode_trace_norms(x)
    L = float(sum(tn ** (alpha / 2.0) for tn in tns))
    terms = ivr_full_terms(model, alpha)
    rep = BoundReport(
        alpha=alpha,
        lambdas=tuple(float(v) for v in lams),
        trace_norms=tuple(float(v) for v in tns),
        L=L,
        lhs_factor=2.0 * math.sqrt(lam1 * lam4) * L,
        rhs_factor=float(lam1 * terms["row1"].sum() + lam4 * terms["row4"].sum()),
        lhs_pair=2.0 * math.sqrt(lam2 * lam3) * L,
        rhs_pair=float(lam2 * terms["row2"].sum() + lam3 * terms["row3"].sum()),
        guaranteed=bound_guaranteed(model, alpha),
    )
    if strict and rep.guaranteed:
        for name, gap, rhs in (("factor", rep.gap_factor, rep.rhs_factor), ("pair", rep.gap_pair, rep.rhs_pair)):
            if gap < -bound_tolerance(rhs):
                raise BoundViolation(f"{name} bound violated by {-gap:.3e} (rhs={rhs:.6e})")
    return rep


def balanced_split(z, lam: float, alpha: float):
    """Factor ``z = U V^T`` attaining ``(lam|U|^(2a) + |V|^(2a)/lam)/2 = |z|_*^a``."""
    if lam <= 0 or alpha <= 0:
        raise ValueError("lam and alpha must be positive")
    z = np.asarray(z, dtype=np.float64)
    u, s, vt = kernels.compact_svd(z, SVD_CUTOFF)
    root = np.sqrt(s)
    U = lam ** (-1.0 / (2 * alpha)) * u * root
    V = lam ** (1.0 / (2 * alpha)) * vt.T * root
    return U, V


def split_objective(U, V, lam: float, alpha: float) -> float:
    fu = float(np.sum(U * U)) ** alpha
    fv = float(np.sum(V * V)) ** alpha
    return 0.5 * (lam * fu + fv / lam)


def tight_decomposition(x, lam1: float, lam4: float, alpha: float) -> TdbModel:
    """Single-block decomposition of ``x`` attaining equality in the factor bound.

    Factors are ``c^(-1/a) U_n sqrt(S_n)`` from compact SVDs of the three
    unfoldings with ``c = sqrt(lam1/lam4)``, and the core is
    ``c^(3/a) x x1 S1^-1/2 U1^T x2 S2^-1/2 U2^T x3 S3^-1/2 U3^T``. Unequal
    mode ranks are zero-padded to a cubic core. The returned model is untied
    and its head/tail counts follow ``x.shape``.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 3:
        raise kernels.ShapeMismatchError("expected a 3rd-order tensor")
    if lam1 <= 0 or lam4 <= 0 or alpha <= 0:
        raise ValueError("lam1, lam4 and alpha must be positive")
    c = math.sqrt(lam1 / lam4)
    svds = [kernels.compact_svd(kernels.unfold(x, m), SVD_CUTOFF) for m in (1, 2, 3)]
    ranks = [s.size for _, s, _ in svds]
    p = max(max(ranks), 1)
    factors, projectors = [], []
    for (u, s, _), n in zip(svds, x.shape):
        root = np.sqrt(s)
        f = np.zeros((n, p))
        f[:, :s.size] = c ** (-1.0 / alpha) * u * root
        proj = np.zeros((p, n))
        proj[:s.size] = (u / root).T
        factors.append(f)
        projectors.append(proj)
    w = x
    for mode, proj in zip((1, 2, 3), projectors):
        w = kernels.mode_n_product(w, proj, mode)
    w = c ** (3.0 / alpha) * w
    head, rel, tail = (f[:, None, :] for f in factors)
    return TdbModel(head, rel, tail, CoreTensor(w, trainable=True), tied=False, preset="tucker")
