"""Rank tests deciding whether a core can express symmetric, antisymmetric
and inverse relations (with head and tail embeddings shared).

With ``M = W_(2)^T`` (P^2 x P, rows indexed by (l, n)) and ``S`` the
permutation swapping l and n:

* symmetry is learnable iff rank(M - S M) < P
* antisymmetry is learnable iff rank(M + S M) < P
* inverse is learnable iff rank(M) = rank([M, S M])
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

from . import kernels
from .model import CoreTensor, TdbModel


@dataclass
class LearnabilityReport:
    parts: int
    rank_sym: int
    rank_anti: int
    rank_w2: int
    rank_concat: int
    symmetry: bool
    antisymmetry: bool
    inverse: bool
    note: str = ""

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def to_text(self) -> str:
        rows = [
            ("parts", self.parts),
            ("rank(M - SM)", self.rank_sym),
            ("rank(M + SM)", self.rank_anti),
            ("rank(M)", self.rank_w2),
            ("rank([M, SM])", self.rank_concat),
            ("symmetry", self.symmetry),
            ("antisymmetry", self.antisymmetry),
            ("inverse", self.inverse),
        ]
        width = max(len(k) for k, _ in rows)
        out = [f"{k.ljust(width)}  {v}" for k, v in rows]
        if self.note:
            out.append(f"note: {self.note}")
        return "\n".join(out)


def swap_matrix(p: int) -> np.ndarray:
    """P^2 x P^2 permutation with S[(i-1)P + j, (j-1)P + i] = 1 (1-based)."""
    if p < 1:
        raise ValueError("P must be at least 1")
    s = np.zeros((p * p, p * p))
    for i in range(p):
        for j in range(p):
            s[i * p + j, j * p + i] = 1.0
    return s


def _core_values(core) -> np.ndarray:
    w = core.values if isinstance(core, CoreTensor) else np.asarray(core, dtype=np.float64)
    if w.ndim != 3 or len(set(w.shape)) != 1:
        raise kernels.ShapeMismatchError(f"core must be P x P x P, got {w.shape}")
    return w.astype(np.float64)


def learnability_report(core, tied: bool = True) -> LearnabilityReport:
    w = _core_values(core)
    p = w.shape[0]
    m = kernels.unfold(w, 2).T
    sm = swap_matrix(p) @ m
    rank_sym = kernels.numerical_rank(m - sm)
    rank_anti = kernels.numerical_rank(m + sm)
    rank_w2 = kernels.numerical_rank(m)
    rank_concat = kernels.numerical_rank(np.hstack([m, sm]))
    note = "" if tied else "verdicts assume shared head/tail embeddings; this model is untied"
    return LearnabilityReport(p, rank_sym, rank_anti, rank_w2, rank_concat,
                              rank_sym < p, rank_anti < p, rank_w2 == rank_concat, note)


def rule_witness(core, rule: str):
    """A non-zero per-part relation vector ``r`` (length P) realizing ``rule``.

    ``rule`` is ``"symmetry"`` or ``"antisymmetry"``; returns None when the
    null space is trivial.
    """
    w = _core_values(core)
    p = w.shape[0]
    m = kernels.unfold(w, 2).T
    sm = swap_matrix(p) @ m
    if rule == "symmetry":
        a = m - sm
    elif rule == "antisymmetry":
        a = m + sm
    else:
        raise ValueError(f"unknown rule {rule!r}")
    basis = kernels.null_space(a)
    if basis.shape[1] == 0:
        return None
    return basis[:, 0]


def inverse_partner(core, r1) -> np.ndarray:
    """Least-squares ``r2`` with ``M r1 = S M r2`` (exact when inverse is learnable)."""
    w = _core_values(core)
    m = kernels.unfold(w, 2).T
    sm = swap_matrix(w.shape[0]) @ m
    r2, *_ = np.linalg.lstsq(sm, m @ np.asarray(r1, dtype=np.float64), rcond=None)
    return r2


def witness_model(core, r: np.ndarray, n_entities: int, blocks: int, rng) -> TdbModel:
    """Tied model with random entities and a single relation row ``r`` in every block."""
    w = _core_values(core)
    p = w.shape[0]
    ent = rng.normal(size=(n_entities, blocks, p))
    rel = np.tile(np.asarray(r, dtype=np.float64), (1, blocks, 1))
    return TdbModel(ent, rel, ent, CoreTensor(w), tied=True)
