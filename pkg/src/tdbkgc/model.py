"""Shared-core block-term scoring model.

Embeddings are stored as ``(count, D // P, P)`` arrays: axis 1 indexes the
block ``d`` and axis 2 the part. A triplet score is

    X[i, j, k] = sum_d sum_{l,m,n} W[l, m, n] * H[i, d, l] * R[j, d, m] * T[k, d, n]

The named presets differ only in ``P`` and in the (usually constant) core ``W``.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import kernels

PRESETS = ("cp", "distmult", "complex", "simple", "analogy", "quate", "tucker")

# parts per preset; tucker uses P = D
_PARTS = {"cp": 1, "distmult": 1, "complex": 2, "simple": 2, "analogy": 4, "quate": 4}

# (l, m, n, sign), 1-based, one entry per dot-product term of the closed form
_SIGN_PATTERNS = {
    "cp": [(1, 1, 1, 1)],
    "distmult": [(1, 1, 1, 1)],
    "complex": [(1, 1, 1, 1), (2, 1, 2, 1), (1, 2, 2, 1), (2, 2, 1, -1)],
    "simple": [(1, 1, 2, 1), (2, 2, 1, 1)],
    "analogy": [
        (1, 1, 1, 1), (2, 2, 2, 1), (3, 3, 3, 1),
        (3, 4, 4, 1), (4, 3, 4, 1), (4, 4, 3, -1),
    ],
    "quate": [
        (1, 1, 1, 1), (2, 2, 1, -1), (3, 3, 1, -1), (4, 4, 1, -1),
        (1, 2, 2, 1), (2, 1, 2, 1), (3, 4, 2, 1), (4, 3, 2, -1),
        (1, 3, 3, 1), (2, 4, 3, -1), (3, 1, 3, 1), (4, 2, 3, 1),
        (1, 4, 4, 1), (2, 3, 4, 1), (3, 2, 4, -1), (4, 1, 4, 1),
    ],
}

DEFAULT_INIT_STD = 1e-3
DEFAULT_BUDGET = 50_000_000  # entries of a materialized tensor


class PresetError(ValueError):
    pass


class MemoryBudgetError(RuntimeError):
    pass


class CheckpointError(RuntimeError):
    pass


@dataclass(frozen=True)
class ModelPreset:
    name: str
    parts: int
    tied: bool


@dataclass
class CoreTensor:
    values: np.ndarray
    trainable: bool = False

    @property
    def parts(self) -> int:
        return self.values.shape[0]


def get_preset(name: str, dim: int, tied: bool | None = None, parts: int | None = None) -> ModelPreset:
    """Preset ``name`` at dimension ``dim``; ``parts`` may only be changed for tucker."""
    name = name.lower()
    if name not in PRESETS:
        raise PresetError(f"unknown model preset {name!r}; choose from {', '.join(PRESETS)}")
    natural = dim if name == "tucker" else _PARTS[name]
    if parts is not None and parts != natural and name != "tucker":
        raise PresetError(f"model {name} has P={natural}, got P={parts}")
    parts = natural if parts is None else parts
    if parts < 1 or dim < 1 or dim % parts:
        raise PresetError(f"D={dim} is not divisible by P={parts}")
    if tied is None:
        tied = name != "cp"
    return ModelPreset(name, parts, tied)


def build_preset_core(preset: ModelPreset, dim: int, rng=None) -> CoreTensor:
    """Core tensor for ``preset`` at total embedding dimension ``dim``.

    Constant presets get their sign pattern. ``tucker`` gets a trainable core,
    drawn uniform on [-1, 1] when ``rng`` is given and zero otherwise.
    """
    if preset.name not in PRESETS:
        raise PresetError(f"unknown model preset {preset.name!r}")
    p = preset.parts
    if dim <= 0 or p <= 0 or dim % p:
        raise PresetError(f"D={dim} is not divisible by P={p}")
    if preset.name == "tucker":
        if rng is None:
            return CoreTensor(np.zeros((p, p, p)), trainable=True)
        return CoreTensor(rng.uniform(-1.0, 1.0, size=(p, p, p)), trainable=True)
    w = np.zeros((p, p, p))
    for l, m, n, sign in _SIGN_PATTERNS[preset.name]:
        w[l - 1, m - 1, n - 1] = sign
    return CoreTensor(w, trainable=False)


class TdbModel:
    """Embedding tables plus core. ``tail is head`` when ``tied``."""

    def __init__(self, head, rel, tail, core: CoreTensor, tied: bool, preset: str = "custom"):
        head = np.asarray(head)
        rel = np.asarray(rel)
        if tied:
            tail = head
        tail = np.asarray(tail)
        p = core.parts
        if core.values.shape != (p, p, p):
            raise kernels.ShapeMismatchError(f"core must be cubic, got {core.values.shape}")
        for name, arr in (("head", head), ("rel", rel), ("tail", tail)):
            if arr.ndim != 3 or arr.shape[2] != p:
                raise kernels.ShapeMismatchError(
                    f"{name} table must have shape (count, D/P, {p}), got {arr.shape}"
                )
        if not (head.shape[1] == rel.shape[1] == tail.shape[1]):
            raise kernels.ShapeMismatchError("embedding tables disagree on the number of blocks")
        self.head = head
        self.rel = rel
        self.tail = tail
        self.core = core
        self.tied = bool(tied)
        self.preset = preset

    @classmethod
    def initialize(cls, preset: ModelPreset, n_entities: int, n_relations: int, dim: int,
                   seed: int = 0, init_std: float = DEFAULT_INIT_STD, dtype=np.float64):
        core = build_preset_core(preset, dim)
        rng = np.random.default_rng(seed)
        p = preset.parts
        nb = dim // p
        head = rng.normal(0.0, init_std, size=(n_entities, nb, p))
        rel = rng.normal(0.0, init_std, size=(n_relations, nb, p))
        tail = head if preset.tied else rng.normal(0.0, init_std, size=(n_entities, nb, p))
        if core.trainable:
            core = CoreTensor(rng.uniform(-1.0, 1.0, size=(p, p, p)), trainable=True)
        core.values = core.values.astype(dtype)
        head = head.astype(dtype)
        rel = rel.astype(dtype)
        tail = head if preset.tied else tail.astype(dtype)
        return cls(head, rel, tail, core, preset.tied, preset.name)

    @property
    def n_entities(self) -> int:
        return self.head.shape[0]

    @property
    def n_tails(self) -> int:
        return self.tail.shape[0]

    @property
    def n_relations(self) -> int:
        return self.rel.shape[0]

    @property
    def parts(self) -> int:
        return self.core.parts

    @property
    def blocks(self) -> int:
        return self.head.shape[1]

    @property
    def dim(self) -> int:
        return self.blocks * self.parts

    @property
    def dtype(self):
        return self.head.dtype

    def params(self) -> dict[str, np.ndarray]:
        """Distinct trainable arrays by name (``tail`` absent when tied)."""
        out = {"head": self.head, "rel": self.rel}
        if not self.tied:
            out["tail"] = self.tail
        if self.core.trainable:
            out["core"] = self.core.values
        return out

    def copy(self) -> "TdbModel":
        head = self.head.copy()
        tail = head if self.tied else self.tail.copy()
        core = CoreTensor(self.core.values.copy(), self.core.trainable)
        return TdbModel(head, self.rel.copy(), tail, core, self.tied, self.preset)

    def astype(self, dtype) -> "TdbModel":
        head = self.head.astype(dtype)
        tail = head if self.tied else self.tail.astype(dtype)
        core = CoreTensor(self.core.values.astype(dtype), self.core.trainable)
        return TdbModel(head, self.rel.astype(dtype), tail, core, self.tied, self.preset)


def _check_ids(model: TdbModel, i=None, j=None, k=None):
    for name, idx, n in (("head", i, model.n_entities), ("relation", j, model.n_relations),
                         ("tail", k, model.n_tails)):
        if idx is None:
            continue
        a = np.asarray(idx)
        if a.size and (a.min() < 0 or a.max() >= n):
            raise IndexError(f"{name} id out of range [0, {n})")


# Core contractions over rows of shape (..., P), written as reshapes plus BLAS
# matmuls; einsum with a core operand is an order of magnitude slower here.

def w_x1(w: np.ndarray, h: np.ndarray) -> np.ndarray:
    """``W x1 h`` per row; result ``(..., P, P)`` indexed ``[m, n]``."""
    p = w.shape[0]
    return (h.reshape(-1, p) @ w.reshape(p, p * p)).reshape(h.shape + (p,))


def w_x2(w: np.ndarray, r: np.ndarray) -> np.ndarray:
    """``W x2 r`` per row, indexed ``[l, n]``."""
    p = w.shape[0]
    wm = w.transpose(1, 0, 2).reshape(p, p * p)
    return (r.reshape(-1, p) @ wm).reshape(r.shape + (p,))


def w_x3(w: np.ndarray, t: np.ndarray) -> np.ndarray:
    """``W x3 t`` per row, indexed ``[l, m]``."""
    p = w.shape[0]
    wn = w.transpose(2, 0, 1).reshape(p, p * p)
    return (t.reshape(-1, p) @ wn).reshape(t.shape + (p,))


def w_x1_adjoint(w: np.ndarray, g: np.ndarray) -> np.ndarray:
    """``sum_mn W[l, m, n] g[.., m, n]``, the adjoint of :func:`w_x1`."""
    p = w.shape[0]
    return (g.reshape(-1, p * p) @ w.reshape(p, p * p).T).reshape(g.shape[:-1])


def w_x2_adjoint(w: np.ndarray, g: np.ndarray) -> np.ndarray:
    p = w.shape[0]
    wm = w.transpose(1, 0, 2).reshape(p, p * p)
    return (g.reshape(-1, p * p) @ wm.T).reshape(g.shape[:-1])


def w_x3_adjoint(w: np.ndarray, g: np.ndarray) -> np.ndarray:
    p = w.shape[0]
    wn = w.transpose(2, 0, 1).reshape(p, p * p)
    return (g.reshape(-1, p * p) @ wn.T).reshape(g.shape[:-1])


def contract_first(a: np.ndarray, x: np.ndarray) -> np.ndarray:
    """``sum_i a[.., i, j] x[.., i]`` -> ``(..., P)``."""
    return (x[..., None, :] @ a)[..., 0, :]


def contract_second(a: np.ndarray, x: np.ndarray) -> np.ndarray:
    """``sum_j a[.., i, j] x[.., j]`` -> ``(..., P)``."""
    return (a @ x[..., :, None])[..., 0]


def outer_sum(a: np.ndarray, b: np.ndarray, c: np.ndarray) -> np.ndarray:
    """``sum over rows of a[l] b[m] c[n]``, a ``(P, P, P)`` tensor."""
    p = a.shape[-1]
    ab = (a.reshape(-1, p, 1) * b.reshape(-1, 1, p)).reshape(-1, p * p)
    return (ab.T @ c.reshape(-1, p)).reshape(p, p, p)


def head_rel_products(core: np.ndarray, h: np.ndarray, r: np.ndarray):
    """Batched ``W x1 h`` and ``W x1 h x2 r`` per block.

    ``h``, ``r`` have shape ``(b, nb, P)``. Returns ``(a, q)`` with ``a`` of
    shape ``(b, nb, P, P)`` indexed ``[.., m, n]`` and ``q`` of shape
    ``(b, nb, P)`` indexed by the tail part ``n``.
    """
    a = w_x1(core, h)
    return a, contract_first(a, r)


def score_triplet(model: TdbModel, i: int, j: int, k: int) -> float:
    _check_ids(model, i, j, k)
    _, q = head_rel_products(model.core.values, model.head[i][None], model.rel[j][None])
    return float(np.sum(q[0] * model.tail[k]))


def score_triplets(model: TdbModel, triplets) -> np.ndarray:
    tr = np.asarray(triplets, dtype=np.int64).reshape(-1, 3)
    _check_ids(model, tr[:, 0], tr[:, 1], tr[:, 2])
    _, q = head_rel_products(model.core.values, model.head[tr[:, 0]], model.rel[tr[:, 1]])
    return np.sum(q * model.tail[tr[:, 2]], axis=(1, 2))


def score_queries(model: TdbModel, heads, rels) -> np.ndarray:
    """Scores of every tail for each ``(head, rel)`` query, shape ``(b, n_tails)``."""
    heads = np.asarray(heads, dtype=np.int64).reshape(-1)
    rels = np.asarray(rels, dtype=np.int64).reshape(-1)
    _check_ids(model, heads, rels)
    _, q = head_rel_products(model.core.values, model.head[heads], model.rel[rels])
    return q.reshape(len(heads), -1) @ model.tail.reshape(model.n_tails, -1).T


def score_all_tails(model: TdbModel, i: int, j: int) -> np.ndarray:
    return score_queries(model, [i], [j])[0]


def materialize_tensor(model: TdbModel, budget: int = DEFAULT_BUDGET) -> np.ndarray:
    """Full predicted tensor as a sum of per-block mode products."""
    size = model.n_entities * model.n_relations * model.n_tails
    if size > budget:
        raise MemoryBudgetError(
            f"materializing needs {model.n_entities}x{model.n_relations}x{model.n_tails}"
            f" = {size} entries, budget is {budget}"
        )
    w = model.core.values.astype(np.float64)
    x = np.zeros((model.n_entities, model.n_relations, model.n_tails))
    for d in range(model.blocks):
        part = kernels.mode_n_product(w, model.head[:, d, :], 1)
        part = kernels.mode_n_product(part, model.rel[:, d, :], 2)
        x += kernels.mode_n_product(part, model.tail[:, d, :], 3)
    return x


def count_parameters(model: TdbModel) -> int:
    n = (1 if model.tied else 2) * model.n_entities * model.dim + model.n_relations * model.dim
    if model.core.trainable:
        n += model.parts ** 3
    return n


# -- checkpoints -------------------------------------------------------------

CHECKPOINT_FORMAT = "tdbkgc-checkpoint"
CHECKPOINT_VERSION = 1


def _digest(arrays: dict[str, np.ndarray]) -> str:
    h = hashlib.sha256()
    for name in sorted(arrays):
        a = np.ascontiguousarray(arrays[name])
        h.update(f"{name}|{a.dtype.str}|{a.shape}|".encode())
        h.update(a.tobytes())
    return h.hexdigest()


def save_checkpoint(model: TdbModel, path, extra: dict | None = None) -> Path:
    path = Path(path)
    arrays = {"head": model.head, "rel": model.rel, "core": model.core.values}
    if not model.tied:
        arrays["tail"] = model.tail
    meta = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "preset": model.preset,
        "parts": model.parts,
        "dim": model.dim,
        "tied": model.tied,
        "core_trainable": model.core.trainable,
        "n_entities": model.n_entities,
        "n_relations": model.n_relations,
        "sha256": _digest(arrays),
        "extra": extra or {},
    }
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        np.savez(fh, meta=np.frombuffer(json.dumps(meta, sort_keys=True).encode(), dtype=np.uint8),
                 **arrays)
    return path


def load_checkpoint(path) -> tuple[TdbModel, dict]:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"checkpoint not found: {path}")
    try:
        with np.load(path, allow_pickle=False) as z:
            meta = json.loads(bytes(z["meta"]).decode())
            arrays = {k: z[k] for k in z.files if k != "meta"}
    except (ValueError, KeyError, OSError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"unreadable checkpoint {path}: {exc}") from exc
    if meta.get("format") != CHECKPOINT_FORMAT:
        raise CheckpointError(f"{path} is not a {CHECKPOINT_FORMAT} file")
    if _digest(arrays) != meta.get("sha256"):
        raise CheckpointError(f"integrity check failed for {path}: array digest mismatch")
    tied = bool(meta["tied"])
    core = CoreTensor(arrays["core"], trainable=bool(meta["core_trainable"]))
    tail = arrays["head"] if tied else arrays["tail"]
    model = TdbModel(arrays["head"], arrays["rel"], tail, core, tied, meta["preset"])
    if model.dim != meta["dim"] or model.parts != meta["parts"]:
        raise CheckpointError(f"{path}: stored shapes disagree with metadata")
    return model, meta
