"""Dense 3rd-order tensor and matrix kernels.

Tensors are plain ``numpy.ndarray`` objects of ndim 3 in C order, so the last
index is fastest. Modes are numbered 1, 2, 3 as in the usual tensor notation.
"""

from __future__ import annotations

import numpy as np

RANK_TOL = 1e-10


class ShapeMismatchError(ValueError):
    pass


class SVDError(RuntimeError):
    pass


def _check_mode(mode: int) -> int:
    if mode not in (1, 2, 3):
        raise ValueError(f"mode must be 1, 2 or 3, got {mode!r}")
    return mode - 1


def _as_tensor(t) -> np.ndarray:
    t = np.asarray(t, dtype=np.float64)
    if t.ndim != 3:
        raise ShapeMismatchError(f"expected a 3rd-order tensor, got ndim={t.ndim}")
    return t


def mode_n_product(t, m, mode: int) -> np.ndarray:
    """Contract ``t`` with matrix ``m`` along ``mode``.

    ``result[..., i, ...] = sum_j m[i, j] * t[..., j, ...]``; the chosen axis
    changes length from ``t.shape[mode]`` to ``m.shape[0]``.
    """
    t = _as_tensor(t)
    m = np.asarray(m, dtype=np.float64)
    ax = _check_mode(mode)
    if m.ndim != 2 or m.shape[1] != t.shape[ax]:
        raise ShapeMismatchError(
            f"mode-{mode} product needs a matrix with {t.shape[ax]} columns, "
            f"got shape {m.shape}"
        )
    out = np.tensordot(m, t, axes=([1], [ax]))
    return np.moveaxis(out, 0, ax)


def unfold(t, mode: int) -> np.ndarray:
    """Mode-``mode`` unfolding: fibers along ``mode`` become columns.

    Columns run over the two remaining modes in their original order with the
    later mode varying fastest.
    """
    t = _as_tensor(t)
    ax = _check_mode(mode)
    return np.moveaxis(t, ax, 0).reshape(t.shape[ax], -1)


def fold(m, mode: int, shape) -> np.ndarray:
    """Inverse of :func:`unfold` for a tensor of the given ``shape``."""
    m = np.asarray(m, dtype=np.float64)
    ax = _check_mode(mode)
    shape = tuple(int(s) for s in shape)
    rest = [s for i, s in enumerate(shape) if i != ax]
    if m.shape != (shape[ax], rest[0] * rest[1]):
        raise ShapeMismatchError(f"cannot fold {m.shape} into {shape} along mode {mode}")
    return np.moveaxis(m.reshape(shape[ax], *rest), 0, ax)


def kronecker(a, b) -> np.ndarray:
    return np.kron(np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64))


def singular_values(m) -> np.ndarray:
    m = np.asarray(m, dtype=np.float64)
    if m.size == 0:
        return np.zeros(0)
    if not np.all(np.isfinite(m)):
        raise SVDError("matrix has non-finite entries")
    try:
        return np.linalg.svd(m, compute_uv=False)
    except np.linalg.LinAlgError as exc:
        raise SVDError(f"SVD did not converge for a {m.shape} matrix") from exc


def trace_norm(m) -> float:
    """Sum of singular values (nuclear norm)."""
    return float(np.sum(singular_values(m)))


def numerical_rank(m, tol: float = RANK_TOL) -> int:
    m = np.asarray(m, dtype=np.float64)
    s = singular_values(m)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > tol * s[0] * max(m.shape)))


def compact_svd(m, cutoff: float = 1e-12):
    """SVD keeping singular values above ``cutoff * sigma_max``.

    Returns ``(U, s, Vt)`` with ``U`` of shape ``(rows, r)``; ``r`` is 0 for a
    zero matrix.
    """
    m = np.asarray(m, dtype=np.float64)
    if not np.all(np.isfinite(m)):
        raise SVDError("matrix has non-finite entries")
    try:
        u, s, vt = np.linalg.svd(m, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise SVDError(f"SVD did not converge for a {m.shape} matrix") from exc
    if s.size == 0 or s[0] == 0.0:
        return u[:, :0], s[:0], vt[:0]
    keep = s > cutoff * s[0]
    return u[:, keep], s[keep], vt[keep]


def null_space(m, tol: float = RANK_TOL) -> np.ndarray:
    """Orthonormal basis (as columns) of the right null space of ``m``."""
    m = np.asarray(m, dtype=np.float64)
    n = m.shape[1]
    if m.size == 0:
        return np.eye(n)
    try:
        _, s, vt = np.linalg.svd(m, full_matrices=True)
    except np.linalg.LinAlgError as exc:
        raise SVDError(f"SVD did not converge for a {m.shape} matrix") from exc
    r = 0 if s[0] == 0.0 else int(np.sum(s > tol * s[0] * max(m.shape)))
    return vt[r:].T.copy()
