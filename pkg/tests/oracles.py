"""Independent reference implementations used as test oracles.

None of these call the package's scoring or penalty code paths; the loss
oracle reads scores from ``materialize_tensor``, which evaluates the model in
a different contraction order (sum of mode products) than training does.
"""

import itertools
import math

import numpy as np


def triple_loop_score(model, i, j, k):
    w = model.core.values
    h, r, t = model.head[i], model.rel[j], model.tail[k]
    p = w.shape[0]
    total = 0.0
    for d in range(h.shape[0]):
        for l, m, n in itertools.product(range(p), repeat=3):
            total += w[l, m, n] * h[d, l] * r[d, m] * t[d, n]
    return total


def _hamilton(a, b):
    a1, b1, c1, d1 = a
    a2, b2, c2, d2 = b
    return (
        a1 * a2 - b1 * b2 - c1 * c2 - d1 * d2,
        a1 * b2 + b1 * a2 + c1 * d2 - d1 * c2,
        a1 * c2 - b1 * d2 + c1 * a2 + d1 * b2,
        a1 * d2 + b1 * c2 - c1 * b2 + d1 * a2,
    )


def closed_form_score(preset, h, r, t):
    """Named-model formulas on per-part rows of shape ``(blocks, P)``."""
    if preset in ("cp", "distmult"):
        return float(np.sum(h[:, 0] * r[:, 0] * t[:, 0]))
    if preset == "complex":
        hc = h[:, 0] + 1j * h[:, 1]
        rc = r[:, 0] + 1j * r[:, 1]
        tc = t[:, 0] + 1j * t[:, 1]
        return float(np.real(np.sum(hc * rc * np.conj(tc))))
    if preset == "simple":
        # entity = (head role, tail role); relation = (forward, inverse)
        return float(np.sum(h[:, 0] * r[:, 0] * t[:, 1]) + np.sum(t[:, 0] * r[:, 1] * h[:, 1]))
    if preset == "analogy":
        real = np.sum(h[:, 0] * r[:, 0] * t[:, 0]) + np.sum(h[:, 1] * r[:, 1] * t[:, 1])
        hc = h[:, 2] + 1j * h[:, 3]
        rc = r[:, 2] + 1j * r[:, 3]
        tc = t[:, 2] + 1j * t[:, 3]
        return float(real + np.real(np.sum(hc * rc * np.conj(tc))))
    if preset == "quate":
        total = 0.0
        for d in range(h.shape[0]):
            q = _hamilton(h[d], r[d])
            total += sum(qc * tc for qc, tc in zip(q, t[d]))
        return float(total)
    raise ValueError(preset)


def tucker_score(w, h, r, t):
    """W x1 h x2 r x3 t per block via successive vector contractions."""
    total = 0.0
    for d in range(h.shape[0]):
        v = np.tensordot(h[d], w, axes=(0, 0))   # (m, n)
        v = np.tensordot(r[d], v, axes=(0, 0))   # (n,)
        total += float(v @ t[d])
    return total


def fro(x):
    return math.sqrt(float(np.sum(np.asarray(x) ** 2)))


def straight_ivr(w, h, r, t, lams, alpha):
    """Per-triplet IVR written term by term with explicit loops over blocks."""
    lam1, lam2, lam3, lam4 = lams
    p = w.shape[0]
    total = 0.0
    for d in range(h.shape[0]):
        hd, rd, td = h[d], r[d], t[d]
        wh = np.zeros((p, p))
        wr = np.zeros((p, p))
        wt = np.zeros((p, p))
        for l, m, n in itertools.product(range(p), repeat=3):
            wh[m, n] += w[l, m, n] * hd[l]
            wr[l, n] += w[l, m, n] * rd[m]
            wt[l, m] += w[l, m, n] * td[n]
        whr = np.array([sum(wh[m, n] * rd[m] for m in range(p)) for n in range(p)])
        wrt = np.array([sum(wr[l, n] * td[n] for n in range(p)) for l in range(p)])
        wth = np.array([sum(wt[l, m] * hd[l] for l in range(p)) for m in range(p)])
        a = alpha
        nh, nr, nt = fro(hd) ** a, fro(rd) ** a, fro(td) ** a
        total += lam1 * (nh + nr + nt)
        total += lam2 * (nt * nr + nt * nh + nr * nh)
        total += lam3 * (fro(wh) ** a + fro(wr) ** a + fro(wt) ** a)
        total += lam4 * (fro(wrt) ** a + fro(wth) ** a + fro(whr) ** a)
    return total


def summed_loss(model, batch, reg):
    """Summed multiclass log-loss plus penalties, through materialize + straight_ivr."""
    from tdbkgc.model import materialize_tensor

    x = materialize_tensor(model)
    w = model.core.values
    total = 0.0
    for i, j, k in batch:
        row = x[i, j]
        mx = row.max()
        total += -row[k] + mx + math.log(np.sum(np.exp(row - mx)))
        h, r, t = model.head[i], model.rel[j], model.tail[k]
        if reg.kind == "f2":
            total += reg.lam1 * (np.sum(h**2) + np.sum(r**2) + np.sum(t**2))
        elif reg.kind == "n3":
            total += reg.lam1 * (np.sum(np.abs(h) ** 3) + np.sum(np.abs(r) ** 3) + np.sum(np.abs(t) ** 3))
        elif reg.kind == "ivr":
            total += straight_ivr(w, h, r, t, reg.lambdas, reg.alpha)
    return total


def fd_gradients(model, batch, reg, step=1e-5):
    """Central finite differences of :func:`summed_loss` for every parameter array."""
    out = {}
    for name, arr in model.params().items():
        g = np.zeros_like(arr)
        it = np.nditer(arr, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            old = arr[idx]
            arr[idx] = old + step
            up = summed_loss(model, batch, reg)
            arr[idx] = old - step
            down = summed_loss(model, batch, reg)
            arr[idx] = old
            g[idx] = (up - down) / (2 * step)
        out[name] = g
    return out


def grad_rel_error(analytic, numeric):
    """Max-abs error relative to the numeric gradient's max-abs scale."""
    scale = max(float(np.abs(numeric).max(initial=0.0)), 1e-12)
    return float(np.abs(analytic - numeric).max(initial=0.0)) / scale


def sort_rank(scores, true_k, filt):
    """Rank by explicit sort of the unfiltered candidates, ties resolved in favour of the truth."""
    cands = [(s, 0 if c == true_k else 1, c) for c, s in enumerate(scores)
             if c == true_k or c not in filt]
    cands.sort(key=lambda x: (-x[0], x[1]))
    return [c for _, _, c in cands].index(true_k) + 1
