"""Filtered tail ranking: MRR, MR and Hits@N."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .model import TdbModel, score_queries

CUTOFFS = (1, 3, 10)


@dataclass
class RankingMetrics:
    mrr: float
    mr: float
    hits: dict[int, float] = field(default_factory=dict)
    count: int = 0
    split: str = ""

    @classmethod
    def from_ranks(cls, ranks, split: str = "", cutoffs=CUTOFFS) -> "RankingMetrics":
        ranks = np.asarray(ranks, dtype=np.float64)
        if ranks.size == 0:
            raise ValueError("no ranks to summarize")
        hits = {c: float(np.mean(ranks <= c)) for c in cutoffs}
        return cls(float(np.mean(1.0 / ranks)), float(np.mean(ranks)), hits, int(ranks.size), split)

    def to_dict(self) -> dict:
        d = asdict(self)
        hits = d.pop("hits")
        for c, v in hits.items():
            d[f"hits{c}"] = v
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def to_tsv(self) -> str:
        keys = ["split", "mrr", "mr"] + [f"hits{c}" for c in sorted(self.hits)] + ["count"]
        d = self.to_dict()
        vals = [d[k] if isinstance(d[k], str) else f"{d[k]:.6f}" if isinstance(d[k], float) else str(d[k])
                for k in keys]
        return "\t".join(keys) + "\n" + "\t".join(vals)


def filtered_rank(scores, true_k: int, filt=(), ties: str = "optimistic") -> float:
    """Rank of ``true_k`` among candidates not in ``filt`` (``true_k`` always kept).

    ``ties="optimistic"`` counts strictly greater scores only; ``"average"``
    adds half of the tied competitors.
    """
    scores = np.asarray(scores, dtype=np.float64)
    s = scores[true_k]
    keep = np.ones(scores.shape[0], dtype=bool)
    if filt:
        keep[list(filt)] = False
    keep[true_k] = False
    greater = int(np.sum(scores[keep] > s))
    if ties == "optimistic":
        return 1 + greater
    if ties == "average":
        return 1 + greater + 0.5 * int(np.sum(scores[keep] == s))
    raise ValueError(f"unknown tie rule {ties!r}")


def _queries(dataset, split: str, sides: str):
    triples = np.asarray(dataset.split(split), dtype=np.int64).reshape(-1, 3)
    if sides == "tail":
        return triples
    if sides == "both":
        if not dataset.has_inverse:
            raise ValueError("head-side evaluation requires inverse relations")
        inv = triples[:, [2, 1, 0]].copy()
        inv[:, 1] += dataset.n_base_relations
        return np.concatenate([triples, inv])
    raise ValueError(f"unknown sides {sides!r}")


def rank_split(model: TdbModel, dataset, split: str, ties: str = "optimistic",
               sides: str = "tail", chunk: int = 500) -> np.ndarray:
    queries = _queries(dataset, split, sides)
    ranks = np.empty(len(queries))
    for start in range(0, len(queries), chunk):
        q = queries[start:start + chunk]
        scores = score_queries(model, q[:, 0], q[:, 1])
        for row, (h, r, t) in enumerate(q):
            filt = dataset.filter.get((int(h), int(r)), ())
            ranks[start + row] = filtered_rank(scores[row], int(t), filt, ties)
    return ranks


def evaluate(model: TdbModel, dataset, split: str = "test", ties: str = "optimistic",
             sides: str | None = None) -> RankingMetrics:
    if sides is None:
        sides = "both" if dataset.has_inverse else "tail"
    if len(dataset.split(split)) == 0:
        raise ValueError(f"split {split!r} is empty")
    return RankingMetrics.from_ranks(rank_split(model, dataset, split, ties, sides), split)
