import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import random_model
from oracles import sort_rank
from tdbkgc.data import Dataset
from tdbkgc.evaluate import RankingMetrics, evaluate, filtered_rank, rank_split
from tdbkgc.model import materialize_tensor


def test_filtered_rank_examples():
    assert filtered_rank([0.1, 0.9, 0.3], 1) == 1
    assert filtered_rank([3.0, 2.0, 5.0], 0, {2}) == 1
    assert filtered_rank([3.0, 2.0, 5.0], 0) == 2
    assert filtered_rank(np.ones(5), 2) == 1
    assert filtered_rank(np.ones(5), 2, ties="average") == 3.0
    assert filtered_rank([1.0, 2.0], 0, {0}) == 2  # own tail is always ranked
    with pytest.raises(ValueError):
        filtered_rank([1.0], 0, ties="pessimistic")


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**31), st.integers(2, 12))
def test_rank_properties(seed, n):
    rng = np.random.default_rng(seed)
    scores = rng.integers(-3, 4, size=n).astype(float)
    k = int(rng.integers(0, n))
    small = set(rng.choice(n, size=int(rng.integers(0, n)), replace=False).tolist())
    big = small | set(rng.choice(n, size=int(rng.integers(0, n)), replace=False).tolist())
    r = filtered_rank(scores, k, small)
    assert 1 <= r <= n
    assert filtered_rank(np.exp(scores) * 2 + 1, k, small) == r
    assert filtered_rank(scores, k, big) <= r
    assert r == sort_rank(scores, k, small)


def test_metrics_from_ranks():
    m = RankingMetrics.from_ranks([1, 2, 4], split="test")
    assert m.mrr == pytest.approx((1 + 0.5 + 0.25) / 3)
    assert m.mr == pytest.approx(7 / 3)
    assert m.hits == {1: pytest.approx(1 / 3), 3: pytest.approx(2 / 3), 10: 1.0}
    assert m.count == 3
    d = json.loads(m.to_json())
    assert set(d) == {"split", "mrr", "mr", "hits1", "hits3", "hits10", "count"}
    header, row = m.to_tsv().splitlines()
    assert header.split("\t") == ["split", "mrr", "mr", "hits1", "hits3", "hits10", "count"]
    assert row.split("\t")[0] == "test"
    one = RankingMetrics.from_ranks([1])
    assert one.mrr == one.mr == one.hits[1] == 1.0
    with pytest.raises(ValueError):
        RankingMetrics.from_ranks([])


def toy(rng):
    # 5 entities, 2 relations, some (h, r) pairs with several tails
    tr = np.array([[0, 0, 1], [0, 0, 2], [1, 1, 3], [2, 0, 4], [3, 1, 0], [4, 0, 0],
                   [0, 1, 4], [1, 0, 2], [2, 1, 1], [3, 0, 3]])
    return Dataset([f"e{i}" for i in range(5)], ["r0", "r1"], tr[:6], tr[6:8], tr[8:])


def test_evaluate_matches_sort_oracle(rng):
    ds = toy(rng)
    m = random_model("complex", rng, n_ent=5, n_rel=2)
    x = materialize_tensor(m)
    for split in ("train", "valid", "test"):
        want = [sort_rank(x[h, r], t, ds.filter[(h, r)]) for h, r, t in ds.split(split)]
        np.testing.assert_array_equal(rank_split(m, ds, split, chunk=2), want)
        got = evaluate(m, ds, split)
        assert got.mrr == pytest.approx(np.mean(1 / np.array(want)))


def test_evaluate_both_sides_needs_inverse(rng):
    ds = toy(rng)
    m = random_model("complex", rng, n_ent=5, n_rel=2)
    with pytest.raises(ValueError):
        evaluate(m, ds, "test", sides="both")
    inv = ds.with_inverse_relations()
    m2 = random_model("complex", rng, n_ent=5, n_rel=4)
    assert evaluate(m2, inv, "test").count == 2 * len(ds.test)


def test_evaluate_empty_split(rng):
    ds = toy(rng)
    ds.valid = np.zeros((0, 3), dtype=np.int64)
    with pytest.raises(ValueError):
        evaluate(random_model("cp", rng, n_ent=5, n_rel=2), ds, "valid")
