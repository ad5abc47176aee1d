import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tdbkgc.model import PRESETS, build_preset_core, get_preset, score_triplet
from tdbkgc.rules import (inverse_partner, learnability_report, rule_witness, swap_matrix,
                          witness_model)

NAMED = [p for p in PRESETS if p != "tucker"]


def core(name):
    p = get_preset(name, 4)
    return build_preset_core(p, 4)


def test_swap_matrix():
    assert swap_matrix(1).tolist() == [[1.0]]
    s2 = swap_matrix(2)
    assert s2.tolist() == [[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]]
    for p in range(1, 7):
        s = swap_matrix(p)
        np.testing.assert_array_equal(s, s.T)
        np.testing.assert_array_equal(s @ s, np.eye(p * p))
    with pytest.raises(ValueError):
        swap_matrix(0)


def test_complex_report():
    rep = learnability_report(core("complex"))
    assert (rep.rank_sym, rep.rank_anti, rep.rank_w2, rep.rank_concat) == (1, 1, 2, 2)
    assert rep.symmetry and rep.antisymmetry and rep.inverse
    assert rep.note == ""


def test_cp_report():
    rep = learnability_report(core("cp"), tied=False)
    assert (rep.rank_sym, rep.rank_anti) == (0, 1)
    assert rep.symmetry and not rep.antisymmetry and rep.inverse
    assert "untied" in rep.note
    assert json.loads(rep.to_json())["symmetry"] is True
    assert "antisymmetry" in rep.to_text()


def test_zero_core():
    rep = learnability_report(np.zeros((3, 3, 3)))
    assert rep.rank_sym == rep.rank_anti == 0
    assert rep.symmetry and rep.antisymmetry and rep.inverse


def test_bad_core_shape():
    with pytest.raises(ValueError):
        learnability_report(np.zeros((2, 3, 2)))


@settings(max_examples=30, deadline=None)
@given(st.sampled_from(NAMED + ["random"]), st.floats(-5, 5).filter(lambda c: abs(c) > 1e-3),
       st.integers(0, 2**31))
def test_scaling_invariance(name, c, seed):
    w = np.random.default_rng(seed).normal(size=(3, 3, 3)) if name == "random" else core(name).values
    a, b = learnability_report(w), learnability_report(c * w)
    assert (a.symmetry, a.antisymmetry, a.inverse) == (b.symmetry, b.antisymmetry, b.inverse)


@pytest.mark.parametrize("name", NAMED)
def test_witnesses_are_semantic(name):
    rng = np.random.default_rng(7)
    w = core(name).values
    rep = learnability_report(w)
    for rule, sign in (("symmetry", 1.0), ("antisymmetry", -1.0)):
        r = rule_witness(w, rule)
        assert (r is not None) == getattr(rep, rule)
        if r is None:
            continue
        assert np.linalg.norm(r) > 0
        m = witness_model(w, r, n_entities=4, blocks=3, rng=rng)
        for h in range(4):
            for t in range(4):
                assert abs(score_triplet(m, h, 0, t) - sign * score_triplet(m, t, 0, h)) <= 1e-10


@pytest.mark.parametrize("name", NAMED)
def test_inverse_partner(name):
    rng = np.random.default_rng(3)
    w = core(name).values
    if not learnability_report(w).inverse:
        pytest.skip("inverse not learnable")
    r1 = rng.normal(size=w.shape[0])
    r2 = inverse_partner(w, r1)
    ent = rng.normal(size=(4, 2, w.shape[0]))
    from tdbkgc.model import CoreTensor, TdbModel

    m = TdbModel(ent, np.stack([np.tile(r1, (2, 1)), np.tile(r2, (2, 1))]), ent, CoreTensor(w), True)
    for h in range(4):
        for t in range(4):
            assert score_triplet(m, h, 0, t) == pytest.approx(score_triplet(m, t, 1, h), abs=1e-10)


def test_rule_witness_unknown():
    with pytest.raises(ValueError):
        rule_witness(core("complex").values, "transitivity")
