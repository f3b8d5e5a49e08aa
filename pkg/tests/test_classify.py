"""Tests for invariant comparison, the matcher and the intertwining loop."""

import numpy as np
import pytest

from helpers import model, small_coboundary

from uhfz2.actions import (FactorGen, ModelSpec, ProductAction,
                           make_model_action, perturb, shift)
from uhfz2.classify import approximate_match, ek_rounds, invariants_equal
from uhfz2.errors import DimMismatch, InvariantMismatch, SpecMismatch
from uhfz2.linalg import op_norm, random_selfadjoint
from uhfz2.uhf import embed_factor


def test_invariants_equal_reflexive(m30):
    tr, _ = m30
    g = make_model_action(ModelSpec.balanced(tr, {2: 1, 3: 2}), tr)
    rep = invariants_equal(g, g)
    assert rep["equal"] and rep["mismatch_count"] == 0
    assert set(rep["per_prime"]) == {2, 3, 5}


def test_invariants_equal_detects_mismatch(m30):
    tr, _ = m30
    g = make_model_action(ModelSpec.balanced(tr, {2: 1, 3: 2}), tr)
    h = make_model_action(ModelSpec.balanced(tr, {2: 1, 3: 0}), tr)
    rep = invariants_equal(g, h)
    assert not rep["equal"]
    assert rep["mismatched_primes"] == [3]
    assert rep["per_prime"][2]["equal"]


def test_invariants_equal_after_perturbation(m30):
    tr, _ = m30
    g = make_model_action(ModelSpec.balanced(tr, {2: 0, 3: 1}), tr)
    _, c = small_coboundary(tr, g, 2, np.random.default_rng(0), norm=0.1)
    rep = invariants_equal(g, perturb(g, c))
    assert rep["equal"]


def test_invariants_equal_dim_mismatch(m18, m54):
    with pytest.raises(DimMismatch):
        invariants_equal(m18[1], m54[1])


def test_match_identical_actions(m54):
    tr, act = m54
    cb, rep = approximate_match(act, act, eps=0.1)
    assert rep["match_defect_F"] == 0.0
    assert rep["kappa_raw"] == [0, 1]
    assert rep["kappa_corrections"] == 0
    # the returned pair is an exact coboundary of the witness
    z = rep["witness"]
    assert op_norm(cb.u1 - z @ act.apply1(z.conj().T)) < 1e-9


def test_match_coboundary_perturbation(m81):
    tr, act = m81
    rng = np.random.default_rng(1)
    _, c = small_coboundary(tr, act, 0, rng, norm=0.03)
    beta = perturb(act, c)
    F = [embed_factor(random_selfadjoint(3, rng), tr, 1)]
    cb, rep = approximate_match(act, beta, F=F, eps=0.1)
    assert rep["match_defect_F"] < 0.1
    assert cb.is_exact


def test_match_applies_kappa_correction(m81):
    tr, act = m81
    # generator 1 acts by a clock on factor 3, so twisting generator 2
    # there by a shift makes the raw intertwiner pair carry kappa = 1/3
    gens2 = list(act.gen2)
    gens2[3] = FactorGen("dense", matrix=shift(3))
    beta = ProductAction(tr, act.gen1, gens2)
    F = [embed_factor(random_selfadjoint(3, np.random.default_rng(2)),
                      tr, 0)]
    cb, rep = approximate_match(act, beta, F=F, eps=0.1)
    assert rep["kappa_corrections"] == 1
    assert rep["kappa_raw"][1] == 3
    assert rep["kappa_correction"]["l"] == 3
    assert rep["match_defect_F"] < 0.1


def test_match_rejects_invariant_mismatch(m30):
    tr, _ = m30
    g = make_model_action(ModelSpec.balanced(tr, {2: 0, 3: 1}), tr)
    h = make_model_action(ModelSpec.balanced(tr, {2: 1, 3: 1}), tr)
    with pytest.raises(InvariantMismatch):
        approximate_match(g, h, eps=0.1)


def test_ek_rounds_identical_actions(m54):
    tr, act = m54
    out = ek_rounds(act, act, rounds=2)
    assert out["monotone"]
    assert out["final_defect"] == 0.0
    assert len(out["rounds"]) == 2


def test_ek_rounds_perturbed_instance(m54):
    tr, act = m54
    rng = np.random.default_rng(3)
    _, c = small_coboundary(tr, act, 1, rng, norm=0.03)
    beta = perturb(act, c)
    F = [embed_factor(random_selfadjoint(2, rng), tr, 0)]
    out = ek_rounds(act, beta, rounds=3, F_schedule=F, strict=True)
    defects = [e["matcher_defect"] for e in out["rounds"]]
    assert out["monotone"]
    assert out["final_defect"] < 0.05
    floor = 1e-9
    assert all(b <= max(a, floor) for a, b in zip(defects, defects[1:]))


def test_ek_rounds_rejects_bad_schedules(m54):
    tr, act = m54
    with pytest.raises(SpecMismatch):
        ek_rounds(act, act, rounds=3, eps_schedule=[0.2, 0.1])
    with pytest.raises(SpecMismatch):
        ek_rounds(act, act, rounds=2, eps_schedule=[0.1, 0.2])
