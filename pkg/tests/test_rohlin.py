"""Tests for grid towers and the cocycle vanishing pipeline."""

import numpy as np
import pytest

from helpers import model, small_coboundary

from uhfz2.actions import Cocycle, perturb, shift, trivial_action
from uhfz2.errors import (NoFreeFactors, NotAdmissible, TowerUnavailable)
from uhfz2.linalg import expm_sa, op_norm, random_selfadjoint
from uhfz2.rohlin import (_factor_ladder, build_tower, vanish_cocycle,
                          verify_tower)
from uhfz2.uhf import embed_factor


def _tower_residual(t, act):
    worst = 0.0
    m1, m2 = t.shape
    for (g1, g2), e in t.projections.items():
        worst = max(worst,
                    op_norm(act.apply1(e) - t.projections[((g1 + 1) % m1, g2)]),
                    op_norm(act.apply2(e) - t.projections[(g1, (g2 + 1) % m2)]))
    return worst


def test_factor_ladder_is_cyclic_partition():
    for kind, power, q in (("clock", 1, 5), ("shift", 2, 6), ("clock", 2, 4)):
        ladder = _factor_ladder(kind, power, q)
        total = sum(ladder)
        assert op_norm(total - np.eye(q)) < 1e-12
        for e in ladder:
            assert op_norm(e @ e - e) < 1e-12


def test_build_tower_exact(m54):
    tr, act = m54
    t = build_tower(act, M=3)
    assert min(t.shape) >= 3
    assert _tower_residual(t, act) < 1e-12
    rep = verify_tower(t, act, eps=1e-9)
    assert rep["pass"]
    assert rep["max_defect"] <= 1e-12


def test_build_tower_disjoint_directions():
    tr, act = model({2: 1, 3: 1, 5: "inf"}, 750)   # factors (2, 3, 5, 5, 5)
    t = build_tower(act, M=3)
    used1 = set(t.factors_used[1])
    used2 = set(t.factors_used[2])
    assert used1 and used2 and not (used1 & used2)


def test_build_tower_respects_protection(m54):
    tr, act = m54
    with pytest.raises(NoFreeFactors):
        build_tower(act, protected_factors=frozenset(range(len(tr.factors))))


def test_tower_unavailable_for_dense_action(m18):
    tr, act = m18
    dense = trivial_action(tr)
    dense.gen1 = None
    dense.gen2 = None
    with pytest.raises(TowerUnavailable):
        build_tower(dense)


def test_tower_through_perturbed_base(m54):
    tr, act = m54
    _, c = small_coboundary(tr, act, 1, np.random.default_rng(0))
    pert = perturb(act, c)
    assert not pert.is_product_type
    t = build_tower(pert, M=2)
    # the tainted factor never enters the grid
    assert 1 not in set(t.factors_used[1]) | set(t.factors_used[2])
    assert _tower_residual(t, pert) < 1e-12


def test_verify_tower_flags_rotated_projections(m54):
    tr, act = m54
    t = build_tower(act, M=2)
    w = expm_sa(random_selfadjoint(tr.dim, np.random.default_rng(1),
                                   norm=0.1))
    bad = {g: w @ e @ w.conj().T for g, e in t.projections.items()}
    t_bad = type(t)(shape=t.shape, projections=bad,
                    protected=t.protected, factors_used=t.factors_used)
    rep = verify_tower(t_bad, act, eps=1e-9)
    assert not rep["pass"]
    assert rep["shift_defect"] > 1e-3


def test_vanish_trivial_cocycle(m18):
    tr, act = m18
    c = Cocycle.from_pair(np.eye(tr.dim), np.eye(tr.dim), act)
    v, rep = vanish_cocycle(act, c, eps=0.25)
    assert op_norm(v - np.eye(tr.dim)) < 1e-9
    assert rep["eps_achieved"][0] < 1e-9 and rep["eps_achieved"][1] < 1e-9


def test_vanish_coboundary_postconditions(m18):
    tr, act = m18
    v0, c = small_coboundary(tr, act, 0, np.random.default_rng(2), norm=0.03)
    v, rep = vanish_cocycle(act, c, eps=0.25)
    d1 = op_norm(c.u1 - v @ act.apply1(v.conj().T))
    d2 = op_norm(c.u2 - v @ act.apply2(v.conj().T))
    assert max(d1, d2) < 0.25
    assert max(rep["eps_achieved"]) < 0.25
    assert rep["tower_shape"][0] >= 3 and rep["tower_shape"][1] >= 3


def test_vanish_respects_commutant_constraint(m81):
    tr, act = m81
    rng = np.random.default_rng(3)
    v0, c = small_coboundary(tr, act, 0, rng, norm=0.03)
    F = [embed_factor(random_selfadjoint(tr.factors[3], rng), tr, 3)]
    v, rep = vanish_cocycle(act, c, F=F, eps=0.25)
    for a in F:
        assert op_norm(v @ a - a @ v) < 0.25


def test_vanish_rejects_nonzero_kappa():
    tr, act = model({7: "inf"}, 49)
    u2 = embed_factor(shift(7), tr, 1)
    c = Cocycle.from_pair(np.eye(tr.dim), u2, act)
    with pytest.raises(NotAdmissible):
        vanish_cocycle(act, c, eps=0.25)
