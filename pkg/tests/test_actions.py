"""Tests for product-type actions, model actions and cocycles."""

import numpy as np
import pytest

from helpers import model, small_coboundary

from uhfz2.actions import (Cocycle, FactorGen, ModelSpec, ProductAction,
                           clock, coboundary, extend_cocycle,
                           make_model_action, outerness_witness, perturb,
                           shift, trivial_action)
from uhfz2.errors import NoFreeTail, NotACocycle, SpecMismatch
from uhfz2.linalg import expm_sa, is_unitary, op_norm, random_selfadjoint
from uhfz2.uhf import embed_factor


def test_clock_shift_commutation_relation():
    for q in (2, 3, 5, 7):
        u, v = clock(q), shift(q)
        w = np.exp(2j * np.pi / q)
        assert op_norm(v @ u - np.conj(w) * u @ v) < 1e-12
        assert is_unitary(u) and is_unitary(v)
        assert op_norm(np.linalg.matrix_power(v, q) - np.eye(q)) < 1e-12


def test_factor_gen_realize():
    assert np.allclose(FactorGen("id").realize(3), np.eye(3))
    assert np.allclose(FactorGen("clock", 2).realize(3),
                       np.linalg.matrix_power(clock(3), 2))
    g = FactorGen("dense", matrix=shift(4))
    assert np.allclose(g.realize(4), shift(4))
    with pytest.raises(SpecMismatch):
        FactorGen("weird").realize(3)


def test_model_action_generators_commute(m30):
    tr, act = m30
    x = act.W1 @ act.W2 @ act.W1.conj().T @ act.W2.conj().T
    lam = x[0, 0]
    assert op_norm(x - lam * np.eye(tr.dim)) < 1e-12


def test_model_spec_partition_must_cover(m30):
    tr, _ = m30
    with pytest.raises(SpecMismatch):
        make_model_action(ModelSpec({}, (0,), (1,)), tr)
    # f(2) != 0 forces the theta(2) block into the L_f role
    with pytest.raises(SpecMismatch):
        make_model_action(ModelSpec({2: 1}, (0, 2), (1,)), tr)


def test_apply_power_consistency(m18):
    tr, act = m18
    rng = np.random.default_rng(1)
    a = random_selfadjoint(tr.dim, rng)
    twice = act.apply1(act.apply1(a))
    assert op_norm(act.apply((2, 0), a) - twice) < 1e-10
    mixed = act.apply1(act.apply2(a))
    assert op_norm(act.apply((1, 1), a) - mixed) < 1e-10


def test_coboundary_is_cocycle(m18):
    tr, act = m18
    _, c = small_coboundary(tr, act, 0, np.random.default_rng(2), norm=0.2)
    assert c.is_exact and c.is_almost


def test_extend_cocycle_staircase(m18):
    tr, act = m18
    v0, c = small_coboundary(tr, act, 0, np.random.default_rng(3), norm=0.1)
    for n in ((2, 0), (1, 2), (-1, 1), (2, 3)):
        u_n = extend_cocycle(c, act, n)
        expected = v0 @ act.apply(n, v0.conj().T)
        assert op_norm(u_n - expected) < 1e-9


def test_extend_rejects_bad_cocycle(m18):
    tr, act = m18
    u = embed_factor(shift(2), tr, 0)
    c = Cocycle.from_pair(u, np.eye(tr.dim), act)
    if c.defect > 1e-6:
        with pytest.raises(NotACocycle):
            extend_cocycle(c, act, (2, 2))


def test_perturb_keeps_skeleton(m54):
    tr, act = m54
    _, c = small_coboundary(tr, act, 1, np.random.default_rng(4))
    pert = perturb(act, c)
    assert not pert.is_product_type
    g1, g2, tainted = pert.skeleton()
    assert tainted == frozenset({1})
    assert [g.kind for g in g1] == [g.kind for g in act.gen1]
    # double perturbation accumulates the tainted set
    _, c2 = small_coboundary(tr, pert, 2, np.random.default_rng(5))
    pert2 = perturb(pert, c2)
    assert pert2.skeleton()[2] == frozenset({1, 2})


def test_trivial_action_fixes_everything(m18):
    tr, act = m18
    ident = trivial_action(tr)
    a = random_selfadjoint(tr.dim, np.random.default_rng(6))
    assert op_norm(ident.apply1(a) - a) < 1e-12
    assert op_norm(ident.apply2(a) - a) < 1e-12


def test_action_json_round_trip(m30):
    tr, act = m30
    back = ProductAction.from_json(act.to_json())
    assert op_norm(back.W1 - act.W1) < 1e-12
    assert op_norm(back.W2 - act.W2) < 1e-12


def test_outerness_witness(m30):
    tr, act = m30
    # a and p supported away from the free tail factor of direction (0, 1)
    a = embed_factor(random_selfadjoint(3, np.random.default_rng(7)), tr, 1)
    p = np.eye(tr.dim)
    parts = outerness_witness(act, (0, 1), a, p, eps=0.8)
    assert len(parts) >= 2
    total = sum(parts)
    assert op_norm(total - np.eye(tr.dim)) < 1e-9
    with pytest.raises(NoFreeTail):
        outerness_witness(act, (0, 0), a, p, eps=0.5)
