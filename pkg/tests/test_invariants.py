"""Tests for winding numbers, the Bott element, kappa and the pairing
invariant."""

import numpy as np
import pytest

from helpers import model, small_coboundary

from uhfz2.actions import (ModelSpec, clock, coboundary, make_model_action,
                           perturb, shift, trivial_action)
from uhfz2.errors import NotAlmostCocycle
from uhfz2.invariants import (action_invariant, admissible, bott,
                              cocycle_power, delta_tau, kappa_fast,
                              kappa_loop, pair_invariant, winding_tau)
from uhfz2.linalg import expm_sa, op_norm, random_selfadjoint
from uhfz2.paths import UnitaryPath
from uhfz2.uhf import embed_factor


def test_bott_clock_shift_oracle():
    for q in (5, 7, 9, 11):
        assert bott(clock(q), shift(q)) == 1


def test_bott_against_independent_log():
    # brute-force value through scipy's generic matrix logarithm
    from scipy.linalg import logm
    for q in (5, 7):
        v, w = clock(q), shift(q)
        x = v @ w @ v.conj().T @ w.conj().T
        tr = np.trace(logm(x)) / (2j * np.pi)
        assert round(float(np.real(tr))) == bott(v, w)


def test_bott_commuting_is_zero():
    rng = np.random.default_rng(0)
    u = expm_sa(np.diag(rng.uniform(-0.4, 0.4, size=6)))
    v = expm_sa(np.diag(rng.uniform(-0.4, 0.4, size=6)))
    assert bott(u, v) == 0


def test_winding_tau_of_phase_loop():
    d = 4
    loop = UnitaryPath.from_function(
        lambda t: np.diag(np.exp(2j * np.pi * np.array(
            [t, 0.0, 0.0, 0.0]))), samples=33, closed=True)
    w = winding_tau(loop)
    assert (w.numerator, w.denominator) == (1, d)


def test_kappa_zero_for_coboundaries(m18):
    tr, act = m18
    _, c = small_coboundary(tr, act, 0, np.random.default_rng(1), norm=0.2)
    k = kappa_fast(c.u1, c.u2, act)
    assert k.integer_form == 0
    assert admissible(c, act)


def test_kappa_trace_bound(m18):
    tr, act = m18
    rng = np.random.default_rng(2)
    for _ in range(10):
        _, c = small_coboundary(tr, act, 0, rng, norm=0.2)
        e = expm_sa(random_selfadjoint(tr.dim, rng, norm=0.1))
        u1 = e @ c.u1
        defect = op_norm(u1 @ act.apply1(c.u2)
                         - c.u2 @ act.apply2(u1))
        k = kappa_fast(u1, c.u2, act)
        bound = np.arcsin(min(defect, 1.0)) / (2 * np.pi)
        assert abs(k.value.numerator / k.value.denominator) <= bound + 1e-12
        assert k.residual < 1e-6


def test_kappa_loop_matches_fast(m18):
    tr, act = m18
    rng = np.random.default_rng(3)
    _, c = small_coboundary(tr, act, 0, rng, norm=0.15)
    from uhfz2.homotopy import short_path
    kf = kappa_fast(c.u1, c.u2, act)
    kl = kappa_loop(c.u1, c.u2, act, short_path(c.u1), short_path(c.u2))
    assert kf.integer_form == kl.integer_form


def test_kappa_rejects_large_defect(m18):
    tr, act = m18
    u2 = embed_factor(shift(3), tr, 1)   # generator 1 is a clock there
    with pytest.raises(NotAlmostCocycle):
        kappa_fast(np.eye(tr.dim), u2, act)


def test_cocycle_power_multiplicative(m18):
    tr, act = m18
    _, c = small_coboundary(tr, act, 0, np.random.default_rng(4), norm=0.1)
    base = kappa_fast(c.u1, c.u2, act).integer_form
    for m, n in ((2, 2), (2, 3), (3, 3)):
        u1m, u2n, power, worst = cocycle_power(c, act, m, n)
        assert worst < 1.0
        kp = kappa_fast(u1m, u2n, power).integer_form
        assert kp == m * n * base


def test_delta_tau_representative_window():
    rng = np.random.default_rng(5)
    u = expm_sa(random_selfadjoint(6, rng, norm=0.3))
    d = delta_tau(u)
    assert 0.0 <= d.representative < 1.0 / 6 + 1e-15
    # winding along an explicit path agrees with the default modulo 1/d
    p = UnitaryPath.exponential(np.diag([1.0, 0, 0, 0, 0, 0]) + 0 * u)
    # path ends at identity: raw winding is the full eigenvalue turn
    d2 = delta_tau(np.eye(6), path=p)
    assert d2.raw == pytest.approx(1.0 / 6, abs=1e-9)
    # a full lattice step reduces to (numerically) 0 or the modulus itself
    assert min(d2.representative, 1.0 / 6 - d2.representative) < 1e-9


def test_model_invariant_matches_label(m30):
    tr, _ = m30
    for f2 in range(2):
        for f3 in range(3):
            f = {2: f2, 3: f3}
            g = make_model_action(ModelSpec.balanced(tr, f), tr)
            inv = action_invariant(g)
            assert inv[2].value == f2
            assert inv[3].value == f3


def test_pair_invariant_additive(m30):
    tr, _ = m30
    labels = [{2: 1, 3: 0}, {2: 0, 3: 2}, {2: 1, 3: 1}]
    acts = [make_model_action(ModelSpec.balanced(tr, f), tr) for f in labels]
    for p in (2, 3):
        ab = pair_invariant(acts[0], acts[1], p)
        bc = pair_invariant(acts[1], acts[2], p)
        ac = pair_invariant(acts[0], acts[2], p)
        assert (ab + bc).value == ac.value


def test_invariant_stable_under_coboundary_perturbation(m30):
    tr, act = m30
    g = make_model_action(ModelSpec.balanced(tr, {2: 1, 3: 2}), tr)
    _, c = small_coboundary(tr, g, 2, np.random.default_rng(6), norm=0.1)
    pert = perturb(g, c)
    inv0 = action_invariant(g)
    inv1 = action_invariant(pert)
    for p in (2, 3):
        assert inv0[p].value == inv1[p].value


def test_bott_branch_cut_at_minus_one():
    # the q = 2 commutator is exactly -1, which sits on the log branch cut
    from uhfz2.errors import BranchCut
    with pytest.raises(BranchCut):
        bott(clock(2), shift(2))
