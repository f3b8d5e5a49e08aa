"""Tests for eigenvalue tracking, path synthesis, loop shrinking, boundary
maps and their disk extensions."""

import numpy as np
import pytest

from helpers import model, small_coboundary

from uhfz2.actions import clock, shift
from uhfz2.errors import (BottObstruction, NotAdmissible, WindingObstruction)
from uhfz2.homotopy import (boundary_map, disk_extension, lip_shrink_loop,
                            short_path, super_homotopy, track_eigenvalues)
from uhfz2.invariants import winding_tau
from uhfz2.linalg import expm_sa, is_selfadjoint, op_norm, random_selfadjoint
from uhfz2.paths import UnitaryPath


def _phase_loop(phases_fn, dim, samples=65):
    return UnitaryPath.from_function(
        lambda t: np.diag(np.exp(2j * np.pi * np.asarray(phases_fn(t)))),
        samples=samples, closed=True)


def test_track_eigenvalues_windings():
    # one eigenvalue makes a full turn, the opposite one turns backwards
    loop = _phase_loop(lambda t: [t, -t, 0.1, 0.2], 4)
    bundle = track_eigenvalues(loop)
    assert sorted(bundle.windings()) == [-1, 0, 0, 1]
    # total branch winding equals dim times the tau-winding
    assert sum(bundle.windings()) == winding_tau(loop).numerator


def test_short_path_reaches_target():
    rng = np.random.default_rng(0)
    u = expm_sa(random_selfadjoint(5, rng, norm=0.4))
    p = short_path(u)
    assert op_norm(p.mats[0] - np.eye(5)) < 1e-12
    assert op_norm(p.mats[-1] - u) < 1e-9
    assert p.lip_estimate <= np.pi + 0.1


def test_super_homotopy_commuting_block_case():
    rng = np.random.default_rng(1)
    v = np.kron(clock(3), np.eye(3))
    w = np.kron(np.eye(3), expm_sa(random_selfadjoint(3, rng, norm=0.4)))
    path = super_homotopy(v, w, eps=0.05)
    assert op_norm(path.mats[-1] - w) < 1e-9
    worst = max(op_norm(v @ m - m @ v) for m in path.mats)
    assert worst < 0.05


def test_super_homotopy_tolerates_small_noncommutation():
    rng = np.random.default_rng(2)
    v = np.kron(clock(3), np.eye(3))
    base = np.kron(np.eye(3), expm_sa(random_selfadjoint(3, rng, norm=0.3)))
    e = expm_sa(random_selfadjoint(9, rng, norm=0.002))
    w = e @ base
    path = super_homotopy(v, w, eps=0.1)
    worst = max(op_norm(v @ m - m @ v) for m in path.mats)
    assert worst < 0.1


def test_super_homotopy_bott_obstruction():
    with pytest.raises(BottObstruction):
        super_homotopy(clock(9), shift(9), eps=0.2)


def test_lip_shrink_contract():
    h0 = np.diag([0.3, -0.2, 0.1, -0.25, 0.05, 0.0])
    rng = np.random.default_rng(3)
    w = expm_sa(random_selfadjoint(6, rng, norm=0.4))
    loop = UnitaryPath.from_function(
        lambda t: w @ expm_sa(float(np.sin(np.pi * t) ** 2) * h0)
        @ w.conj().T, samples=49, closed=True)
    res = lip_shrink_loop(loop, eps=0.2)
    assert res.max_defect < 0.2
    assert res.h.lip_estimate <= res.C_prime + 1e-9
    for m in res.h.mats:
        assert is_selfadjoint(m, 1e-8)
    # endpoints of the exponential family are exactly zero
    assert op_norm(res.h.mats[0]) == 0.0
    assert op_norm(res.h.mats[-1]) == 0.0


def test_lip_shrink_rejects_winding():
    loop = _phase_loop(lambda t: [t, -t, 0.0, 0.0], 4, samples=129)
    with pytest.raises(WindingObstruction):
        lip_shrink_loop(loop, eps=0.2)


def test_boundary_map_conditions(m54):
    tr, act = m54
    _, c = small_coboundary(tr, act, 1, np.random.default_rng(4), norm=0.05)
    bm = boundary_map(c.u1, c.u2, act, eps=0.25)
    # side relations measured on the returned samples
    assert bm.eps_achieved < 0.25
    assert bm.defect <= 1e-9
    loop = bm.loop()
    assert loop.closed
    # the boundary loop of an exact admissible cocycle has zero winding
    assert winding_tau(loop).numerator == 0


def test_boundary_map_requires_admissible(m18):
    from uhfz2.uhf import embed_factor
    tr, act = m18
    tr7, act7 = model({7: "inf"}, 49)
    u2 = embed_factor(shift(7), tr7, 1)
    with pytest.raises(NotAdmissible):
        boundary_map(np.eye(49), u2, act7, eps=0.5)


def test_disk_extension_restricts_to_boundary(m54):
    tr, act = m54
    _, c = small_coboundary(tr, act, 1, np.random.default_rng(5), norm=0.05)
    bm = boundary_map(c.u1, c.u2, act, eps=0.25)
    dm = disk_extension(bm, eps=0.45)
    # corners and side midpoints must reproduce the boundary samples
    mid = len(bm.grid) // 2
    pairs = [((bm.grid[mid], 1.0), bm.top[mid]),
             ((bm.grid[mid], -1.0), bm.bottom[mid]),
             ((-1.0, bm.grid[mid]), bm.left[mid]),
             ((1.0, bm.grid[mid]), bm.right[mid])]
    for (x1, x2), expected in pairs:
        got = dm.eval(float(x1), float(x2))
        assert op_norm(got - expected) < 1e-9
    # center is the identity
    assert op_norm(dm.eval(0.0, 0.0) - np.eye(tr.dim)) < 1e-12
