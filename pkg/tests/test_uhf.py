"""Tests for supernatural numbers, truncations and K0 arithmetic."""

import numpy as np
import pytest

from uhfz2.errors import (BudgetTooSmall, DimMismatch, InfiniteExponent,
                          NotEmbeddable, NotPrime)
from uhfz2.linalg import op_norm
from uhfz2.uhf import (K0Residue, K0Value, SupernaturalNumber, TruncatedUHF,
                       embed_factor, embed_many, k0_reduce, prime_set_P,
                       theta, truncate, zeta)


def test_supernatural_validation():
    with pytest.raises(NotPrime):
        SupernaturalNumber({4: 1})
    with pytest.raises(NotPrime):
        SupernaturalNumber({})
    with pytest.raises(NotPrime):
        SupernaturalNumber({2: 0})


def test_zeta_theta_prime_set():
    sn = SupernaturalNumber({2: 1, 3: 2, 5: "inf"})
    assert zeta(sn, 2) == 1 and zeta(sn, 3) == 2 and zeta(sn, 5) == "inf"
    assert zeta(sn, 7) == 0
    assert prime_set_P(sn) == {2, 3}
    assert theta(sn, 2) == 2 and theta(sn, 3) == 9
    with pytest.raises(InfiniteExponent):
        theta(sn, 5)
    with pytest.raises(NotPrime):
        theta(sn, 7)


def test_truncate_greedy_and_budget():
    sn = SupernaturalNumber({2: 1, 3: 1, 5: "inf"})
    assert truncate(sn, 30).factors == (2, 3, 5)
    assert truncate(sn, 750).factors == (2, 3, 5, 5, 5)
    assert truncate(sn, 749).factors == (2, 3, 5, 5)
    with pytest.raises(BudgetTooSmall):
        truncate(sn, 5)
    t = truncate(sn, 1000, factor_override=(2, 3, 5))
    assert t.factors == (2, 3, 5)


def test_theta_block():
    t = TruncatedUHF((2, 9, 5, 5))
    assert t.theta_block(2) == 0
    assert t.theta_block(3) == 1
    assert t.theta_block(5) == 2
    with pytest.raises(NotEmbeddable):
        t.theta_block(7)


def test_k0_value_arithmetic():
    a = K0Value(1, 6)
    b = K0Value(2, 6)
    assert (a + b).numerator == 3
    assert (-a).numerator == -1
    assert a.fraction == pytest.approx(1 / 6)
    with pytest.raises(DimMismatch):
        a + K0Value(1, 12)
    with pytest.raises(DimMismatch):
        K0Value(1, 0)


def test_k0_residue_arithmetic():
    r = K0Residue(3, 3, 2)
    s = K0Residue(3, 3, 2)
    assert (r + s).value == 1
    assert (r - s).value == 0
    with pytest.raises(DimMismatch):
        r + K0Residue(2, 2, 1)
    with pytest.raises(DimMismatch):
        K0Residue(3, 3, 5)


def test_k0_reduce_normalization():
    # at stage (2, 3, 5) the class of 1/d must reduce so that the
    # normalized generator counts as one unit in Z/theta(p)Z
    t = TruncatedUHF((2, 3, 5))
    d = t.dim
    for p, th in ((2, 2), (3, 3)):
        r = k0_reduce(K0Value(1, d), t, p, normalized=True)
        # (d / theta) * r == 1 mod theta by construction
        assert (r.value * (d // th)) % th == 1 % th
        assert r.modulus == th


def test_embed_factor_shapes_and_commutation():
    t = TruncatedUHF((2, 3, 5))
    rng = np.random.default_rng(0)
    a = embed_factor(rng.standard_normal((3, 3)), t, 1)
    b = embed_factor(rng.standard_normal((5, 5)), t, 2)
    assert a.shape == (30, 30)
    # operators on different tensor factors commute exactly
    assert op_norm(a @ b - b @ a) < 1e-12
    with pytest.raises(DimMismatch):
        embed_factor(np.eye(4), t, 1)


def test_embed_many_matches_kron():
    t = TruncatedUHF((2, 3))
    x = np.diag([1.0, -1.0])
    y = np.diag([1.0, 2.0, 3.0])
    m = embed_many([x, y], t)
    assert np.allclose(m, np.kron(x, y))
    # None entries mean the identity on that factor
    m2 = embed_many([None, y], t)
    assert np.allclose(m2, np.kron(np.eye(2), y))
