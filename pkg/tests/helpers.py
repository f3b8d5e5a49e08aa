"""Shared builders for test instances."""

import numpy as np

from uhfz2.actions import ModelSpec, coboundary, make_model_action
from uhfz2.linalg import expm_sa, random_selfadjoint
from uhfz2.uhf import SupernaturalNumber, embed_factor, truncate


def model(sn_exponents: dict, budget: int, f: dict | None = None):
    """Truncation and balanced model action for the given supernatural data."""
    tr = truncate(SupernaturalNumber(sn_exponents), budget=budget)
    act = make_model_action(ModelSpec.balanced(tr, f or {}), tr)
    return tr, act


def local_unitary(tr, k: int, rng, norm: float) -> np.ndarray:
    """exp(2 pi i h) with h random self-adjoint on factor k."""
    q = tr.factors[k]
    return embed_factor(expm_sa(random_selfadjoint(q, rng, norm=norm)), tr, k)


def small_coboundary(tr, act, k: int, rng, norm: float = 0.03):
    """Coboundary cocycle of a local unitary, plus the unitary itself."""
    v0 = local_unitary(tr, k, rng, norm)
    return v0, coboundary(v0, act)
