"""Tensor-factor support detection and partial traces on a truncation."""

from __future__ import annotations

import math

import numpy as np

from .uhf import TruncatedUHF

__all__ = ["factor_support", "partial_trace_factor", "weyl_average"]


def _tensorize(m: np.ndarray, trunc: TruncatedUHF) -> np.ndarray:
    fs = trunc.factors
    return np.asarray(m, dtype=complex).reshape(*fs, *fs)


def partial_trace_factor(m: np.ndarray, trunc: TruncatedUHF,
                         k: int) -> np.ndarray:
    """Trace out factor k; returns a matrix on the complementary factors."""
    fs = trunc.factors
    n = len(fs)
    t = _tensorize(m, trunc)
    t = np.trace(t, axis1=k, axis2=n + k)
    rest = math.prod(fs) // fs[k]
    return t.reshape(rest, rest)


def _embed_rest(rest: np.ndarray, trunc: TruncatedUHF, k: int) -> np.ndarray:
    """1_k tensor rest, with rest acting on all factors except k."""
    fs = trunc.factors
    n = len(fs)
    rest_fs = fs[:k] + fs[k + 1:]
    t = rest.reshape(*rest_fs, *rest_fs)
    t = np.tensordot(np.eye(fs[k]), t, axes=0)  # (qk, qk, rest..., rest...)
    # target index order: (f_0..f_{n-1}, g_0..g_{n-1}) with axes (0,1) at slot k
    rows = []
    cols = []
    ri = 0
    for i in range(n):
        if i == k:
            rows.append(0)
            cols.append(1)
        else:
            rows.append(2 + ri)
            cols.append(2 + (n - 1) + ri)
            ri += 1
    t = np.transpose(t, rows + cols)
    d = math.prod(fs)
    return t.reshape(d, d)


def factor_support(m: np.ndarray, trunc: TruncatedUHF,
                   tol: float = 1e-9) -> set:
    """Indices of factors on which m acts non-trivially.

    Factor k is unsupported when m equals 1_k tensor (ptrace_k(m)/q_k)
    within ``tol`` in operator norm.
    """
    out = set()
    scale = max(float(np.linalg.norm(m, 2)), 1e-300)
    for k, q in enumerate(trunc.factors):
        rest = partial_trace_factor(m, trunc, k) / q
        if np.linalg.norm(m - _embed_rest(rest, trunc, k), 2) > tol * scale:
            out.add(k)
    return out


def weyl_average(m: np.ndarray, trunc: TruncatedUHF, k: int) -> np.ndarray:
    """Exact conditional expectation onto the commutant of factor k.

    Averages over the clock/shift Weyl family of the factor; since that
    family spans the full matrix algebra of the factor, the average equals
    1_k tensor (ptrace_k(m)/q_k).
    """
    from .actions import clock, shift
    from .uhf import embed_factor
    q = trunc.factors[k]
    u = embed_factor(clock(q), trunc, k)
    v = embed_factor(shift(q), trunc, k)
    acc = np.zeros_like(np.asarray(m, dtype=complex))
    uj = np.eye(trunc.dim, dtype=complex)
    for _ in range(q):
        vk = np.eye(trunc.dim, dtype=complex)
        for _ in range(q):
            w = uj @ vk
            acc += w @ m @ w.conj().T
            vk = vk @ v
        uj = uj @ u
    return acc / (q * q)
