"""Winding numbers, the Bott element, kappa, the trace determinant, and the
per-prime pairing invariant of two actions.

All K0-valued quantities are computed as real numbers and then rounded onto
the stage lattice (1/d)Z with a hard residual bound; silent rounding would
mask path-construction bugs, so failures raise :class:`NotOnLattice`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .actions import Cocycle, ProductAction, trivial_action
from .config import DEFAULT, Tolerances
from .errors import (CommutationFailure, DimMismatch, NotAlmostCocycle,
                     NotEmbeddable, NotInteger, NotOnLattice)
from .linalg import op_norm, polar_unitary, require_unitary
from .paths import UnitaryPath
from .support import weyl_average
from .uhf import K0Residue, K0Value, TruncatedUHF, k0_reduce
from . import linalg

__all__ = [
    "KappaResult", "winding_tau", "bott", "kappa_fast", "kappa_loop",
    "delta_tau", "DeltaTau", "pair_invariant", "action_invariant",
    "admissible", "cocycle_power",
]


# --- spectral phase helpers -------------------------------------------------

def _unit_phases(u: np.ndarray) -> np.ndarray:
    """Eigenvalue phases of a unitary, in turns in (-1/2, 1/2]."""
    lam = np.linalg.eigvals(u)
    lam = lam / np.abs(lam)
    return np.angle(lam) / (2.0 * np.pi)


def best_branch_rotation(u: np.ndarray) -> float:
    """Rotation placing the log branch cut in the largest spectral gap."""
    ph = np.sort(_unit_phases(u))
    gaps = np.diff(ph, append=ph[0] + 1.0)
    i = int(np.argmax(gaps))
    cut = ph[i] + gaps[i] / 2.0
    return float(cut - 0.5)


def _tau_log(u: np.ndarray, rotation: float = 0.0) -> float:
    """tau((1/2 pi i) log u) for the branch with cut at rotation + 1/2."""
    ph = _unit_phases(u)
    shifted = np.mod(ph - rotation + 0.5, 1.0) - 0.5 + rotation
    return float(np.sum(shifted)) / u.shape[0]


def _round_lattice(raw: float, denom: int, tol: Tolerances):
    n = int(round(raw * denom))
    residual = abs(raw - n / denom)
    if residual > tol.lattice_tol:
        raise NotOnLattice(
            f"value {raw:.9f} is {residual:.3e} from the (1/{denom})Z "
            f"lattice (tolerance {tol.lattice_tol:g})")
    return n, residual


# --- winding of a closed sampled loop ---------------------------------------

def winding_tau(path: UnitaryPath, tol: Tolerances = DEFAULT) -> K0Value:
    """Discrete tau-winding of a closed loop of unitaries.

    Sums tau((1/2 pi i) log(U_{k+1} U_k*)) over the samples and rounds onto
    (1/d)Z.  Exactly gauge-invariant under resampling as long as adjacent
    gaps stay below sqrt(2).
    """
    if not path.closed:
        raise DimMismatch("winding_tau needs a closed path")
    raw = _open_winding(path)
    d = path.dim
    n, _ = _round_lattice(raw, d, tol)
    return K0Value(n, d)


def _open_winding(path: UnitaryPath) -> float:
    raw = 0.0
    for k in range(len(path) - 1):
        step = path.mats[k + 1] @ path.mats[k].conj().T
        raw += _tau_log(step)
    return raw


# --- Bott element -----------------------------------------------------------

def bott(v: np.ndarray, w: np.ndarray, tol: Tolerances = DEFAULT) -> int:
    """Tr((1/2 pi i) log(v w v* w*)), an integer for almost-commuting pairs."""
    v = require_unitary(v, tol.unitarity_tol, "v")
    w = require_unitary(w, tol.unitarity_tol, "w")
    x = v @ w @ v.conj().T @ w.conj().T
    h = linalg.unitary_log(x, tol=tol)        # raises BranchCut near -1
    tr = float(np.real(np.trace(h)))
    n = int(round(tr))
    if abs(tr - n) > tol.lattice_tol:
        raise NotInteger(
            f"Tr of the commutator log is {tr:.9f}, not an integer")
    return n


# --- kappa of an almost cocycle ---------------------------------------------

@dataclass(frozen=True)
class KappaResult:
    value: K0Value          # tau-value in (1/d)Z
    integer_form: int       # unnormalized-trace winding (= numerator)
    residual: float         # distance of the raw number to the lattice

    def to_json(self) -> dict:
        return {"integer": self.integer_form,
                "tau_value": str(self.value.fraction),
                "residual": self.residual}


def _cocycle_commutator(u1, u2, action: ProductAction) -> np.ndarray:
    return u1 @ action.apply1(u2) @ (u2 @ action.apply2(u1)).conj().T


def kappa_fast(u1: np.ndarray, u2: np.ndarray, action: ProductAction,
               tol: Tolerances = DEFAULT) -> KappaResult:
    """kappa via the trace of the log of the cocycle commutator.

    Valid at a finite stage because every automorphism of a matrix algebra
    is inner and trace preserving, so the two auxiliary path contributions
    cancel exactly and only the log-correction segment survives.
    """
    u1 = require_unitary(u1, tol.unitarity_tol, "u1")
    u2 = require_unitary(u2, tol.unitarity_tol, "u2")
    x = _cocycle_commutator(u1, u2, action)
    defect = op_norm(x - np.eye(x.shape[0]))
    if defect >= 1.0:
        raise NotAlmostCocycle(
            f"cocycle defect {defect:.6f} >= 1; kappa undefined")
    d = x.shape[0]
    raw = _tau_log(x)
    n, residual = _round_lattice(raw, d, tol)
    tau_val = n / d
    bound = math.asin(min(defect, 1.0)) / (2.0 * math.pi) + 1e-12
    if abs(raw) >= bound and defect > tol.exact_tol:
        raise NotOnLattice(
            f"|tau(kappa)| = {abs(raw):.3e} violates the arcsin bound "
            f"{bound:.3e} for defect {defect:.3e}")
    return KappaResult(K0Value(n, d), n, residual)


def kappa_loop(u1: np.ndarray, u2: np.ndarray, action: ProductAction,
               h1: UnitaryPath, h2: UnitaryPath,
               tol: Tolerances = DEFAULT) -> KappaResult:
    """kappa via the explicit five-segment closed loop.

    Segments: h2, then u2*alpha_2(h1), then the log-correction segment from
    u2*alpha_2(u1) up to u1*alpha_1(u2), then u1*alpha_1(h2) backwards, then
    h1 backwards.  Must agree with :func:`kappa_fast` whenever both are
    defined.
    """
    x = _cocycle_commutator(u1, u2, action)
    defect = op_norm(x - np.eye(x.shape[0]))
    if defect >= 1.0:
        raise NotAlmostCocycle(f"cocycle defect {defect:.6f} >= 1")
    if op_norm(h1.mats[0] - np.eye(h1.dim)) > 1e-8 or \
       op_norm(h1.mats[-1] - u1) > 1e-8:
        raise DimMismatch("h1 must run from 1 to u1")
    if op_norm(h2.mats[0] - np.eye(h2.dim)) > 1e-8 or \
       op_norm(h2.mats[-1] - u2) > 1e-8:
        raise DimMismatch("h2 must run from 1 to u2")
    a = linalg.unitary_log(x, tol=tol)
    base = u2 @ action.apply2(u1)
    n_k = max(9, len(h1), len(h2))
    k_seg = UnitaryPath(np.linspace(0, 1, n_k),
                        [linalg.expm_sa(s * a) @ base
                         for s in np.linspace(0, 1, n_k)])
    seg1 = h2
    seg2 = h1.transform(lambda m: u2 @ action.apply2(m))
    seg3 = k_seg
    seg4 = h2.transform(lambda m: u1 @ action.apply1(m)).reversed()
    seg5 = h1.reversed()
    loop = UnitaryPath.concat([seg1, seg2, seg3, seg4, seg5],
                              weights=[1, 1, 1, 1, 1], closed=True, tol=tol)
    v = winding_tau(loop, tol)
    return KappaResult(v, v.numerator, 0.0)


def admissible(c: Cocycle, action: ProductAction,
               tol: Tolerances = DEFAULT) -> bool:
    """True iff the almost cocycle has vanishing kappa."""
    return kappa_fast(c.u1, c.u2, action, tol).integer_form == 0


def cocycle_power(c: Cocycle, action: ProductAction, m: int, n: int,
                  tol: Tolerances = DEFAULT):
    """Cocycle powers u_1^(m), u_2^(n) for the action of (alpha_1^m, alpha_2^n).

    Returns (u1m, u2n, power_action, max_defect) where max_defect is the
    largest cocycle defect among all intermediate pairs (j <= m, k <= n).
    """
    pows1 = _direction_powers(c.u1, action, 0, m)
    pows2 = _direction_powers(c.u2, action, 1, n)
    max_defect = 0.0
    for j in range(1, m + 1):
        for k in range(1, n + 1):
            sub = action.power_action(j, k)
            x = _cocycle_commutator(pows1[j], pows2[k], sub)
            max_defect = max(max_defect,
                             op_norm(x - np.eye(x.shape[0])))
    return pows1[m], pows2[n], action.power_action(m, n), max_defect


def _direction_powers(u: np.ndarray, action: ProductAction, axis: int,
                      upto: int) -> list:
    xi = (1, 0) if axis == 0 else (0, 1)
    out = [np.eye(u.shape[0], dtype=complex), u]
    for j in range(1, upto):
        step = action.apply((xi[0] * j, xi[1] * j), u)
        out.append(out[-1] @ step)
    return out


# --- de la Harpe-Skandalis determinant --------------------------------------

@dataclass(frozen=True)
class DeltaTau:
    """Winding of a path to u, defined modulo tau(K0) = (1/d)Z."""

    raw: float
    representative: float       # raw reduced into [0, 1/d)
    modulus: Fraction

    def to_json(self) -> dict:
        return {"raw": self.raw, "representative": self.representative,
                "modulus": str(self.modulus)}


def delta_tau(u: np.ndarray, path: UnitaryPath | None = None,
              tol: Tolerances = DEFAULT) -> DeltaTau:
    """Determinant invariant of a unitary at stage dimension d.

    Uses the exponential of the principal log as the default path; the
    value is only defined modulo (1/d)Z and is returned with its raw
    winding for auditability.
    """
    u = require_unitary(u, tol.unitarity_tol, "u")
    d = u.shape[0]
    if path is None:
        raw = _tau_log(u)        # winding of the exponential path
    else:
        if op_norm(path.mats[-1] - u) > 1e-8:
            raise DimMismatch("supplied path does not end at u")
        raw = _open_winding(path)
    rep = raw % (1.0 / d)
    return DeltaTau(raw, rep, Fraction(1, d))


# --- pairing invariant ------------------------------------------------------

def pair_invariant(beta: ProductAction, alpha: ProductAction, p: int,
                   A0_block: int | None = None,
                   tol: Tolerances = DEFAULT) -> K0Residue:
    """The residue [beta, alpha](p) in Z/theta(p)Z.

    At a finite stage all automorphisms are inner, so exact intertwiners
    u_i = V_i W_i* are available from the implementing unitaries.  The path
    from 1 to the cocycle commutator x is built inside the commutant of the
    distinguished M_theta(p) block (via the exact Weyl-averaging conditional
    expectation) plus a small correction segment, which certifies the
    commutation bound ||[h(t), a]|| < 1/2 for a in U(A0).
    """
    if beta.trunc != alpha.trunc:
        raise NotEmbeddable("actions live on different truncations")
    trunc = alpha.trunc
    if A0_block is None:
        A0_block = trunc.theta_block(p)
    th = trunc.factors[A0_block]
    d = trunc.dim
    u1 = beta.implementing((1, 0)) @ alpha.implementing((1, 0)).conj().T
    u2 = beta.implementing((0, 1)) @ alpha.implementing((0, 1)).conj().T
    x = _cocycle_commutator(u1, u2, alpha)

    y_raw = weyl_average(x, trunc, A0_block)
    try:
        y = polar_unitary(y_raw, tol)
    except Exception as exc:
        raise CommutationFailure(
            f"commutant average of x is singular: {exc}") from exc
    corr = x @ y.conj().T
    cert = 2.0 * op_norm(corr - np.eye(d))
    if cert >= 0.5:
        raise CommutationFailure(
            f"correction segment commutator bound {cert:.3f} >= 1/2; x does "
            f"not almost commute with the M_{th} block")

    # winding of exp-paths: commutant part (branch in the largest gap; any
    # branch choice moves the count by multiples of theta) plus correction
    raw = _tau_log(y, best_branch_rotation(y)) + _tau_log(corr)
    n, _ = _round_lattice(raw, d, tol)
    res = k0_reduce(K0Value(n, d), trunc, p, normalized=True)
    if tol.pairing_sign < 0:
        res = K0Residue(res.prime, res.modulus,
                        (-res.value) % res.modulus)
    return res


def action_invariant(alpha: ProductAction, primes=None,
                     tol: Tolerances = DEFAULT) -> dict:
    """[alpha] = [id, alpha]: residue per finite prime of the truncation."""
    trunc = alpha.trunc
    if primes is None:
        primes = _stage_primes(trunc)
    ident = trivial_action(trunc)
    return {p: pair_invariant(ident, alpha, p, tol=tol) for p in primes}


def _stage_primes(trunc: TruncatedUHF) -> list:
    """Primes whose theta block appears exactly once among the factors."""
    out = []
    for k, q in enumerate(trunc.factors):
        p = _prime_root(q)
        if p is None:
            continue
        same = [j for j, r in enumerate(trunc.factors) if _prime_root(r) == p]
        if len(same) == 1:
            out.append(p)
    return sorted(set(out))


def _prime_root(q: int) -> int | None:
    for p in range(2, q + 1):
        if q % p == 0:
            n = q
            while n % p == 0:
                n //= p
            return p if n == 1 else None
    return None
