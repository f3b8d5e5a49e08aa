"""Invariant comparison and finite-stage intertwining rounds.

At a finite truncation every automorphism is inner, so two actions with
equal invariants can be matched through exact intertwiners read off from
their implementing unitaries.  When the raw intertwiner pair carries a
nonzero kappa, a phase-graded projection ladder corrects it exactly; the
corrected pair is then fed to the cohomology-vanishing solver, whose output
coboundary realizes the matching.  Iterating the matcher while alternating
which action gets perturbed gives the intertwining transcript.
"""

from __future__ import annotations

import math
import time
from fractions import Fraction

import numpy as np

from .actions import Cocycle, ProductAction, coboundary, perturb
from .config import DEFAULT, Tolerances
from .errors import (AssemblyDefect, CorrectionFailure, DimMismatch,
                     InvariantMismatch, NotOnLattice, SpecMismatch, Stalled)
from .invariants import _cocycle_commutator, action_invariant, kappa_fast
from .linalg import normalized_trace, op_norm
from .rohlin import _factor_ladder, vanish_cocycle
from .support import factor_support
from .uhf import embed_factor

__all__ = ["invariants_equal", "approximate_match", "ek_rounds"]


def invariants_equal(alpha: ProductAction, beta: ProductAction,
                     primes=None, tol: Tolerances = DEFAULT) -> dict:
    """Per-prime comparison of the two action invariants.

    Returns a report with the residues of both actions at every available
    prime, an overall equality flag and the mismatch count (the
    outer-conjugacy criterion asks for equality off a finite set; at a
    finite stage that is equality per available prime plus the count).
    """
    if alpha.trunc != beta.trunc:
        raise DimMismatch("actions live on different truncations")
    ia = action_invariant(alpha, primes=primes, tol=tol)
    ib = action_invariant(beta, primes=primes, tol=tol)
    per = {}
    mismatched = []
    for p in sorted(ia):
        ra, rb = ia[p], ib[p]
        eq = ra.value == rb.value
        per[p] = {"modulus": ra.modulus, "alpha": ra.value,
                  "beta": rb.value, "equal": eq}
        if not eq:
            mismatched.append(p)
    return {"equal": not mismatched, "mismatch_count": len(mismatched),
            "mismatched_primes": mismatched, "per_prime": per}


def _kappa_fraction(u1, u2, action: ProductAction,
                    tol: Tolerances = DEFAULT):
    """kappa of the pair as a reduced fraction.

    Scalar cocycle commutators of any phase are handled directly (the trace
    bound machinery requires the commutator near 1, which fails for
    intertwiner pairs differing by a large root of unity).
    """
    d = action.dim
    x = _cocycle_commutator(u1, u2, action)
    lam = normalized_trace(x)
    if abs(lam) > 0.5:
        lam = lam / abs(lam)
        if op_norm(x - lam * np.eye(d)) <= 1e-8:
            phase = float(np.angle(lam)) / (2.0 * np.pi)
            n = int(round(d * phase))
            if abs(d * phase - n) > 1e-6 * d:
                raise NotOnLattice(
                    f"scalar commutator phase {phase:.6f} not on the "
                    f"(1/{d})-lattice")
            return Fraction(n, d)
    kr = kappa_fast(u1, u2, action, tol)
    return Fraction(kr.integer_form, d)


def _phase_ladder_correction(u1, u2, frac: Fraction, alpha: ProductAction,
                             F, tol: Tolerances):
    """Multiply u2 by a phase-graded ladder unitary killing kappa = m/l.

    The ladder lives in a free tensor factor where generator 1 acts by a
    cyclic ladder of height divisible by l; grouping the ladder projections
    mod l gives E_0..E_{l-1} with beta_1(E_j) = E_{j+1} exactly, and
    v = sum_j exp(2 pi i s j m / l) E_j shifts kappa by -s m/l.
    """
    m, l = frac.numerator, frac.denominator
    sk = alpha.skeleton()
    if sk is None:
        raise CorrectionFailure(
            f"kappa = {m}/{l} correction needs a product structure")
    gen1, _, tainted = sk
    trunc = alpha.trunc
    u1_supp = factor_support(u1, trunc)
    u2_supp = factor_support(u2, trunc)
    f_supp = set()
    for a in F:
        f_supp |= factor_support(np.asarray(a, dtype=complex), trunc)
    orders = []
    preferred, fallback = [], []
    for k, q in enumerate(trunc.factors):
        g = gen1[k]
        if g.kind not in ("clock", "shift") or g.power % q == 0:
            continue
        o = q // math.gcd(g.power % q, q)
        orders.append(o)
        if o % l != 0 or k in tainted or k in u1_supp or k in f_supp:
            continue
        # a ladder on the support of u2 itself is still exact (with u1
        # acting off the factor, beta_1 moves it through alpha_1 alone)
        # and adds no new support, leaving more factors free for towers
        (preferred if k in u2_supp else fallback).append((k, q, g, o))
    candidates = preferred + fallback
    if not candidates:
        raise CorrectionFailure(
            f"no projection ladder of order divisible by l = {l} available; "
            f"generator-1 factor orders: {sorted(orders)}")
    k, q, g, o = candidates[0]
    ladder = _factor_ladder(g.kind, g.power, q)
    locals_E = []
    for j in range(l):
        e = np.zeros((q, q), dtype=complex)
        for s in range(j, o, l):
            e += ladder[s]
        locals_E.append(e)
    E = [embed_factor(e, trunc, k) for e in locals_E]
    for sign in (1, -1):
        v = sum(np.exp(2j * np.pi * sign * j * m / l) * E[j]
                for j in range(l))
        u2c = v @ u2
        if _kappa_fraction(u1, u2c, alpha, tol) == 0:
            return u2c, v, {"m": m, "l": l, "factor": k, "sign": sign}
    raise CorrectionFailure(
        f"ladder on factor {k} failed to cancel kappa = {m}/{l}")


def approximate_match(alpha: ProductAction, beta: ProductAction, F=(),
                      eps: float = 0.1, tol: Tolerances = DEFAULT,
                      vanish_eps: float | None = None):
    """Coboundary of alpha conjugating it to beta within eps on F.

    Returns ``(cocycle, report)`` where the cocycle is an exact coboundary
    (u_i = z alpha_i(z*)) with ``||beta_i(a) - Ad(u_i) alpha_i(a)|| < eps``
    for a in F, i = 1, 2.  Pipeline: exact intertwiners from the inner
    implementations, the phase-ladder kappa correction when needed, then
    the cohomology-vanishing solver to put the pair in coboundary form.
    The witness unitary z is returned under ``report["witness"]``.
    """
    inv = invariants_equal(alpha, beta, tol=tol)
    if not inv["equal"]:
        raise InvariantMismatch(
            f"invariants differ at primes {inv['mismatched_primes']}")
    u1 = beta.implementing((1, 0)) @ alpha.implementing((1, 0)).conj().T
    u2 = beta.implementing((0, 1)) @ alpha.implementing((0, 1)).conj().T
    frac = _kappa_fraction(u1, u2, alpha, tol)
    corr_info = None
    if frac != 0:
        u2, _, corr_info = _phase_ladder_correction(u1, u2, frac, alpha,
                                                    F, tol)
    c = Cocycle.from_pair(u1, u2, alpha, tol)
    ve = vanish_eps if vanish_eps is not None else eps / 4.0
    z, vrep = vanish_cocycle(alpha, c, F=F, eps=ve, tol=tol)
    cb = coboundary(z, alpha, tol)
    defect = 0.0
    for a in F:
        a = np.asarray(a, dtype=complex)
        for i, ui in ((1, cb.u1), (2, cb.u2)):
            b = beta.apply1(a) if i == 1 else beta.apply2(a)
            t = alpha.apply1(a) if i == 1 else alpha.apply2(a)
            defect = max(defect, op_norm(b - ui @ t @ ui.conj().T))
    report = {
        "eps_target": eps,
        "match_defect_F": defect,
        "intertwiner_cocycle_defect": c.defect,
        "kappa_raw": [frac.numerator, frac.denominator],
        "kappa_corrections": 0 if corr_info is None else 1,
        "kappa_correction": corr_info,
        "vanish": vrep,
        "witness": z,
        "invariants": inv,
    }
    if defect >= eps:
        raise AssemblyDefect(
            f"matching defect {defect:.4f} exceeds eps = {eps}",
            report=report)
    return cb, report


def _pair_defect(a: ProductAction, b: ProductAction, F) -> float:
    out = 0.0
    for x in F:
        x = np.asarray(x, dtype=complex)
        out = max(out,
                  op_norm(a.apply1(x) - b.apply1(x)),
                  op_norm(a.apply2(x) - b.apply2(x)))
    return out


def ek_rounds(alpha: ProductAction, beta: ProductAction, rounds: int,
              F_schedule=None, eps_schedule=None,
              tol: Tolerances = DEFAULT, strict: bool = False) -> dict:
    """Alternating intertwining rounds with a measured transcript.

    Each round matches the current source action to the current target via
    :func:`approximate_match`, perturbs the source by the returned
    coboundary, records the measured defect on that round's finite set, and
    swaps the roles for the next round.  Defects are expected to be
    non-increasing on constructed instances (an empirical contract, not a
    guarantee); a round that increases the running minimum is flagged as
    stalled (and raises :class:`Stalled` when ``strict``).
    """
    if eps_schedule is None:
        eps_schedule = [0.2 * 0.5 ** r for r in range(rounds)]
    if F_schedule is None:
        F_schedule = [[] for _ in range(rounds)]
    elif F_schedule and not isinstance(F_schedule[0], (list, tuple)):
        F_schedule = [list(F_schedule) for _ in range(rounds)]
    if len(eps_schedule) < rounds or len(F_schedule) < rounds:
        raise SpecMismatch("schedules shorter than the round count")
    if any(eps_schedule[r + 1] > eps_schedule[r] for r in range(rounds - 1)):
        raise SpecMismatch("eps schedule must be non-increasing")
    cur, other = alpha, beta
    entries = []
    running = None
    stalled = []
    for r in range(rounds):
        t0 = time.perf_counter()
        cb, rep = approximate_match(cur, other, F_schedule[r],
                                    eps_schedule[r], tol=tol)
        newcur = perturb(cur, cb, tol)
        defect = _pair_defect(newcur, other, F_schedule[r])
        entry = {"round": r, "matcher_defect": defect,
                 "vanish_eps": rep["vanish"]["eps_achieved"],
                 "kappa_corrections": rep["kappa_corrections"],
                 "wall_time": time.perf_counter() - t0}
        if running is not None and defect > max(running, tol.exact_tol):
            entry["stalled"] = True
            stalled.append(r)
            if strict:
                raise Stalled(
                    f"round {r} defect {defect:.4f} exceeds running "
                    f"minimum {running:.4f}")
        entries.append(entry)
        running = defect if running is None else min(running, defect)
        cur, other = other, newcur
    return {"rounds": entries,
            "final_defect": entries[-1]["matcher_defect"] if entries else 0.0,
            "monotone": not stalled,
            "stalled_rounds": stalled}
