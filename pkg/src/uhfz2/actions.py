"""Product-type Z^2 actions on a truncated UHF stage.

An action is stored through implementing unitaries for its two generators.
For product-type actions the generators are tensor products of per-factor
unitaries; the two generators are required to commute up to a scalar per
factor (Ad kills scalars, so the automorphisms commute exactly).

Also here: cocycles and coboundaries, cocycle extension along staircase
paths, perturbed actions, the clock/shift model actions, and uniform
outerness witnesses built from matrix units of a free tail factor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .config import DEFAULT, Tolerances
from .errors import (DimMismatch, NoFreeTail, NotACocycle, SpecMismatch)
from .linalg import op_norm, require_unitary
from .uhf import TruncatedUHF, embed_many

__all__ = [
    "clock", "shift", "FactorGen", "ProductAction", "Cocycle", "ModelSpec",
    "make_model_action", "coboundary", "extend_cocycle", "perturb",
    "outerness_witness", "trivial_action",
]


def clock(q: int) -> np.ndarray:
    """diag(1, w, ..., w^(q-1)) with w = exp(2*pi*i/q)."""
    if q < 2:
        raise DimMismatch("clock needs q >= 2")
    w = np.exp(2j * np.pi / q)
    return np.diag(w ** np.arange(q))


def shift(q: int) -> np.ndarray:
    """Cyclic permutation: ones on the subdiagonal and the top-right corner."""
    if q < 2:
        raise DimMismatch("shift needs q >= 2")
    v = np.zeros((q, q), dtype=complex)
    v[0, q - 1] = 1.0
    for j in range(q - 1):
        v[j + 1, j] = 1.0
    return v


@dataclass(frozen=True)
class FactorGen:
    """Per-factor generator descriptor: clock power, shift power, id, dense."""

    kind: str                      # "clock" | "shift" | "id" | "dense"
    power: int = 1
    matrix: np.ndarray | None = None

    def realize(self, q: int) -> np.ndarray:
        if self.kind == "id":
            return np.eye(q)
        if self.kind == "clock":
            return np.linalg.matrix_power(clock(q), self.power % q)
        if self.kind == "shift":
            return np.linalg.matrix_power(shift(q), self.power % q)
        if self.kind == "dense":
            m = require_unitary(np.asarray(self.matrix), what="dense factor")
            if m.shape != (q, q):
                raise DimMismatch(f"dense factor has shape {m.shape}, need {q}")
            return m
        raise SpecMismatch(f"unknown factor kind {self.kind!r}")

    def to_json(self) -> dict:
        from .linalg import matrix_to_json
        if self.kind == "dense":
            return {"kind": "dense", "matrix": matrix_to_json(self.matrix)}
        if self.kind == "id":
            return {"kind": "id"}
        return {"kind": self.kind, "power": self.power}

    @classmethod
    def from_json(cls, obj: dict) -> "FactorGen":
        from .linalg import matrix_from_json
        kind = obj["kind"]
        if kind == "dense":
            return cls("dense", matrix=matrix_from_json(obj["matrix"]))
        return cls(kind, power=int(obj.get("power", 1)))


class ProductAction:
    """Z^2-action generated by Ad(W1), Ad(W2) on a truncated stage.

    ``gen1``/``gen2`` are per-factor :class:`FactorGen` lists when the
    product structure is known, or ``None`` for dense actions; ``W1``/``W2``
    are the dense implementing unitaries either way.
    """

    def __init__(self, trunc: TruncatedUHF, gen1, gen2,
                 W1: np.ndarray | None = None, W2: np.ndarray | None = None,
                 tol: Tolerances = DEFAULT):
        self.trunc = trunc
        self.gen1 = gen1
        self.gen2 = gen2
        if gen1 is not None:
            locs1 = [g.realize(q) for g, q in zip(gen1, trunc.factors)]
            locs2 = [g.realize(q) for g, q in zip(gen2, trunc.factors)]
            for k, (a, b) in enumerate(zip(locs1, locs2)):
                comm = a @ b @ a.conj().T @ b.conj().T
                lam = comm[0, 0]
                if op_norm(comm - lam * np.eye(comm.shape[0])) > 1e-9:
                    raise SpecMismatch(
                        f"factor {k}: Ad generators do not commute (non-scalar "
                        f"commutator)")
            self.W1 = embed_many(locs1, trunc)
            self.W2 = embed_many(locs2, trunc)
        else:
            if W1 is None or W2 is None:
                raise SpecMismatch("dense action needs explicit W1, W2")
            self.W1 = require_unitary(W1, tol.unitarity_tol, "W1")
            self.W2 = require_unitary(W2, tol.unitarity_tol, "W2")
            comm = self.W1 @ self.W2 @ self.W1.conj().T @ self.W2.conj().T
            lam = np.trace(comm) / comm.shape[0]
            if op_norm(comm - lam * np.eye(comm.shape[0])) > 1e-8:
                raise SpecMismatch("generators do not commute up to scalar")
        self._pow_cache = {}
        # dense actions obtained by perturbing a product-type action keep a
        # reference to the base and the factors the perturbation touches
        self.base: "ProductAction | None" = None
        self.pert_support: frozenset = frozenset()

    # -- basic protocol -----------------------------------------------------

    @property
    def dim(self) -> int:
        return self.trunc.dim

    @property
    def is_product_type(self) -> bool:
        return self.gen1 is not None

    def skeleton(self):
        """Underlying product generators plus the tainted factor set.

        Returns ``(gen1, gen2, tainted)`` or ``None`` when no product
        structure is known.  For a perturbed action, exact statements about
        factors outside ``tainted`` (ladders, towers) remain valid because
        the perturbing unitaries commute with anything supported there.
        """
        if self.is_product_type:
            return self.gen1, self.gen2, frozenset()
        if self.base is None:
            return None
        sk = self.base.skeleton()
        if sk is None:
            return None
        return sk[0], sk[1], sk[2] | self.pert_support

    def implementing(self, n) -> np.ndarray:
        """W1^n1 W2^n2 (canonical implementing unitary for alpha_n)."""
        n = (int(n[0]), int(n[1]))
        if n not in self._pow_cache:
            d = self.dim
            w = np.eye(d, dtype=complex)
            w = w @ np.linalg.matrix_power(self.W1, n[0]) if n[0] >= 0 else \
                w @ np.linalg.matrix_power(self.W1.conj().T, -n[0])
            w = w @ np.linalg.matrix_power(self.W2, n[1]) if n[1] >= 0 else \
                w @ np.linalg.matrix_power(self.W2.conj().T, -n[1])
            self._pow_cache[n] = w
        return self._pow_cache[n]

    def apply(self, n, a: np.ndarray) -> np.ndarray:
        """alpha_n(a) = Ad(W1^n1 W2^n2)(a)."""
        w = self.implementing(n)
        return w @ np.asarray(a, dtype=complex) @ w.conj().T

    def apply1(self, a: np.ndarray) -> np.ndarray:
        return self.apply((1, 0), a)

    def apply2(self, a: np.ndarray) -> np.ndarray:
        return self.apply((0, 1), a)

    # -- derived actions ----------------------------------------------------

    def power_action(self, m: int, n: int) -> "ProductAction":
        """Action generated by alpha_1^m and alpha_2^n."""
        if self.is_product_type:
            def powgen(gens, k):
                out = []
                for g, q in zip(gens, self.trunc.factors):
                    if g.kind in ("clock", "shift"):
                        out.append(FactorGen(g.kind, g.power * k))
                    elif g.kind == "id":
                        out.append(g)
                    else:
                        out.append(FactorGen("dense", matrix=np.linalg.
                                             matrix_power(g.matrix, k)))
                return out
            return ProductAction(self.trunc, powgen(self.gen1, m),
                                 powgen(self.gen2, n))
        return ProductAction(self.trunc, None, None,
                             W1=np.linalg.matrix_power(self.W1, m),
                             W2=np.linalg.matrix_power(self.W2, n))

    def to_json(self) -> dict:
        from .linalg import matrix_to_json
        if self.is_product_type:
            return {"trunc": self.trunc.to_json(),
                    "gen1": [g.to_json() for g in self.gen1],
                    "gen2": [g.to_json() for g in self.gen2]}
        return {"trunc": self.trunc.to_json(),
                "W1": matrix_to_json(self.W1), "W2": matrix_to_json(self.W2)}

    @classmethod
    def from_json(cls, obj: dict) -> "ProductAction":
        from .linalg import matrix_from_json
        trunc = TruncatedUHF.from_json(obj["trunc"])
        if "gen1" in obj:
            return cls(trunc,
                       [FactorGen.from_json(g) for g in obj["gen1"]],
                       [FactorGen.from_json(g) for g in obj["gen2"]])
        return cls(trunc, None, None,
                   W1=matrix_from_json(obj["W1"]),
                   W2=matrix_from_json(obj["W2"]))


def trivial_action(trunc: TruncatedUHF) -> ProductAction:
    gens = [FactorGen("id") for _ in trunc.factors]
    return ProductAction(trunc, list(gens), list(gens))


@dataclass
class Cocycle:
    """Pair (u1, u2) with its cocycle defect recorded honestly.

    ``defect <= exact_tol`` means an exact cocycle; ``defect < 1`` an almost
    cocycle.
    """

    u1: np.ndarray
    u2: np.ndarray
    defect: float

    @classmethod
    def from_pair(cls, u1, u2, action: ProductAction,
                  tol: Tolerances = DEFAULT) -> "Cocycle":
        u1 = require_unitary(u1, tol.unitarity_tol, "u1")
        u2 = require_unitary(u2, tol.unitarity_tol, "u2")
        d = op_norm(u1 @ action.apply1(u2) - u2 @ action.apply2(u1))
        return cls(u1, u2, d)

    @property
    def is_exact(self) -> bool:
        return self.defect <= DEFAULT.exact_tol

    @property
    def is_almost(self) -> bool:
        return self.defect < 1.0


@dataclass(frozen=True)
class ModelSpec:
    """Data for the clock/shift model action gamma^f.

    ``f`` maps each finite prime p to a residue in [0, theta(p));
    ``L1``/``L2`` partition the truncation's factor indices.  Factors that
    carry a theta(p) with f(p) != 0 must be listed in neither side's "free"
    role: they are forced into the L_f block.
    """

    f: dict
    L1: tuple
    L2: tuple

    def to_json(self) -> dict:
        return {"f": {str(p): v for p, v in self.f.items()},
                "L1": list(self.L1), "L2": list(self.L2)}

    @classmethod
    def from_json(cls, obj: dict) -> "ModelSpec":
        return cls({int(p): int(v) for p, v in obj["f"].items()},
                   tuple(obj["L1"]), tuple(obj["L2"]))

    @classmethod
    def balanced(cls, trunc: TruncatedUHF, f: dict) -> "ModelSpec":
        """Alternate unassigned factors between L1 and L2."""
        lf = _lf_indices(trunc, f)
        L1, L2 = [], []
        toggle = True
        for k in range(len(trunc.factors)):
            if k in lf:
                continue
            (L1 if toggle else L2).append(k)
            toggle = not toggle
        return cls(dict(f), tuple(L1), tuple(L2))


def _lf_indices(trunc: TruncatedUHF, f: dict) -> set:
    out = set()
    for p, v in f.items():
        if v % _theta_for(trunc, p) != 0:
            out.add(trunc.theta_block(p))
    return out


def _theta_for(trunc: TruncatedUHF, p: int) -> int:
    return trunc.factors[trunc.theta_block(p)]


def make_model_action(spec: ModelSpec, trunc: TruncatedUHF) -> ProductAction:
    """The model action gamma^f at stage ``trunc``.

    Generator 1 acts as Ad(clock^f(p)) on the L_f factors, trivially on L1
    and as Ad(clock) on L2; generator 2 acts as Ad(shift) on L_f and L1 and
    trivially on L2.
    """
    n = len(trunc.factors)
    lf = _lf_indices(trunc, spec.f)
    assigned = lf | set(spec.L1) | set(spec.L2)
    if assigned != set(range(n)) or (lf & set(spec.L1)) or (lf & set(spec.L2)):
        raise SpecMismatch(
            f"partition does not cover the factors: L_f={sorted(lf)}, "
            f"L1={spec.L1}, L2={spec.L2}, n={n}")
    fw = {}
    for p, v in spec.f.items():
        fw[trunc.theta_block(p)] = v % _theta_for(trunc, p)
    gen1, gen2 = [], []
    for k in range(n):
        if k in lf:
            gen1.append(FactorGen("clock", fw[k]))
            gen2.append(FactorGen("shift"))
        elif k in spec.L1:
            gen1.append(FactorGen("id"))
            gen2.append(FactorGen("shift"))
        else:
            gen1.append(FactorGen("clock"))
            gen2.append(FactorGen("id"))
    return ProductAction(trunc, gen1, gen2)


def coboundary(v: np.ndarray, action: ProductAction,
               tol: Tolerances = DEFAULT) -> Cocycle:
    """The coboundary cocycle u_i = v alpha_i(v*)."""
    v = require_unitary(v, tol.unitarity_tol, "v")
    u1 = v @ action.apply1(v.conj().T)
    u2 = v @ action.apply2(v.conj().T)
    return Cocycle.from_pair(u1, u2, action, tol)


def extend_cocycle(c: Cocycle, action: ProductAction, n,
                   tol: Tolerances = DEFAULT) -> np.ndarray:
    """u_n via the staircase u_{n+xi} = u_xi alpha_xi(u_n).

    Walks first along xi_1 then along xi_2; path independence is verified
    against the reverse staircase within 10x the recorded defect.
    """
    if c.defect > 1e-6:
        raise NotACocycle(f"cocycle defect {c.defect:.3e} too large to extend")
    n1, n2 = int(n[0]), int(n[1])
    u_a = _walk(c, action, n1, n2, first_axis=0)
    u_b = _walk(c, action, n1, n2, first_axis=1)
    dev = op_norm(u_a - u_b)
    budget = 10.0 * max(c.defect, tol.exact_tol) * (abs(n1) + abs(n2) + 1)
    if dev > budget:
        raise NotACocycle(
            f"staircase paths disagree by {dev:.3e} (> {budget:.3e})")
    return u_a


def _walk(c: Cocycle, action: ProductAction, n1: int, n2: int,
          first_axis: int) -> np.ndarray:
    d = action.dim
    u = np.eye(d, dtype=complex)
    pos = [0, 0]
    order = (0, 1) if first_axis == 0 else (1, 0)
    for axis in order:
        steps = (n1, n2)[axis]
        gen = (c.u1, c.u2)[axis]
        xi = (1, 0) if axis == 0 else (0, 1)
        for _ in range(abs(steps)):
            if steps > 0:
                # u_{n+xi} = u_xi alpha_xi(u_n)
                u = gen @ action.apply(xi, u)
                pos[axis] += 1
            else:
                # u_{n-xi} = alpha_{-xi}(u_xi* u_n)
                u = action.apply((-xi[0], -xi[1]), gen.conj().T @ u)
                pos[axis] -= 1
    return u


def perturb(action: ProductAction, c: Cocycle,
            tol: Tolerances = DEFAULT) -> ProductAction:
    """Perturbed action with generators Ad(u1 W1), Ad(u2 W2)."""
    from .support import factor_support
    if c.defect > 1e-6:
        raise NotACocycle(f"cocycle defect {c.defect:.3e} too large")
    out = ProductAction(action.trunc, None, None,
                        W1=c.u1 @ action.W1, W2=c.u2 @ action.W2, tol=tol)
    out.base = action
    out.pert_support = frozenset(factor_support(c.u1, action.trunc) |
                                 factor_support(c.u2, action.trunc))
    return out


def inverse_cocycle(c: Cocycle, action: ProductAction,
                    tol: Tolerances = DEFAULT) -> Cocycle:
    """Cocycle trivializing the perturbation: (u_i)* viewed for Ad(u_i W_i)."""
    pert = perturb(action, c, tol)
    return Cocycle.from_pair(c.u1.conj().T, c.u2.conj().T, pert, tol)


def outerness_witness(action: ProductAction, n, a: np.ndarray,
                      p: np.ndarray, eps: float,
                      tol: Tolerances = DEFAULT) -> list:
    """Projections splitting p with ||p_i a alpha_n(p_i)|| < eps.

    Finite-stage witness only: requires a free tail factor where alpha_n
    permutes a diagonal system of matrix units and both a and p act
    trivially.  The projections are p compressed by those matrix units.
    """
    n = (int(n[0]), int(n[1]))
    if n == (0, 0):
        raise NoFreeTail("n = 0 is not an outerness direction")
    if not action.is_product_type:
        raise NoFreeTail("witness construction needs product structure")
    trunc = action.trunc
    k = _free_tail_factor(action, n, [a, p])
    q = trunc.factors[k]
    units = _cyclic_units(action, n, k)
    out = []
    for e in units:
        pi = e @ p @ e
        if op_norm(pi) < tol.exact_tol:
            continue
        out.append(pi)
        bound = op_norm(pi @ a @ action.apply(n, pi))
        if bound >= eps:
            raise NoFreeTail(
                f"tail factor {k} witness bound {bound:.3e} >= eps={eps:g}")
    return out


def _free_tail_factor(action: ProductAction, n, supported: list) -> int:
    from .support import factor_support
    trunc = action.trunc
    used = set()
    for m in supported:
        used |= factor_support(np.asarray(m, dtype=complex), trunc)
    for k, q in enumerate(trunc.factors):
        if k in used:
            continue
        g1, g2 = action.gen1[k], action.gen2[k]
        pw = {"clock": 0, "shift": 0}
        ok = True
        for g, mult in ((g1, n[0]), (g2, n[1])):
            if g.kind == "id" or mult == 0:
                continue
            if g.kind not in pw:
                ok = False
                break
            pw[g.kind] += g.power * mult
        if not ok:
            continue
        active = [(kind, c % q) for kind, c in pw.items() if c % q != 0]
        if len(active) == 1:
            return k
    raise NoFreeTail(f"no free tail factor for direction {n}")


def _cyclic_units(action: ProductAction, n, k: int) -> list:
    """Diagonal matrix units of factor k in the basis alpha_n permutes."""
    trunc = action.trunc
    q = trunc.factors[k]
    g1, g2 = action.gen1[k], action.gen2[k]
    total = {"clock": 0, "shift": 0}
    for g, mult in ((g1, n[0]), (g2, n[1])):
        if g.kind in total and mult:
            total[g.kind] += g.power * mult
    if total["clock"] % q != 0:
        # Ad(clock^c) cyclically shifts the Fourier (shift eigenvector) basis
        w = np.exp(2j * np.pi / q)
        f = np.array([[w ** (j * m) for m in range(q)]
                      for j in range(q)]) / np.sqrt(q)
        vecs = [f[:, m] for m in range(q)]
    else:
        vecs = [np.eye(q)[:, m] for m in range(q)]
    units = [np.outer(v, v.conj()) for v in vecs]
    return [embed_local(u, trunc, k) for u in units]


def embed_local(local: np.ndarray, trunc: TruncatedUHF, k: int) -> np.ndarray:
    from .uhf import embed_factor
    return embed_factor(local, trunc, k)
