"""Supernatural numbers, finite truncations, and K0 residue arithmetic.

A UHF algebra is modeled by its supernatural number (prime -> exponent in
N union {inf}).  A finite stage is an ordered tensor product of matrix
factors; all K0 arithmetic happens in tau-values, i.e. in (1/d)Z for stage
dimension d.  The quotient K0(A)/K0(A cap A0') for the distinguished
M_theta(p) block is Z/theta(p)Z.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import (BudgetTooSmall, DimMismatch, InfiniteExponent,
                     NotEmbeddable, NotPrime)

INF = "inf"

__all__ = [
    "SupernaturalNumber", "TruncatedUHF", "K0Value", "K0Residue",
    "zeta", "prime_set_P", "theta", "truncate", "embed_factor", "k0_reduce",
]


def _is_prime(p: int) -> bool:
    if p < 2:
        return False
    return all(p % k for k in range(2, int(math.isqrt(p)) + 1))


@dataclass(frozen=True)
class SupernaturalNumber:
    """Map prime -> exponent; the exponent may be the string "inf"."""

    exponents: dict

    def __post_init__(self):
        if not self.exponents:
            raise NotPrime("supernatural number needs at least one prime")
        for p, e in self.exponents.items():
            if not _is_prime(int(p)):
                raise NotPrime(f"{p} is not prime")
            if e != INF and (not isinstance(e, int) or e < 1):
                raise NotPrime(f"bad exponent {e!r} for prime {p}")

    @property
    def is_infinite_dimensional(self) -> bool:
        return any(e == INF for e in self.exponents.values())

    def to_json(self) -> dict:
        return {"exponents": {str(p): e for p, e in self.exponents.items()}}

    @classmethod
    def from_json(cls, obj: dict) -> "SupernaturalNumber":
        exps = {}
        for p, e in obj["exponents"].items():
            exps[int(p)] = INF if e in (INF, "Inf", "INF") else int(e)
        return cls(exps)


def zeta(sn: SupernaturalNumber, p: int):
    """Exponent of the prime p in sn; 0 if absent, "inf" if infinite."""
    if not _is_prime(p):
        raise NotPrime(f"{p} is not prime")
    return sn.exponents.get(p, 0)


def prime_set_P(sn: SupernaturalNumber) -> set:
    """Primes with finite nonzero exponent; home of the classification data."""
    return {p for p, e in sn.exponents.items() if e != INF}


def theta(sn: SupernaturalNumber, p: int) -> int:
    """p ** zeta(p); only defined for finite nonzero exponents."""
    z = zeta(sn, p)
    if z == INF:
        raise InfiniteExponent(f"zeta({p}) is infinite")
    if z == 0:
        raise NotPrime(f"{p} does not divide the supernatural number")
    return p ** z


@dataclass(frozen=True)
class TruncatedUHF:
    """Ordered factor list (q_1, ..., q_N); stage dimension d = prod q_k."""

    factors: tuple

    def __post_init__(self):
        fs = tuple(int(q) for q in self.factors)
        if any(q < 2 for q in fs):
            raise DimMismatch(f"all factors must be >= 2, got {fs}")
        object.__setattr__(self, "factors", fs)

    @property
    def dim(self) -> int:
        return math.prod(self.factors)

    def to_json(self) -> dict:
        return {"factors": list(self.factors)}

    @classmethod
    def from_json(cls, obj: dict) -> "TruncatedUHF":
        return cls(tuple(obj["factors"]))

    def theta_block(self, p: int) -> int:
        """Index of the factor equal to a power of p (the M_theta(p) block)."""
        for k, q in enumerate(self.factors):
            if q % p == 0:
                n = q
                while n % p == 0:
                    n //= p
                if n == 1:
                    return k
        raise NotEmbeddable(f"no M_(p^k) factor for p={p} in {self.factors}")


def truncate(sn: SupernaturalNumber, budget: int,
             factor_override=None) -> TruncatedUHF:
    """Deterministic finite stage of sn with total dimension <= budget.

    The factor list starts with one full M_theta(p) block per finite prime,
    then repeats the infinite-exponent primes round-robin (smallest first)
    while the budget allows.  ``factor_override`` bypasses the greedy rule.
    """
    if factor_override is not None:
        t = TruncatedUHF(tuple(factor_override))
        if t.dim > budget:
            raise BudgetTooSmall(
                f"override dimension {t.dim} exceeds budget {budget}")
        return t
    finite = sorted(prime_set_P(sn))
    factors = [theta(sn, p) for p in finite]
    d = math.prod(factors) if factors else 1
    if d > budget:
        raise BudgetTooSmall(
            f"the finite-prime blocks alone need dimension {d} > {budget}")
    infinite = sorted(p for p, e in sn.exponents.items() if e == INF)
    if not infinite and d < 2:
        raise BudgetTooSmall("nothing to truncate: empty factor list")
    progress = True
    while progress:
        progress = False
        for p in infinite:
            if d * p <= budget:
                factors.append(p)
                d *= p
                progress = True
    return TruncatedUHF(tuple(factors))


def embed_factor(local: np.ndarray, trunc: TruncatedUHF, k: int) -> np.ndarray:
    """Tensor embedding 1 x ... x local x ... x 1 into the full stage."""
    local = np.asarray(local, dtype=complex)
    if local.shape != (trunc.factors[k], trunc.factors[k]):
        raise DimMismatch(
            f"factor {k} has size {trunc.factors[k]}, got {local.shape}")
    left = math.prod(trunc.factors[:k]) if k else 1
    right = math.prod(trunc.factors[k + 1:]) if k + 1 < len(trunc.factors) else 1
    return np.kron(np.kron(np.eye(left), local), np.eye(right))


def embed_many(locals_: list, trunc: TruncatedUHF) -> np.ndarray:
    """Kronecker product of one local matrix per factor (None = identity)."""
    out = np.eye(1, dtype=complex)
    for k, q in enumerate(trunc.factors):
        m = locals_[k] if locals_[k] is not None else np.eye(q)
        if np.shape(m) != (q, q):
            raise DimMismatch(f"factor {k}: expected {q}x{q}, got {np.shape(m)}")
        out = np.kron(out, np.asarray(m, dtype=complex))
    return out


@dataclass(frozen=True)
class K0Value:
    """A tau-value numerator/denominator with the ambient stage recorded."""

    numerator: int
    denominator: int

    def __post_init__(self):
        if self.denominator <= 0:
            raise DimMismatch("denominator must be positive")

    @property
    def fraction(self) -> Fraction:
        return Fraction(self.numerator, self.denominator)

    def __add__(self, other: "K0Value") -> "K0Value":
        if self.denominator != other.denominator:
            raise DimMismatch("K0 values live at different stages")
        return K0Value(self.numerator + other.numerator, self.denominator)

    def __neg__(self) -> "K0Value":
        return K0Value(-self.numerator, self.denominator)

    def to_json(self) -> dict:
        return {"numerator": self.numerator, "denominator": self.denominator,
                "reduced": str(self.fraction)}


@dataclass(frozen=True)
class K0Residue:
    """Class in Z/theta(p)Z = K0(A)/K0(A cap A0')."""

    prime: int
    modulus: int
    value: int

    def __post_init__(self):
        if not (0 <= self.value < self.modulus):
            raise DimMismatch("residue out of range")

    def __add__(self, other: "K0Residue") -> "K0Residue":
        if (self.prime, self.modulus) != (other.prime, other.modulus):
            raise DimMismatch("residues with different moduli")
        return K0Residue(self.prime, self.modulus,
                         (self.value + other.value) % self.modulus)

    def __sub__(self, other: "K0Residue") -> "K0Residue":
        if (self.prime, self.modulus) != (other.prime, other.modulus):
            raise DimMismatch("residues with different moduli")
        return K0Residue(self.prime, self.modulus,
                         (self.value - other.value) % self.modulus)

    def to_json(self) -> dict:
        return {"prime": self.prime, "modulus": self.modulus,
                "value": self.value}


def k0_reduce(v: K0Value, trunc: TruncatedUHF, p: int,
              normalized: bool = False) -> K0Residue:
    """Image of a tau-value in ((1/d)Z)/((theta/d)Z) = Z/theta Z.

    ``normalized=True`` multiplies by the inverse of d/theta mod theta,
    which is the inclusion-compatible identification: it makes residues
    stable across truncation refinements (d/theta is a unit mod theta since
    every other factor is coprime to p).
    """
    d = trunc.dim
    th = _theta_of_stage(trunc, p)
    if v.denominator != d:
        raise NotEmbeddable(
            f"value lives at stage {v.denominator}, truncation has d={d}")
    val = v.numerator % th
    if normalized:
        val = (val * pow((d // th) % th, -1, th)) % th
    return K0Residue(p, th, val)


def _theta_of_stage(trunc: TruncatedUHF, p: int) -> int:
    if not _is_prime(p):
        raise NotPrime(f"{p} is not prime")
    k = trunc.theta_block(p)
    return trunc.factors[k]
