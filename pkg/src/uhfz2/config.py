"""Numerical tolerances and algorithm knobs, collected in one record.

Every operation in the library reads its thresholds from a ``Tolerances``
instance so that the error bookkeeping is auditable and reproducible.  The
defaults are the documented contract; callers may tighten or loosen them per
computation.
"""

from dataclasses import dataclass, field, asdict


@dataclass(frozen=True)
class Tolerances:
    #: admissible residual for U U* - 1, H - H*, P^2 - P checks
    unitarity_tol: float = 1e-10
    #: reject principal logarithms with an eigenvalue this close to -1
    branch_guard: float = 1e-8
    #: eigenvalue phases closer than this are merged into one cluster
    cluster_tol: float = 1e-8
    #: smallest singular value accepted by the polar decomposition
    singular_tol: float = 1e-12
    #: hard bound on |raw value - nearest lattice point| for K0 rounding
    lattice_tol: float = 1e-6
    #: tolerance for exact algebraic identities (cocycle defects etc.)
    exact_tol: float = 1e-9
    #: eigenvalue-tracking assignment tie threshold
    matching_tol: float = 1e-10
    #: commutation certificate threshold used by the pairing invariant
    delta0: float = 1.0 / 16.0
    #: minimum boundary-map samples per side of the square
    boundary_samples: int = 64
    #: cap on the subdivision count L used by the loop-shrinking algorithm
    max_subdivision: int = 256
    #: orientation sign fixed once so that model actions reproduce their label
    pairing_sign: int = -1

    def commutator_delta(self, eps: float) -> float:
        """Margin delta(eps) used by the commuting-path synthesis.

        The underlying existence result does not quantify delta; we use a
        fixed linear map and verify every output a posteriori.
        """
        return eps / 8.0

    def as_dict(self) -> dict:
        return asdict(self)


DEFAULT = Tolerances()
