"""Exception hierarchy.

``MathObstruction`` subclasses are results, not failures: they report that an
input carries a genuine K-theoretic or spectral obstruction.  ``InputError``
subclasses indicate malformed or out-of-contract inputs.
"""


class UhfError(Exception):
    """Base class for all library errors."""


class InputError(UhfError):
    """Malformed input or violated precondition."""


class MathObstruction(UhfError):
    """A mathematically meaningful obstruction was detected."""


# --- input / precondition errors -------------------------------------------

class DimMismatch(InputError):
    pass


class NotPrime(InputError):
    pass


class InfiniteExponent(InputError):
    pass


class BudgetTooSmall(InputError):
    pass


class NotEmbeddable(InputError):
    pass


class Singular(InputError):
    pass


class NotACocycle(InputError):
    pass


class NotAlmostCocycle(InputError):
    pass


class SpecMismatch(InputError):
    pass


class StepTooCoarse(InputError):
    pass


class NoFreeTail(InputError):
    pass


class NoFreeFactors(InputError):
    pass


class TowerUnavailable(InputError):
    pass


class InvariantMismatch(InputError):
    pass


# --- mathematical obstructions ---------------------------------------------

class BranchCut(MathObstruction):
    """An eigenvalue sits on (or too near) the chosen logarithm branch cut."""


class NotOnLattice(MathObstruction):
    """A winding value failed to round onto the K0 lattice."""


class NotInteger(NotOnLattice):
    pass


class BottObstruction(MathObstruction):
    """A nonzero Bott element blocks the requested homotopy."""


class WindingObstruction(MathObstruction):
    """A tracked eigenvalue branch has nonzero winding."""


class AmbiguousMatching(MathObstruction):
    """Eigenvalue pairing is degenerate; refine the sample grid."""


class NotAdmissible(MathObstruction):
    """The cocycle has nonzero kappa and cannot be trivialized."""


class SynthesisFailure(MathObstruction):
    """Best-effort path synthesis could not meet the requested bounds."""

    def __init__(self, msg, best_commutator=None, best_lip=None):
        super().__init__(msg)
        self.best_commutator = best_commutator
        self.best_lip = best_lip


class CommutationFailure(MathObstruction):
    """A constructed path violates its commutation certificate."""


class CommutantDefect(MathObstruction):
    """Averaging into the commutant moved the map too far to polar-correct."""


class GuardViolated(MathObstruction):
    """An interpolation guard (e.g. log proximity) failed; refine grids."""


class AssemblyDefect(MathObstruction):
    """The assembled unitary exceeded the target error budget."""

    def __init__(self, msg, report=None):
        super().__init__(msg)
        self.report = report


class CorrectionFailure(MathObstruction):
    """No projection tower exists for the required kappa correction."""


class Stalled(MathObstruction):
    """An intertwining round failed to decrease defects."""
