"""K-theoretic invariants and homotopy algorithms for Z^2-actions on
finite-dimensional UHF truncations.

The package models a UHF algebra by its supernatural number, works at a
finite tensor-product stage, and computes the Bott element of almost
commuting unitaries, the kappa obstruction of almost cocycles, the
de la Harpe-Skandalis determinant, the per-prime pairing invariant of a
pair of actions, Rohlin grid towers for product-type actions, constructive
cohomology vanishing, and desk-scale intertwining rounds.
"""

from .config import DEFAULT, Tolerances
from .uhf import (SupernaturalNumber, TruncatedUHF, K0Value, K0Residue,
                  zeta, prime_set_P, theta, truncate, embed_factor, k0_reduce)
from .linalg import (op_norm, normalized_trace, unitary_log, expm_sa,
                     polar_unitary, spectral_decomp, random_unitary,
                     matrix_to_json, matrix_from_json)
from .actions import (clock, shift, ProductAction, Cocycle, ModelSpec,
                      FactorGen, make_model_action, coboundary,
                      extend_cocycle, perturb, outerness_witness,
                      trivial_action)
from .paths import UnitaryPath
from .invariants import (winding_tau, bott, kappa_fast, kappa_loop,
                         delta_tau, pair_invariant, action_invariant,
                         admissible, KappaResult)
from .homotopy import (track_eigenvalues, short_path, super_homotopy,
                       lip_shrink_loop, boundary_map, disk_extension,
                       EigenPathBundle, BoundaryMap, DiskMap)
from .rohlin import RohlinTower, build_tower, verify_tower, vanish_cocycle
from .classify import invariants_equal, approximate_match, ek_rounds

__version__ = "0.1.0"
