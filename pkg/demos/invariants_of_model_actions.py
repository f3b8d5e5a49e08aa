"""Build clock/shift model actions and read off their per-prime invariants.

The truncation of 2 * 3 * 5^inf at budget 750 keeps one theta-block per
finite prime, so the residues f(2) in Z/2 and f(3) in Z/3 used to build the
model action come back exactly from the K-theoretic invariant.
"""

import numpy as np

from uhfz2.actions import ModelSpec, make_model_action
from uhfz2.classify import invariants_equal
from uhfz2.invariants import action_invariant
from uhfz2.uhf import SupernaturalNumber, truncate


def main():
    sn = SupernaturalNumber({2: 1, 3: 1, 5: "inf"})
    tr = truncate(sn, budget=750)
    print(f"truncation factors: {tr.factors}, dim = {tr.dim}")

    print("\nlabel (f(2), f(3)) -> recovered invariant")
    actions = {}
    for f2 in range(2):
        for f3 in range(3):
            act = make_model_action(ModelSpec.balanced(tr, {2: f2, 3: f3}),
                                    tr)
            actions[(f2, f3)] = act
            inv = action_invariant(act, primes=(2, 3))
            got = (inv[2].value, inv[3].value)
            print(f"  ({f2}, {f3}) -> {got}"
                  f"  {'ok' if got == (f2, f3) else 'MISMATCH'}")

    print("\npairwise comparison of (1, 2) against (1, 0):")
    rep = invariants_equal(actions[(1, 2)], actions[(1, 0)], primes=(2, 3))
    for p, entry in rep["per_prime"].items():
        print(f"  p = {p}: {entry['alpha']} vs {entry['beta']} "
              f"(mod {entry['modulus']}), equal = {entry['equal']}")
    print(f"  overall equal: {rep['equal']}")


if __name__ == "__main__":
    main()
