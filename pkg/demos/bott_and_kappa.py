"""Integer obstructions for almost commuting unitaries and almost cocycles.

The clock/shift pair at size q has Bott element 1 for every q with the
commutator staying below 2 in norm.  For an almost cocycle the kappa
invariant obeys the arcsine trace bound, is zero exactly on perturbed
coboundaries, and scales multiplicatively under cocycle powers.
"""

import numpy as np

from uhfz2.actions import ModelSpec, clock, coboundary, make_model_action, shift
from uhfz2.invariants import bott, cocycle_power, kappa_fast
from uhfz2.linalg import expm_sa, op_norm, random_selfadjoint
from uhfz2.uhf import SupernaturalNumber, embed_factor, truncate


def main():
    print("Bott element of the clock/shift pair:")
    for q in (5, 7, 9, 11):
        v, w = clock(q), shift(q)
        comm = op_norm(v @ w @ v.conj().T @ w.conj().T - np.eye(q))
        print(f"  q = {q:2d}: bott = {bott(v, w)}, "
              f"commutator norm = {comm:.4f}")

    tr = truncate(SupernaturalNumber({2: 1, 3: "inf"}), budget=18)
    act = make_model_action(ModelSpec.balanced(tr, {}), tr)
    rng = np.random.default_rng(0)
    v0 = embed_factor(expm_sa(random_selfadjoint(2, rng, norm=0.15)), tr, 0)
    c = coboundary(v0, act)

    e = expm_sa(random_selfadjoint(tr.dim, rng, norm=0.04))
    u1 = e @ c.u1
    defect = op_norm(u1 @ act.apply1(c.u2) - c.u2 @ act.apply2(u1))
    k = kappa_fast(u1, c.u2, act)
    bound = np.arcsin(defect) / (2 * np.pi)
    print(f"\nperturbed coboundary on a dim-{tr.dim} stage:")
    print(f"  cocycle defect        = {defect:.4f}")
    print(f"  kappa (integer form)  = {k.integer_form}")
    print(f"  |tau(kappa)|          = "
          f"{abs(k.value.numerator / k.value.denominator):.6f}")
    print(f"  arcsine trace bound   = {bound:.6f}")

    print("\ncocycle powers multiply kappa exactly:")
    base = kappa_fast(c.u1, c.u2, act).integer_form
    for m, n in ((2, 2), (2, 3), (3, 3)):
        u1m, u2n, power, worst = cocycle_power(c, act, m, n)
        kp = kappa_fast(u1m, u2n, power).integer_form
        print(f"  (m, n) = ({m}, {n}): kappa = {kp} "
              f"(= {m}*{n}*{base}), intermediate defect {worst:.4f}")


if __name__ == "__main__":
    main()
