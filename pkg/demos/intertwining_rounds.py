"""Alternating intertwining rounds between an action and its perturbation.

Starting from a model action and a coboundary perturbation of it, each
round matches the current source to the current target, perturbs the
source by the returned coboundary, and swaps roles.  The transcript shows
the measured defect on the scheduled finite set shrinking round by round.
"""

import numpy as np

from uhfz2.actions import ModelSpec, coboundary, make_model_action, perturb
from uhfz2.classify import ek_rounds
from uhfz2.linalg import expm_sa, random_selfadjoint
from uhfz2.uhf import SupernaturalNumber, embed_factor, truncate


def main():
    tr = truncate(SupernaturalNumber({2: 1, 3: "inf"}), budget=54)
    act = make_model_action(ModelSpec.balanced(tr, {}), tr)
    rng = np.random.default_rng(3)
    v0 = embed_factor(expm_sa(random_selfadjoint(3, rng, norm=0.04)), tr, 1)
    beta = perturb(act, coboundary(v0, act))
    F = [embed_factor(random_selfadjoint(2, rng), tr, 0)]

    out = ek_rounds(act, beta, rounds=3, F_schedule=F)
    print(f"stage dim = {tr.dim}, rounds = 3")
    for entry in out["rounds"]:
        print(f"  round {entry['round']}: defect = "
              f"{entry['matcher_defect']:.2e}, kappa corrections = "
              f"{entry['kappa_corrections']}, "
              f"wall time = {entry['wall_time']:.2f}s")
    print(f"final defect = {out['final_defect']:.2e}, "
          f"monotone = {out['monotone']}")


if __name__ == "__main__":
    main()
