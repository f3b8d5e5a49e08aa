"""Put a zero-winding loop of unitaries into exponential form.

A closed loop at the identity whose tracked eigenvalue branches all have
winding zero can be written as u(t) ~ exp(2 pi i h(t)) with an explicit
Lipschitz budget C' = 2CL/3 + C/6 for the self-adjoint family h.  Loops
with winding eigenvalue branches are rejected instead.
"""

import numpy as np

from uhfz2.errors import WindingObstruction
from uhfz2.homotopy import lip_shrink_loop
from uhfz2.linalg import expm_sa, op_norm, random_selfadjoint
from uhfz2.paths import UnitaryPath


def main():
    rng = np.random.default_rng(1)
    h0 = random_selfadjoint(6, rng, norm=0.2)
    w = expm_sa(random_selfadjoint(6, rng, norm=0.4))
    loop = UnitaryPath.from_function(
        lambda t: w @ expm_sa(float(np.sin(np.pi * t) ** 2) * h0)
        @ w.conj().T, samples=49, closed=True)
    print(f"input loop: dim {loop.dim}, Lip estimate C = "
          f"{loop.lip_estimate:.3f}")

    res = lip_shrink_loop(loop, eps=0.2)
    print(f"subdivision L          = {res.L}")
    print(f"Lipschitz budget C'    = {res.C_prime:.3f}")
    print(f"measured Lip(h)        = {res.h.lip_estimate:.3f}")
    print(f"max sample defect      = {res.max_defect:.5f}  (target 0.2)")
    mid = res.h.eval(0.5)
    print(f"spot check at t = 0.5  : "
          f"{op_norm(loop.eval(0.5) - expm_sa(mid)):.5f}")

    winding = UnitaryPath.from_function(
        lambda t: np.diag(np.exp(2j * np.pi * np.array([t, -t, 0.0, 0.0]))),
        samples=129, closed=True)
    try:
        lip_shrink_loop(winding, eps=0.2)
    except WindingObstruction as exc:
        print(f"\nwinding loop rejected as expected: {exc}")


if __name__ == "__main__":
    main()
