"""Dense complex-matrix calculus on a finite matrix algebra.

All elements are square complex ``numpy`` arrays.  Unitaries, self-adjoints
and projections are validated against the tolerances in
:mod:`uhfz2.config`; the heavier operations (logarithm, polar part,
spectral decomposition) report their achieved residuals through return
values that the caller can audit.

Conventions: the exponential/logarithm pair is normalized as
``U = exp(2*pi*i*h)`` with the eigenvalue phases of ``h`` placed in
(-1/2, 1/2].  ``tau`` denotes the normalized trace Tr/dim.
"""

from __future__ import annotations

import math

import numpy as np

from .config import DEFAULT, Tolerances
from .errors import BranchCut, DimMismatch, Singular

__all__ = [
    "check_square",
    "is_unitary",
    "is_selfadjoint",
    "is_projection",
    "require_unitary",
    "op_norm",
    "normalized_trace",
    "unitary_log",
    "expm_sa",
    "polar_unitary",
    "spectral_decomp",
    "random_unitary",
    "random_selfadjoint",
    "haar_interpolate",
    "matrix_to_json",
    "matrix_from_json",
]


def check_square(m: np.ndarray) -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimMismatch(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise DimMismatch("matrix has non-finite entries")
    return m


def op_norm(m: np.ndarray) -> float:
    """Operator norm (largest singular value)."""
    return float(np.linalg.norm(np.asarray(m, dtype=complex), 2))


def op_norm_fast(m: np.ndarray, iters: int = 12) -> float:
    """Power-iteration estimate of the operator norm.

    Deterministic start vector; converges to the top singular value from
    below, typically within 1e-3 relative after a dozen iterations.  Used
    for Lipschitz scans where an estimate suffices; hard guards use the
    exact norm.
    """
    m = np.asarray(m, dtype=complex)
    n = m.shape[1]
    v = np.ones(n) + np.linspace(0.0, 0.5, n)
    v /= np.linalg.norm(v)
    s = 0.0
    for _ in range(iters):
        w = m.conj().T @ (m @ v)
        s = float(np.linalg.norm(w))
        if s < 1e-300:
            return 0.0
        v = w / s
    return math.sqrt(s)


def frob_norm(m: np.ndarray) -> float:
    """Frobenius norm: a cheap upper bound for the operator norm."""
    return float(np.linalg.norm(m))


def normalized_trace(m: np.ndarray) -> complex:
    """tau(m) = Tr(m) / dim."""
    m = check_square(m)
    return complex(np.trace(m)) / m.shape[0]


def is_unitary(m: np.ndarray, tol: float = DEFAULT.unitarity_tol) -> bool:
    m = check_square(m)
    return op_norm(m @ m.conj().T - np.eye(m.shape[0])) <= tol


def is_selfadjoint(m: np.ndarray, tol: float = DEFAULT.unitarity_tol) -> bool:
    m = check_square(m)
    return op_norm(m - m.conj().T) <= tol


def is_projection(m: np.ndarray, tol: float = DEFAULT.unitarity_tol) -> bool:
    m = check_square(m)
    return (op_norm(m @ m - m) <= tol) and (op_norm(m - m.conj().T) <= tol)


def require_unitary(m: np.ndarray, tol: float = DEFAULT.unitarity_tol,
                    what: str = "matrix") -> np.ndarray:
    m = check_square(m)
    gram = m @ m.conj().T - np.eye(m.shape[0])
    # Frobenius bounds the operator norm from above; fall back to the
    # exact norm only when the cheap bound is inconclusive
    if frob_norm(gram) <= tol:
        return m
    resid = op_norm(gram)
    if resid > tol:
        raise DimMismatch(f"{what} is not unitary: residual {resid:.3e}")
    return m


def _unitary_eig(u: np.ndarray):
    """Eigen-decomposition of a unitary via the complex Schur form.

    Returns (phases, vectors) where phases are in (-1/2, 1/2] turns and the
    vector columns are orthonormal.  The Schur basis of a normal matrix is
    an eigenbasis up to rounding.
    """
    from scipy.linalg import schur

    t, q = schur(u, output="complex")
    lam = np.diag(t)
    phases = np.angle(lam) / (2.0 * np.pi)
    return phases, q


def unitary_log(u: np.ndarray, rotation: float = 0.0,
                tol: Tolerances = DEFAULT) -> np.ndarray:
    """Self-adjoint h with u = exp(2*pi*i*h), phases in (-1/2, 1/2].

    ``rotation`` moves the branch cut: phases are taken in
    (rotation - 1/2, rotation + 1/2].  Raises :class:`BranchCut` when an
    eigenvalue lies within ``branch_guard`` of the cut.
    """
    u = require_unitary(u, tol.unitarity_tol, "log argument")
    phases, q = _unitary_eig(u)
    # distance from the cut at phase rotation + 1/2 (i.e. -1 for rotation=0)
    shifted = np.mod(phases - rotation + 0.5, 1.0) - 0.5
    cut_dist = np.min(0.5 - np.abs(shifted))
    if 2.0 * np.pi * cut_dist < tol.branch_guard:
        raise BranchCut(
            f"eigenvalue within {tol.branch_guard:g} of the branch cut "
            f"(rotation={rotation:g}); supply a different rotation")
    h = (q * (shifted + rotation)) @ q.conj().T
    return 0.5 * (h + h.conj().T)


def expm_sa(h: np.ndarray, tol: Tolerances = DEFAULT) -> np.ndarray:
    """exp(2*pi*i*h) for self-adjoint h."""
    h = check_square(h)
    if not is_selfadjoint(h, 1e-8):
        raise DimMismatch("expm_sa expects a self-adjoint argument")
    w, v = np.linalg.eigh(h)
    return (v * np.exp(2j * np.pi * w)) @ v.conj().T


def polar_unitary(m: np.ndarray, tol: Tolerances = DEFAULT) -> np.ndarray:
    """Unitary part W = M (M*M)^(-1/2); the nearest unitary to M."""
    m = check_square(m)
    # the default gesdd driver occasionally fails to converge or returns
    # inaccurate factors; verify and retry with the QR-based gesvd
    try:
        u, s, vh = np.linalg.svd(m)
        w = u @ vh
        bad = frob_norm(w @ w.conj().T - np.eye(m.shape[0])) > 1e-8
    except np.linalg.LinAlgError:
        bad = True
    if bad:
        from scipy.linalg import svd as _svd
        u, s, vh = _svd(m, lapack_driver="gesvd")
        w = u @ vh
    if s[-1] <= tol.singular_tol:
        raise Singular(f"smallest singular value {s[-1]:.3e} below threshold")
    return w


def spectral_decomp(u: np.ndarray, cluster_tol: float | None = None,
                    tol: Tolerances = DEFAULT):
    """Clustered spectral decomposition of a unitary.

    Returns a list of ``(eigenvalue, projection)`` pairs where eigenvalues
    on the circle closer than ``cluster_tol`` (circular phase gap) are merged
    and each projection is the orthogonal projection onto the cluster's
    eigenspace.  Projections sum to the identity.
    """
    if cluster_tol is None:
        cluster_tol = tol.cluster_tol
    u = require_unitary(u, tol.unitarity_tol, "spectral_decomp argument")
    phases, q = _unitary_eig(u)
    n = len(phases)
    order = np.argsort(phases)
    ph = phases[order]
    # circular gaps between consecutive sorted phases (in radians on circle)
    gaps = np.diff(ph, append=ph[0] + 1.0)
    chord = 2.0 * np.sin(np.pi * np.minimum(gaps, 1.0 - gaps).clip(min=0))
    breaks = [i for i in range(n) if chord[i] >= cluster_tol]
    if not breaks:
        # single cluster covering the whole spectrum
        groups = [list(range(n))]
    else:
        groups = []
        start = breaks[-1] + 1  # first index after the last break, wrapping
        idx = [(start + k) % n for k in range(n)]
        cur = []
        for i in idx:
            cur.append(i)
            if i in breaks:
                groups.append(cur)
                cur = []
        if cur:
            groups.append(cur)
    out = []
    for g in groups:
        cols = q[:, order[g]]
        # re-orthonormalize inside the cluster; rounding may mix members
        cols, _ = np.linalg.qr(cols)
        proj = cols @ cols.conj().T
        lam = np.exp(2j * np.pi * np.mean(_circular_mean_phases(ph[g])))
        out.append((complex(lam), 0.5 * (proj + proj.conj().T)))
    return out


def _circular_mean_phases(ph: np.ndarray) -> np.ndarray:
    """Mean of phases (in turns) that are already clustered on the circle."""
    ref = ph[0]
    lifted = ref + np.mod(ph - ref + 0.5, 1.0) - 0.5
    return np.mean(lifted, keepdims=True)


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed unitary (QR of a Ginibre matrix)."""
    z = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_selfadjoint(dim: int, rng: np.random.Generator,
                       norm: float = 1.0) -> np.ndarray:
    z = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    h = 0.5 * (z + z.conj().T)
    return h * (norm / max(op_norm(h), 1e-300))


def haar_interpolate(u0: np.ndarray, u1: np.ndarray, t: float,
                     tol: Tolerances = DEFAULT) -> np.ndarray:
    """Geodesic interpolation exp(t log(u1 u0*)) u0 between nearby unitaries."""
    step = unitary_log(u1 @ u0.conj().T, tol=tol)
    return expm_sa(t * step, tol) @ u0


# --- JSON matrix format -----------------------------------------------------

def matrix_to_json(m: np.ndarray) -> dict:
    """{"dim": d, "re": [[...]], "im": [[...]]}, row-major."""
    m = check_square(m)
    return {
        "dim": int(m.shape[0]),
        "re": np.real(m).tolist(),
        "im": np.imag(m).tolist(),
    }


def matrix_from_json(obj: dict) -> np.ndarray:
    d = int(obj["dim"])
    re = np.asarray(obj["re"], dtype=float)
    im = np.asarray(obj["im"], dtype=float)
    if re.shape != (d, d) or im.shape != (d, d):
        raise DimMismatch(f"matrix JSON arrays do not match dim={d}")
    return re + 1j * im
