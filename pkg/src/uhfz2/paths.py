"""Sampled paths of unitaries with tracked Lipschitz estimates."""

from __future__ import annotations

import numpy as np

from .config import DEFAULT, Tolerances
from .errors import DimMismatch, StepTooCoarse
from .linalg import (expm_sa, frob_norm, haar_interpolate, op_norm,
                     op_norm_fast, require_unitary, unitary_log)

__all__ = ["UnitaryPath"]

_SQRT2 = float(np.sqrt(2.0))


class UnitaryPath:
    """Ordered samples (t_k, U_k) over [0, 1].

    The adjacent-sample gap ||U_{k+1} U_k* - 1|| must stay below sqrt(2) so
    that the discrete winding of the path is well-defined.  ``lip_estimate``
    is the max over adjacent samples of ||U_{k+1} - U_k|| / (t_{k+1} - t_k).
    """

    def __init__(self, ts, mats, closed: bool = False,
                 tol: Tolerances = DEFAULT, check: bool = True):
        self.ts = np.asarray(ts, dtype=float)
        self.mats = [np.asarray(m, dtype=complex) for m in mats]
        self.closed = bool(closed)
        if check:
            self._validate(tol)
        self.lip_estimate = self._lip()

    def _validate(self, tol: Tolerances):
        if len(self.ts) != len(self.mats) or len(self.ts) < 1:
            raise DimMismatch("sample times and matrices do not match")
        if abs(self.ts[0]) > 1e-12 or abs(self.ts[-1] - 1.0) > 1e-12:
            raise DimMismatch("path parameter must run from 0 to 1")
        if np.any(np.diff(self.ts) <= 0):
            raise DimMismatch("sample times must be strictly increasing")
        d = self.mats[0].shape[0]
        eye = np.eye(d)
        for k, m in enumerate(self.mats):
            require_unitary(m, 1e-8, f"path sample {k}")
        for k in range(len(self.mats) - 1):
            step = self.mats[k + 1] @ self.mats[k].conj().T - eye
            # Frobenius bounds the operator norm; only near the threshold
            # is the exact norm needed
            gap = frob_norm(step)
            if gap >= _SQRT2:
                gap = op_norm(step)
            if gap >= _SQRT2:
                raise StepTooCoarse(
                    f"adjacent gap {gap:.3f} >= sqrt(2) at sample {k}")
        if self.closed:
            if op_norm(self.mats[-1] - self.mats[0]) > 1e-9:
                raise DimMismatch("closed path endpoints differ")

    def _lip(self) -> float:
        if len(self.mats) < 2:
            return 0.0
        return max(op_norm_fast(self.mats[k + 1] - self.mats[k]) /
                   (self.ts[k + 1] - self.ts[k])
                   for k in range(len(self.mats) - 1))

    # -- access --------------------------------------------------------------

    def __len__(self) -> int:
        return len(self.mats)

    @property
    def dim(self) -> int:
        return self.mats[0].shape[0]

    def eval(self, t: float) -> np.ndarray:
        """Geodesic interpolation between the bracketing samples."""
        t = float(np.clip(t, 0.0, 1.0))
        k = int(np.searchsorted(self.ts, t, side="right")) - 1
        k = max(0, min(k, len(self.mats) - 2)) if len(self.mats) > 1 else 0
        if len(self.mats) == 1:
            return self.mats[0]
        t0, t1 = self.ts[k], self.ts[k + 1]
        frac = (t - t0) / (t1 - t0)
        if frac <= 0:
            return self.mats[k]
        if frac >= 1:
            return self.mats[k + 1]
        return haar_interpolate(self.mats[k], self.mats[k + 1], frac)

    # -- constructors --------------------------------------------------------

    @classmethod
    def constant(cls, u: np.ndarray, samples: int = 2) -> "UnitaryPath":
        ts = np.linspace(0.0, 1.0, samples)
        return cls(ts, [u] * samples, closed=True)

    @classmethod
    def from_function(cls, fn, samples: int, closed: bool = False,
                      tol: Tolerances = DEFAULT) -> "UnitaryPath":
        ts = np.linspace(0.0, 1.0, samples)
        return cls(ts, [fn(t) for t in ts], closed=closed, tol=tol)

    @classmethod
    def exponential(cls, h: np.ndarray, samples: int = 33,
                    tol: Tolerances = DEFAULT) -> "UnitaryPath":
        """t -> exp(2*pi*i*t*h) from 1 to exp(2*pi*i*h).

        Validation is skipped: samples are unitary by construction and the
        adjacent gap is 2 sin(pi ||h|| / (samples - 1)) analytically.
        """
        ts = np.linspace(0.0, 1.0, samples)
        w, v = np.linalg.eigh(0.5 * (h + h.conj().T))
        hnorm = float(np.max(np.abs(w))) if len(w) else 0.0
        if samples > 1 and 2.0 * np.sin(
                min(np.pi * hnorm / (samples - 1), np.pi / 2)) >= _SQRT2:
            raise StepTooCoarse(
                f"{samples} samples too few for ||h|| = {hnorm:.3f}")
        mats = [(v * np.exp(2j * np.pi * t * w)) @ v.conj().T for t in ts]
        path = cls(ts, mats, check=False)
        path.lip_estimate = 2.0 * np.pi * hnorm
        return path

    # -- combinators ---------------------------------------------------------

    def reversed(self) -> "UnitaryPath":
        ts = 1.0 - self.ts[::-1]
        return UnitaryPath(ts, list(reversed(self.mats)), closed=self.closed,
                           check=False)

    def transform(self, fn) -> "UnitaryPath":
        """Apply a unitary-valued map samplewise (e.g. u * alpha(path))."""
        return UnitaryPath(self.ts, [fn(m) for m in self.mats],
                           closed=False, check=False)

    @staticmethod
    def concat(paths: list, weights=None, closed: bool = False,
               tol: Tolerances = DEFAULT) -> "UnitaryPath":
        """Join paths end to end, allocating parameter length by weight.

        Consecutive endpoints must agree within 1e-8; duplicate junction
        samples are merged.
        """
        if weights is None:
            weights = [max(p.ts[-1] - p.ts[0], 1e-9) *
                       max(p.lip_estimate, 1e-9) for p in paths]
        total = float(sum(weights))
        ts, mats = [], []
        t0 = 0.0
        for p, w in zip(paths, weights):
            span = w / total
            if mats and op_norm(mats[-1] - p.mats[0]) > 1e-8:
                raise DimMismatch("concatenated paths do not join")
            seg_ts = t0 + span * p.ts
            start = 1 if mats else 0
            ts.extend(seg_ts[start:])
            mats.extend(p.mats[start:])
            t0 += span
        ts = np.asarray(ts)
        ts[-1] = 1.0
        return UnitaryPath(ts, mats, closed=closed, tol=tol)

    def refined(self, factor: int = 2) -> "UnitaryPath":
        """Insert geodesic midpoints (factor - 1 per interval)."""
        ts, mats = [self.ts[0]], [self.mats[0]]
        for k in range(len(self.mats) - 1):
            for j in range(1, factor):
                f = j / factor
                t = self.ts[k] * (1 - f) + self.ts[k + 1] * f
                ts.append(t)
                mats.append(haar_interpolate(self.mats[k], self.mats[k + 1], f))
            ts.append(self.ts[k + 1])
            mats.append(self.mats[k + 1])
        return UnitaryPath(ts, mats, closed=self.closed, check=False)

    def length(self) -> float:
        """Sum of operator-norm jumps (lower bound on arc length)."""
        return float(sum(op_norm_fast(self.mats[k + 1] - self.mats[k])
                         for k in range(len(self.mats) - 1)))
