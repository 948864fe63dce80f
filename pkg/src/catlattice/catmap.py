"""Hyperbolic torus automorphisms and the sitewise base dynamics.

The base map acts on angle pairs in [0, 2*pi)^2 as p -> M p (mod 2*pi) for an
integer matrix M with det M = 1 and |tr M| > 2.  The default is the golden cat
map [[1, 1], [1, 2]].  Eigenvectors are normalized to unit length with a
positive first component; `lam_minus` (< 1) is the contraction rate that drives
every geometric sum downstream.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

TWO_PI = 2.0 * np.pi

DEFAULT_MATRIX = np.array([[1, 1], [1, 2]], dtype=np.int64)


@dataclass(frozen=True)
class CatMap:
    """A hyperbolic automorphism of the 2-torus with its eigendata."""

    matrix: np.ndarray = field(default_factory=lambda: DEFAULT_MATRIX.copy())

    def __post_init__(self):
        m = np.asarray(self.matrix)
        if m.shape != (2, 2) or not np.all(m == np.round(m)):
            raise ValueError("cat map matrix must be an integer 2x2 matrix")
        m = m.astype(np.int64)
        det = int(m[0, 0]) * int(m[1, 1]) - int(m[0, 1]) * int(m[1, 0])
        if det != 1:
            raise ValueError(f"cat map matrix must have det 1, got {det}")
        if abs(int(m.trace())) <= 2:
            raise ValueError("cat map matrix must be hyperbolic: |trace| > 2")
        object.__setattr__(self, "matrix", m)

    @property
    def lam_plus(self) -> float:
        tr = float(self.matrix.trace())
        return 0.5 * (tr + np.sqrt(tr * tr - 4.0))

    @property
    def lam_minus(self) -> float:
        tr = float(self.matrix.trace())
        return 0.5 * (tr - np.sqrt(tr * tr - 4.0))

    def _eigvec(self, lam: float) -> np.ndarray:
        m = self.matrix.astype(float)
        # (m - lam I) v = 0; pick the numerically larger row for stability.
        a, b = m[0, 0] - lam, m[0, 1]
        c, d = m[1, 0], m[1, 1] - lam
        v = np.array([-b, a]) if abs(a) + abs(b) >= abs(c) + abs(d) else np.array([-d, c])
        v = v / np.linalg.norm(v)
        if v[0] < 0 or (v[0] == 0 and v[1] < 0):
            v = -v
        return v

    @property
    def v_plus(self) -> np.ndarray:
        return self._eigvec(self.lam_plus)

    @property
    def v_minus(self) -> np.ndarray:
        return self._eigvec(self.lam_minus)

    def apply(self, p: np.ndarray) -> np.ndarray:
        """Sitewise action M p mod 2*pi; `p` has shape (..., 2)."""
        p = np.asarray(p, dtype=float)
        return np.mod(p @ self.matrix.T.astype(float), TWO_PI)

    def apply_inverse(self, p: np.ndarray) -> np.ndarray:
        inv = np.array([[self.matrix[1, 1], -self.matrix[0, 1]],
                        [-self.matrix[1, 0], self.matrix[0, 0]]], dtype=float)
        return np.mod(np.asarray(p, dtype=float) @ inv.T, TWO_PI)

    def to_wbasis(self, vec: np.ndarray) -> np.ndarray:
        """Coefficients (c_plus, c_minus) of tangent vectors in the (v+, v-) basis.

        `vec` has shape (..., 2) in site coordinates; returns the same shape with
        the last axis holding (+, -) coefficients.
        """
        basis = np.column_stack([self.v_plus, self.v_minus])
        return np.asarray(vec, dtype=float) @ np.linalg.inv(basis).T

    def from_wbasis(self, coef: np.ndarray) -> np.ndarray:
        basis = np.column_stack([self.v_plus, self.v_minus])
        return np.asarray(coef, dtype=float) @ basis.T


def apply_s0(p, cat: CatMap | None = None):
    """One step of the uncoupled base map on a single torus point."""
    cat = cat or CatMap()
    return cat.apply(p)
