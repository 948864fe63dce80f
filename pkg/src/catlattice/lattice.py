"""Periodic lattice geometry and states.

Sites live on the cube of side 2N+1 in Z^d with periodic wrap.  States are
numpy arrays of shape (nsites, 2) holding angle pairs in [0, 2*pi), with sites
enumerated row-major over the d axes: the site with displacement vector
(x_1, ..., x_d), x_i in [-N, N], has flat index
sum_i (x_i mod (2N+1)) * (2N+1)^(d-i).  This bijection is the on-disk order of
persisted orbits.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .catmap import TWO_PI


@dataclass(frozen=True)
class LatticeGeometry:
    d: int
    N: int

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("spatial dimension d must be >= 1")
        if self.N < 0:
            raise ValueError("half-side N must be >= 0")

    @property
    def side(self) -> int:
        return 2 * self.N + 1

    @property
    def nsites(self) -> int:
        return self.side ** self.d

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.side,) * self.d

    def site_index(self, offset) -> int:
        """Flat index of the site displaced by `offset` (tuple of d ints) from site 0."""
        idx = 0
        for x in offset:
            idx = idx * self.side + (int(x) % self.side)
        return idx

    def site_offset(self, index: int) -> tuple[int, ...]:
        """Inverse of site_index, with coordinates reduced to [-N, N]."""
        coords = []
        for _ in range(self.d):
            index, r = divmod(index, self.side)
            coords.append(r if r <= self.N else r - self.side)
        return tuple(reversed(coords))

    def nn_offsets(self) -> list[tuple[int, ...]]:
        """Offsets eta with |eta|_1 <= 1: the origin plus 2d axis neighbors."""
        offs = [tuple([0] * self.d)]
        for axis in range(self.d):
            for s in (1, -1):
                o = [0] * self.d
                o[axis] = s
                offs.append(tuple(o))
        return offs

    def ball_offsets(self, radius: int) -> list[tuple[int, ...]]:
        """All offsets with |.|_1 <= radius (not reduced mod the torus)."""
        out = []
        for o in itertools.product(range(-radius, radius + 1), repeat=self.d):
            if sum(abs(x) for x in o) <= radius:
                out.append(o)
        return out

    def roll(self, field: np.ndarray, offset, axis0: int = -1) -> np.ndarray:
        """Translate a per-site field so entry xi picks up the value at xi+offset.

        `field` has a flattened site axis; `axis0` locates it.  Works for any
        trailing/leading extra axes.
        """
        axis0 = axis0 % field.ndim
        shaped = field.reshape(field.shape[:axis0] + self.shape + field.shape[axis0 + 1:])
        for ax, x in enumerate(offset):
            if x:
                shaped = np.roll(shaped, -int(x), axis=axis0 + ax)
        return shaped.reshape(field.shape)

    def translate_state(self, psi: np.ndarray, offset) -> np.ndarray:
        """(rho^xi psi)_eta = psi_{eta+xi}: translate the whole state by `offset`."""
        return self.roll(psi, offset, axis0=0)


def random_state(geom: LatticeGeometry, rng) -> np.ndarray:
    return rng.uniform(0.0, TWO_PI, size=(geom.nsites, 2))


def uniform_state(geom: LatticeGeometry, angles) -> np.ndarray:
    return np.tile(np.asarray(angles, dtype=float) % TWO_PI, (geom.nsites, 1))


def torus_dist(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Flat distance on [0,2*pi)^2 per site: Euclidean length of the wrapped gap."""
    delta = np.mod(np.asarray(a) - np.asarray(b) + np.pi, TWO_PI) - np.pi
    return np.sqrt(np.sum(delta * delta, axis=-1))


def state_metric(geom: LatticeGeometry, psi: np.ndarray, phi: np.ndarray) -> float:
    """Weighted metric d(psi, phi) = sum_xi 2^{-|xi|} dhat(psi_xi, phi_xi)."""
    per_site = torus_dist(psi, phi)
    w = np.empty(geom.nsites)
    for i in range(geom.nsites):
        off = geom.site_offset(i)
        w[i] = 2.0 ** (-sum(abs(x) for x in off))
    return float(np.sum(w * per_site))
