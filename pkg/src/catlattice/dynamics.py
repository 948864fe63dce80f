"""The coupled lattice map S_eps, its differential, and orbit iteration."""

from __future__ import annotations

import numpy as np

from .catmap import CatMap, TWO_PI
from .coupling import Coupling
from .lattice import LatticeGeometry


def apply_S_eps(geom: LatticeGeometry, coupling: Coupling, psi: np.ndarray,
                eps: float) -> np.ndarray:
    """One step of the coupled dynamics: per site s0(psi_xi) + eps g(rho^xi psi)."""
    cat = coupling.cat
    out = psi @ cat.matrix.T.astype(float)
    if eps != 0.0 and coupling.terms:
        out = out + eps * coupling.g_field(geom, psi)
    return np.mod(out, TWO_PI)


def differential_DS_eps(geom: LatticeGeometry, coupling: Coupling, psi: np.ndarray,
                        eps: float) -> np.ndarray:
    """Dense Jacobian of apply_S_eps, shape (..., 2n, 2n), site-major blocks.

    Block (xi, eta) is A delta_{xi,eta} + eps dg/dpsi_eta; off-band blocks are
    exactly zero.  Dense storage is deliberate: desk-scale lattices are tiny
    and batched determinants want contiguous arrays.
    """
    n = geom.nsites
    lead = psi.shape[:-2]
    J = np.zeros(lead + (2 * n, 2 * n))
    A = coupling.cat.matrix.astype(float)
    for i in range(n):
        J[..., 2 * i:2 * i + 2, 2 * i:2 * i + 2] = A
    if eps != 0.0 and coupling.terms:
        for off, blocks in coupling.jacobian_offsets(geom, psi):
            for i in range(n):
                j = geom.site_index(np.array(geom.site_offset(i)) + np.array(off))
                J[..., 2 * i:2 * i + 2, 2 * j:2 * j + 2] += eps * blocks[..., i, :, :]
    return J


def iterate_orbit(geom: LatticeGeometry, coupling: Coupling, psi0: np.ndarray,
                  eps: float, nsteps: int) -> np.ndarray:
    """Forward orbit [psi0, S psi0, ..., S^nsteps psi0], shape (nsteps+1, n, 2)."""
    out = np.empty((nsteps + 1,) + psi0.shape)
    out[0] = psi0
    for t in range(nsteps):
        out[t + 1] = apply_S_eps(geom, coupling, out[t], eps)
    return out


def s0_orbit(geom: LatticeGeometry, cat: CatMap, psi0: np.ndarray,
             t_min: int, t_max: int) -> np.ndarray:
    """Uncoupled orbit S_0^t psi0 for t in [t_min, t_max], iterated stepwise.

    Stepwise iteration keeps every entry in [0, 2*pi); matrix powers would
    overflow long before the horizons used by the expansions.
    """
    T = t_max - t_min + 1
    out = np.empty((T,) + psi0.shape)
    i0 = -t_min
    out[i0] = psi0
    for t in range(i0 + 1, T):
        out[t] = cat.apply(out[t - 1])
    for t in range(i0 - 1, -1, -1):
        out[t] = cat.apply_inverse(out[t + 1])
    return out


def log_det_DS(geom: LatticeGeometry, coupling: Coupling, states: np.ndarray,
               eps: float, sites: list[int] | None = None) -> np.ndarray:
    """log |det (DS_eps)_{V0}| for a batch of states, V0-minor on both components.

    `states` has shape (..., n, 2); `sites` selects the minor (default: all).
    Raises FloatingPointError if a minor is singular to machine precision.
    """
    J = differential_DS_eps(geom, coupling, states, eps)
    if sites is not None:
        rows = np.array([[2 * s, 2 * s + 1] for s in sites]).ravel()
        J = J[..., rows[:, None], rows[None, :]]
    sign, logdet = np.linalg.slogdet(J)
    if np.any(sign == 0):
        raise FloatingPointError("singular minor in log_det_DS")
    return logdet
