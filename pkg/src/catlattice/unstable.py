"""Unstable-frame corrections, Lyapunov matrix, and log-expansion rates.

The unstable basis transported by the coupled differential is written as the
uncoupled one plus corrections dV (gauge-fixed so the expanding components
vanish identically), with growth matrix L = lam^{-1} Id + dL.  Both admit
order-by-order recursions driven by the conjugation coefficients; the diagonal
log-expansion Lambda^xi = log(lam_plus) + dLambda^xi follows from the matrix
logarithm expanded consistently in the total order.

A nonperturbative cross-check pushes an explicit frame along an orbit with
modified Gram-Schmidt re-orthonormalization every step.
"""

from __future__ import annotations

import itertools
from math import factorial

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .conjugation import ExpansionOrder, OrbitExpansion
from .coupling import Coupling, PLUS, MINUS
from .dynamics import differential_DS_eps
from .lattice import LatticeGeometry


class DegenerateFrame(Exception):
    """The orbit frame lost rank: eps too large for hyperbolicity."""


def _compositions(total: int, s: int):
    return [c for c in itertools.product(range(1, total + 1), repeat=s)
            if sum(c) == total]


class FrameExpansion:
    """dL_(k), dV_(k), dLambda_(k) fields along an uncoupled orbit.

    Shares the orbit and dh caches of an OrbitExpansion; all fields are arrays
    (T, n, n) (or (T, n) for dLambda) over the orbit time axis.
    """

    def __init__(self, geom: LatticeGeometry, coupling: Coupling, psi0: np.ndarray,
                 order: ExpansionOrder, window: tuple[int, int] = (0, 0)):
        self.ex = OrbitExpansion(geom, coupling, psi0, order, window)
        self.geom = geom
        self.coupling = coupling
        self.order = order
        self.lam = coupling.cat.lam_minus
        self._dL: dict[int, np.ndarray] = {}
        self._dV: dict[int, np.ndarray] = {}
        self._slots = self.ex._slot_choices
        self._nn = [tuple(o) for o in geom.nn_offsets()]

    @property
    def i0(self):
        return self.ex.i0

    # -- helpers --------------------------------------------------------------
    def _band(self, values: np.ndarray, off) -> np.ndarray:
        """Matrix field M[t, xi, xi+off] = values[t, xi], zero elsewhere."""
        T, n = values.shape
        M = np.zeros((T, n, n))
        idx = np.arange(n)
        jdx = np.array([self.geom.site_index(np.array(self.geom.site_offset(i))
                                             + np.array(off)) for i in idx])
        M[:, idx, jdx] = values
        return M

    def _dh_product(self, slots, comp) -> np.ndarray:
        prod = np.ones(self.ex.orbit.shape[:2])
        for (off, a), ki in zip(slots, comp):
            prod = prod * self.geom.roll(self.ex.delta_h(ki)[..., a], off)
        return prod

    def _roll_axis(self, M: np.ndarray, off, axis: int) -> np.ndarray:
        return self.geom.roll(M, off, axis0=axis)

    # -- dL -------------------------------------------------------------------
    def delta_L(self, k: int) -> np.ndarray:
        if k in self._dL:
            return self._dL[k]
        ex, geom = self.ex, self.geom
        T, n = ex.orbit.shape[:2]
        out = np.zeros((T, n, n))
        if k == 1:
            for off in self._nn:
                out += self._band(ex.pattern(PLUS, ((off, PLUS),)), off)
        else:
            m = k - 1  # inner total order
            # derivative patterns against dh products
            for s in range(1, m + 1):
                for comp in _compositions(m, s):
                    for slots in itertools.product(self._slots, repeat=s):
                        prods = None
                        for off in self._nn:
                            pat = ex.pattern(PLUS, ((off, PLUS),) + slots)
                            if not np.any(pat):
                                continue
                            if prods is None:
                                prods = self._dh_product(slots, comp)
                            out += self._band(pat * prods / factorial(s), off)
            # dV term: f^{xi+, eta-} against dV_(k1), extra slots against dh
            for s in range(1, m + 1):
                for comp in _compositions(m, s):
                    k1, rest = comp[0], comp[1:]
                    for slots in itertools.product(self._slots, repeat=s - 1):
                        dV1 = self.delta_V(k1)
                        for off in self._nn:
                            pat = ex.pattern(PLUS, ((off, MINUS),) + slots)
                            if not np.any(pat):
                                continue
                            w = pat * self._dh_product(slots, rest) / factorial(s - 1)
                            out += w[:, :, None] * self._roll_axis(dV1, off, 1)
        self._dL[k] = out
        return out

    # -- dV -------------------------------------------------------------------
    def delta_V(self, k: int) -> np.ndarray:
        """dV_(k)[t, xi, rho]: the contracting component of the rho-th frame vector."""
        if k in self._dV:
            return self._dV[k]
        ex, geom = self.ex, self.geom
        T, n = ex.orbit.shape[:2]
        lam, P = self.lam, self.order.P_max
        if k == 1:
            integrand = np.zeros((T, n, n))
            for off in self._nn:
                integrand += self._band(ex.pattern(MINUS, ((off, PLUS),)), off)
        else:
            m = k - 1
            integrand = np.zeros((T, n, n))
            for s in range(1, m + 1):
                for comp in _compositions(m, s):
                    full_slots = itertools.product(self._slots, repeat=s)
                    # T1: f^{xi-, rho+ x_1..x_s}/s! * prod dh
                    for slots in full_slots:
                        prods = None
                        for off in self._nn:
                            pat = ex.pattern(MINUS, ((off, PLUS),) + slots)
                            if not np.any(pat):
                                continue
                            if prods is None:
                                prods = self._dh_product(slots, comp)
                            integrand += self._band(pat * prods / factorial(s), off)
                    k1, rest = comp[0], comp[1:]
                    dV1 = self.delta_V(k1)
                    dV1_next = np.roll(dV1, -1, axis=0)  # composed with S_0
                    dV1_next[-1] = np.nan  # wrapped entry is not time t+1
                    for slots in itertools.product(self._slots, repeat=s - 1):
                        prods = self._dh_product(slots, rest) / factorial(s - 1)
                        for off in self._nn:
                            # T2: +f^{xi-, eta- x..} dV^{(rho)}_{eta-}
                            pat = ex.pattern(MINUS, ((off, MINUS),) + slots)
                            if np.any(pat):
                                w = pat * prods
                                integrand += w[:, :, None] * self._roll_axis(dV1, off, 1)
                            # T3: -f^{zeta+, rho+ x..} (dV^{(zeta)}_{xi-} o S_0),
                            # anchored at zeta = rho + off
                            pat = ex.pattern(PLUS, ((tuple(-np.array(off)), PLUS),) + slots)
                            if np.any(pat):
                                u = pat * prods
                                integrand -= self._roll_axis(dV1_next * u[:, None, :], off, 2)
                    if s >= 2:
                        k2 = rest[0]
                        dV2 = self.delta_V(k2)
                        for slots in itertools.product(self._slots, repeat=s - 2):
                            prods = self._dh_product(slots, rest[1:]) / factorial(s - 2)
                            for off in self._nn:
                                # T4: -f^{zeta+, eta- x..} (dV o S_0) dV, eta = zeta + off
                                pat = ex.pattern(PLUS, ((off, MINUS),) + slots)
                                if not np.any(pat):
                                    continue
                                w = pat * prods
                                rolled = self._roll_axis(dV2, off, 1)
                                integrand -= np.einsum("tiz,tz,tzr->tir",
                                                       dV1_next, w, rolled)
        weights = lam ** (2 * np.arange(P + 1) + 1)
        out = np.full_like(integrand, np.nan)
        W = P + 1
        if T >= W:
            sw = sliding_window_view(integrand, W, axis=0)
            out[W - 1:] = np.einsum("t...w,w->t...", sw, weights[::-1])
        self._dV[k] = out
        return out

    # -- dLambda ----------------------------------------------------------------
    def delta_Lambda(self, k: int) -> np.ndarray:
        """dLambda^xi_(k)[t, xi] from the matrix-log expansion of L."""
        T, n = self.ex.orbit.shape[:2]
        out = np.zeros((T, n))
        lam = self.lam
        for s in range(1, k + 1):
            coef = (-1.0) ** (s + 1) / s * lam ** s
            for comp in _compositions(k, s):
                chain = self.delta_L(comp[0])
                for ki in comp[1:]:
                    chain = np.einsum("tij,tjk->tik", chain, self.delta_L(ki))
                out += coef * np.einsum("tii->ti", chain)
        return out

    def delta_L_at(self, k: int, t: int = 0) -> np.ndarray:
        v = self.delta_L(k)[self.i0 + t]
        if np.any(np.isnan(v)):
            raise ValueError(f"shift {t} outside valid window for dL_({k})")
        return v

    def delta_V_at(self, k: int, t: int = 0) -> np.ndarray:
        v = self.delta_V(k)[self.i0 + t]
        if np.any(np.isnan(v)):
            raise ValueError(f"shift {t} outside valid window for dV_({k})")
        return v


# -- public operations -----------------------------------------------------------

def delta_L_V_first_order(geom: LatticeGeometry, coupling: Coupling, psi: np.ndarray,
                          P_max: int = 60):
    fr = FrameExpansion(geom, coupling, psi, ExpansionOrder(1, P_max))
    return fr.delta_L_at(1), fr.delta_V_at(1)


def delta_L_V_order_k(geom: LatticeGeometry, coupling: Coupling, psi: np.ndarray,
                      k: int, P_max: int = 60):
    fr = FrameExpansion(geom, coupling, psi, ExpansionOrder(k, P_max))
    return fr.delta_L_at(k), fr.delta_V_at(k)


def lambda_expansion(geom: LatticeGeometry, coupling: Coupling, psi: np.ndarray,
                     eps: float, K: int, P_max: int = 60,
                     frame: FrameExpansion | None = None, t: int = 0) -> np.ndarray:
    """Per-site log-expansion rates Lambda^xi at truncation order K."""
    lam_plus = coupling.cat.lam_plus
    out = np.full(geom.nsites, np.log(lam_plus))
    if K == 0 or eps == 0.0 or not coupling.terms:
        return out
    fr = frame or FrameExpansion(geom, coupling, psi, ExpansionOrder(K, P_max))
    for k in range(1, K + 1):
        v = fr.delta_Lambda(k)[fr.i0 + t]
        if np.any(np.isnan(v)):
            raise ValueError(f"shift {t} outside valid window for dLambda_({k})")
        out = out + eps ** k * v
    return out


def _mgs(F: np.ndarray):
    """Modified Gram-Schmidt with positive diagonal; returns (Q, diag R)."""
    Q = F.copy()
    m = F.shape[1]
    diag = np.empty(m)
    for j in range(m):
        for i in range(j):
            Q[:, j] -= (Q[:, i] @ Q[:, j]) * Q[:, i]
        r = np.linalg.norm(Q[:, j])
        if r < 1e-300:
            raise DegenerateFrame(f"frame column {j} collapsed")
        diag[j] = r
        Q[:, j] /= r
    return Q, diag


def unstable_frame_qr(geom: LatticeGeometry, coupling: Coupling, orbit: np.ndarray,
                      eps: float, n_transient: int = 1000):
    """Push the uncoupled expanding frame along `orbit`, re-orthonormalizing each step.

    `orbit` has shape (T, nsites, 2); consecutive entries need not be an exact
    coupled orbit (pseudo-orbits from the truncated conjugation are the main
    client).  Returns (per-step log-volume growth after the transient, final
    frame, per-step log diagonal factors).
    """
    T, n = orbit.shape[0], geom.nsites
    if T <= n_transient + 1:
        raise ValueError("orbit shorter than the transient")
    vp = coupling.cat.v_plus
    Q = np.zeros((2 * n, n))
    for i in range(n):
        Q[2 * i:2 * i + 2, i] = vp
    growth = np.empty(T - 1)
    diags = np.empty((T - 1, n))
    for t in range(T - 1):
        J = differential_DS_eps(geom, coupling, orbit[t], eps)
        Q, diag = _mgs(J @ Q)
        diags[t] = np.log(diag)
        growth[t] = diags[t].sum()
    return growth[n_transient:], Q, diags[n_transient:]
