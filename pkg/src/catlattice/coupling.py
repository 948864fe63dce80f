"""Nearest-neighbor couplings with exact mixed-derivative oracles.

A coupling is a trigonometric polynomial in the angles of the block nn(0):

    g(psi) = sum_t  (c+_t v_+ + c-_t v_-) * sin( P_t(psi) + phase_t ),
    P_t(psi) = sum_{(eta, comp)} kappa_t[eta, comp] * psi_eta^comp,

with integer frequencies kappa supported on |eta|_1 <= 1.  Every mixed partial
in the w_{0,+-} directions is again a single trig term, so the derivative
oracle is exact to all orders and satisfies a Cauchy bound |f^{x,x_1..x_s}| <=
G s!/r0^s with the (r0, G) exposed below.

Derivative index convention: a "slot" is a pair (offset, alpha) meaning one
differentiation along w_{0,alpha} at relative site `offset`; the anchor index
x = (0, alpha0) selects the w-component of g itself.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .catmap import CatMap
from .lattice import LatticeGeometry


class DerivativeOrderUnsupported(Exception):
    """Raised when a coupling cannot supply a requested derivative order."""


PLUS, MINUS = 0, 1
ALPHAS = (PLUS, MINUS)


@dataclass(frozen=True)
class TrigTerm:
    amp: tuple[float, float]              # coefficients along (v_+, v_-)
    freq: tuple                           # ((offset, comp, kappa), ...) integer kappa
    phase: float = 0.0

    def kappa_vec(self, offset) -> np.ndarray:
        out = np.zeros(2)
        for off, comp, k in self.freq:
            if tuple(off) == tuple(offset):
                out[comp] += k
        return out


class Coupling:
    """A finite sum of TrigTerms, locality radius 1."""

    def __init__(self, d: int, terms: list[TrigTerm], name: str = "custom",
                 cat: CatMap | None = None):
        self.d = d
        self.terms = list(terms)
        self.name = name
        self.cat = cat or CatMap()
        nn = {tuple(o) for o in LatticeGeometry(d, 1).nn_offsets()} if d else set()
        for t in self.terms:
            for off, comp, k in t.freq:
                if sum(abs(x) for x in off) > 1:
                    raise ValueError("coupling frequencies must live on nn(0)")
                if comp not in (0, 1) or k != int(k):
                    raise ValueError("frequencies are integer pairs per site")
        self.max_order: int | None = None  # exact derivatives to all orders

    # -- analyticity certificate ------------------------------------------------
    @property
    def r0(self) -> float:
        return 1.0

    @property
    def G(self) -> float:
        tot = 0.0
        for t in self.terms:
            K = sum(abs(k) for _, _, k in t.freq)
            tot += max(abs(t.amp[0]), abs(t.amp[1])) * np.exp(K)
        return tot

    def require_order(self, s: int):
        if self.max_order is not None and s > self.max_order:
            raise DerivativeOrderUnsupported(
                f"coupling {self.name!r} supplies derivatives up to order "
                f"{self.max_order}, requested {s}")

    # -- evaluation --------------------------------------------------------------
    def _phase_field(self, geom: LatticeGeometry, psi: np.ndarray, term: TrigTerm):
        """P_t(rho^xi psi) for all xi; psi has shape (..., nsites, 2)."""
        P = np.zeros(psi.shape[:-1])
        for off, comp, k in term.freq:
            P = P + k * geom.roll(psi[..., comp], off, axis0=-1)
        return P + term.phase

    def g_field(self, geom: LatticeGeometry, psi: np.ndarray) -> np.ndarray:
        """g(rho^xi psi) in site coordinates, shape (..., nsites, 2)."""
        vp, vm = self.cat.v_plus, self.cat.v_minus
        out = np.zeros(psi.shape)
        for t in self.terms:
            s = np.sin(self._phase_field(geom, psi, t))
            vec = t.amp[0] * vp + t.amp[1] * vm
            out = out + s[..., None] * vec
        return out

    def pattern_field(self, geom: LatticeGeometry, psi: np.ndarray,
                      alpha: int, slots: tuple = ()) -> np.ndarray:
        """f^{xi^alpha, (xi+o_1)^{a_1} ... (xi+o_s)^{a_s}} for all xi.

        `slots` is a tuple of (offset, alpha_i); psi may carry leading axes
        (e.g. orbit time).  Returns shape psi.shape[:-1] minus the component
        axis, i.e. (..., nsites).
        """
        self.require_order(len(slots))
        vdirs = (self.cat.v_plus, self.cat.v_minus)
        out = np.zeros(psi.shape[:-1])
        for t in self.terms:
            amp = t.amp[alpha]
            if amp == 0.0:
                continue
            factor = amp
            for off, a in slots:
                factor *= float(t.kappa_vec(off) @ vdirs[a])
                if factor == 0.0:
                    break
            if factor == 0.0:
                continue
            P = self._phase_field(geom, psi, t)
            out = out + factor * np.sin(P + len(slots) * (np.pi / 2.0))
        return out

    def pattern_local(self, nbr: np.ndarray, alpha: int, slots: tuple = ()) -> np.ndarray:
        """Anchor-site pattern value from explicit neighborhood angles.

        `nbr` has shape (..., |nn(0)|, 2) with sites ordered as
        LatticeGeometry(d, 1).nn_offsets(); returns shape (...,).
        """
        self.require_order(len(slots))
        order = {tuple(o): i for i, o in enumerate(LatticeGeometry(self.d, 1).nn_offsets())}
        vdirs = (self.cat.v_plus, self.cat.v_minus)
        out = np.zeros(nbr.shape[:-2])
        for t in self.terms:
            amp = t.amp[alpha]
            if amp == 0.0:
                continue
            factor = amp
            for off, a in slots:
                factor *= float(t.kappa_vec(off) @ vdirs[a])
                if factor == 0.0:
                    break
            if factor == 0.0:
                continue
            P = np.zeros(nbr.shape[:-2]) + t.phase
            for off, comp, k in t.freq:
                P = P + k * nbr[..., order[tuple(off)], comp]
            out = out + factor * np.sin(P + len(slots) * (np.pi / 2.0))
        return out

    def jacobian_offsets(self, geom: LatticeGeometry, psi: np.ndarray):
        """Site-coordinate blocks d g(rho^xi psi)^a / d psi_{xi+off}^b.

        Yields (offset, blocks) with blocks of shape (..., nsites, 2, 2).
        """
        vp, vm = self.cat.v_plus, self.cat.v_minus
        for off in LatticeGeometry(self.d, 1).nn_offsets():
            blocks = np.zeros(psi.shape[:-1] + (2, 2))
            hit = False
            for t in self.terms:
                kv = t.kappa_vec(off)
                if not kv.any():
                    continue
                hit = True
                c = np.cos(self._phase_field(geom, psi, t))
                vec = t.amp[0] * vp + t.amp[1] * vm
                blocks = blocks + c[..., None, None] * np.einsum("a,b->ab", vec, kv)
            if hit:
                yield tuple(off), blocks


def zero_coupling(d: int, cat: CatMap | None = None) -> Coupling:
    return Coupling(d, [], name="zero", cat=cat)


def sine_coupling(d: int, cat: CatMap | None = None) -> Coupling:
    """g = [sum_{eta ~ 0} sin(psi_0^1 - psi_eta^1)] v_+ ; the stable component vanishes."""
    origin = tuple([0] * d)
    terms = []
    for off in LatticeGeometry(d, 1).nn_offsets():
        if tuple(off) == origin:
            continue
        terms.append(TrigTerm(amp=(1.0, 0.0),
                              freq=((origin, 0, 1), (tuple(off), 0, -1))))
    return Coupling(d, terms, name="sine", cat=cat)


def trig_coupling(d: int, cat: CatMap | None = None) -> Coupling:
    """A generic trig-polynomial coupling with both w-components nonzero.

    Used where the gauge structure must be exercised (nonzero f^{xi^-}).
    """
    origin = tuple([0] * d)
    right = tuple([1] + [0] * (d - 1))
    terms = [
        TrigTerm(amp=(0.8, 0.5), freq=((origin, 0, 1),), phase=0.3),
        TrigTerm(amp=(0.4, -0.6), freq=((origin, 1, 1), (right, 0, -1)), phase=1.1),
        TrigTerm(amp=(-0.3, 0.2), freq=((right, 1, 2),), phase=0.0),
    ]
    return Coupling(d, terms, name="trigpoly", cat=cat)


COUPLINGS = {
    "zero": zero_coupling,
    "sine": sine_coupling,
    "trigpoly": trig_coupling,
}


def coupling_by_name(name: str, d: int, cat: CatMap | None = None) -> Coupling:
    try:
        factory = COUPLINGS[name]
    except KeyError:
        raise ValueError(f"unknown coupling id {name!r}; have {sorted(COUPLINGS)}")
    return factory(d, cat=cat)
