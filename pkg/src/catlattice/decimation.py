"""Decimation of the space-time spin system into B- and H-blocks.

Columns of |I_T| = ell*h0*a + 1 spins split into single-spin B-blocks at times
-T/2 + i*h0*a and H-blocks of h = h0*a - 1 spins between them.  Summing the
compatibility chain over an H-block gives Z(b, b') = (C^a)^{h0}_{bb'}, which
Perron-Frobenius theory factorizes as l^{h0} pi_b pi*_b' e^{-I(b,b')} with an
exponentially small two-body remainder I.  The conditional density m of the
spins given this factorization is an explicit normalized product.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np


class NotMixing(Exception):
    pass


@dataclass
class PerronFrobenius:
    C: np.ndarray
    a: int
    h0: int
    l: float                  # leading eigenvalue of C^a
    pi: np.ndarray            # right eigenvector, positive, sum(pi* x pi) = 1
    pi_star: np.ndarray       # left eigenvector
    alpha: float              # spectral-gap witness
    I: np.ndarray             # two-body potential I(b, b')

    @property
    def n(self) -> int:
        return self.C.shape[0]


def perron_frobenius(C: np.ndarray, a: int, h0: int) -> PerronFrobenius:
    """Leading eigendata of C^a and the decimated two-body potential I."""
    C = np.asarray(C, dtype=float)
    M = np.linalg.matrix_power(C, a)
    if np.any(M <= 0):
        raise NotMixing("C^a must have strictly positive entries")
    evals, vecs = np.linalg.eig(M)
    k = int(np.argmax(evals.real))
    l = float(evals[k].real)
    pi = np.abs(vecs[:, k].real)
    evals_t, vecs_t = np.linalg.eig(M.T)
    kt = int(np.argmax(evals_t.real))
    pi_star = np.abs(vecs_t[:, kt].real)
    pi = pi / pi.sum()
    pi_star = pi_star / float(pi_star @ pi)
    r = float(np.min(M.min(axis=1) / M.max(axis=1)))
    alpha = float(-np.log1p(-r * r))
    Z = np.linalg.matrix_power(C, a * h0)
    I = -np.log(Z / (l ** h0 * np.outer(pi, pi_star)))
    return PerronFrobenius(C.astype(int), a, h0, l, pi, pi_star, alpha, I)


@dataclass(frozen=True)
class Block:
    col: int          # column (site) index
    kind: str         # "B" or "H"
    idx: int

    def __repr__(self):
        return f"{self.kind}{self.idx}c{self.col}"


@dataclass
class BlockLayout:
    """Finite decimated layout: per column, ell+1 B-blocks and ell H-blocks."""
    a: int
    h0: int
    ell: int
    ncols: int = 1

    @property
    def h(self) -> int:
        return self.h0 * self.a - 1

    @property
    def T(self) -> int:
        return self.ell * self.h0 * self.a

    @property
    def times(self) -> np.ndarray:
        return np.arange(-self.T // 2, self.T // 2 + 1)

    def b_time(self, i: int) -> int:
        return -self.T // 2 + i * self.h0 * self.a

    def blocks(self):
        out = []
        for c in range(self.ncols):
            for i in range(self.ell + 1):
                out.append(Block(c, "B", i))
                if i < self.ell:
                    out.append(Block(c, "H", i))
        return out

    def block_of_time(self, col: int, t: int) -> Block:
        off = t + self.T // 2
        if not (0 <= off <= self.T):
            raise IndexError(f"time {t} outside the layout")
        i, r = divmod(off, self.h0 * self.a)
        return Block(col, "B", i) if r == 0 else Block(col, "H", i)

    def h_times(self, i: int) -> np.ndarray:
        return np.arange(self.b_time(i) + 1, self.b_time(i + 1))

    def column_symbols(self, assignment, col: int) -> np.ndarray:
        """Assemble symbols over the full window [-T/2, T/2] from block spins."""
        out = np.empty(self.T + 1, dtype=int)
        for i in range(self.ell + 1):
            out[self.b_time(i) + self.T // 2] = assignment[Block(col, "B", i)]
            if i < self.ell:
                eta = assignment[Block(col, "H", i)]
                out[self.b_time(i) + 1 + self.T // 2:self.b_time(i + 1) + self.T // 2] = eta
        return out


def closure(layout: BlockLayout, blocks) -> frozenset:
    """Molecule closure: H-blocks drag in their flanking B-blocks."""
    out = set()
    for b in blocks:
        out.add(b)
        if b.kind == "H":
            out.add(Block(b.col, "B", b.idx))
            out.add(Block(b.col, "B", b.idx + 1))
    return frozenset(out)


@dataclass
class DecimatedSystem:
    """Finite decimated spin system with effective potentials W.

    `W` maps frozensets of Blocks to callables on spin assignments (dict
    Block -> int for B, tuple for H).  The conditional density m factorizes
    over columns and is exposed through exact marginals.
    """
    pf: PerronFrobenius
    layout: BlockLayout
    W: dict = field(default_factory=dict)

    # -- spin spaces -------------------------------------------------------------
    def spin_space(self, block: Block):
        n = self.pf.n
        if block.kind == "B":
            return range(n)
        return itertools.product(range(n), repeat=self.layout.h)

    def assignments(self, blocks):
        blocks = sorted(blocks, key=lambda b: (b.col, b.idx, b.kind))
        spaces = [list(self.spin_space(b)) for b in blocks]
        for combo in itertools.product(*spaces):
            yield dict(zip(blocks, combo))

    # -- the factorized density m ---------------------------------------------------
    def _chain_ok(self, beta, eta, beta2) -> bool:
        C = self.pf.C
        seq = (beta,) + tuple(eta) + (beta2,)
        return all(C[x, y] for x, y in zip(seq[:-1], seq[1:]))

    def _b_weight(self, block: Block, beta: int) -> float:
        pf, ell = self.pf, self.layout.ell
        if block.idx == 0:
            return pf.pi[beta] / pf.pi.sum()
        if block.idx == ell:
            return pf.pi_star[beta] / pf.pi_star.sum()
        return pf.pi[beta] * pf.pi_star[beta]  # middle weights are normalized

    def _h_weight(self, block: Block, beta: int, eta, beta2: int) -> float:
        pf = self.pf
        Z = pf.l ** pf.h0 * pf.pi[beta] * pf.pi_star[beta2] * np.exp(-pf.I[beta, beta2])
        return (1.0 if self._chain_ok(beta, eta, beta2) else 0.0) / Z

    def m_marginal(self, assignment) -> float:
        """Exact marginal density of m on a closure-closed set of blocks."""
        val = 1.0
        for b, spin in assignment.items():
            if b.kind == "B":
                val *= self._b_weight(b, spin)
            else:
                left = assignment[Block(b.col, "B", b.idx)]
                right = assignment[Block(b.col, "B", b.idx + 1)]
                val *= self._h_weight(b, left, spin, right)
        return val

    def w_total(self, assignment) -> float:
        tot = 0.0
        for Y, w in self.W.items():
            if all(b in assignment for b in Y):
                tot += w(assignment)
        return tot

    def add_W(self, blocks, func):
        Y = frozenset(blocks)
        if Y in self.W:
            prev = self.W[Y]
            self.W[Y] = lambda asg, p=prev, f=func: p(asg) + f(asg)
        else:
            self.W[Y] = func

    def add_I_terms(self):
        """Install the Perron-Frobenius two-body potentials I(b, b')."""
        pf = self.pf
        for c in range(self.layout.ncols):
            for i in range(self.layout.ell):
                pair = (Block(c, "B", i), Block(c, "B", i + 1))
                self.add_W(pair, lambda asg, p=pair: pf.I[asg[p[0]], asg[p[1]]])


def decimate(pf: PerronFrobenius, layout: BlockLayout, phi: dict,
             include_I: bool = True) -> DecimatedSystem:
    """Assemble the effective system: W = Phi (regrouped by block cover) + I."""
    sys = DecimatedSystem(pf, layout)
    for Y, func in phi.items():
        sys.add_W(Y, func)
    if include_I:
        sys.add_I_terms()
    return sys


def phi_cover(layout: BlockLayout, cells) -> frozenset:
    """Minimal block cover Y(X) of a set of space-time cells (col, t)."""
    return frozenset(layout.block_of_time(c, t) for c, t in cells)
