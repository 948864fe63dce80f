"""Polymer gas on the decimated lattice: activities, Ursell weights, pressure.

Expanding every e^{-W_Y} as 1 + (e^{-W_Y} - 1) and collecting connected
collections of molecule closures yields polymers gamma (block subsets) with
spin-averaged activities rho(gamma).  The log-partition function is the sum of
cluster weights: Ursell factor times activity product over connected multisets
of polymers with the hard-core overlap structure.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .decimation import Block, BlockLayout, DecimatedSystem, closure


class TooManyPolymers(Exception):
    pass


class CapExceeded(Exception):
    pass


# -- Ursell (Mayer) weights ------------------------------------------------------

def _overlap_edges(polymers) -> list:
    n = len(polymers)
    return [(i, j) for i in range(n) for j in range(i + 1, n)
            if polymers[i] & polymers[j]]


def ursell_weight(polymers, n_max: int = 6) -> int:
    """phi^T of a polymer list: sum over connected spanning edge subsets of
    (-1)^{edges}, edges allowed between overlapping polymers.

    Evaluated by first-component decomposition: with g(U) = 1 iff U carries no
    overlap edge, f solves f(V) = g(V) - sum_{S in V, S owns v0, S != V}
    f(S) g(V-S).  Integers exactly; 1 for singletons, 0 for disconnected
    collections.
    """
    polymers = [frozenset(p) for p in polymers]
    n = len(polymers)
    if n == 0:
        return 0
    if n > n_max:
        raise TooManyPolymers(f"{n} polymers exceeds the cap {n_max}")
    edges = set(_overlap_edges(polymers))

    def g(mask: int) -> int:
        members = [i for i in range(n) if mask >> i & 1]
        for i, j in itertools.combinations(members, 2):
            if (i, j) in edges:
                return 0
        return 1

    from functools import lru_cache

    @lru_cache(maxsize=None)
    def f(mask: int) -> int:
        members = [i for i in range(n) if mask >> i & 1]
        if len(members) == 1:
            return 1
        v0 = members[0]
        total = g(mask)
        rest = [i for i in members if i != v0]
        for r in range(len(rest) + 1):
            for combo in itertools.combinations(rest, r):
                smask = (1 << v0) | sum(1 << i for i in combo)
                if smask == mask:
                    continue
                total -= f(smask) * g(mask & ~smask)
        return total

    return f((1 << n) - 1)


# -- polymers and activities --------------------------------------------------------

def connected_molecule_collections(layout: BlockLayout, molecules, cap: int):
    """All connected collections (sets) of distinct molecules up to size `cap`.

    Connectivity is through closure overlap.  Yields frozensets of molecule
    indices; standard min-element canonical growth.
    """
    clos = [closure(layout, m) for m in molecules]
    n = len(molecules)
    adj = [[j for j in range(n) if j != i and clos[i] & clos[j]] for i in range(n)]
    out = []
    for i in range(n):
        stack = [(frozenset([i]), frozenset(adj[i]))]
        seen = {frozenset([i])}
        out.append(frozenset([i]))
        while stack:
            S, frontier = stack.pop()
            if len(S) >= cap:
                continue
            for j in sorted(frontier):
                if j <= i or j in S:
                    continue
                S2 = S | {j}
                if S2 in seen:
                    continue
                seen.add(S2)
                out.append(S2)
                stack.append((S2, (frontier | frozenset(adj[j])) - S2))
    return out


@dataclass
class PolymerSystem:
    system: DecimatedSystem
    gammas: list                  # polymer block-sets
    rho: np.ndarray               # activities
    truncated: list               # polymers whose collection sum hit the cap

    def overlap(self, i: int, j: int) -> bool:
        return bool(self.gammas[i] & self.gammas[j])


def polymer_activities(system: DecimatedSystem, molecule_cap: int = 4,
                       prune: float = 1e-15) -> PolymerSystem:
    """Enumerate polymers and compute m-weighted activities rho(gamma)."""
    layout = system.layout
    molecules = list(system.W.keys())
    colls = connected_molecule_collections(layout, molecules, molecule_cap)
    by_gamma: dict = {}
    capped: set = set()
    for S in colls:
        gamma = frozenset().union(*(closure(layout, molecules[i]) for i in S))
        by_gamma.setdefault(gamma, []).append(S)
        if len(S) == molecule_cap:
            capped.add(gamma)
    gammas, rho, truncated = [], [], []
    for gamma, collections in sorted(by_gamma.items(),
                                     key=lambda kv: sorted(map(repr, kv[0]))):
        val = 0.0
        for asg in system.assignments(gamma):
            m = system.m_marginal(asg)
            if m == 0.0:
                continue
            contrib = 0.0
            for S in collections:
                prod = 1.0
                for i in S:
                    prod *= math.expm1(-system.W[molecules[i]](asg))
                contrib += prod
            val += m * contrib
        if abs(val) > prune:
            gammas.append(gamma)
            rho.append(val)
            if gamma in capped:
                truncated.append(gamma)
    return PolymerSystem(system, gammas, np.array(rho), truncated)


# -- cluster sums ----------------------------------------------------------------------

def _connected_multisets(ps: PolymerSystem, n_max: int, weight_floor: float):
    """Canonical connected multisets (index tuples, non-decreasing) with weights."""
    n = len(ps.gammas)
    adj = [[j for j in range(n) if j == i or ps.overlap(i, j)] for i in range(n)]
    results = []

    def grow(tup, prod):
        results.append(tup)
        if len(tup) >= n_max:
            return
        for j in range(tup[-1], n):
            nprod = prod * abs(ps.rho[j])
            if nprod < weight_floor:
                continue
            grow(tup + (j,), nprod)

    for i in range(n):
        grow((i,), abs(ps.rho[i]))
    return results


def cluster_terms(ps: PolymerSystem, n_max: int = 6, weight_floor: float = 1e-18):
    """Nonzero cluster contributions: (indices, Psi^T, weight)."""
    out = []
    for tup in _connected_multisets(ps, n_max, weight_floor):
        psi = ursell_weight([ps.gammas[i] for i in tup], n_max=n_max)
        if psi == 0:
            continue
        mult = 1.0
        for _, grp in itertools.groupby(tup):
            mult *= math.factorial(len(list(grp)))
        weight = psi / mult * float(np.prod([ps.rho[i] for i in tup]))
        out.append((tup, psi, weight))
    return out


def cluster_log_partition(ps: PolymerSystem, n_max: int = 6,
                          weight_floor: float = 1e-18) -> float:
    """log sum_Gamma Psi(Gamma) prod rho over the finite lattice, via clusters."""
    return float(sum(w for _, _, w in cluster_terms(ps, n_max, weight_floor)))


def pressure_truncated(ps: PolymerSystem, n_max: int = 6,
                       weight_floor: float = 1e-18):
    """Infinite-volume pressure correction per spin cell, from origin clusters.

    P = (1/a) log l + (1/(h0 a)) sum over the two origin blocks x of
    sum_{clusters ni x} Psi^T rho / |union|.  Returns (P, tail_estimate); the
    tail estimate combines the cluster-size cap and polymer truncation flags.
    """
    sysd = ps.system
    a, h0 = sysd.pf.a, sysd.pf.h0
    base = np.log(sysd.pf.l) / a
    mid = sysd.layout.ell // 2
    origin_blocks = [Block(0, "B", mid), Block(0, "H", mid)]
    corr = 0.0
    largest_cut = 0.0
    terms = cluster_terms(ps, n_max, weight_floor)
    for x in origin_blocks:
        for tup, psi, w in terms:
            union = frozenset().union(*(ps.gammas[i] for i in tup))
            if x in union:
                corr += w / len(union)
    # tail: largest cap-size cluster weight plus truncated-polymer activities
    cap_terms = [abs(w) for tup, _, w in terms if len(tup) == n_max]
    tail = (max(cap_terms) if cap_terms else 0.0) * len(terms)
    tail += float(sum(abs(ps.rho[ps.gammas.index(g)]) for g in ps.truncated)) \
        if ps.truncated else 0.0
    return base + corr / (h0 * a), tail
