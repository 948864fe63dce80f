"""Symbolic coding for the cat map and its lattice product.

encode: itineraries of torus points through the partition rectangles.
decode: the inverse, summing the exact affine-crossing offsets as geometric
series in lam = phi^{-2} (future symbols pin the unstable coordinate, past
symbols the stable one).  restrict_sigma localizes a symbol field in time by
splicing in a fixed reference column through admissible connectors.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .catmap import CatMap, TWO_PI
from .lattice import LatticeGeometry
from .partition import (MarkovPartition, build_cat_partition, plane_to_eigen,
                        eigen_to_plane, NU2)


class BoundaryAmbiguous(Exception):
    """An orbit point sits within the safety margin of a rectangle boundary."""


class InadmissibleString(Exception):
    pass


@dataclass
class SymbolField:
    """Symbols on a finite space-time window: array (nsites, T), time t0 + column."""
    symbols: np.ndarray
    t0: int

    @property
    def T(self) -> int:
        return self.symbols.shape[1]

    def time_index(self, t: int) -> int:
        i = t - self.t0
        if not (0 <= i < self.T):
            raise IndexError(f"time {t} outside window [{self.t0}, {self.t0 + self.T - 1}]")
        return i

    def copy(self) -> "SymbolField":
        return SymbolField(self.symbols.copy(), self.t0)


class SymbolicCoding:
    def __init__(self, partition: MarkovPartition | None = None,
                 cat: CatMap | None = None):
        self.part = partition or build_cat_partition()
        self.cat = cat or CatMap()
        self.lam2 = float(self.part._lam2)  # contraction per step = lam_minus
        self._offsets = [np.array(m) for m in itertools.product(range(-3, 4), repeat=2)]
        # lattice action on (uhat, shat)
        self._lat = np.array([[m[0] + m[1] * (1 + np.sqrt(5)) / 2,
                               m[0] * (1 + np.sqrt(5)) / 2 - m[1]]
                              for m in self._offsets])
        # vectorized coding tables: transition (p, q) -> offsets, NaN if inadmissible
        n = self.part.n
        self._U = np.full((n, n), np.nan)
        self._K = np.full((n, n), np.nan)
        for p in range(n):
            for q in range(n):
                if self.part.C[p, q]:
                    self._U[p, q] = self.part._u_off[(p, self.part.pieces[q].base)]
                    self._K[p, q] = self.part._k_off[(p, self.part.pieces[q].base)]
        self._conn_to_ref = np.array(
            [self.part.connectors[(i, self.part.sigma_hat)] for i in range(n)], dtype=int)
        self._conn_from_ref = np.array(
            [self.part.connectors[(self.part.sigma_hat, i)] for i in range(n)], dtype=int)
        self._base_u0s0 = np.array([self.part._base_corner[p.base] for p in self.part.pieces])

    # -- point location ----------------------------------------------------------
    def locate(self, points: np.ndarray, margin: float = 1e-9):
        """Symbols of torus points (angles), shape (..., 2) -> (...,) ints.

        Raises BoundaryAmbiguous if any point is within `margin` (angle units)
        of a rectangle boundary and margin > 0.  With margin = 0 the half-open
        lower-left ownership convention decides boundary points.
        """
        pts = np.atleast_2d(np.asarray(points, float))
        es = plane_to_eigen(pts / TWO_PI)  # (n, 2) in (uhat, shat)
        n = pts.shape[0]
        sym = np.full(n, -1, dtype=int)
        dist = np.full(n, np.inf)
        for i, p in enumerate(self.part.pieces):
            corner = np.array([float(p.u0), float(p.s0)])
            size = np.array([float(p.w), float(p.h)])
            rel = es[:, None, :] - corner[None, None, :] - self._lat[None, :, :]
            inside = np.all((rel >= 0) & (rel < size), axis=-1)
            hit = inside.any(axis=1)
            sym[hit] = i
            if margin > 0:
                relh = rel[np.arange(n)[hit], inside[hit].argmax(axis=1)]
                edge = np.minimum(relh, size - relh).min(axis=1)
                dist[hit] = edge
        if np.any(sym < 0):
            raise RuntimeError("point location failed: partition does not cover point")
        if margin > 0:
            # eigen units are nu-scaled plane units; convert to angle units
            ang = dist / np.sqrt(NU2) * TWO_PI
            if np.any(ang < margin):
                raise BoundaryAmbiguous(
                    f"{int(np.sum(ang < margin))} point(s) within margin of a boundary")
        return sym.reshape(np.shape(points)[:-1])

    def encode(self, point: np.ndarray, m: int, margin: float = 1e-9) -> np.ndarray:
        """Itinerary of a single torus point over t in [-m, m], shape (2m+1,)."""
        return self.encode_batch(np.asarray(point, float)[None, :], m, margin)[0]

    def encode_batch(self, points: np.ndarray, m: int, margin: float = 1e-9) -> np.ndarray:
        pts = np.asarray(points, float)
        T = 2 * m + 1
        out = np.empty((pts.shape[0], T), dtype=int)
        cur = pts.copy()
        for t in range(0, m + 1):
            out[:, m + t] = self.locate(cur, margin)
            if t < m:
                cur = self.cat.apply(cur)
        cur = pts.copy()
        for t in range(1, m + 1):
            cur = self.cat.apply_inverse(cur)
            out[:, m - t] = self.locate(cur, margin)
        return out

    # -- admissibility -------------------------------------------------------------
    def is_admissible(self, symbols: np.ndarray) -> bool:
        s = np.atleast_2d(symbols)
        return bool(np.all(self.part.C[s[:, :-1], s[:, 1:]] == 1))

    def check_admissible(self, symbols: np.ndarray):
        if not self.is_admissible(symbols):
            raise InadmissibleString("symbol string violates the compatibility matrix")

    # -- decoding --------------------------------------------------------------------
    def _extend_with_reference(self, symbols, n_extra: int, forward: bool):
        """Pad a string with connector digits then the constant reference column."""
        part = self.part
        sh = part.sigma_hat
        if forward:
            tail = list(part.connectors[(symbols[-1], sh)]) + [sh] * n_extra
            return list(symbols) + tail
        head = [sh] * n_extra + list(part.connectors[(sh, symbols[0])])
        return head + list(symbols)

    def decode(self, symbols: np.ndarray, center: int | None = None,
               tol: float = 1e-16) -> np.ndarray:
        """Torus point (angles) whose itinerary matches `symbols` around `center`.

        `center` is the array index holding time 0 (default: middle).  Tails
        beyond the string are filled with the reference column through
        admissible connectors; series are summed until increments fall under
        `tol` in eigen units.
        """
        symbols = np.asarray(symbols, dtype=int).ravel()
        self.check_admissible(symbols)
        if center is None:
            if len(symbols) % 2 == 0:
                raise ValueError("even-length string needs an explicit center")
            center = len(symbols) // 2
        return self.decode_batch(symbols[None, :], center, tol)[0]

    def decode_batch(self, cols: np.ndarray, center: int, tol: float = 1e-16) -> np.ndarray:
        """Vectorized decode of admissible columns, shape (B, T) -> angles (B, 2).

        `center` indexes time 0; tails use connector digits into the constant
        reference column on both sides.
        """
        cols = np.atleast_2d(np.asarray(cols, dtype=int))
        B, T = cols.shape
        lam = self.lam2
        n_extra = max(8, int(np.ceil(np.log(tol) / np.log(lam))))
        sh = self.part.sigma_hat
        am1 = self.part.a - 1
        ext = np.empty((B, T + 2 * (n_extra + am1)), dtype=int)
        lo = n_extra + am1
        ext[:, lo:lo + T] = cols
        ext[:, lo + T:lo + T + am1] = self._conn_to_ref[cols[:, -1]]
        ext[:, lo + T + am1:] = sh
        ext[:, lo - am1:lo] = self._conn_from_ref[cols[:, 0]]
        ext[:, :lo - am1] = sh
        c0 = lo + center
        # forward series for uhat, backward series for shat
        Lf = ext.shape[1] - 1 - c0
        wf = lam ** (np.arange(1, Lf + 1))
        u = np.einsum("bt,t->b", self._U[ext[:, c0:c0 + Lf], ext[:, c0 + 1:c0 + Lf + 1]], wf)
        Lb = c0
        wb = lam ** np.arange(Lb)
        # K term t >= 1 couples sigma_{-t} -> sigma_{-t+1}
        prev = ext[:, c0 - 1::-1][:, :Lb]        # sigma_{-1}, sigma_{-2}, ...
        nxt = ext[:, c0::-1][:, :Lb]             # sigma_0, sigma_{-1}, ...
        s = np.einsum("bt,t->b", self._K[prev, nxt], wb)
        if np.any(np.isnan(u)) or np.any(np.isnan(s)):
            raise InadmissibleString("column violates the compatibility matrix")
        base = self._base_u0s0[cols[:, center]]
        plane = eigen_to_plane(base[:, 0] + u, base[:, 1] + s)
        return np.mod(plane * TWO_PI, TWO_PI)

    def restrict_columns(self, cols: np.ndarray, center: int, j: int) -> np.ndarray:
        """Vectorized single-column restriction around array index `center`.

        Keeps |t| <= j (t measured from `center`), connector digits on
        j < |t| < j + a, the reference digit beyond.
        """
        cols = np.atleast_2d(np.asarray(cols, dtype=int))
        B, T = cols.shape
        out = cols.copy()
        sh = self.part.sigma_hat
        am1 = self.part.a - 1
        hi = center + j      # last kept index on the right
        if hi < T - 1:
            anchor = cols[:, hi] if hi >= 0 else np.full(B, sh)
            conn = self._conn_to_ref[anchor] if hi >= 0 else None
            for step, idx in enumerate(range(hi + 1, T)):
                if idx < 0:
                    continue
                if conn is not None and step < am1:
                    out[:, idx] = conn[:, step]
                else:
                    out[:, idx] = sh
        lo = center - j
        if lo > 0:
            anchor = cols[:, lo] if lo <= T - 1 else np.full(B, sh)
            conn = self._conn_from_ref[anchor] if lo <= T - 1 else None
            for step, idx in enumerate(range(lo - 1, -1, -1)):
                if idx > T - 1:
                    continue
                back = am1 - 1 - step
                if conn is not None and back >= 0:
                    out[:, idx] = conn[:, back]
                else:
                    out[:, idx] = sh
        return out

    # -- time restriction -----------------------------------------------------------
    def restrict_sigma(self, field: SymbolField, j: int) -> SymbolField:
        """Splice the reference column outside |t| <= j, connectors in the gaps.

        Columns keep their values on |t| <= j, carry the constant reference
        digit on |t| > j + a - 1, and admissible connector digits in between.
        """
        return SymbolField(self.restrict_columns(field.symbols, field.time_index(0), j),
                           field.t0)

    # -- lattice product ---------------------------------------------------------------
    def lattice_code(self, field: SymbolField) -> np.ndarray:
        """Decode each column at time 0 into a lattice state (nsites, 2)."""
        out = np.empty((field.symbols.shape[0], 2))
        center = field.time_index(0)
        for i in range(field.symbols.shape[0]):
            out[i] = self.decode(field.symbols[i], center=center)
        return out

    def encode_state(self, state: np.ndarray, m: int, margin: float = 1e-9) -> SymbolField:
        return SymbolField(self.encode_batch(state, m, margin), -m)

    # -- admissible sampling -------------------------------------------------------------
    def random_column(self, rng, T: int, start: int | None = None) -> np.ndarray:
        C = self.part.C
        n = self.part.n
        col = np.empty(T, dtype=int)
        col[0] = rng.integers(n) if start is None else start
        for t in range(1, T):
            succ = np.flatnonzero(C[col[t - 1]])
            col[t] = succ[rng.integers(len(succ))]
        return col

    def random_field(self, rng, nsites: int, t0: int, T: int) -> SymbolField:
        sym = np.stack([self.random_column(rng, T) for _ in range(nsites)])
        return SymbolField(sym, t0)
