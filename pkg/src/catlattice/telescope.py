"""Telescoping of symbol-field functions into finitely supported pieces.

Any evaluator F(c0(sigma)) of a decoded configuration splits as
F_(0) + F_(1) + ... with F_(j) = F(c0(sigma^j)) - F(c0(sigma^{j-1})), where
sigma^j is the time-j restriction.  Partial sums reproduce F on restricted
configurations exactly: consecutive restricted values are close enough that
their floating-point differences are computed without rounding, so fsum of the
pieces returns the restricted value bit for bit.
"""

from __future__ import annotations

import math

import numpy as np

from .symbolic import SymbolicCoding, SymbolField


def telescope_function(coding: SymbolicCoding, F, field_to_state, j_max: int):
    """Pieces [F_(0), ..., F_(j_max)] of F as callables on SymbolFields.

    `F` maps a decoded lattice state to a float; `field_to_state` maps a
    SymbolField to the state (normally coding.lattice_code).  Piece j depends
    only on the symbols within time window [-j, j].
    """
    def restricted_value(field: SymbolField, j: int) -> float:
        return float(F(field_to_state(coding.restrict_sigma(field, j))))

    def make_piece(j: int):
        if j == 0:
            return lambda field: restricted_value(field, 0)
        return lambda field: restricted_value(field, j) - restricted_value(field, j - 1)

    return [make_piece(j) for j in range(j_max + 1)]


def telescope_partial_sum(pieces, field: SymbolField, upto: int | None = None) -> float:
    """Exactly rounded partial sum of the pieces (bitwise telescoping identity)."""
    upto = len(pieces) - 1 if upto is None else upto
    return math.fsum(p(field) for p in pieces[:upto + 1])


class DecodedCache:
    """Restrict-then-decode cache over a batch of sample columns.

    Keyed by (column id, node time, telescoping depth); `depth = -1` marks the
    unrestricted column.  Columns are (B, T) symbol arrays sharing a common
    window start t0.
    """

    def __init__(self, coding: SymbolicCoding, columns: dict, t0: int):
        self.coding = coding
        self.columns = columns      # site tuple -> (B, T) int array
        self.t0 = t0
        self._cache: dict = {}

    def angles(self, site, t: int, j: int) -> np.ndarray:
        key = (site, t, j)
        if key not in self._cache:
            cols = self.columns[site]
            center = t - self.t0
            if not (0 <= center < cols.shape[1]):
                raise IndexError(f"node time {t} outside sample window")
            if j >= 0:
                cols = self.coding.restrict_columns(cols, center, j)
            self._cache[key] = self.coding.decode_batch(cols, center)
        return self._cache[key]

    @property
    def batch_size(self) -> int:
        return next(iter(self.columns.values())).shape[0]


class TranslatedCache:
    """View of a DecodedCache with a space-time shift applied to lookups."""

    def __init__(self, base, site_shift, t_shift: int):
        self.base = base
        self.site_shift = tuple(site_shift)
        self.t_shift = t_shift

    def angles(self, site, t: int, j: int):
        shifted = tuple(a + b for a, b in zip(site, self.site_shift))
        return self.base.angles(shifted, t + self.t_shift, j)

    @property
    def batch_size(self) -> int:
        return self.base.batch_size
