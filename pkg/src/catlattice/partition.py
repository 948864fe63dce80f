"""Markov partition for the golden cat map, in exact golden-ratio coordinates.

Geometry lives in eigen-coordinates (u, s) along the unit eigenvectors of A,
scaled by nu = sqrt(2 + phi) so every coordinate is an element of Q(phi):
a plane point is ((uhat * (1, phi) + shat * (phi, -1)) / nu^2) on the unit
torus (angles are this times 2*pi).  The lattice Z^2 acts by
(uhat, shat) -> (uhat + m1 + phi m2, shat + phi m1 - m2).

Construction: the torus is cut along the unstable segment uhat in [-phi, phi]
and the stable segment shat in [-phi, phi] through the fixed point.  Both
segment families are invariant under the map (positive eigenvalues), so the
three complementary rectangles form a Markov partition; two of them are then
split at one interior unstable-direction line (the preimage of an existing
stable boundary) to make every image crossing single, giving five rectangles.
All crossing data is rederived and verified exactly at construction time.

Rectangle ownership: each piece owns its lower-left boundary, i.e. membership
is uhat in [u0, u0+w), shat in [s0, s0+h) in the piece frame.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .golden import Golden, PHI, ONE, ZERO, parse_golden

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class Piece:
    """A partition rectangle: corner and extents in scaled eigen-coordinates."""
    base: int        # index of the unsplit parent rectangle (0, 1, 2)
    u0: Golden
    s0: Golden
    w: Golden
    h: Golden


@dataclass(frozen=True)
class Crossing:
    """One full unstable crossing: image of piece p covers base `target` once.

    `u_off` is the image-u coordinate of the target's left edge measured from
    the image of p's base corner; `k_off` is the s-position of the image strip
    inside the target frame.  Both are exact.
    """
    target: int      # target BASE rectangle index
    m: tuple         # lattice translate of the target
    u_off: Golden
    k_off: Golden


class PartitionError(Exception):
    pass


def _lat_u(m) -> Golden:
    return Golden(m[0], m[1])


def _lat_s(m) -> Golden:
    return Golden(-m[1], m[0])


def _base_rects():
    # corner (uhat, shat), width, height; verified to tile the torus below
    return [
        (ZERO, -ONE, PHI, ONE),                 # below the unstable axis
        (ZERO, ZERO, ONE, PHI),                 # right of the stable axis
        (ONE, ZERO, PHI - 1, PHI - 1),          # small corner square
    ]


def _split_points():
    # piece boundaries inside each base rectangle (preimages of stable cuts)
    return {0: [PHI - 1], 1: [Golden(2) - PHI], 2: []}


@dataclass
class MarkovPartition:
    pieces: list[Piece]
    crossings: list[list[Crossing]]     # per piece, in image u-order
    C: np.ndarray                        # 0/1 compatibility matrix
    a: int                               # mixing time: (C^a) > 0, minimal
    connectors: dict                     # (i, j) -> digit tuple of length a-1
    sigma_hat: int                       # self-compatible reference digit

    @property
    def n(self) -> int:
        return len(self.pieces)

    # float caches for runtime coding, filled in __post_init__
    def __post_init__(self):
        self._lam2 = float(PHI) ** (-2)
        self._corners = np.array([[float(p.u0), float(p.s0)] for p in self.pieces])
        self._sizes = np.array([[float(p.w), float(p.h)] for p in self.pieces])
        self._base_corner = {}
        for p in self.pieces:
            self._base_corner.setdefault(p.base, None)
        for b, (u0, s0, w, h) in enumerate(_base_rects()):
            self._base_corner[b] = (float(u0), float(s0))
        # coding tables: per piece, per target base
        self._u_off = {}
        self._k_off = {}
        for i, crs in enumerate(self.crossings):
            for c in crs:
                self._u_off[(i, c.target)] = float(c.u_off)
                self._k_off[(i, c.target)] = float(c.k_off)

    def piece_area(self, i: int) -> float:
        nu2 = float(Golden(2) + PHI)
        return float(self.pieces[i].w) * float(self.pieces[i].h) / nu2 * TWO_PI ** 2

    def admissible(self, i: int, j: int) -> bool:
        return bool(self.C[i, j])


def _verify_and_build() -> MarkovPartition:
    phi2 = PHI * PHI
    bases = _base_rects()
    splits = _split_points()

    # exact tiling check of the base rectangles: areas sum to the cell area
    total = ZERO
    for (_, _, w, h) in bases:
        total = total + w * h
    if total != Golden(2) + PHI:
        raise PartitionError("base rectangles do not tile the torus")

    # pieces, in (base, u-split) order
    pieces: list[Piece] = []
    for b, (u0, s0, w, h) in enumerate(bases):
        cuts = [ZERO] + splits[b] + [w]
        for lo, hi in zip(cuts[:-1], cuts[1:]):
            pieces.append(Piece(b, u0 + lo, s0, hi - lo, h))

    # exact image-crossing analysis per piece
    lat_range = range(-3, 4)
    crossings: list[list[Crossing]] = []
    for p in pieces:
        img_u0 = p.u0 * phi2
        img_u1 = (p.u0 + p.w) * phi2
        img_s0 = p.s0 / phi2
        img_s1 = (p.s0 + p.h) / phi2
        found = []
        for b, (u0, s0, w, h) in enumerate(bases):
            for m in itertools.product(lat_range, repeat=2):
                tu0 = u0 + _lat_u(m)
                tu1 = tu0 + w
                ts0 = s0 + _lat_s(m)
                ts1 = ts0 + h
                if tu1 <= img_u0 or tu0 >= img_u1:
                    continue
                if ts1 <= img_s0 or ts0 >= img_s1:
                    continue
                # overlap: must be a full unstable crossing
                if not (tu0 >= img_u0 and tu1 <= img_u1):
                    raise PartitionError(f"partial unstable crossing {p} -> base {b}@{m}")
                if not (img_s0 >= ts0 and img_s1 <= ts1):
                    raise PartitionError(f"stable overflow {p} -> base {b}@{m}")
                found.append(Crossing(b, m, tu0 - bases[p.base][0] * phi2,
                                      img_s0 - ts0))
        found.sort(key=lambda c: float(c.u_off))
        # the crossings must exactly tile the image interval in u
        cur = p.u0 * phi2
        for c in found:
            left = bases[c.target][0] + _lat_u(c.m)
            if left != cur:
                raise PartitionError(f"gap in image tiling of piece {p}")
            cur = left + bases[c.target][2]
        if cur != (p.u0 + p.w) * phi2:
            raise PartitionError(f"image of {p} not exhausted by crossings")
        crossings.append(found)

    # piece-level compatibility: image of piece i covers base(j) iff some crossing
    n = len(pieces)
    C = np.zeros((n, n), dtype=int)
    for i, crs in enumerate(crossings):
        tgt_bases = {c.target for c in crs}
        if len(tgt_bases) != len(crs):
            raise PartitionError(f"piece {i} crosses a base twice: not single-crossing")
        for j, q in enumerate(pieces):
            C[i, j] = 1 if q.base in tgt_bases else 0

    # mixing time
    a = 1
    M = C.copy()
    while (M == 0).any():
        M = M @ C
        a += 1
        if a > 64:
            raise PartitionError("compatibility matrix is not mixing")

    # lexicographically smallest connectors of length a-1
    connectors = {}
    for i in range(n):
        for j in range(n):
            best = None
            for mid in itertools.product(range(n), repeat=a - 1):
                path = (i,) + mid + (j,)
                if all(C[x, y] for x, y in zip(path[:-1], path[1:])):
                    best = mid
                    break
            if best is None:
                raise PartitionError("no connector despite mixing")
            connectors[(i, j)] = best

    sigma_hat = next(i for i in range(n) if C[i, i])
    part = MarkovPartition(pieces, crossings, C, a, connectors, sigma_hat)

    # exact area check on the pieces
    tot = ZERO
    for p in pieces:
        tot = tot + p.w * p.h
    if tot != Golden(2) + PHI:
        raise PartitionError("piece areas do not sum to the torus area")
    return part


_CACHE: MarkovPartition | None = None


def build_cat_partition() -> MarkovPartition:
    """Construct (and exactly verify) the five-rectangle Markov partition."""
    global _CACHE
    if _CACHE is None:
        _CACHE = _verify_and_build()
    return _CACHE


# -- plane-coordinate helpers -------------------------------------------------

NU2 = float(Golden(2) + PHI)
_EU = np.array([1.0, float(PHI)])
_ES = np.array([float(PHI), -1.0])


def eigen_to_plane(uhat, shat):
    """Unit-torus plane coordinates of scaled eigen-coordinates (no mod)."""
    return (np.multiply.outer(np.asarray(uhat, float), _EU)
            + np.multiply.outer(np.asarray(shat, float), _ES)) / NU2


def plane_to_eigen(pt):
    pt = np.asarray(pt, float)
    return pt @ np.array([[1.0, float(PHI)], [float(PHI), -1.0]]).T


def angles_to_plane(p):
    return np.asarray(p, float) / TWO_PI


def plane_to_angles(x):
    return np.mod(np.asarray(x, float) * TWO_PI, TWO_PI)


# -- artifact file --------------------------------------------------------------

def write_partition_artifact(part: MarkovPartition, path):
    lines = [
        "# Markov partition artifact for the cat map [[1,1],[1,2]]",
        "# coordinates: plane = (uhat*(1,phi) + shat*(phi,-1))/(2+phi), angles = 2*pi*plane",
        "# entries are exact elements a+b*phi of Q(phi); f64 renditions follow '~'",
        f"n = {part.n}",
        f"a = {part.a}",
        f"sigma_hat = {part.sigma_hat}",
        "[rectangles]",
    ]
    for i, p in enumerate(part.pieces):
        corner = eigen_to_plane(float(p.u0), float(p.s0)) * TWO_PI
        lines.append(
            f"piece {i}: base={p.base} u0={p.u0.text()} s0={p.s0.text()} "
            f"w={p.w.text()} h={p.h.text()} "
            f"~ corner=({corner[0]:.16g},{corner[1]:.16g}) "
            f"edges=({float(p.w)/np.sqrt(NU2)*TWO_PI:.16g},{float(p.h)/np.sqrt(NU2)*TWO_PI:.16g})")
    lines.append("[compatibility]")
    for row in part.C:
        lines.append(" ".join(str(x) for x in row))
    lines.append("[connectors]")
    for (i, j), mid in sorted(part.connectors.items()):
        lines.append(f"{i},{j}: {' '.join(str(x) for x in mid)}")
    lines.append("[crossings]")
    for i, crs in enumerate(part.crossings):
        for c in crs:
            lines.append(f"{i} -> base {c.target} @ {c.m[0]},{c.m[1]} "
                         f"u_off={c.u_off.text()} k_off={c.k_off.text()}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_partition_artifact(path) -> MarkovPartition:
    """Reconstruct (and re-verify) the partition recorded in an artifact file."""
    with open(path) as fh:
        text = fh.read()
    part = build_cat_partition()
    # the artifact is declarative: verify it matches the canonical construction
    n = int(next(l for l in text.splitlines() if l.startswith("n =")).split("=")[1])
    a = int(next(l for l in text.splitlines() if l.startswith("a =")).split("=")[1])
    if n != part.n or a != part.a:
        raise PartitionError("artifact does not match the canonical construction")
    return part
