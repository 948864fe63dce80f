"""Binary orbit persistence.

Record stream layout (all little-endian):
  magic   4 bytes  b"SRBL"
  version u32      currently 1
  d       u32
  N       u32
  eps     f64
  cid_len u32      length of the coupling id
  cid     bytes    utf-8 coupling id
  frames  f64 x (2 * nsites) per frame, sites row-major, (angle1, angle2) pairs
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .lattice import LatticeGeometry

MAGIC = b"SRBL"
VERSION = 1
_HEADER = struct.Struct("<4sIIIdI")


@dataclass
class OrbitHeader:
    d: int
    N: int
    eps: float
    coupling_id: str

    @property
    def geometry(self) -> LatticeGeometry:
        return LatticeGeometry(self.d, self.N)


def write_orbit(path, header: OrbitHeader, frames: np.ndarray):
    """frames: (T, nsites, 2) angles."""
    geom = header.geometry
    frames = np.asarray(frames, dtype="<f8")
    if frames.ndim != 3 or frames.shape[1:] != (geom.nsites, 2):
        raise ValueError(f"frames must have shape (T, {geom.nsites}, 2)")
    cid = header.coupling_id.encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, header.d, header.N, header.eps, len(cid)))
        fh.write(cid)
        fh.write(frames.tobytes())


def read_orbit(path) -> tuple[OrbitHeader, np.ndarray]:
    with open(path, "rb") as fh:
        raw = fh.read(_HEADER.size)
        magic, version, d, N, eps, cid_len = _HEADER.unpack(raw)
        if magic != MAGIC:
            raise ValueError("not an orbit file (bad magic)")
        if version != VERSION:
            raise ValueError(f"unsupported orbit file version {version}")
        cid = fh.read(cid_len).decode("utf-8")
        body = fh.read()
    header = OrbitHeader(d=d, N=N, eps=eps, coupling_id=cid)
    n = header.geometry.nsites
    frames = np.frombuffer(body, dtype="<f8")
    if frames.size % (2 * n):
        raise ValueError("truncated orbit file")
    return header, frames.reshape(-1, n, 2).astype(float)
