"""Planar node lattices for the finite-difference Toda system.

Nodes sit at ``offset + k*h`` for integer k.  Arrays are indexed ``[i, j]``
with ``x = xs[i]`` and ``y = ys[j]``.  A grid carries three masks:

* ``interior``  unknown nodes (the Dirichlet problem is posed there)
* ``boundary``  non-interior nodes with an interior 4-neighbour (Dirichlet data)
* ``active``    their union; everything else is ignored
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MIN_INTERIOR_SPAN = 16


@dataclass(frozen=True, eq=False)
class Grid2D:
    xs: np.ndarray
    ys: np.ndarray
    h: float
    offset: tuple
    interior: np.ndarray
    shape_kind: str  # "rectangle" or "disc"
    bounds: tuple  # (x0, x1, y0, y1) for rectangles, (R,) for discs

    def __post_init__(self):
        if not self.h > 0:
            raise ValueError("grid spacing must be positive")
        ii, jj = np.nonzero(self.interior)
        if ii.size == 0 or np.ptp(ii) + 1 < MIN_INTERIOR_SPAN or np.ptp(jj) + 1 < MIN_INTERIOR_SPAN:
            raise ValueError(f"grid needs at least {MIN_INTERIOR_SPAN}x{MIN_INTERIOR_SPAN} interior nodes")
        if self.interior[[0, -1], :].any() or self.interior[:, [0, -1]].any():
            raise ValueError("interior nodes must not touch the lattice edge")

    @classmethod
    def rectangle(cls, x0, x1, y0, y1, h, offset=None) -> "Grid2D":
        """Lattice nodes inside [x0, x1] x [y0, y1]; the outermost layer is boundary."""
        ox, oy = (h / 3.0, h / 3.0) if offset is None else offset
        xs = _axis(x0, x1, h, ox)
        ys = _axis(y0, y1, h, oy)
        interior = np.zeros((xs.size, ys.size), dtype=bool)
        interior[1:-1, 1:-1] = True
        return cls(xs, ys, float(h), (ox, oy), interior, "rectangle", (x0, x1, y0, y1))

    @classmethod
    def disc(cls, radius, h, offset=None) -> "Grid2D":
        """Interior nodes are those with |z| < radius."""
        ox, oy = (h / 3.0, h / 3.0) if offset is None else offset
        pad = radius + 1.5 * h
        xs = _axis(-pad, pad, h, ox)
        ys = _axis(-pad, pad, h, oy)
        z = xs[:, None] + 1j * ys[None, :]
        interior = np.abs(z) < radius
        return cls(xs, ys, float(h), (ox, oy), interior, "disc", (radius,))

    @property
    def shape(self) -> tuple:
        return (self.xs.size, self.ys.size)

    @property
    def z(self) -> np.ndarray:
        return self.xs[:, None] + 1j * self.ys[None, :]

    @property
    def boundary(self) -> np.ndarray:
        near = np.zeros_like(self.interior)
        near[1:, :] |= self.interior[:-1, :]
        near[:-1, :] |= self.interior[1:, :]
        near[:, 1:] |= self.interior[:, :-1]
        near[:, :-1] |= self.interior[:, 1:]
        return near & ~self.interior

    @property
    def active(self) -> np.ndarray:
        return self.interior | self.boundary

    def distance_to_edge(self) -> np.ndarray:
        """Distance from each node to the domain boundary (negative outside)."""
        z = self.z
        if self.shape_kind == "disc":
            return self.bounds[0] - np.abs(z)
        ib, jb = np.nonzero(self.interior)
        x_lo, x_hi = self.xs[ib.min() - 1], self.xs[ib.max() + 1]
        y_lo, y_hi = self.ys[jb.min() - 1], self.ys[jb.max() + 1]
        x, y = z.real, z.imag
        return np.minimum.reduce([x - x_lo, x_hi - x, y - y_lo, y_hi - y])

    def region(self, margin: float) -> np.ndarray:
        """Interior nodes farther than ``margin`` from the domain boundary."""
        return self.interior & (self.distance_to_edge() > margin)

    def nearest_node(self, point: complex) -> tuple:
        i = int(np.argmin(np.abs(self.xs - point.real)))
        j = int(np.argmin(np.abs(self.ys - point.imag)))
        return i, j

    def patch(self, point: complex, half: int = 1) -> np.ndarray:
        """Mask of the (2*half+1)^2 node block around the node nearest ``point``."""
        i, j = self.nearest_node(point)
        m = np.zeros(self.shape, dtype=bool)
        m[max(i - half, 0) : i + half + 1, max(j - half, 0) : j + half + 1] = True
        return m

    def refine(self) -> "Grid2D":
        """Same domain and absolute offset at half the spacing (nodes nested)."""
        h = self.h / 2.0
        if self.shape_kind == "disc":
            return Grid2D.disc(self.bounds[0], h, self.offset)
        return Grid2D.rectangle(*self.bounds, h, self.offset)

    def contains_nodes_of(self, coarse: "Grid2D", tol: float = 1e-9) -> bool:
        """True if every active node of ``coarse`` is a node of this grid."""
        ratio = coarse.h / self.h
        if abs(ratio - round(ratio)) > tol or round(ratio) < 1:
            return False
        zc = coarse.z[coarse.active]
        kx = (zc.real - self.offset[0]) / self.h
        ky = (zc.imag - self.offset[1]) / self.h
        return bool(np.all(np.abs(kx - np.round(kx)) < tol) and np.all(np.abs(ky - np.round(ky)) < tol))

    def describe(self) -> dict:
        return {
            "kind": self.shape_kind,
            "bounds": list(self.bounds),
            "h": self.h,
            "offset": list(self.offset),
            "nx": int(self.xs.size),
            "ny": int(self.ys.size),
            "x0": float(self.xs[0]),
            "y0": float(self.ys[0]),
        }

    @classmethod
    def from_description(cls, d: dict) -> "Grid2D":
        if d["kind"] == "disc":
            return cls.disc(d["bounds"][0], d["h"], tuple(d["offset"]))
        return cls.rectangle(*d["bounds"], d["h"], tuple(d["offset"]))


def _axis(lo, hi, h, off):
    k0 = int(np.ceil((lo - off) / h - 1e-9))
    k1 = int(np.floor((hi - off) / h + 1e-9))
    return off + h * np.arange(k0, k1 + 1)


def laplacian(values: np.ndarray, h: float) -> np.ndarray:
    """Five-point Laplacian; NaN on the outermost lattice layer."""
    out = np.full(values.shape, np.nan)
    out[1:-1, 1:-1] = (
        values[2:, 1:-1] + values[:-2, 1:-1] + values[1:-1, 2:] + values[1:-1, :-2] - 4.0 * values[1:-1, 1:-1]
    ) / h**2
    return out
