"""Geometry of the discrete torus (Z/NZ)^d and finite subsets of Z^d.

Design notes
------------
Sites are stored as flat row-major indices into the N^d cell array:
``index = sum_k coord[k] * N**(d-1-k)`` with every coordinate reduced to the
canonical window ``[0, N)``.  All heavy consumers (walk kernels, sparse
operators) work directly on flat indices; coordinate arrays only appear at
API boundaries.

Distances are l-infinity distances, minimised over torus translates.  An
axis-aligned box ``B(x, r)`` is the l-infinity ball, which is what every
radius in this package refers to.  Adjacency is nearest-neighbour (one step
along one axis), so a box of radius r has ``min(2r+1, N)**d`` torus sites.

Boundaries follow the usual lattice convention: the inner boundary of U is
the set of sites of U with a nearest neighbour outside U, the outer boundary
is the set of sites outside U with a nearest neighbour in U.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "TorusGeometry",
    "BoxSpec",
    "SiteSet",
    "box_sites_zd",
    "enclosing_radius",
    "separation",
    "concentric_radii",
]


@dataclass(frozen=True)
class TorusGeometry:
    """The torus (Z/NZ)^d with row-major flat site indexing."""

    d: int
    N: int

    def __post_init__(self):
        if self.d < 1:
            raise ValueError(f"dimension must be >= 1, got d={self.d}")
        if self.N < 3:
            raise ValueError(f"side must be >= 3, got N={self.N}")

    @property
    def n_sites(self) -> int:
        return self.N**self.d

    @property
    def strides(self) -> np.ndarray:
        """Row-major strides, ``strides[k] = N**(d-1-k)``."""
        return self.N ** np.arange(self.d - 1, -1, -1, dtype=np.int64)

    def wrap(self, coords: np.ndarray) -> np.ndarray:
        """Reduce integer coordinates to the canonical window [0, N)."""
        return np.mod(np.asarray(coords, dtype=np.int64), self.N)

    def site_index(self, coords) -> np.ndarray | np.int64:
        """Flat index of one coordinate tuple or an (n, d) array of them."""
        c = self.wrap(coords)
        if c.ndim == 1:
            if c.shape[0] != self.d:
                raise ValueError(f"expected {self.d} coordinates, got {c.shape[0]}")
            return np.int64(np.dot(c, self.strides))
        if c.shape[-1] != self.d:
            raise ValueError(f"expected trailing axis of length {self.d}")
        return c @ self.strides

    def coords_of(self, index) -> np.ndarray:
        """Canonical coordinates of one flat index or an array of them."""
        idx = np.asarray(index, dtype=np.int64)
        out = np.empty(idx.shape + (self.d,), dtype=np.int64)
        rem = idx
        for k, s in enumerate(self.strides):
            out[..., k] = rem // s
            rem = rem % s
        return out

    def neighbors(self, index) -> np.ndarray:
        """Flat indices of the 2d nearest neighbours of each given site."""
        coords = np.atleast_2d(self.coords_of(index))
        n = coords.shape[0]
        out = np.empty((n, 2 * self.d), dtype=np.int64)
        for k in range(self.d):
            for j, sign in enumerate((+1, -1)):
                c = coords.copy()
                c[:, k] = (c[:, k] + sign) % self.N
                out[:, 2 * k + j] = c @ self.strides
        return out if np.ndim(index) else out[0]

    def dist_inf(self, a, b) -> np.ndarray | np.int64:
        """Torus l-infinity distance between coordinate arrays a and b."""
        delta = np.abs(self.wrap(a) - self.wrap(b))
        delta = np.minimum(delta, self.N - delta)
        return delta.max(axis=-1)


def box_sites_zd(center: Sequence[int], radius: int, d: int | None = None) -> np.ndarray:
    """All Z^d points of the l-infinity ball B(center, radius), shape (m, d).

    Lexicographic order.  This is the plain-lattice companion of
    :meth:`BoxSpec.sites`; potential-theory code works on these arrays.
    """
    center = np.asarray(center, dtype=np.int64)
    if d is None:
        d = center.shape[0]
    if radius < 0:
        raise ValueError("radius must be >= 0")
    rng = np.arange(-radius, radius + 1, dtype=np.int64)
    grids = np.meshgrid(*([rng] * d), indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=-1)
    return pts + center


def enclosing_radius(points: np.ndarray) -> int:
    """Smallest r with all points inside B(0, r) (l-infinity, in Z^d)."""
    pts = np.atleast_2d(np.asarray(points, dtype=np.int64))
    return int(np.abs(pts).max()) if pts.size else 0


@dataclass(frozen=True)
class BoxSpec:
    """An l-infinity ball B(center, radius) on a torus."""

    center: tuple
    radius: int

    def __post_init__(self):
        if self.radius < 0:
            raise ValueError("radius must be >= 0")

    def sites(self, geometry: TorusGeometry) -> np.ndarray:
        """Flat torus indices of the box (unique; the whole torus if 2r+1 >= N)."""
        if len(self.center) != geometry.d:
            raise ValueError("center dimension does not match geometry")
        if 2 * self.radius + 1 >= geometry.N:
            return np.arange(geometry.n_sites, dtype=np.int64)
        pts = box_sites_zd(self.center, self.radius, geometry.d)
        return np.unique(geometry.site_index(pts))


class SiteSet:
    """A set of torus sites: sorted flat indices plus a dense membership mask.

    N^d stays comfortably below 2**31 at the scales this package targets, so
    the dense boolean mask is always kept alongside the sorted index array;
    the mask is what the walk kernels consume.
    """

    __slots__ = ("geometry", "indices", "mask")

    def __init__(self, geometry: TorusGeometry, indices):
        self.geometry = geometry
        idx = np.unique(np.asarray(indices, dtype=np.int64))
        if idx.size and (idx[0] < 0 or idx[-1] >= geometry.n_sites):
            raise ValueError("site index out of range")
        self.indices = idx
        self.mask = np.zeros(geometry.n_sites, dtype=bool)
        self.mask[idx] = True

    # -- constructors -------------------------------------------------

    @classmethod
    def from_coords(cls, geometry: TorusGeometry, coords) -> "SiteSet":
        pts = np.atleast_2d(np.asarray(coords, dtype=np.int64))
        return cls(geometry, geometry.site_index(pts))

    @classmethod
    def from_boxes(cls, geometry: TorusGeometry, boxes: Iterable[BoxSpec]) -> "SiteSet":
        parts = [b.sites(geometry) for b in boxes]
        return cls(geometry, np.concatenate(parts) if parts else np.empty(0, dtype=np.int64))

    @classmethod
    def empty(cls, geometry: TorusGeometry) -> "SiteSet":
        return cls(geometry, np.empty(0, dtype=np.int64))

    # -- set algebra ---------------------------------------------------

    def union(self, other: "SiteSet") -> "SiteSet":
        return SiteSet(self.geometry, np.concatenate([self.indices, other.indices]))

    def intersection(self, other: "SiteSet") -> "SiteSet":
        return SiteSet(self.geometry, self.indices[other.mask[self.indices]])

    def difference(self, other: "SiteSet") -> "SiteSet":
        return SiteSet(self.geometry, self.indices[~other.mask[self.indices]])

    def complement(self) -> "SiteSet":
        return SiteSet(self.geometry, np.nonzero(~self.mask)[0])

    def contains(self, indices) -> np.ndarray:
        return self.mask[np.asarray(indices, dtype=np.int64)]

    def __len__(self) -> int:
        return int(self.indices.size)

    def __eq__(self, other) -> bool:
        return isinstance(other, SiteSet) and self.geometry == other.geometry and np.array_equal(self.indices, other.indices)

    def __repr__(self) -> str:
        return f"SiteSet(d={self.geometry.d}, N={self.geometry.N}, size={len(self)})"

    # -- boundaries ----------------------------------------------------

    def inner_boundary(self) -> "SiteSet":
        """Sites of U with a nearest neighbour outside U.

        Raises on the empty set and on the full torus, where the notion
        degenerates.
        """
        self._check_proper("inner_boundary")
        nbr = self.geometry.neighbors(self.indices)
        keep = ~self.mask[nbr].all(axis=1)
        return SiteSet(self.geometry, self.indices[keep])

    def outer_boundary(self) -> "SiteSet":
        """Sites outside U with a nearest neighbour in U."""
        self._check_proper("outer_boundary")
        nbr = self.geometry.neighbors(self.indices).ravel()
        outside = nbr[~self.mask[nbr]]
        return SiteSet(self.geometry, outside)

    def _check_proper(self, what: str):
        if len(self) == 0:
            raise ValueError(f"{what} of the empty set is undefined")
        if len(self) == self.geometry.n_sites:
            raise ValueError(f"{what} of the full torus is undefined")


def separation(geometry: TorusGeometry, centers) -> int:
    """Minimal pairwise torus l-infinity distance of the centers; N if only one.

    This is the scale that calibrates the concentric-box ladder around a
    family of marked boxes.
    """
    pts = np.atleast_2d(np.asarray(centers, dtype=np.int64))
    n = pts.shape[0]
    if n == 0:
        raise ValueError("need at least one center")
    if n == 1:
        return geometry.N
    best = geometry.N
    for i in range(n - 1):
        dij = geometry.dist_inf(pts[i + 1 :], pts[i])
        best = min(best, int(np.min(dij)))
    return best


def concentric_radii(s: int, epsilon: float) -> tuple[int, int, int]:
    """Radii (r_A, r_B, r_C) of the standard concentric-box ladder at scale s.

    The exponent ladder is ``r_A = s**(1-eps)``, ``r_B = s**(1-eps/2)``,
    ``r_C = s**(1-eps/4)`` rounded down.  At small s the raw exponents can
    collide or exceed the packing constraint, so radii are pushed apart to be
    strictly increasing and r_C is capped at ``(s-1)//2`` (the largest radius
    for which boxes at pairwise distance >= s stay disjoint).  Raises if even
    the clamped ladder cannot fit.
    """
    if s < 7:
        raise ValueError(f"separation s={s} too small for a three-level ladder")
    if not (0.0 < epsilon < 1.0):
        raise ValueError("epsilon must be in (0, 1)")
    r_a = max(1, int(s ** (1.0 - epsilon)))
    r_b = max(r_a + 1, int(s ** (1.0 - epsilon / 2)))
    r_c = max(r_b + 1, int(s ** (1.0 - epsilon / 4)))
    cap = (s - 1) // 2
    r_c = min(r_c, cap)
    r_b = min(r_b, r_c - 1)
    r_a = min(r_a, r_b - 1)
    if r_a < 1:
        raise ValueError(f"cannot fit A < B < C ladder below radius {cap} at s={s}")
    return r_a, r_b, r_c
