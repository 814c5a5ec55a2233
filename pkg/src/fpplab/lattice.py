"""Geometry of the boxes ``B_m = [-m, m]^d`` of the integer lattice.

Vertices are indexed row-major over the shifted coordinates ``c + m``.  Edges
are indexed lexicographically by (axis, lower endpoint), where within one axis
block the lower endpoint runs row-major over a grid that is one shorter along
that axis.  Both schemes are pure functions of the coordinates.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from itertools import product
from typing import Iterator, Sequence

import numpy as np

Coords = tuple[int, ...]


class GeometryError(ValueError):
    """A coordinate, edge or path does not fit the requested geometry."""


@dataclass(frozen=True)
class EdgeRef:
    """Edge from ``lower`` to ``lower + e_axis``."""

    lower: Coords
    axis: int

    def __post_init__(self):
        object.__setattr__(self, "lower", tuple(int(c) for c in self.lower))
        if not 0 <= self.axis < len(self.lower):
            raise GeometryError(f"axis {self.axis} out of range for dim {len(self.lower)}")

    @property
    def dim(self) -> int:
        return len(self.lower)

    @property
    def upper(self) -> Coords:
        up = list(self.lower)
        up[self.axis] += 1
        return tuple(up)

    @property
    def endpoints(self) -> tuple[Coords, Coords]:
        return self.lower, self.upper

    @property
    def center(self) -> tuple[float, ...]:
        return tuple(c + 0.5 if j == self.axis else float(c) for j, c in enumerate(self.lower))

    def center_key(self) -> tuple[int, ...]:
        """Tie-break key: doubled centre coordinates, last axis first."""
        doubled = [2 * c for c in self.lower]
        doubled[self.axis] += 1
        return tuple(reversed(doubled))

    @classmethod
    def between(cls, a: Sequence[int], b: Sequence[int]) -> "EdgeRef":
        a, b = tuple(a), tuple(b)
        diff = [j for j in range(len(a)) if a[j] != b[j]]
        if len(a) != len(b) or len(diff) != 1 or abs(a[diff[0]] - b[diff[0]]) != 1:
            raise GeometryError(f"{a} and {b} are not lattice neighbours")
        j = diff[0]
        return cls(a if a[j] < b[j] else b, j)


@dataclass(frozen=True)
class LatticeBox:
    dim: int
    radius: int

    def __post_init__(self):
        if self.dim < 2:
            raise GeometryError("dim must be >= 2")
        if self.radius < 1:
            raise GeometryError("radius must be >= 1")

    @property
    def side(self) -> int:
        return 2 * self.radius + 1

    @property
    def n_vertices(self) -> int:
        return self.side ** self.dim

    @property
    def edges_per_axis(self) -> int:
        return 2 * self.radius * self.side ** (self.dim - 1)

    @property
    def n_edges(self) -> int:
        return self.dim * self.edges_per_axis

    @cached_property
    def _vstrides(self) -> tuple[int, ...]:
        return tuple(self.side ** (self.dim - 1 - j) for j in range(self.dim))

    def contains(self, coords: Sequence[int]) -> bool:
        return len(coords) == self.dim and all(abs(c) <= self.radius for c in coords)

    def contains_edge(self, e: EdgeRef) -> bool:
        return self.contains(e.lower) and self.contains(e.upper)

    def encode_vertex(self, coords: Sequence[int]) -> int:
        if not self.contains(coords):
            raise GeometryError(f"vertex {tuple(coords)} outside B_{self.radius}")
        return sum((c + self.radius) * s for c, s in zip(coords, self._vstrides))

    def decode_vertex(self, vid: int) -> Coords:
        if not 0 <= vid < self.n_vertices:
            raise GeometryError(f"vertex id {vid} out of range")
        out = []
        for _ in range(self.dim):
            vid, r = divmod(vid, self.side)
            out.append(r - self.radius)
        return tuple(reversed(out))

    def encode_edge(self, e: EdgeRef) -> int:
        if e.dim != self.dim or not self.contains_edge(e):
            raise GeometryError(f"edge {e} outside B_{self.radius}")
        m = self.radius
        eid = 0
        for j, c in enumerate(e.lower):
            n_j = 2 * m if j == e.axis else self.side
            eid = eid * n_j + (c + m)
        return e.axis * self.edges_per_axis + eid

    def decode_edge(self, eid: int) -> EdgeRef:
        if not 0 <= eid < self.n_edges:
            raise GeometryError(f"edge id {eid} out of range")
        axis, rem = divmod(eid, self.edges_per_axis)
        lower = []
        for j in reversed(range(self.dim)):
            n_j = 2 * self.radius if j == axis else self.side
            rem, r = divmod(rem, n_j)
            lower.append(r - self.radius)
        return EdgeRef(tuple(reversed(lower)), axis)

    def vertices(self) -> Iterator[Coords]:
        return product(range(-self.radius, self.radius + 1), repeat=self.dim)

    def edges(self) -> Iterator[EdgeRef]:
        """All edges in ID order."""
        for eid in range(self.n_edges):
            yield self.decode_edge(eid)

    def edge_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """(lower coords, axis) arrays for all edges, in ID order."""
        m, d = self.radius, self.dim
        lowers, axes = [], []
        for a in range(d):
            ranges = [np.arange(-m, m) if j == a else np.arange(-m, m + 1) for j in range(d)]
            grid = np.stack(np.meshgrid(*ranges, indexing="ij"), axis=-1).reshape(-1, d)
            lowers.append(grid)
            axes.append(np.full(len(grid), a))
        return np.concatenate(lowers).astype(np.int64), np.concatenate(axes).astype(np.int64)

    def boundary_distance(self, coords: Sequence[int]) -> int:
        """Graph distance from ``coords`` to the boundary of the box."""
        return min(self.radius - abs(c) for c in coords)


def origin(dim: int) -> Coords:
    return (0,) * dim


def axis_point(n: int, dim: int) -> Coords:
    return (n,) + (0,) * (dim - 1)


def axis_edge(i: int, dim: int, box: LatticeBox | None = None) -> EdgeRef:
    """The edge between ``(i-1, 0, ..., 0)`` and ``(i, 0, ..., 0)``."""
    if i < 1:
        raise GeometryError("axis edges are indexed from 1")
    if box is not None and i > box.radius:
        raise GeometryError(f"f_{i} does not fit in B_{box.radius}")
    return EdgeRef(axis_point(i - 1, dim), 0)


class LatticePath:
    """Self-avoiding nearest-neighbour path stored as its vertex sequence."""

    __slots__ = ("vertices",)

    def __init__(self, vertices: Sequence[Sequence[int]]):
        verts = tuple(tuple(int(c) for c in v) for v in vertices)
        if len(verts) < 2:
            raise GeometryError("a path needs at least one edge")
        if len(set(verts)) != len(verts):
            raise GeometryError("path revisits a vertex")
        for a, b in zip(verts, verts[1:]):
            if sum(abs(x - y) for x, y in zip(a, b)) != 1 or len(a) != len(b):
                raise GeometryError(f"{a} -> {b} is not a lattice step")
        self.vertices = verts

    @classmethod
    def from_edges(cls, start: Sequence[int], edges: Sequence[EdgeRef]) -> "LatticePath":
        verts = [tuple(start)]
        for e in edges:
            lo, up = e.endpoints
            if verts[-1] == lo:
                verts.append(up)
            elif verts[-1] == up:
                verts.append(lo)
            else:
                raise GeometryError(f"edge {e} does not continue the path at {verts[-1]}")
        return cls(verts)

    @property
    def edges(self) -> tuple[EdgeRef, ...]:
        return tuple(EdgeRef.between(a, b) for a, b in zip(self.vertices, self.vertices[1:]))

    @property
    def endpoints(self) -> tuple[Coords, Coords]:
        return self.vertices[0], self.vertices[-1]

    def __len__(self) -> int:
        return len(self.vertices) - 1

    def __eq__(self, other) -> bool:
        return isinstance(other, LatticePath) and self.vertices == other.vertices

    def __hash__(self) -> int:
        return hash(self.vertices)

    def __repr__(self) -> str:
        return f"LatticePath({list(self.vertices)!r})"

    def inside(self, box: LatticeBox) -> bool:
        return all(box.contains(v) for v in self.vertices)

    def max_abs_coord(self) -> int:
        return max(max(abs(c) for c in v) for v in self.vertices)


# d=2 nine-edge loop around the edge (0,0)-(1,0), in (along, across) coordinates.
_NINE_EDGE_TEMPLATE = ((0, 0), (-1, 0), (-1, 1), (-1, 2), (0, 2), (1, 2), (2, 2), (2, 1), (2, 0), (1, 0))


def detour_paths(e: EdgeRef, box: LatticeBox | None = None) -> list[LatticePath]:
    """``2d`` pairwise edge-disjoint paths joining the endpoints of ``e``.

    The edge itself, a 3-edge detour in each of the ``2(d-1)`` transverse
    directions, and a 9-edge loop in the plane of ``e``'s axis and the first
    transverse axis.  With ``box`` given, every path must fit inside it.
    """
    d, a = e.dim, e.axis
    x = np.array(e.lower)
    unit = np.eye(d, dtype=int)
    transverse = [t for t in range(d) if t != a]
    paths = [LatticePath([e.lower, e.upper])]
    for t in transverse:
        for s in (1, -1):
            side = x + s * unit[t]
            paths.append(LatticePath([x, side, side + unit[a], x + unit[a]]))
    t0 = transverse[0]
    paths.append(LatticePath([x + p * unit[a] + q * unit[t0] for p, q in _NINE_EDGE_TEMPLATE]))
    if box is not None:
        for p in paths:
            if not p.inside(box):
                raise GeometryError(f"detours of {e} need margin 2 inside B_{box.radius}")
    return paths
