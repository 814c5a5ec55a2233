"""Minimum (optionally truncated) passage times and geodesics inside a box."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import _kernels as K
from .lattice import Coords, EdgeRef, GeometryError, LatticeBox, LatticePath

TIE_TOL = 1e-12


class EngineError(RuntimeError):
    """Internal consistency check of the search failed."""


@dataclass(frozen=True)
class Truncation:
    """Edge weights capped at ``k ** alpha``."""

    k: int
    alpha: float

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("truncation level k must be >= 1")
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")

    @property
    def cap(self) -> float:
        return float(self.k) ** self.alpha

    def apply(self, w):
        return np.minimum(w, self.cap)


@dataclass(frozen=True)
class PassageQuery:
    box: LatticeBox
    source: Coords
    target: Coords
    realization: object
    truncation: Truncation | None = None

    def __post_init__(self):
        for name in ("source", "target"):
            v = getattr(self, name)
            if isinstance(v, (int, np.integer)):
                v = self.box.decode_vertex(int(v))
            v = tuple(int(c) for c in v)
            if not self.box.contains(v):
                raise GeometryError(f"{name} {v} outside B_{self.box.radius}")
            object.__setattr__(self, name, v)
        if self.source == self.target:
            raise ValueError("source and target must differ")


@dataclass(frozen=True)
class GeodesicResult:
    value: float
    path: LatticePath
    raw_weights: np.ndarray
    certified_unbounded: bool
    tie_broken: bool
    box: LatticeBox
    truncation: Truncation | None = None

    @property
    def length(self) -> int:
        return len(self.path)

    @property
    def source(self) -> Coords:
        return self.path.vertices[0]

    @property
    def max_raw_weight(self) -> float:
        return float(self.raw_weights.max())


def certify_global(result: GeodesicResult, essinf: float) -> bool:
    """True when no path leaving the box can beat ``result.value``.

    Any path that exits the box crosses at least ``boundary_distance(source)``
    edges, each costing at least ``essinf``.  ``False`` is inconclusive.
    """
    if not essinf > 0:
        return False
    return result.value < essinf * result.box.boundary_distance(result.source)


def _essinf_of(real, truncation: Truncation | None) -> float:
    model = getattr(real, "model", None)
    if model is None:
        return 0.0
    e = model.essinf
    return min(e, truncation.cap) if truncation is not None else e


def shortest_passage(q: PassageQuery) -> GeodesicResult:
    real, box = q.realization, q.box
    if real.dim != box.dim:
        raise GeometryError("realization and box dimensions differ")
    arena = real.arena(box.radius)
    M, d, m = arena.box.radius, box.dim, box.radius
    src = arena.box.encode_vertex(q.source)
    tgt = arena.box.encode_vertex(q.target)
    cap = q.truncation.cap if q.truncation is not None else math.inf
    args = real.sampler_args()

    ws = arena.workspace()
    dist, pred, tie, done, touched = ws
    touched, nt = K.search_into(d, M, m, src, tgt, math.inf, TIE_TOL, arena.cache, cap, *args,
                                dist, pred, tie, done, touched)
    ws[4] = touched
    try:
        value = float(dist[tgt])
        tie_broken = bool(K.chain_has_tie(pred, tie, src, tgt))
        if not tie_broken:
            vids = K.pred_chain(pred, src, tgt)
    finally:
        K.reset(dist, pred, tie, done, touched, nt)
    if tie_broken:
        bound = value * (1 + 4 * TIE_TOL) + 1e-300
        ds, _, _ = K.search(d, M, m, src, -1, bound, TIE_TOL, arena.cache, cap, *args)
        dt, _, _ = K.search(d, M, m, tgt, -1, bound, TIE_TOL, arena.cache, cap, *args)
        vids = K.greedy_canonical(d, M, m, src, tgt, value, TIE_TOL, ds, dt, arena.cache, cap)
        if vids[-1] != tgt:
            raise EngineError("tie-break walk did not reach the target")

    raw = arena.cache[K.path_edge_ids(vids, d, M)]
    total = 0.0
    for w in np.minimum(raw, cap):
        total += w
    if abs(total - value) > TIE_TOL * max(value, 1.0):
        raise EngineError(f"path sum {total!r} does not match search value {value!r}")

    path = LatticePath([arena.box.decode_vertex(int(v)) for v in vids])
    res = GeodesicResult(value, path, raw, False, tie_broken, box, q.truncation)
    cert = certify_global(res, _essinf_of(real, q.truncation))
    return GeodesicResult(value, path, raw, cert, tie_broken, box, q.truncation)


def passage_time(real, box: LatticeBox, source: Sequence[int], target: Sequence[int],
                 truncation: Truncation | None = None) -> GeodesicResult:
    """Shorthand for ``shortest_passage(PassageQuery(...))``."""
    return shortest_passage(PassageQuery(box, tuple(source), tuple(target), real, truncation))


def tie_break(paths: Iterable[LatticePath]) -> LatticePath:
    """Select one path from a set of equally optimal paths sharing a source.

    Step by step from the source, keep only the paths whose next edge has the
    smallest centre, comparing centres on the last coordinate first.
    """
    pool = list(set(paths))
    if not pool:
        raise ValueError("tie_break needs at least one path")
    starts = {p.vertices[0] for p in pool}
    if len(starts) != 1:
        raise ValueError("paths do not share a source")
    step = 0
    while len(pool) > 1:
        keys = [p.edges[step].center_key() for p in pool]
        best = min(keys)
        pool = [p for p, k in zip(pool, keys) if k == best]
        step += 1
    return pool[0]


def path_passage_time(real, path: LatticePath, truncation: Truncation | None = None) -> float:
    """Sum of (possibly truncated) weights along ``path``, in path order."""
    total = 0.0
    for e in path.edges:
        w = real.weight(e)
        total += min(w, truncation.cap) if truncation is not None else w
    return total


def straight_line_sum(real, n: int, dim: int) -> float:
    """Raw passage time of the axis path ``f_1, ..., f_n``."""
    return path_passage_time(real, LatticePath([(i,) + (0,) * (dim - 1) for i in range(n + 1)]))


def geodesic_edges(result: GeodesicResult) -> tuple[EdgeRef, ...]:
    return result.path.edges
