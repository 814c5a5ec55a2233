"""Exact ground truth on tiny boxes.

Two tools: exhaustive self-avoiding path enumeration (minimum passage time
with the literal set-based tie-break), and exact expectations over a finite
product space of discrete edge weights (conditional expectations along the
edge filtration and the resulting martingale differences).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .geodesic import TIE_TOL, Truncation, tie_break
from .lattice import Coords, EdgeRef, GeometryError, LatticeBox, LatticePath
from .weights import DistributionSpec, PointMass, TwoPoint

DEFAULT_PATH_BUDGET = 2_000_000
MAX_CONFIGS = 2 ** 20
EXACT_LIMIT = 2 ** 14


class BudgetExceeded(RuntimeError):
    """The requested enumeration is larger than the allowed budget."""


@dataclass(frozen=True)
class PathSet:
    """All self-avoiding paths between two vertices of a box."""

    box: LatticeBox
    source: Coords
    target: Coords
    paths: tuple[LatticePath, ...]
    incidence: np.ndarray  # (n_paths, n_edges) 0/1
    edge_ids: tuple[tuple[int, ...], ...]  # per path, in path order

    def values(self, weights: np.ndarray) -> np.ndarray:
        """Path passage times for one weight vector or a (configs, edges) matrix."""
        return np.asarray(weights) @ self.incidence.T


def enumerate_paths(box: LatticeBox, source: Sequence[int], target: Sequence[int],
                    budget: int = DEFAULT_PATH_BUDGET, allow_large: bool = False) -> PathSet:
    """Depth-first enumeration with neighbours visited in lexicographic order."""
    if not allow_large and not (box.dim == 2 and box.radius <= 2):
        raise BudgetExceeded("path enumeration is limited to d=2, m<=2 unless allow_large=True")
    return _enumerate(box, tuple(source), tuple(target), budget)


@lru_cache(maxsize=32)
def _enumerate(box: LatticeBox, source: Coords, target: Coords, budget: int) -> PathSet:
    for v in (source, target):
        if not box.contains(v):
            raise GeometryError(f"{v} outside B_{box.radius}")
    if source == target:
        raise ValueError("source and target must differ")
    d = box.dim
    nbrs = {}
    for v in box.vertices():
        out = []
        for a in range(d):
            for s in (-1, 1):
                w = v[:a] + (v[a] + s,) + v[a + 1:]
                if box.contains(w):
                    out.append(w)
        nbrs[v] = sorted(out)

    found: list[tuple[Coords, ...]] = []
    stack = [source]
    on_path = {source}
    iters = [iter(nbrs[source])]
    while iters:
        nxt = next(iters[-1], None)
        if nxt is None:
            iters.pop()
            on_path.discard(stack.pop())
            continue
        if nxt in on_path:
            continue
        if nxt == target:
            found.append(tuple(stack) + (target,))
            if len(found) > budget:
                raise BudgetExceeded(f"more than {budget} self-avoiding paths")
            continue
        stack.append(nxt)
        on_path.add(nxt)
        iters.append(iter(nbrs[nxt]))

    paths = tuple(LatticePath(p) for p in found)
    inc = np.zeros((len(paths), box.n_edges), dtype=np.float64)
    eids = []
    for i, p in enumerate(paths):
        ids = tuple(box.encode_edge(e) for e in p.edges)
        inc[i, list(ids)] = 1.0
        eids.append(ids)
    return PathSet(box, source, target, paths, inc, tuple(eids))


def _cap(weights: np.ndarray, truncation: Truncation | None) -> np.ndarray:
    return truncation.apply(weights) if truncation is not None else np.asarray(weights, dtype=float)


def _sequential_sum(w: np.ndarray, ids: Sequence[int]) -> float:
    total = 0.0
    for i in ids:
        total += w[i]
    return total


def canonical_from_values(ps: PathSet, vals: np.ndarray) -> tuple[float, int]:
    """(minimum value, index of the tie-broken optimal path) for one row of values."""
    best = vals.min()
    tied = np.flatnonzero(vals <= best + TIE_TOL * max(best, 1.0))
    if len(tied) == 1:
        return float(best), int(tied[0])
    chosen = tie_break([ps.paths[i] for i in tied])
    return float(best), ps.paths.index(chosen)


def brute_force_passage(box: LatticeBox, source, target, realization,
                        truncation: Truncation | None = None, *,
                        budget: int = DEFAULT_PATH_BUDGET,
                        allow_large: bool = False) -> tuple[float, LatticePath]:
    """Exact minimum over every self-avoiding path in ``box`` and its canonical path.

    ``realization`` is anything with ``box_weights(box)``, or a raw weight
    vector in the box's edge-ID order.
    """
    ps = enumerate_paths(box, source, target, budget, allow_large)
    w = realization.box_weights(box) if hasattr(realization, "box_weights") else np.asarray(realization)
    w = _cap(w, truncation)
    _, idx = canonical_from_values(ps, ps.values(w))
    return _sequential_sum(w, ps.edge_ids[idx]), ps.paths[idx]


# ---------------------------------------------------------------------------
# finite product spaces


def _atoms(spec: DistributionSpec) -> tuple[tuple[float, Fraction], ...]:
    if isinstance(spec, TwoPoint):
        p = Fraction(spec.p)
        return ((float(spec.v1), p), (float(spec.v2), 1 - p))
    if isinstance(spec, PointMass):
        return ((float(spec.c), Fraction(1)),)
    raise TypeError(f"{type(spec).__name__} has no finite support")


class DiscreteProductSpace:
    """Independent discrete weights on every edge of ``box``.

    Configurations are indexed as a tensor with one axis per edge, in edge-ID
    order.  Probabilities are exact fractions (floats are converted exactly).
    """

    def __init__(self, box: LatticeBox, specs: DistributionSpec | Sequence[DistributionSpec]):
        if isinstance(specs, DistributionSpec):
            specs = [specs] * box.n_edges
        if len(specs) != box.n_edges:
            raise ValueError(f"need {box.n_edges} edge distributions")
        self.box = box
        self.specs = tuple(specs)
        self.atoms = tuple(_atoms(s) for s in self.specs)
        self.shape = tuple(len(a) for a in self.atoms)
        self.size = math.prod(self.shape)
        if self.size > MAX_CONFIGS:
            raise BudgetExceeded(f"{self.size} configurations exceed the 2^20 budget")
        self.exact = self.size <= EXACT_LIMIT

    @property
    def n_edges(self) -> int:
        return len(self.specs)

    def _num(self, x: Fraction):
        return x if self.exact else float(x)

    def edge_probs(self, i: int) -> np.ndarray:
        return np.array([self._num(p) for _, p in self.atoms[i]], dtype=object if self.exact else float)

    def weight_matrix(self) -> np.ndarray:
        """(size, n_edges) raw weights, rows in C order of the configuration tensor."""
        cols = [np.array([v for v, _ in a]) for a in self.atoms]
        grids = np.meshgrid(*cols, indexing="ij")
        return np.stack([g.reshape(-1) for g in grids], axis=1)

    def prob_tensor(self, upto: int | None = None) -> np.ndarray:
        """Joint probability of the first ``upto`` coordinates, as a tensor."""
        upto = self.n_edges if upto is None else upto
        out = np.array(self._num(Fraction(1)), dtype=object if self.exact else float)
        for i in range(upto):
            out = np.multiply.outer(out, self.edge_probs(i))
        return out

    def total_probability(self):
        return _sum(self.prob_tensor(), self.exact)

    def expectation(self, values: np.ndarray):
        return _sum(self.prob_tensor() * self._as_tensor(values), self.exact)

    def _as_tensor(self, values) -> np.ndarray:
        v = np.asarray(values).reshape(self.shape)
        if self.exact:
            v = np.vectorize(_to_fraction, otypes=[object])(v)
        return v

    def condition(self, tensor: np.ndarray, keep: int) -> np.ndarray:
        """E(. | first ``keep`` coordinates) by summing out the trailing axes."""
        out = tensor
        for i in range(tensor.ndim - 1, keep - 1, -1):
            probs = self.edge_probs(i)
            acc = out[..., 0] * probs[0]
            for j in range(1, len(probs)):
                acc = acc + out[..., j] * probs[j]
            out = acc
        return np.asarray(out, dtype=object if self.exact else float)


def _to_fraction(x):
    return x if isinstance(x, Fraction) else Fraction(float(x))


def _sum(arr, exact: bool):
    flat = np.asarray(arr).reshape(-1)
    if exact:
        return sum(flat.tolist(), Fraction(0))
    return math.fsum(flat.tolist())


def exact_event_probability(space: DiscreteProductSpace,
                            predicate: Callable[[np.ndarray], bool]) -> float:
    """``P(predicate(weights))``, summed exactly over all configurations."""
    W = space.weight_matrix()
    hits = np.array([bool(predicate(w)) for w in W])
    probs = space.prob_tensor().reshape(-1)
    return float(_sum(probs[hits], space.exact)) if hits.any() else 0.0


@dataclass
class MartingaleReport:
    edges: tuple[EdgeRef, ...]
    mean: float
    variance: float
    second_moments: np.ndarray  # E X_l^2
    cross_moments: np.ndarray  # E X_i X_j, zero diagonal
    telescoping_residual: float
    variance_identity_residual: float
    membership: np.ndarray  # P(q_l in canonical geodesic)
    C1: float
    increment_slack: np.ndarray  # C1 * membership - E X_l^2
    conditional_slack_min: np.ndarray  # min over F_{l-1} atoms of C1 P(q_l in path | F) - E(X_l^2 | F)
    exact: bool
    notes: list[str] = field(default_factory=list)

    @property
    def max_cross_moment(self) -> float:
        return float(np.abs(self.cross_moments).max()) if self.cross_moments.size else 0.0

    @property
    def increment_bound_holds(self) -> bool:
        return bool(np.all(self.increment_slack >= 0))

    @property
    def conditional_bound_holds(self) -> bool:
        return bool(np.all(self.conditional_slack_min >= 0))

    def checks(self, tol: float = 1e-9) -> dict[str, bool]:
        return {
            "telescoping": self.telescoping_residual <= tol,
            "orthogonality": self.max_cross_moment <= tol,
            "variance identity": self.variance_identity_residual <= tol,
            "increment bound": self.increment_bound_holds,
        }


def exact_martingale(space: DiscreteProductSpace, source, target,
                     truncation: Truncation | None = None) -> MartingaleReport:
    """Doob martingale of the boxed (truncated) passage time along the edge filtration.

    ``F_l`` is generated by the first ``l`` edges in edge-ID order and
    ``X_l = E(U | F_l) - E(U | F_{l-1})``.
    """
    box, N, ex = space.box, space.n_edges, space.exact
    ps = enumerate_paths(box, source, target, allow_large=True)
    W = _cap(space.weight_matrix(), truncation)
    vals = ps.values(W)
    U = np.empty(space.size)
    member = np.zeros((space.size, N))
    for c in range(space.size):
        _, idx = canonical_from_values(ps, vals[c])
        U[c] = _sequential_sum(W[c], ps.edge_ids[idx])
        member[c, list(ps.edge_ids[idx])] = 1.0

    Ut = space._as_tensor(U)
    cond = [None] * (N + 1)
    cond[N] = Ut
    for l in range(N - 1, -1, -1):
        cond[l] = space.condition(cond[l + 1], l)
    EU = cond[0][()]
    X = [cond[l] - cond[l - 1][..., None] for l in range(1, N + 1)]
    probs = [space.prob_tensor(l) for l in range(N + 1)]

    def E(t, l):
        return _sum(probs[l] * t, ex)

    second = [E(X[l - 1] ** 2, l) for l in range(1, N + 1)]
    cross = np.zeros((N, N))
    for i in range(1, N + 1):
        for j in range(i + 1, N + 1):
            xi = X[i - 1].reshape(X[i - 1].shape + (1,) * (j - i))
            cross[i - 1, j - 1] = cross[j - 1, i - 1] = float(E(xi * X[j - 1], j))

    total = X[0].reshape(X[0].shape + (1,) * (N - 1))
    for l in range(2, N + 1):
        total = total + X[l - 1].reshape(X[l - 1].shape + (1,) * (N - l))
    tele = max(abs(float(x)) for x in (total - (Ut - EU)).reshape(-1))
    var = E((Ut - EU) ** 2, N)
    var_resid = abs(float(var - sum(second, Fraction(0) if ex else 0.0)))

    cap = truncation.cap if truncation is not None else math.inf
    sup_m2 = max(sum(p * Fraction(min(v, cap)) ** 2 for v, p in _atoms(s)) for s in space.specs)
    C1 = 4 * sup_m2 if ex else 4.0 * float(sup_m2)

    membership = np.zeros(N)
    cond_slack = np.zeros(N)
    for l in range(1, N + 1):
        m_l = space._as_tensor(member[:, l - 1])
        membership[l - 1] = float(E(m_l, N))
        p_cond = space.condition(m_l, l - 1)
        x2_cond = space.condition(X[l - 1] ** 2, l - 1)
        diff = np.asarray(C1 * p_cond - x2_cond, dtype=object).reshape(-1)
        cond_slack[l - 1] = min(float(x) for x in diff)
    second_f = np.array([float(s) for s in second])
    return MartingaleReport(
        edges=tuple(box.decode_edge(i) for i in range(N)),
        mean=float(EU),
        variance=float(var),
        second_moments=second_f,
        cross_moments=cross,
        telescoping_residual=tele,
        variance_identity_residual=var_resid,
        membership=membership,
        C1=float(C1),
        increment_slack=float(C1) * membership - second_f,
        conditional_slack_min=cond_slack,
        exact=ex,
    )
