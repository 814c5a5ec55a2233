"""Edge passage-time distributions, assignment rules and reproducible sampling.

Each edge weight is drawn by inverse-CDF from a Philox4x64-10 block whose key
is ``(seed, replication)`` and whose counter encodes the edge's absolute
coordinates and axis.  A weight therefore depends only on
``(seed, replication, edge)``, never on query order, box size or worker.
"""

from __future__ import annotations

import dataclasses
import math
import re
from dataclasses import dataclass, field
from typing import ClassVar, Mapping, Sequence

import numpy as np
from scipy import integrate

from . import _kernels as K
from .lattice import EdgeRef, GeometryError, LatticeBox


class DistributionSpec:
    """Base class of the built-in passage-time families."""

    family: ClassVar[str]
    code: ClassVar[int]

    def params(self) -> tuple[float, float, float]:
        raise NotImplementedError

    def ppf(self, u):
        u = np.asarray(u, dtype=float)
        return np.vectorize(lambda x: K._ppf(self.code, np.array(self.params()), x))(u)

    def cdf(self, x: float) -> float:
        """P(T < x)."""
        raise NotImplementedError

    def moment(self, p: float) -> float:
        raise NotImplementedError

    @property
    def mean(self) -> float:
        return self.moment(1)

    @property
    def second_moment(self) -> float:
        return self.moment(2)

    @property
    def variance(self) -> float:
        return self.second_moment - self.mean ** 2

    @property
    def essinf(self) -> float:
        raise NotImplementedError

    def laplace(self, s: float) -> float:
        raise NotImplementedError

    def truncated_moment(self, p: float, cap: float) -> float:
        """E[min(T, cap)^p] via ``p x^(p-1) P(T > x)`` integrated over [0, cap]."""
        val, _ = integrate.quad(lambda x: p * x ** (p - 1) * (1.0 - self.cdf_le(x)), 0.0, cap,
                                epsabs=0, epsrel=1e-12, limit=200)
        return val

    def cdf_le(self, x: float) -> float:
        """P(T <= x); differs from :meth:`cdf` only at atoms."""
        return self.cdf(x)

    def to_string(self) -> str:
        args = ", ".join(f"{k}={v!r}" for k, v in self._fields())
        return f"{self.family}({args})"

    def _fields(self):
        return [(f.name, getattr(self, f.name)) for f in dataclasses.fields(self)]


@dataclass(frozen=True)
class PointMass(DistributionSpec):
    c: float
    family: ClassVar[str] = "pointmass"
    code: ClassVar[int] = K.FAM_POINTMASS

    def __post_init__(self):
        if not self.c > 0:
            raise ValueError("PointMass needs c > 0")

    def params(self):
        return (float(self.c), 0.0, 0.0)

    def cdf(self, x):
        return 1.0 if x > self.c else 0.0

    def cdf_le(self, x):
        return 1.0 if x >= self.c else 0.0

    def moment(self, p):
        return float(self.c) ** p

    @property
    def essinf(self):
        return float(self.c)

    def laplace(self, s):
        return math.exp(-s * self.c)

    def truncated_moment(self, p, cap):
        return min(self.c, cap) ** p


@dataclass(frozen=True)
class Uniform(DistributionSpec):
    a: float
    b: float
    family: ClassVar[str] = "uniform"
    code: ClassVar[int] = K.FAM_UNIFORM

    def __post_init__(self):
        if not 0 <= self.a < self.b:
            raise ValueError("Uniform needs 0 <= a < b")

    def params(self):
        return (float(self.a), float(self.b), 0.0)

    def cdf(self, x):
        return min(max((x - self.a) / (self.b - self.a), 0.0), 1.0)

    def moment(self, p):
        a, b = self.a, self.b
        return (b ** (p + 1) - a ** (p + 1)) / ((p + 1) * (b - a))

    @property
    def essinf(self):
        return float(self.a)

    def laplace(self, s):
        a, b = self.a, self.b
        # (e^{-sa} - e^{-sb}) / (s (b - a)), written to avoid cancellation for small s
        return math.exp(-s * a) * -math.expm1(-s * (b - a)) / (s * (b - a))


@dataclass(frozen=True)
class Exponential(DistributionSpec):
    rate: float
    family: ClassVar[str] = "exponential"
    code: ClassVar[int] = K.FAM_EXPONENTIAL

    def __post_init__(self):
        if not self.rate > 0:
            raise ValueError("Exponential needs rate > 0")

    def params(self):
        return (float(self.rate), 0.0, 0.0)

    def cdf(self, x):
        return -math.expm1(-self.rate * x) if x > 0 else 0.0

    def moment(self, p):
        return math.gamma(p + 1) / self.rate ** p

    @property
    def essinf(self):
        return 0.0

    def laplace(self, s):
        return self.rate / (self.rate + s)


@dataclass(frozen=True)
class Pareto(DistributionSpec):
    """Density ``shape * scale^shape / x^(shape+1)`` on ``[scale, inf)``."""

    shape: float
    scale: float
    family: ClassVar[str] = "pareto"
    code: ClassVar[int] = K.FAM_PARETO

    def __post_init__(self):
        if not (self.shape > 0 and self.scale > 0):
            raise ValueError("Pareto needs shape > 0 and scale > 0")

    def params(self):
        return (float(self.shape), float(self.scale), 0.0)

    def cdf(self, x):
        return 0.0 if x <= self.scale else 1.0 - (self.scale / x) ** self.shape

    def moment(self, p):
        if p >= self.shape:
            return math.inf
        return self.shape * self.scale ** p / (self.shape - p)

    @property
    def essinf(self):
        return float(self.scale)

    def laplace(self, s):
        a, xm = self.shape, self.scale
        # substitute x = xm * y to keep the integrand O(1)
        f = lambda y: a * y ** (-a - 1) * math.exp(-s * xm * y)
        val, err = integrate.quad(f, 1.0, math.inf, epsabs=0, epsrel=1e-12, limit=500)
        if not math.isfinite(val) or err > 1e-8 * max(abs(val), 1e-300):
            raise ArithmeticError(f"Laplace transform quadrature did not converge (err={err})")
        return val


@dataclass(frozen=True)
class TwoPoint(DistributionSpec):
    """``v1`` with probability ``p``, else ``v2``."""

    v1: float
    v2: float
    p: float
    family: ClassVar[str] = "twopoint"
    code: ClassVar[int] = K.FAM_TWOPOINT

    def __post_init__(self):
        if not (0 < self.v1 < self.v2 and 0 < self.p < 1):
            raise ValueError("TwoPoint needs 0 < v1 < v2 and 0 < p < 1")

    def params(self):
        return (float(self.v1), float(self.v2), float(self.p))

    @property
    def atoms(self) -> tuple[tuple[float, float], ...]:
        return ((self.v1, self.p), (self.v2, 1.0 - self.p))

    def cdf(self, x):
        return 0.0 if x <= self.v1 else (self.p if x <= self.v2 else 1.0)

    def cdf_le(self, x):
        return 0.0 if x < self.v1 else (self.p if x < self.v2 else 1.0)

    def moment(self, p):
        return self.p * self.v1 ** p + (1 - self.p) * self.v2 ** p

    @property
    def essinf(self):
        return float(self.v1)

    def laplace(self, s):
        return self.p * math.exp(-s * self.v1) + (1 - self.p) * math.exp(-s * self.v2)

    def truncated_moment(self, p, cap):
        return self.p * min(self.v1, cap) ** p + (1 - self.p) * min(self.v2, cap) ** p


FAMILIES = {cls.family: cls for cls in (PointMass, Uniform, Exponential, Pareto, TwoPoint)}

_SPEC_RE = re.compile(r"^\s*([a-z]+)\s*\((.*)\)\s*$")


def parse_spec(text: str) -> DistributionSpec:
    """Parse ``family(key=value, ...)``, the inverse of ``spec.to_string()``."""
    m = _SPEC_RE.match(text.lower())
    if not m or m.group(1) not in FAMILIES:
        raise ValueError(f"cannot parse distribution {text!r}; families: {sorted(FAMILIES)}")
    kwargs = {}
    for part in filter(None, (p.strip() for p in m.group(2).split(","))):
        key, _, val = part.partition("=")
        kwargs[key.strip()] = float(val)
    try:
        return FAMILIES[m.group(1)](**kwargs)
    except TypeError as exc:
        raise ValueError(f"bad parameters for {m.group(1)}: {exc}") from None


def truncate_weight(t, k: int, alpha: float):
    """``min(t, k**alpha)``, elementwise for arrays."""
    if k < 1:
        raise ValueError("truncation level k must be >= 1")
    return np.minimum(t, float(k) ** alpha) if isinstance(t, np.ndarray) else min(t, float(k) ** alpha)


def laplace_transform(spec: DistributionSpec, s: float) -> float:
    """``E exp(-s T)`` for ``s > 0``."""
    if not s > 0:
        raise ValueError("s must be positive")
    return spec.laplace(s)


def small_ball(spec: DistributionSpec, eps: float) -> float:
    """``P(T < eps)``."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    return spec.cdf(eps)


# ---------------------------------------------------------------------------


_EMPTY_TABLE = (np.zeros((0, 1), dtype=np.int64), np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64))


@dataclass(frozen=True)
class WeightModel:
    """Assignment of a distribution to every edge of ``Z^d`` plus a master seed.

    ``assignment`` is one of ``iid`` (one class), ``axis`` (class = edge axis),
    ``parity`` (class = parity of the coordinate sum of the lower endpoint) or
    ``table`` (explicit edges, class 0 is the default).
    """

    dim: int
    assignment: str
    classes: tuple[DistributionSpec, ...]
    seed: int = 0
    table: Mapping[EdgeRef, int] = field(default_factory=dict)

    def __post_init__(self):
        if not 2 <= self.dim <= K.MAX_DIM:
            raise ValueError(f"dim must be in [2, {K.MAX_DIM}]")
        want = {"iid": 1, "axis": self.dim, "parity": 2}.get(self.assignment)
        if self.assignment not in ("iid", "axis", "parity", "table"):
            raise ValueError(f"unknown assignment rule {self.assignment!r}")
        if want is not None and len(self.classes) != want:
            raise ValueError(f"{self.assignment} assignment needs {want} distribution(s)")
        for e, cls in self.table.items():
            if e.dim != self.dim or not 0 <= cls < len(self.classes):
                raise ValueError(f"bad table entry {e} -> {cls}")
        object.__setattr__(self, "seed", int(self.seed) % 2 ** 64)

    @classmethod
    def iid(cls, spec, dim=2, seed=0):
        return cls(dim, "iid", (spec,), seed)

    @classmethod
    def axis_dependent(cls, specs: Sequence[DistributionSpec], seed=0):
        return cls(len(specs), "axis", tuple(specs), seed)

    @classmethod
    def parity(cls, even, odd, dim=2, seed=0):
        return cls(dim, "parity", (even, odd), seed)

    @classmethod
    def from_table(cls, default, entries: Mapping[EdgeRef, DistributionSpec], dim=2, seed=0):
        classes = [default]
        table = {}
        for e, spec in entries.items():
            if spec not in classes:
                classes.append(spec)
            table[e] = classes.index(spec)
        return cls(dim, "table", tuple(classes), seed, table)

    def with_seed(self, seed: int) -> "WeightModel":
        return WeightModel(self.dim, self.assignment, self.classes, seed, self.table)

    @property
    def is_iid(self) -> bool:
        return len(set(self.classes)) == 1

    def spec_for(self, e: EdgeRef) -> DistributionSpec:
        if self.assignment == "iid":
            return self.classes[0]
        if self.assignment == "axis":
            return self.classes[e.axis]
        if self.assignment == "parity":
            return self.classes[sum(e.lower) % 2]
        return self.classes[self.table.get(e, 0)]

    @property
    def essinf(self) -> float:
        return min(s.essinf for s in self.classes)

    @property
    def mu(self) -> float:
        return max(s.mean for s in self.classes)

    def kernel_params(self):
        rule = {"iid": K.RULE_IID, "axis": K.RULE_AXIS, "parity": K.RULE_PARITY,
                "table": K.RULE_TABLE}[self.assignment]
        fam = np.array([s.code for s in self.classes], dtype=np.int64)
        par = np.array([s.params() for s in self.classes], dtype=np.float64)
        if self.table:
            items = sorted(self.table.items(), key=lambda kv: (kv[0].axis, kv[0].lower))
            tc = np.array([e.lower for e, _ in items], dtype=np.int64)
            ta = np.array([e.axis for e, _ in items], dtype=np.int64)
            tk = np.array([c for _, c in items], dtype=np.int64)
        else:
            tc, ta, tk = (np.zeros((0, self.dim), dtype=np.int64),) + _EMPTY_TABLE[1:]
        return rule, fam, par, tc, ta, tk

    def realization(self, replication: int) -> "Realization":
        return Realization(self, replication)

    def sample(self, lowers, axes, replications) -> np.ndarray:
        """Raw weights for edge rows ``(lowers[i], axes[i])`` under ``replications[i]``."""
        lowers = np.ascontiguousarray(lowers, dtype=np.int64).reshape(-1, self.dim)
        axes = np.ascontiguousarray(axes, dtype=np.int64).reshape(-1)
        reps = np.broadcast_to(np.asarray(replications, dtype=np.uint64), axes.shape).copy()
        return K.sample_edges(lowers, axes, np.uint64(self.seed), reps, *self.kernel_params())


class _Arena:
    """Weight cache over one box plus reusable search buffers."""

    __slots__ = ("box", "cache", "_ws")

    def __init__(self, box: LatticeBox, cache: np.ndarray):
        self.box = box
        self.cache = cache
        self._ws = None

    def workspace(self):
        """(dist, pred, tie, done, touched), reset between searches by the caller."""
        if self._ws is None:
            nv = self.box.n_vertices
            self._ws = [np.full(nv, np.inf), np.full(nv, -1, dtype=np.int64),
                        np.zeros(nv, dtype=np.bool_), np.zeros(nv, dtype=np.bool_),
                        np.empty(1024, dtype=np.int64)]
        return self._ws


class Realization:
    """One configuration ``omega``: weights sampled lazily and cached per arena box.

    Not thread-safe; give each worker its own instance.  Values never depend on
    which instance or query produced them.
    """

    def __init__(self, model: WeightModel, replication: int):
        if replication < 0:
            raise ValueError("replication must be >= 0")
        self.model = model
        self.replication = int(replication)
        self._arena: _Arena | None = None
        self._params = model.kernel_params()

    @property
    def dim(self) -> int:
        return self.model.dim

    @property
    def key(self) -> tuple[np.uint64, np.uint64]:
        return np.uint64(self.model.seed), np.uint64(self.replication)

    def reserve(self, radius: int) -> None:
        """Make sure the cached arena covers ``B_radius``."""
        if self._arena is None or self._arena.box.radius < radius:
            box = LatticeBox(self.dim, radius)
            cache = np.full(box.n_edges, np.nan)
            if self._arena is not None:
                old = self._arena
                lowers, axes = old.box.edge_arrays()
                known = ~np.isnan(old.cache)
                ids = _edge_ids(box, lowers[known], axes[known])
                cache[ids] = old.cache[known]
            self._arena = _Arena(box, cache)

    def arena(self, radius: int) -> _Arena:
        self.reserve(radius)
        return self._arena

    def sampler_args(self):
        k0, k1 = self.key
        return (k0, k1) + self._params

    def weight(self, e: EdgeRef) -> float:
        if e.dim != self.dim:
            raise GeometryError("edge dimension does not match model")
        return float(K.edge_weight(np.array(e.lower, dtype=np.int64), e.axis, self.dim,
                                   *self.sampler_args()))

    def weights(self, edges: Sequence[EdgeRef]) -> np.ndarray:
        lowers = np.array([e.lower for e in edges], dtype=np.int64).reshape(-1, self.dim)
        axes = np.array([e.axis for e in edges], dtype=np.int64)
        return self.model.sample(lowers, axes, self.replication)

    def box_weights(self, box: LatticeBox) -> np.ndarray:
        """Full raw weight vector of ``box`` in its edge-ID order."""
        arena = self.arena(box.radius)
        K.fill_box(arena.cache, self.dim, arena.box.radius, *self.sampler_args())
        if arena.box == box:
            return arena.cache.copy()
        lowers, axes = box.edge_arrays()
        return arena.cache[_edge_ids(arena.box, lowers, axes)]


class FixedWeights:
    """Explicit raw weights over the edges of one box (for exact enumeration)."""

    def __init__(self, box: LatticeBox, weights):
        w = np.array(weights, dtype=np.float64)
        if w.shape != (box.n_edges,):
            raise ValueError(f"expected {box.n_edges} weights, got shape {w.shape}")
        if np.any(w < 0) or np.any(np.isnan(w)):
            raise ValueError("weights must be nonnegative")
        self._arena = _Arena(box, w)
        self._dummy = (np.uint64(0), np.uint64(0), K.RULE_IID, np.zeros(1, dtype=np.int64),
                       np.zeros((1, 3)), np.zeros((0, box.dim), dtype=np.int64),
                       np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64))

    @property
    def dim(self) -> int:
        return self._arena.box.dim

    def arena(self, radius: int) -> _Arena:
        if radius > self._arena.box.radius:
            raise GeometryError(f"fixed weights only cover B_{self._arena.box.radius}")
        return self._arena

    def sampler_args(self):
        return self._dummy

    def weight(self, e: EdgeRef) -> float:
        return float(self._arena.cache[self._arena.box.encode_edge(e)])

    def box_weights(self, box: LatticeBox) -> np.ndarray:
        if box == self._arena.box:
            return self._arena.cache.copy()
        lowers, axes = box.edge_arrays()
        return self._arena.cache[_edge_ids(self._arena.box, lowers, axes)]


def _edge_ids(box: LatticeBox, lowers: np.ndarray, axes: np.ndarray) -> np.ndarray:
    m, side, d = box.radius, box.side, box.dim
    eid = np.zeros(len(axes), dtype=np.int64)
    for j in range(d):
        n_j = np.where(axes == j, 2 * m, side)
        eid = eid * n_j + (lowers[:, j] + m)
    return axes * box.edges_per_axis + eid


def sample_weight(real: Realization | FixedWeights, e: EdgeRef) -> float:
    return real.weight(e)
