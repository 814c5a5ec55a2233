"""Closed-form constants and condition checks for a weight model."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .lattice import axis_edge
from .weights import DistributionSpec, Exponential, Pareto, PointMass, TwoPoint, Uniform, WeightModel

# Pareto with shape a has E t^p < inf iff p < a; we report p = a - margin.
PARETO_P_MARGIN = 0.1
_KNOWN = (PointMass, Uniform, Exponential, Pareto, TwoPoint)


class ConditionViolation(ValueError):
    """The model fails a moment or small-ball condition."""


def exponents(d: int) -> tuple[Fraction, Fraction, Fraction]:
    """Exact ``(alpha, eps0, delta) = (1/2 - 1/(16d), 1/(4d), 1/(2d))``."""
    if d < 2:
        raise ValueError("d must be >= 2")
    return Fraction(1, 2) - Fraction(1, 16 * d), Fraction(1, 4 * d), Fraction(1, 2 * d)


def default_alpha(d: int) -> float:
    return float(exponents(d)[0])


@dataclass(frozen=True)
class FamilyVerdict:
    spec: DistributionSpec
    small_ball: bool | None
    second_moment: bool | None
    square_integrable: bool | None
    higher_moment: bool | None
    p_max: float | None  # largest safe p > 2 for the higher-moment condition


@dataclass(frozen=True)
class ConditionReport:
    families: tuple[FamilyVerdict, ...]

    def _all(self, attr) -> bool | None:
        vals = [getattr(f, attr) for f in self.families]
        if any(v is False for v in vals):
            return False
        if any(v is None for v in vals):
            return None
        return True

    @property
    def small_ball(self):
        return self._all("small_ball")

    @property
    def second_moment(self):
        return self._all("second_moment")

    @property
    def square_integrable(self):
        return self._all("square_integrable")

    @property
    def higher_moment(self):
        return self._all("higher_moment")

    @property
    def p_max(self) -> float | None:
        ps = [f.p_max for f in self.families]
        return None if any(p is None for p in ps) else min(ps)

    @property
    def ok(self) -> bool:
        return self.small_ball is True and self.second_moment is True

    def lines(self) -> list[str]:
        def fmt(v):
            return {True: "yes", False: "no", None: "unknown"}[v]
        p = self.p_max
        return [
            f"condition (i) small ball: {fmt(self.small_ball)}",
            f"condition (ii) second moment: {fmt(self.second_moment)}",
            f"condition (ii)(a) uniform square integrability: {fmt(self.square_integrable)}",
            f"condition (ii)(b) higher moment: {fmt(self.higher_moment)}"
            + ("" if p is None or not self.higher_moment else f" (p = {p!r})"),
        ]


def _verdict(spec: DistributionSpec) -> FamilyVerdict:
    if not isinstance(spec, _KNOWN):
        return FamilyVerdict(spec, None, None, None, None, None)
    if isinstance(spec, Pareto):
        ok2 = spec.shape > 2
        p = spec.shape - PARETO_P_MARGIN
        return FamilyVerdict(spec, True, ok2, ok2, ok2 and p > 2, p if ok2 and p > 2 else None)
    # no atom at zero and light tails: every moment is finite
    return FamilyVerdict(spec, True, True, True, True, math.inf)


def validate_conditions(model: WeightModel) -> ConditionReport:
    """Analytic verdicts, worst case over the model's distinct families."""
    seen = []
    for s in model.classes:
        if s not in seen:
            seen.append(s)
    return ConditionReport(tuple(_verdict(s) for s in seen))


def require_conditions(model: WeightModel) -> ConditionReport:
    rep = validate_conditions(model)
    if rep.small_ball is not True:
        raise ConditionViolation("condition (i) (no mass near zero) is not satisfied")
    if rep.second_moment is not True:
        raise ConditionViolation("condition (ii) violated: infinite second moment")
    return rep


def sup_small_ball(model: WeightModel, eps: float) -> float:
    return max(s.cdf(eps) for s in model.classes)


@dataclass(frozen=True)
class Beta1:
    beta1: float
    s_star: float
    eps_star: float


def compute_beta1(model: WeightModel) -> Beta1:
    """Chernoff rate built from a small-ball radius.

    Take the largest ``eps`` with ``sup P(t < eps) < exp(-6d)/2`` (bisection),
    ``s = (6d + log 2) / eps`` so that ``exp(-s eps) = exp(-6d)/2``, and
    ``beta1 = 0.99 * min(4d / s, mu)``.  Then ``E exp(-s t) < exp(-6d)`` for
    every edge and ``P(T(path) <= beta1 m) <= exp(-2dm)`` for any m-edge path.
    """
    require_conditions(model)
    d = model.dim
    target = math.exp(-6 * d) / 2
    g = lambda e: sup_small_ball(model, e)
    lo = 1e-12
    if g(lo) >= target:
        raise ConditionViolation("no small-ball radius above 1e-12 meets the Chernoff target")
    hi = 1.0
    while g(hi) < target:
        lo, hi = hi, 2 * hi
        if hi > 1e300:
            raise ConditionViolation("small-ball search diverged")
    while hi - lo > 1e-13 * hi:
        mid = 0.5 * (lo + hi)
        if g(mid) < target:
            lo = mid
        else:
            hi = mid
    eps = lo
    s = (6 * d + math.log(2)) / eps
    mu = model.mu
    return Beta1(min(0.99 * 4 * d / s, 0.99 * mu), s, eps)


def chernoff_bound(model: WeightModel, b: Beta1, m: int) -> float:
    """``exp(s beta1 m) * prod E exp(-s t)`` bounded by the worst edge, as in the recipe."""
    worst = max(laplace_at(s, b.s_star) for s in model.classes)
    return math.exp(b.s_star * b.beta1 * m + m * math.log(worst)) if worst > 0 else 0.0


def laplace_at(spec: DistributionSpec, s: float) -> float:
    return spec.laplace(s)


@dataclass(frozen=True)
class ModelConstants:
    dim: int
    mu: float
    sup_second_moment: float
    beta1: float
    s_star: float
    eps_star: float
    beta22: float
    beta2: float
    C2: float
    alpha: float
    eps0: float
    delta: float
    essinf: float

    def as_items(self) -> list[tuple[str, float]]:
        return [(k, getattr(self, k)) for k in self.__dataclass_fields__]


def model_constants(model: WeightModel) -> ModelConstants:
    b = compute_beta1(model)
    d = model.dim
    alpha, eps0, delta = exponents(d)
    mu = model.mu
    beta22 = d - math.log(2 * d)
    return ModelConstants(
        dim=d,
        mu=mu,
        sup_second_moment=max(s.second_moment for s in model.classes),
        beta1=b.beta1,
        s_star=b.s_star,
        eps_star=b.eps_star,
        beta22=beta22,
        beta2=beta22 * 8 * mu / b.beta1,
        C2=1.0 / (1.0 - math.exp(-beta22)),
        alpha=float(alpha),
        eps0=float(eps0),
        delta=float(delta),
        essinf=model.essinf,
    )


@dataclass(frozen=True)
class BoxRadius:
    radius: float
    nominal: float
    capped: bool


def box_radius(n: int, eps: float, mu: float, beta1: float, cap: int | None = None) -> BoxRadius:
    """``ceil(8 mu / beta1 * n^(1+eps))``, optionally clipped to ``cap``."""
    if n < 1 or eps < 0:
        raise ValueError("need n >= 1 and eps >= 0")
    nominal = math.ceil(8 * mu / beta1 * n ** (1 + eps))
    if cap is not None and nominal > cap:
        return BoxRadius(cap, nominal, True)
    return BoxRadius(nominal, nominal, False)


def straight_line_second_moment(model: WeightModel, n: int) -> float:
    """``E (sum_{i<=n} t(f_i))^2`` in closed form."""
    specs = [model.spec_for(axis_edge(i, model.dim)) for i in range(1, n + 1)]
    var = sum(s.variance for s in specs)
    mean = sum(s.mean for s in specs)
    return var + mean * mean


@dataclass(frozen=True)
class TailCheck:
    m: int
    samples: int
    frequency: float
    se: float
    bound: float
    empirical_beta: float  # 1% quantile of T(path)/m, for comparison only

    @property
    def passed(self) -> bool:
        return self.frequency <= self.bound + 3 * self.se


def tail_check(model: WeightModel, beta1: float, m: int, samples: int = 10_000,
               seed: int = 0) -> TailCheck:
    """Monte Carlo frequency of ``T(path) <= beta1 m`` over random self-avoiding m-edge walks.

    Walk ``i`` uses weights from replication ``i`` of ``model.with_seed(seed)``
    and a direction sequence from ``numpy.random.default_rng(seed)``.
    """
    d = model.dim
    rng = np.random.default_rng(seed)
    unit = np.eye(d, dtype=np.int64)
    lowers = np.empty((samples, m, d), dtype=np.int64)
    axes = np.empty((samples, m), dtype=np.int64)
    for i in range(samples):
        while True:
            pos = np.zeros(d, dtype=np.int64)
            seen = {tuple(pos)}
            ok = True
            for j in range(m):
                cand = [(a, s) for a in range(d) for s in (-1, 1)
                        if tuple(pos + s * unit[a]) not in seen]
                if not cand:
                    ok = False
                    break
                a, s = cand[rng.integers(len(cand))]
                nxt = pos + s * unit[a]
                lowers[i, j] = np.minimum(pos, nxt)
                axes[i, j] = a
                pos = nxt
                seen.add(tuple(pos))
            if ok:
                break
    reps = np.repeat(np.arange(samples, dtype=np.uint64), m)
    w = model.with_seed(seed).sample(lowers.reshape(-1, d), axes.reshape(-1), reps).reshape(samples, m)
    totals = w.sum(axis=1)
    hits = totals <= beta1 * m
    f = float(hits.mean())
    se = math.sqrt(f * (1 - f) / samples)
    return TailCheck(m, samples, f, se, math.exp(-2 * d * m), float(np.quantile(totals / m, 0.01)))
