"""Exact verification suites: engine vs oracle, martingale identities,
detour construction and exponent constants.

Each suite returns a list of :class:`Check` records.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .geodesic import Truncation, passage_time
from .lattice import EdgeRef, LatticeBox, detour_paths
from .oracle import DiscreteProductSpace, brute_force_passage, exact_martingale
from .theory import compute_beta1, exponents
from .weights import Exponential, FixedWeights, Pareto, PointMass, TwoPoint, Uniform, WeightModel


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str = ""

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name}" + (f"  ({self.detail})" if self.detail else "")


def _compare(engine, oracle) -> bool:
    return engine.value == oracle[0] and engine.path == oracle[1]


def oracle_suite(sampled: int = 200, seed: int = 20240611) -> list[Check]:
    """Engine against brute force: every TwoPoint(1,4,1/2) configuration of B_1,
    then ``sampled`` random configurations of B_2."""
    spec = TwoPoint(1.0, 4.0, 0.5)
    checks = []
    b1 = LatticeBox(2, 1)
    for tgt in ((1, 0), (1, 1)):
        bad = 0
        for bits in itertools.product((1.0, 4.0), repeat=b1.n_edges):
            w = np.array(bits)
            fw = FixedWeights(b1, w)
            if not _compare(passage_time(fw, b1, (0, 0), tgt), brute_force_passage(b1, (0, 0), tgt, w)):
                bad += 1
        checks.append(Check(f"oracle m=1 origin->{tgt} all {2 ** b1.n_edges} configurations",
                            bad == 0, f"{bad} mismatches"))
    b2 = LatticeBox(2, 2)
    model = WeightModel.iid(spec, 2, seed)
    for tgt in ((1, 0), (2, 1)):
        bad = 0
        for r in range(sampled):
            real = model.realization(r)
            if not _compare(passage_time(real, b2, (0, 0), tgt),
                            brute_force_passage(b2, (0, 0), tgt, real)):
                bad += 1
        checks.append(Check(f"oracle m=2 origin->{tgt} {sampled} sampled configurations",
                            bad == 0, f"{bad} mismatches"))
    # truncation binding between the two atoms
    bad = 0
    tr = Truncation(16, 15 / 32)
    for r in range(sampled):
        real = model.realization(r)
        if not _compare(passage_time(real, b2, (0, 0), (1, 0), tr),
                        brute_force_passage(b2, (0, 0), (1, 0), real, tr)):
            bad += 1
    checks.append(Check(f"oracle m=2 truncated k=16 {sampled} sampled configurations",
                        bad == 0, f"{bad} mismatches"))
    return checks


def martingale_suite(tol: float = 1e-9) -> list[Check]:
    """Exact Doob martingale over all 2^12 TwoPoint(1,4,1/2) configurations of B_1."""
    box = LatticeBox(2, 1)
    space = DiscreteProductSpace(box, TwoPoint(1.0, 4.0, 0.5))
    checks = []
    for label, tr in (("untruncated", None), ("truncated k=16", Truncation(16, 15 / 32))):
        rep = exact_martingale(space, (0, 0), (1, 0), tr)
        checks += [
            Check(f"martingale {label}: total probability is 1", space.total_probability() == 1),
            Check(f"martingale {label}: telescoping residual <= {tol:g}",
                  rep.telescoping_residual <= tol, repr(rep.telescoping_residual)),
            Check(f"martingale {label}: |E X_i X_j| <= {tol:g}", rep.max_cross_moment <= tol,
                  repr(rep.max_cross_moment)),
            Check(f"martingale {label}: Var(U) = sum E X_l^2 within {tol:g}",
                  rep.variance_identity_residual <= tol,
                  f"var={rep.variance!r} residual={rep.variance_identity_residual!r}"),
            Check(f"martingale {label}: E X_l^2 <= C1 P(q_l in geodesic) for all l",
                  rep.increment_bound_holds,
                  f"C1={rep.C1!r} min slack={rep.increment_slack.min()!r}"),
            Check(f"martingale {label}: conditional increment bound for all l",
                  rep.conditional_bound_holds, f"min slack={rep.conditional_slack_min.min()!r}"),
        ]
    flat = exact_martingale(DiscreteProductSpace(box, PointMass(1.0)), (0, 0), (1, 0))
    checks.append(Check("martingale point mass: all increments vanish",
                        bool(np.all(flat.second_moments == 0)) and flat.variance == 0))
    return checks


def detour_suite(edges_per_dim: int = 100, seed: int = 5) -> list[Check]:
    rng = np.random.default_rng(seed)
    checks = []
    for d in (2, 3):
        box = LatticeBox(d, 12)
        bad = 0
        for _ in range(edges_per_dim):
            axis = int(rng.integers(d))
            lower = [int(x) for x in rng.integers(-10, 10, size=d)]
            lower[axis] = int(rng.integers(-10, 9))
            e = EdgeRef(tuple(lower), axis)
            paths = detour_paths(e, box)
            sets = [set(p.edges) for p in paths]
            ok = len(paths) == 2 * d
            ok &= all(set(p.endpoints) == {e.lower, e.upper} for p in paths)
            ok &= all(not (a & b) for a, b in itertools.combinations(sets, 2))
            ok &= sorted(len(p) for p in paths) == [1] + [3] * (2 * d - 2) + [9]
            ok &= any(p.edges == (e,) for p in paths)
            bad += not ok
        checks.append(Check(f"detours d={d}: {edges_per_dim} random edges", bad == 0, f"{bad} failures"))
    return checks


def constants_suite() -> list[Check]:
    checks = [
        Check("exponents d=2 are (15/32, 1/8, 1/4)",
              exponents(2) == (Fraction(15, 32), Fraction(1, 8), Fraction(1, 4))),
        Check("exponents d=3 are (23/48, 1/12, 1/6)",
              exponents(3) == (Fraction(23, 48), Fraction(1, 12), Fraction(1, 6))),
    ]
    models = [WeightModel.iid(PointMass(1.0), 2), WeightModel.iid(Exponential(1.0), 2),
              WeightModel.iid(Uniform(0.5, 1.5), 2), WeightModel.iid(Pareto(2.5, 0.5), 2),
              WeightModel.parity(Uniform(0.5, 1.5), Exponential(1.0), 2)]
    for m in models:
        b = compute_beta1(m)
        target = math.exp(-6 * m.dim) / 2
        ok = 0 < b.beta1 < m.mu and max(s.cdf(b.eps_star) for s in m.classes) < target
        checks.append(Check(f"beta1 in (0, mu) for {' / '.join(s.to_string() for s in m.classes)}",
                            ok, f"beta1={b.beta1!r} mu={m.mu!r}"))
    return checks


SUITES = {"oracle": oracle_suite, "martingale": martingale_suite,
          "detour": detour_suite, "constants": constants_suite}
