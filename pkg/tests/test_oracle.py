from fractions import Fraction

import numpy as np
import pytest

from fpplab.geodesic import Truncation, passage_time
from fpplab.lattice import LatticeBox, LatticePath, axis_edge
from fpplab.oracle import (BudgetExceeded, DiscreteProductSpace, brute_force_passage,
                           enumerate_paths, exact_event_probability, exact_martingale)
from fpplab.weights import Exponential, FixedWeights, PointMass, TwoPoint, WeightModel

B1 = LatticeBox(2, 1)
F1 = B1.encode_edge(axis_edge(1, 2))


@pytest.mark.parametrize("m,target,count", [
    (1, (1, 0), 7), (1, (1, 1), 8),
    (2, (1, 0), 3411), (2, (1, 1), 3762), (2, (2, 0), 4459), (2, (2, 2), 6762),
])
def test_path_counts(m, target, count):
    # counts from an independent recursive enumeration
    ps = enumerate_paths(LatticeBox(2, m), (0, 0), target)
    assert len(ps.paths) == count == len(set(ps.paths))
    assert all(p.endpoints == ((0, 0), target) for p in ps.paths)


def test_enumeration_guard():
    with pytest.raises(BudgetExceeded):
        enumerate_paths(LatticeBox(3, 1), (0, 0, 0), (1, 0, 0))
    with pytest.raises(BudgetExceeded):
        enumerate_paths(LatticeBox(2, 2), (0, 0), (1, 0), budget=100)


def test_point_mass_direct_edge():
    value, path = brute_force_passage(B1, (0, 0), (1, 0), np.ones(B1.n_edges))
    assert value == 1.0 and path == LatticePath([(0, 0), (1, 0)])


def test_heavy_first_edge_detour():
    w = np.ones(B1.n_edges)
    w[F1] = 4.0
    value, path = brute_force_passage(B1, (0, 0), (1, 0), w)
    # both 3-edge detours tie; the lower one has the smaller first-edge y-centre
    assert value == 3.0
    assert path == LatticePath([(0, 0), (0, -1), (1, -1), (1, 0)])
    w[B1.encode_edge(LatticePath([(0, 0), (0, -1)]).edges[0])] = 2.0
    value, path = brute_force_passage(B1, (0, 0), (1, 0), w)
    assert value == 3.0
    assert path == LatticePath([(0, 0), (0, 1), (1, 1), (1, 0)])


def test_value_below_straight_line():
    model = WeightModel.iid(Exponential(1.0), 2, 4)
    box = LatticeBox(2, 2)
    for r in range(20):
        real = model.realization(r)
        value, _ = brute_force_passage(box, (0, 0), (2, 0), real)
        assert value <= real.weight(axis_edge(1, 2)) + real.weight(axis_edge(2, 2))


def test_truncated_oracle_uses_capped_weights():
    w = np.full(B1.n_edges, 4.0)
    value, _ = brute_force_passage(B1, (0, 0), (1, 0), w, Truncation(4, 0.5))
    assert value == 2.0


def test_product_space_basics():
    space = DiscreteProductSpace(B1, TwoPoint(1.0, 4.0, 0.5))
    assert space.size == 4096 and space.exact
    assert space.total_probability() == 1
    assert exact_event_probability(space, lambda w: True) == 1.0
    assert exact_event_probability(space, lambda w: w[F1] == 1.0) == 0.5
    with pytest.raises(BudgetExceeded):
        DiscreteProductSpace(LatticeBox(2, 2), TwoPoint(1.0, 4.0, 0.5))


@pytest.fixture(scope="module")
def report():
    return exact_martingale(DiscreteProductSpace(B1, TwoPoint(1.0, 4.0, 0.5)), (0, 0), (1, 0))


def test_martingale_identities(report):
    assert report.exact
    assert report.telescoping_residual == 0.0
    assert report.max_cross_moment == 0.0
    assert report.variance_identity_residual == 0.0
    assert report.C1 == 34.0
    assert report.increment_bound_holds and report.conditional_bound_holds
    assert all(report.checks().values())


def test_geodesic_membership_of_f1(report):
    # exact value; the Monte Carlo check below uses the engine, not the oracle
    assert report.membership[F1] == 0.8828125
    rng = np.random.default_rng(2024)
    reps = 10 ** 5
    bits = rng.integers(0, 2, size=(reps, B1.n_edges))
    hits = 0
    f1 = axis_edge(1, 2)
    for row in bits:
        res = passage_time(FixedWeights(B1, np.where(row, 4.0, 1.0)), B1, (0, 0), (1, 0))
        hits += f1 in res.path.edges
    freq = hits / reps
    se = np.sqrt(freq * (1 - freq) / reps)
    assert abs(freq - 0.8828125) <= 3 * se


def test_martingale_point_mass_has_no_increments():
    rep = exact_martingale(DiscreteProductSpace(B1, PointMass(1.0)), (0, 0), (1, 0))
    assert np.all(rep.second_moments == 0) and rep.variance == 0 and rep.mean == 1.0


def test_truncated_martingale():
    rep = exact_martingale(DiscreteProductSpace(B1, TwoPoint(1.0, 4.0, 0.5)), (0, 0), (1, 0),
                           Truncation(16, 15 / 32))
    assert all(rep.checks().values()) and rep.conditional_bound_holds
    assert rep.variance < 2.00189208984375


def test_agreement_event_matches_engine_and_truncation_criterion():
    """P(truncated value == untruncated value) with the cap between the two atoms."""
    space = DiscreteProductSpace(B1, TwoPoint(1.0, 4.0, 0.5))
    tr = Truncation(4, 0.5)

    def agree(w):
        return brute_force_passage(B1, (0, 0), (1, 0), w)[0] == brute_force_passage(B1, (0, 0), (1, 0), w, tr)[0]

    p = exact_event_probability(space, agree)
    hits = 0
    for w in space.weight_matrix():
        fw = FixedWeights(B1, w)
        full = passage_time(fw, B1, (0, 0), (1, 0))
        cut = passage_time(fw, B1, (0, 0), (1, 0), tr)
        hits += full.value == cut.value
        if cut.max_raw_weight < tr.cap:
            assert full.value == cut.value
    assert p == Fraction(hits, 4096)
    # heavy f_1 caps to 2 while every other path costs at least 3
    assert p == Fraction(1, 2)
