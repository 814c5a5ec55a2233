import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fpplab import _kernels as K
from fpplab.lattice import EdgeRef, LatticeBox, axis_edge
from fpplab.weights import (Exponential, Pareto, PointMass, TwoPoint, Uniform, WeightModel,
                            laplace_transform, parse_spec, sample_weight, small_ball,
                            truncate_weight)

u64 = st.integers(0, 2 ** 64 - 1)


@given(st.lists(u64, min_size=4, max_size=4), st.lists(u64, min_size=2, max_size=2))
def test_philox_block_matches_numpy(counter, key):
    # numpy bumps its 256-bit counter before producing the first block
    value = (sum(c << (64 * i) for i, c in enumerate(counter)) - 1) % 2 ** 256
    before = np.array([(value >> (64 * i)) & (2 ** 64 - 1) for i in range(4)], dtype=np.uint64)
    ref = np.random.Philox(counter=before, key=np.array(key, dtype=np.uint64))
    mine = K.philox_block(np.array(counter, dtype=np.uint64), np.array(key, dtype=np.uint64))
    assert list(mine) == list(ref.random_raw(4))


def _one_edge_samples(spec, n, seed=11):
    """Weight of f_1 across ``n`` replications."""
    model = WeightModel.iid(spec, 2, seed)
    lowers = np.zeros((n, 2), dtype=np.int64)
    axes = np.zeros(n, dtype=np.int64)
    return model.sample(lowers, axes, np.arange(n, dtype=np.uint64))


def test_point_mass_weight_is_constant():
    real = WeightModel.iid(PointMass(1.0), 2, 3).realization(5)
    assert {sample_weight(real, e) for e in LatticeBox(2, 2).edges()} == {1.0}


def test_same_key_same_weight():
    model = WeightModel.iid(Exponential(1.0), 2, seed=7)
    f1 = axis_edge(1, 2)
    a = sample_weight(model.realization(0), f1)
    b = sample_weight(WeightModel.iid(Exponential(1.0), 2, seed=7).realization(0), f1)
    assert a == b == sample_weight(model.realization(0), f1)
    assert a != sample_weight(model.realization(1), f1)
    assert a != sample_weight(model.with_seed(8).realization(0), f1)


def test_uniform_mean_across_replications():
    x = _one_edge_samples(Uniform(0.5, 1.5), 10 ** 5)
    assert abs(x.mean() - 1.0) < 0.01


@pytest.mark.parametrize("spec", [Uniform(0.5, 1.5), Exponential(2.0), Pareto(4.5, 1.0),
                                  TwoPoint(1.0, 4.0, 0.3), PointMass(2.5)])
def test_moments_within_four_se(spec):
    x = _one_edge_samples(spec, 10 ** 5)
    for p, emp in ((1, x), (2, x * x)):
        se = emp.std() / math.sqrt(len(x))
        assert abs(emp.mean() - spec.moment(p)) <= 4 * se + 1e-12


def test_pareto_mean_within_four_se():
    spec = Pareto(2.5, 0.5)
    x = _one_edge_samples(spec, 10 ** 5)
    assert abs(x.mean() - spec.mean) <= 4 * x.std() / math.sqrt(len(x))


def test_many_edges_one_replication_look_independent():
    model = WeightModel.iid(Uniform(0.0, 1.0), 2, 1)
    w = model.realization(0).box_weights(LatticeBox(2, 40))
    assert abs(w.mean() - 0.5) < 4 * math.sqrt(1 / 12 / len(w))
    assert abs(np.corrcoef(w[:-1], w[1:])[0, 1]) < 4 / math.sqrt(len(w))


def test_box_weights_match_single_queries_and_survive_growth():
    model = WeightModel.parity(Uniform(0.5, 1.5), Exponential(1.0), 2, 4)
    real = model.realization(2)
    small = LatticeBox(2, 2)
    first = real.box_weights(small)
    real.reserve(6)
    assert np.array_equal(real.box_weights(small), first)
    assert all(real.weight(e) == w for e, w in zip(small.edges(), first))


def test_axis_and_parity_rules_pick_families():
    model = WeightModel.axis_dependent([PointMass(1.0), PointMass(2.0), PointMass(3.0)])
    real = model.realization(0)
    assert [real.weight(EdgeRef((0, 0, 0), a)) for a in range(3)] == [1.0, 2.0, 3.0]
    par = WeightModel.parity(PointMass(1.0), PointMass(2.0))
    assert par.realization(0).weight(EdgeRef((1, 1), 0)) == 1.0
    assert par.realization(0).weight(EdgeRef((1, 0), 1)) == 2.0
    assert par.mu == 2.0


def test_table_rule():
    hot = EdgeRef((0, 0), 0)
    model = WeightModel.from_table(PointMass(1.0), {hot: PointMass(4.0)})
    real = model.realization(0)
    assert real.weight(hot) == 4.0 and real.weight(EdgeRef((1, 0), 0)) == 1.0


def test_truncation_examples():
    assert truncate_weight(5.0, 16, 0.5) == 4.0
    assert truncate_weight(0.3, 3, 0.9) == 0.3
    assert truncate_weight(5.0, 16, 0.46875) == pytest.approx(3.668016172818685, rel=1e-15)


@given(st.floats(0, 1e6), st.integers(1, 10 ** 4), st.integers(1, 10 ** 4), st.floats(0.01, 0.99))
def test_truncation_order(t, k, k1, alpha):
    k, k1 = min(k, k1), max(k, k1)
    assert truncate_weight(t, k, alpha) <= truncate_weight(t, k1, alpha) <= t


def test_laplace_examples():
    assert laplace_transform(Exponential(1.0), 1.0) == pytest.approx(0.5, rel=1e-15)
    assert laplace_transform(PointMass(2.0), 1.0) == pytest.approx(math.exp(-2), rel=1e-15)


def test_pareto_laplace_against_monte_carlo():
    # frozen from 10^6 scipy.stats.pareto draws: mean 0.4739593, SE 1.294e-4
    mc_mean, mc_se = 0.473959260381302, 0.00012943117522964395
    assert abs(laplace_transform(Pareto(2.5, 0.5), 1.0) - mc_mean) <= 3 * mc_se
    # and against scipy's own quadrature of the density
    assert laplace_transform(Pareto(2.5, 0.5), 1.0) == pytest.approx(0.47396741123818414, rel=1e-10)


@pytest.mark.parametrize("spec", [Uniform(0.5, 1.5), Exponential(1.0), Pareto(2.5, 0.5),
                                  TwoPoint(1.0, 4.0, 0.5), PointMass(1.0)])
def test_laplace_decreasing_and_tends_to_one(spec):
    vals = [laplace_transform(spec, s) for s in (1e-6, 1e-3, 0.1, 1.0, 5.0)]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    assert vals[0] == pytest.approx(1.0, abs=1e-5)
    assert vals[1] == pytest.approx(1.0, abs=5e-3)
    with pytest.raises(ValueError):
        laplace_transform(spec, 0.0)


def test_small_ball_examples():
    assert small_ball(Uniform(0.5, 1.5), 0.4) == 0.0
    assert small_ball(Exponential(1.0), 0.1) == pytest.approx(1 - math.exp(-0.1), rel=1e-14)
    assert small_ball(TwoPoint(1.0, 4.0, 0.3), 2.0) == pytest.approx(0.3)
    # strict inequality: the atom at c is not below c
    assert small_ball(PointMass(1.0), 1.0) == 0.0


@pytest.mark.parametrize("spec", [Uniform(0.5, 1.5), Exponential(3.0), Pareto(2.5, 0.5),
                                  TwoPoint(1.0, 4.0, 0.25), PointMass(2.0)])
def test_spec_text_round_trip(spec):
    assert parse_spec(spec.to_string()) == spec


@pytest.mark.parametrize("text", ["gauss(mu=1)", "uniform(a=2, b=1)", "pareto(shape=-1, scale=1)",
                                  "exponential(lambda=1)", "pointmass"])
def test_bad_specs(text):
    with pytest.raises(ValueError):
        parse_spec(text)


def test_model_validation():
    with pytest.raises(ValueError):
        WeightModel.iid(Exponential(1.0), dim=1)
    with pytest.raises(ValueError):
        WeightModel(2, "iid", (Exponential(1.0), Exponential(2.0)))
    with pytest.raises(ValueError):
        WeightModel(2, "checkerboard", (Exponential(1.0),))
