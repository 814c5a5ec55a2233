import pytest
from hypothesis import given
from hypothesis import strategies as st

from fpplab.config import ConfigError, parse_config
from fpplab.lattice import EdgeRef
from fpplab.weights import Exponential, PointMass, TwoPoint, Uniform

BASE = """
[model]
dim = 2
assignment = iid
family = exponential(rate=1)

[plan]
n_list = 8, 16
replications = 100

[run]
seed = 7
"""


def test_minimal_config():
    cfg = parse_config(BASE)
    assert cfg.seed == 7 and cfg.model.classes == (Exponential(1.0),)
    assert cfg.plan.n_list == (8, 16) and cfg.plan.replications == 100
    assert cfg.out is None and cfg.plan.workers == 1


def test_missing_keys_are_listed_together():
    with pytest.raises(ConfigError) as info:
        parse_config("[model]\ndim = 2\n[run]\n")
    msg = str(info.value)
    for key in ("model.assignment", "plan.n_list", "plan.replications", "run.seed"):
        assert key in msg


@pytest.mark.parametrize("extra,where", [
    ("[plan]\nbogus = 1\n", "plan.bogus"),
    ("[model]\nflavour = 1\n", "model.flavour"),
    ("[extras]\nx = 1\n", "[extras]"),
])
def test_unknown_keys_rejected(extra, where):
    text = BASE
    sec = extra.split("\n")[0]
    if sec in text:
        text = text.replace(sec + "\n", extra)
    else:
        text += extra
    with pytest.raises(ConfigError, match=where.replace("[", r"\[").replace("]", r"\]")):
        parse_config(text)


@pytest.mark.parametrize("bad", ["family = gauss(mu=1)", "family = uniform(a=3, b=1)"])
def test_bad_family(bad):
    with pytest.raises(ConfigError):
        parse_config(BASE.replace("family = exponential(rate=1)", bad))


def test_bad_plan_values():
    with pytest.raises(ConfigError):
        parse_config(BASE.replace("8, 16", "8, x"))
    with pytest.raises(ConfigError):
        parse_config(BASE.replace("8, 16", "16, 8"))
    with pytest.raises(ConfigError):
        parse_config(BASE + "workers = 0\n")


def test_all_assignment_rules_round_trip():
    texts = [
        BASE,
        BASE.replace("assignment = iid\nfamily = exponential(rate=1)",
                     "assignment = axis\nfamily.axis0 = pointmass(c=1)\nfamily.axis1 = uniform(a=0.5, b=1.5)"),
        BASE.replace("assignment = iid\nfamily = exponential(rate=1)",
                     "assignment = parity\nfamily.even = uniform(a=0.5, b=1.5)\nfamily.odd = exponential(rate=1)"),
        BASE.replace("assignment = iid\nfamily = exponential(rate=1)",
                     "assignment = table\nfamily.default = pointmass(c=1)\n"
                     "table = 0,0/0: twopoint(v1=1, v2=4, p=0.5); 1,-1/1: pointmass(c=3)"),
    ]
    for text in texts:
        cfg = parse_config(text)
        again = parse_config(cfg.to_text())
        assert again == cfg and again.to_text() == cfg.to_text()
        assert again.digest() == cfg.digest()
    table = parse_config(texts[3]).model
    assert table.spec_for(EdgeRef((0, 0), 0)) == TwoPoint(1.0, 4.0, 0.5)
    assert table.spec_for(EdgeRef((1, -1), 1)) == PointMass(3.0)
    assert table.spec_for(EdgeRef((5, 5), 0)) == PointMass(1.0)


def test_axis_rule_needs_every_axis():
    text = BASE.replace("assignment = iid\nfamily = exponential(rate=1)",
                        "assignment = axis\nfamily.axis0 = pointmass(c=1)")
    with pytest.raises(ConfigError, match="family.axis1"):
        parse_config(text)


def test_overrides_and_digest():
    cfg = parse_config(BASE)
    moved = cfg.with_overrides(seed=9, workers=4, out="elsewhere")
    assert moved.seed == 9 and moved.plan.workers == 4 and moved.out == "elsewhere"
    assert moved.digest() != cfg.digest()
    assert cfg.with_overrides(workers=4, out="x").digest() == cfg.digest()


def test_summary_section_is_ignored():
    cfg = parse_config(BASE)
    assert parse_config(cfg.to_text() + "\n[summary]\nanything = goes\n") == cfg


@given(st.lists(st.integers(1, 200), min_size=1, max_size=5, unique=True),
       st.integers(2, 5000), st.integers(0, 2 ** 64 - 1),
       st.floats(0.05, 2.0), st.floats(0.1, 3.0), st.sampled_from([None, 0.3, 0.46875]),
       st.sampled_from([None, 500]), st.integers(1, 8))
def test_echo_round_trip_property(ns, reps, seed, eps, scale, alpha, cap, workers):
    ns = sorted(ns)
    cap_line = f"box_cap = {max(cap, ns[-1])}\n" if cap else ""
    alpha_line = f"alpha = {alpha!r}\n" if alpha else ""
    text = (f"[model]\ndim = 3\nassignment = iid\nfamily = uniform(a=0.5, b=1.5)\n"
            f"[plan]\nn_list = {', '.join(map(str, ns))}\nreplications = {reps}\n"
            f"box_eps = {eps!r}\nbox_scale = {scale!r}\n{cap_line}{alpha_line}"
            f"[run]\nseed = {seed}\nworkers = {workers}\n")
    cfg = parse_config(text)
    assert cfg.model.classes == (Uniform(0.5, 1.5),)
    assert parse_config(cfg.to_text()) == cfg
