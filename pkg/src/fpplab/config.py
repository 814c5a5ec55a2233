"""INI run configuration: parsing, validation and canonical echo.

Example::

    [model]
    dim = 2
    assignment = iid
    family = exponential(rate=1)

    [plan]
    n_list = 8, 16, 32, 64
    replications = 2000
    squares = 4, 9, 16

    [run]
    seed = 7

Assignments and their family keys: ``iid`` uses ``family``; ``axis`` uses
``family.axis0`` ... ``family.axis{d-1}``; ``parity`` uses ``family.even``
and ``family.odd``; ``table`` uses ``family.default`` plus
``table = 0,0/0: pointmass(c=4); 1,0/1: uniform(a=0, b=2)`` where each entry
is ``lower coordinates / axis: family``.
"""

from __future__ import annotations

import configparser
import hashlib
from dataclasses import dataclass

from .experiments import BoxPolicy, ExperimentPlan
from .lattice import EdgeRef
from .weights import WeightModel, parse_spec

OUTPUT_SECTION = "summary"

_PLAN_KEYS = {"n_list", "replications", "alpha", "squares", "box_eps", "box_scale",
              "box_cap", "box_min_factor"}
_RUN_KEYS = {"seed", "workers", "out"}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    plan: ExperimentPlan
    out: str | None = None

    @property
    def model(self) -> WeightModel:
        return self.plan.model

    @property
    def seed(self) -> int:
        return self.plan.model.seed

    def to_text(self, runtime: bool = True) -> str:
        """Canonical INI text; parsing it gives back an equal config.

        ``runtime=False`` leaves out the worker count and output directory,
        which never change results.
        """
        m, p = self.plan.model, self.plan
        lines = ["[model]", f"dim = {m.dim}", f"assignment = {m.assignment}"]
        if m.assignment == "iid":
            lines.append(f"family = {m.classes[0].to_string()}")
        elif m.assignment == "axis":
            lines += [f"family.axis{i} = {s.to_string()}" for i, s in enumerate(m.classes)]
        elif m.assignment == "parity":
            lines += [f"family.even = {m.classes[0].to_string()}",
                      f"family.odd = {m.classes[1].to_string()}"]
        else:
            lines.append(f"family.default = {m.classes[0].to_string()}")
            items = sorted(m.table.items(), key=lambda kv: (kv[0].axis, kv[0].lower))
            entries = [f"{','.join(map(str, e.lower))}/{e.axis}: {m.classes[c].to_string()}"
                       for e, c in items]
            lines.append(f"table = {'; '.join(entries)}")
        lines += ["", "[plan]", f"n_list = {', '.join(map(str, p.n_list))}",
                  f"replications = {p.replications}"]
        if p.alpha is not None:
            lines.append(f"alpha = {p.alpha!r}")
        if p.squares:
            lines.append(f"squares = {', '.join(map(str, p.squares))}")
        b = p.box
        lines += [f"box_eps = {b.eps!r}", f"box_scale = {b.scale!r}",
                  f"box_min_factor = {b.min_factor}"]
        if b.cap is not None:
            lines.append(f"box_cap = {b.cap}")
        lines += ["", "[run]", f"seed = {m.seed}"]
        if runtime:
            lines.append(f"workers = {p.workers}")
        if runtime and self.out is not None:
            lines.append(f"out = {self.out}")
        return "\n".join(lines) + "\n"

    def digest(self) -> str:
        """Hash of the canonical text, ignoring the worker count and output directory."""
        return hashlib.sha256(self.to_text(runtime=False).encode()).hexdigest()[:16]

    def with_overrides(self, seed: int | None = None, workers: int | None = None,
                       out: str | None = None) -> "RunConfig":
        plan = self.plan
        model = plan.model if seed is None else plan.model.with_seed(seed)
        plan = ExperimentPlan(model, plan.n_list, plan.replications, plan.alpha, plan.box,
                              plan.squares, plan.workers if workers is None else workers)
        return RunConfig(plan, self.out if out is None else out)


def _ints(text: str, key: str, errors: list) -> tuple[int, ...]:
    try:
        return tuple(int(x) for x in text.replace(" ", "").split(",") if x)
    except ValueError:
        errors.append(f"{key}: expected comma-separated integers, got {text!r}")
        return ()


def _parse_table(text: str, dim: int):
    entries = {}
    for item in filter(None, (t.strip() for t in text.split(";"))):
        where, _, fam = item.partition(":")
        coords, _, axis = where.partition("/")
        lower = tuple(int(c) for c in coords.split(","))
        if len(lower) != dim:
            raise ValueError(f"table entry {item!r} has {len(lower)} coordinates, need {dim}")
        entries[EdgeRef(lower, int(axis))] = parse_spec(fam)
    return entries


def parse_config(text: str) -> RunConfig:
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    errors: list[str] = []
    missing: list[str] = []
    for sec in cp.sections():
        if sec not in ("model", "plan", "run", OUTPUT_SECTION):
            errors.append(f"unknown section [{sec}]")
    model_s = cp["model"] if cp.has_section("model") else {}
    plan_s = cp["plan"] if cp.has_section("plan") else {}
    run_s = cp["run"] if cp.has_section("run") else {}

    def need(sec, name, key):
        if key not in sec:
            missing.append(f"{name}.{key}")
            return None
        return sec[key]

    dim_txt = need(model_s, "model", "dim")
    assignment = need(model_s, "model", "assignment")
    dim = None
    if dim_txt is not None:
        try:
            dim = int(dim_txt)
        except ValueError:
            errors.append(f"model.dim: not an integer: {dim_txt!r}")
    fam_keys: list[str] = []
    if assignment == "iid":
        fam_keys = ["family"]
    elif assignment == "axis" and dim is not None:
        fam_keys = [f"family.axis{i}" for i in range(dim)]
    elif assignment == "parity":
        fam_keys = ["family.even", "family.odd"]
    elif assignment == "table":
        fam_keys = ["family.default", "table"]
    elif assignment is not None and assignment != "axis":
        errors.append(f"model.assignment: unknown rule {assignment!r} (iid, axis, parity, table)")
    for k in model_s:
        if k not in {"dim", "assignment"} | set(fam_keys):
            errors.append(f"unknown key model.{k}")
    fams = {k: need(model_s, "model", k) for k in fam_keys}

    n_txt = need(plan_s, "plan", "n_list")
    reps_txt = need(plan_s, "plan", "replications")
    for k in plan_s:
        if k not in _PLAN_KEYS:
            errors.append(f"unknown key plan.{k}")
    seed_txt = need(run_s, "run", "seed")
    for k in run_s:
        if k not in _RUN_KEYS:
            errors.append(f"unknown key run.{k}")
    if missing:
        errors.insert(0, "missing required keys: " + ", ".join(missing))
    if errors:
        raise ConfigError("; ".join(errors))

    try:
        specs = {k: parse_spec(v) for k, v in fams.items() if k != "table"}
        seed = int(seed_txt)
        if assignment == "iid":
            model = WeightModel.iid(specs["family"], dim, seed)
        elif assignment == "axis":
            model = WeightModel.axis_dependent([specs[f"family.axis{i}"] for i in range(dim)], seed)
        elif assignment == "parity":
            model = WeightModel.parity(specs["family.even"], specs["family.odd"], dim, seed)
        else:
            model = WeightModel.from_table(specs["family.default"], _parse_table(fams["table"], dim),
                                           dim, seed)
        n_list = _ints(n_txt, "plan.n_list", errors)
        squares = _ints(plan_s.get("squares", ""), "plan.squares", errors)
        if errors:
            raise ConfigError("; ".join(errors))
        box = BoxPolicy(
            eps=float(plan_s.get("box_eps", BoxPolicy.eps)),
            scale=float(plan_s.get("box_scale", BoxPolicy.scale)),
            min_factor=int(plan_s.get("box_min_factor", BoxPolicy.min_factor)),
            cap=int(plan_s["box_cap"]) if plan_s.get("box_cap") else None,
        )
        alpha = float(plan_s["alpha"]) if plan_s.get("alpha") else None
        plan = ExperimentPlan(model, n_list, int(reps_txt), alpha, box, squares,
                              int(run_s.get("workers", 1)))
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from None
    return RunConfig(plan, run_s.get("out") or None)


def load_config(path: str) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            return parse_config(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
