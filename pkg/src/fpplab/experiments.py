"""Monte Carlo harness: per-n passage-time statistics, event frequencies,
subsequence diagnostics and time-constant estimation.

Every replication ``r`` uses one realization keyed by ``(seed, r)``; all
boxes of that replication are views of the same weights.  Results are
assembled in replication order, so reports do not depend on the worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .geodesic import TIE_TOL, GeodesicResult, Truncation, passage_time, path_passage_time
from .lattice import GeometryError, LatticeBox, axis_edge, axis_point, detour_paths, origin
from .theory import (ConditionReport, ModelConstants, default_alpha, model_constants,
                     require_conditions, straight_line_second_moment)
from .weights import WeightModel

Z = 3.0

CSV_COLUMNS = ("n", "reps", "mean_T", "se_T", "var_T", "mean_That", "var_That", "freq_Ac",
               "freq_Vnc", "freq_Vnc_certified_share", "freq_Wnc", "freq_Gnc", "mean_len",
               "se_len", "cert_rate")


class PlanError(ValueError):
    """The experiment plan is inconsistent."""


class ReplicationError(RuntimeError):
    def __init__(self, replication: int, exc: Exception):
        super().__init__(f"replication {replication}: {type(exc).__name__}: {exc}")
        self.replication = replication


@dataclass(frozen=True)
class BoxPolicy:
    """Search box radius ``max(min_factor * n, ceil(scale * n^(1+eps)))``, clipped to ``cap``.

    ``scale`` stands in for ``8 mu / beta1``, which is astronomically large for
    the constructive ``beta1``; the certificate and containment frequencies
    measure how good the smaller box is.
    """

    eps: float = 0.25
    scale: float = 1.0
    min_factor: int = 4
    cap: int | None = None

    def __post_init__(self):
        if self.eps < 0 or self.scale <= 0 or self.min_factor < 1:
            raise PlanError("box policy needs eps >= 0, scale > 0, min_factor >= 1")
        if self.cap is not None and self.cap < 1:
            raise PlanError("box cap must be >= 1")

    def radius(self, n: int) -> int:
        r = max(self.min_factor * n, math.ceil(self.scale * n ** (1 + self.eps)))
        if self.cap is not None:
            r = min(r, self.cap)
        if r < n:
            raise PlanError(f"box cap {self.cap} cannot reach the target at distance {n}")
        return r

    def containment_radius(self, n: int, eps0: float) -> int:
        return math.ceil(self.scale * n ** (1 + eps0))


def _is_square(n: int) -> bool:
    return n >= 1 and math.isqrt(n) ** 2 == n


@dataclass(frozen=True)
class ExperimentPlan:
    model: WeightModel
    n_list: tuple[int, ...] = (8, 16, 32, 64)
    replications: int = 2000
    alpha: float | None = None
    box: BoxPolicy = BoxPolicy()
    squares: tuple[int, ...] = ()
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "n_list", tuple(int(n) for n in self.n_list))
        object.__setattr__(self, "squares", tuple(int(n) for n in self.squares))
        if not self.n_list or any(n < 1 for n in self.n_list):
            raise PlanError("n_list must be nonempty with positive entries")
        if any(b <= a for a, b in zip(self.n_list, self.n_list[1:])):
            raise PlanError("n_list must be strictly increasing")
        if self.replications < 2:
            raise PlanError("replications must be >= 2")
        if any(not _is_square(n) or n < 4 for n in self.squares):
            raise PlanError("squares must be perfect squares >= 4")
        if any(b <= a for a, b in zip(self.squares, self.squares[1:])):
            raise PlanError("squares must be strictly increasing")
        if self.alpha is not None and not 0 < self.alpha < 1:
            raise PlanError("alpha must lie in (0, 1)")
        if self.workers < 1:
            raise PlanError("workers must be >= 1")
        for n in self.targets:
            self.box.radius(n)

    @property
    def seed(self) -> int:
        return self.model.seed

    @property
    def trunc_alpha(self) -> float:
        return self.alpha if self.alpha is not None else default_alpha(self.model.dim)

    @property
    def targets(self) -> tuple[int, ...]:
        return tuple(sorted(set(self.n_list) | set(self.squares)))

    def lipschitz_levels(self, n: int) -> tuple[int, ...]:
        j = math.isqrt(n)
        return tuple(sorted({n + j, (j + 1) ** 2 - 1}))


# ---------------------------------------------------------------------------
# one replication


_SCALARS = ("T", "That", "len_T", "len_That", "cert_T", "cert_That", "straight", "A", "Vc",
            "Vc_cert", "Gc", "Ewit", "teq_checked", "teq_viol", "order_viol", "straight_viol",
            "det_real", "det_viol", "det_skip")
_SQUARE_SCALARS = ("I", "Wc", "I_neg", "lip_viol")


def _tgt(n: int, d: int):
    return axis_point(n, d)


def _detour_check(real, res: GeodesicResult, cap: float, box: LatticeBox) -> tuple[int, int, int]:
    """(edges checked, violations, skipped) of ``T(P) >= cap/2`` around heavy geodesic edges."""
    checked = viol = skipped = 0
    for e, w in zip(res.path.edges, res.raw_weights):
        if w < cap:
            continue
        try:
            paths = detour_paths(e, box)
        except GeometryError:
            skipped += 1
            continue
        checked += 1
        for p in paths:
            if path_passage_time(real, p) < cap / 2:
                viol += 1
    return checked, viol, skipped


def _replicate(plan: ExperimentPlan, consts: ModelConstants, r: int) -> dict:
    model = plan.model
    d, alpha, mu, b1 = model.dim, plan.trunc_alpha, consts.mu, consts.beta1
    real = model.realization(r)
    radii = [plan.box.radius(n) for n in plan.targets]
    radii += [plan.box.radius(k) for n in plan.squares for k in plan.lipschitz_levels(n)]
    real.reserve(max(radii))
    o = origin(d)
    out = {k: np.zeros(len(plan.targets)) for k in _SCALARS}
    sq = {k: np.zeros(len(plan.squares)) for k in _SQUARE_SCALARS}
    lip_vals = np.zeros((len(plan.squares), 2))
    for i, n in enumerate(plan.targets):
        box = LatticeBox(d, plan.box.radius(n))
        tr = Truncation(n, alpha)
        cap = tr.cap
        full = passage_time(real, box, o, _tgt(n, d))
        trunc = passage_time(real, box, o, _tgt(n, d), tr)
        tol = TIE_TOL * max(full.value, 1.0)
        straight = float(real.weights([axis_edge(j, d) for j in range(1, n + 1)]).sum())
        rec = out
        rec["T"][i] = full.value
        rec["That"][i] = trunc.value
        rec["len_T"][i] = full.length
        rec["len_That"][i] = trunc.length
        rec["cert_T"][i] = full.certified_unbounded
        rec["cert_That"][i] = trunc.certified_unbounded
        rec["straight"][i] = straight
        rec["A"][i] = straight <= 2 * mu * n
        rec["Vc"][i] = trunc.value < full.value - tol
        rec["Vc_cert"][i] = full.certified_unbounded and trunc.certified_unbounded
        rec["Gc"][i] = trunc.path.max_abs_coord() > plan.box.containment_radius(n, consts.eps0)
        kn = math.floor(b1 * n / (8 * mu))
        rec["Ewit"][i] = full.length >= 8 * mu / b1 * kn and full.value < b1 * full.length
        rec["order_viol"][i] = trunc.value > full.value + tol
        rec["straight_viol"][i] = full.value > straight * (1 + TIE_TOL)
        if trunc.max_raw_weight < cap:
            rec["teq_checked"][i] = 1
            rec["teq_viol"][i] = abs(full.value - trunc.value) > tol
        else:
            c, v, s = _detour_check(real, trunc, cap, box)
            rec["det_real"][i] = c > 0
            rec["det_viol"][i] = v
            rec["det_skip"][i] = s
        if n in plan.squares:
            q = plan.squares.index(n)
            j = math.isqrt(n)
            hi = passage_time(real, box, o, _tgt(n, d), Truncation((j + 1) ** 2, alpha))
            I = hi.value - trunc.value
            sq["I"][q] = I
            sq["Wc"][q] = I > TIE_TOL * max(hi.value, 1.0)
            sq["I_neg"][q] = I < -TIE_TOL * max(hi.value, 1.0)
            for h, k in enumerate(plan.lipschitz_levels(n)):
                kbox = LatticeBox(d, plan.box.radius(k))
                tk = Truncation(k, alpha)
                at_k = passage_time(real, kbox, o, _tgt(k, d), tk).value
                at_n = passage_time(real, kbox, o, _tgt(n, d), tk).value
                lip_vals[q, h] = at_k
                bound = tk.cap * (k - n)
                sq["lip_viol"][q] += abs(at_k - at_n) > bound * (1 + TIE_TOL) + TIE_TOL
    return {"scalars": out, "squares": sq, "lip": lip_vals}


def _run_reps(plan: ExperimentPlan, consts: ModelConstants, workers: int | None = None) -> list[dict]:
    workers = plan.workers if workers is None else workers

    def one(r):
        try:
            return _replicate(plan, consts, r)
        except (PlanError, GeometryError):
            raise
        except Exception as exc:  # engine errors carry the replication index
            raise ReplicationError(r, exc) from exc

    reps = range(plan.replications)
    if workers == 1:
        return [one(r) for r in reps]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(one, reps))


# ---------------------------------------------------------------------------
# aggregation


def _mean_se(x: np.ndarray) -> tuple[float, float]:
    return float(x.mean()), float(x.std(ddof=1) / math.sqrt(len(x)))


def _var_se(x: np.ndarray) -> tuple[float, float]:
    """Unbiased variance and a fourth-moment standard error for it."""
    v = float(x.var(ddof=1))
    c = x - x.mean()
    m4 = float(np.mean(c ** 4))
    return v, math.sqrt(max(m4 - v * v, 0.0) / len(x))


@dataclass
class NStats:
    n: int
    reps: int
    mean_T: float
    se_T: float
    var_T: float
    se_var_T: float
    second_T: float
    mean_That: float
    var_That: float
    se_var_That: float
    freq_Ac: float
    freq_Vnc: float
    freq_Vnc_certified_share: float
    freq_Wnc: float
    freq_Gnc: float
    freq_Ewit: float
    mean_len: float
    se_len: float
    max_len: int
    cert_rate: float
    mean_sq_ratio: float  # E (T/n)^2
    se_sq_ratio: float
    straight_sq_ratio: float  # n^-2 E(sum t(f_i))^2, closed form
    quantiles: tuple[float, ...]  # of T/n at 5, 25, 50, 75, 95 %

    @property
    def var_over_n(self) -> float:
        return self.var_T / self.n

    @property
    def se_var_over_n(self) -> float:
        return self.se_var_T / self.n

    @property
    def mean_ratio(self) -> float:
        return self.mean_T / self.n

    @property
    def se_ratio(self) -> float:
        return self.se_T / self.n

    @property
    def len_ratio(self) -> float:
        return self.mean_len / self.n

    @property
    def se_len_ratio(self) -> float:
        return self.se_len / self.n

    @staticmethod
    def freq_se(p: float, reps: int) -> float:
        return math.sqrt(p * (1 - p) / reps)

    def csv_row(self) -> list:
        return [self.n, self.reps, self.mean_T, self.se_T, self.var_T, self.mean_That,
                self.var_That, self.freq_Ac, self.freq_Vnc, self.freq_Vnc_certified_share,
                self.freq_Wnc, self.freq_Gnc, self.mean_len, self.se_len, self.cert_rate]


@dataclass
class SquareStats:
    n: int  # j^2
    root: int
    mean_abs_S_ratio: float  # E |S_{j^2}| / j^2 with the sample-mean centring
    max_abs_S_ratio: float
    mean_I: float
    max_I: float
    freq_I_positive: float
    freq_Wnc: float
    mean_D_ratio: float  # proxy over the sampled levels, / j^2
    max_D_ratio: float
    lipschitz_levels: tuple[int, ...]
    lipschitz_violations: int
    I_negative: int


@dataclass
class Counters:
    trunc_equal_checked: int = 0
    trunc_equal_violations: int = 0
    order_violations: int = 0
    straight_violations: int = 0
    detour_realizations: int = 0
    detour_violations: int = 0
    detour_skipped: int = 0
    lipschitz_violations: int = 0
    I_negative: int = 0


@dataclass
class MuFEstimate:
    estimate: float
    se: float
    ci: tuple[float, float]
    fekete: tuple[tuple[int, float, float], ...]  # (n, mean T/n, se)
    monotone: bool
    lower: float  # beta1 / 4
    upper: float  # mu
    bracket_ok: bool


@dataclass
class ExperimentReport:
    plan: ExperimentPlan
    constants: ModelConstants
    conditions: ConditionReport
    stats: list[NStats]
    squares: list[SquareStats]
    counters: Counters
    mu_F: MuFEstimate | None = None

    def stat(self, n: int) -> NStats:
        for s in self.stats:
            if s.n == n:
                return s
        raise KeyError(n)

    def to_csv(self) -> str:
        lines = [",".join(CSV_COLUMNS)]
        for s in self.stats:
            lines.append(",".join(_fmt(v) for v in s.csv_row()))
        return "\n".join(lines) + "\n"

    def summary_items(self) -> list[tuple[str, str]]:
        p = self.plan
        items = [("seed", str(p.seed)), ("replications", str(p.replications)),
                 ("alpha", _fmt(p.trunc_alpha))]
        items += [(f"constants.{k}", _fmt(v)) for k, v in self.constants.as_items()]
        items += [(f"conditions.{i}", line) for i, line in enumerate(self.conditions.lines())]
        items += [(f"box.radius.{n}", str(p.box.radius(n))) for n in p.targets]
        for s in self.stats:
            pre = f"n{s.n}."
            items += [(pre + "var_over_n", _fmt(s.var_over_n)),
                      (pre + "se_var_over_n", _fmt(s.se_var_over_n)),
                      (pre + "mean_over_n", _fmt(s.mean_ratio)),
                      (pre + "max_len", str(s.max_len)),
                      (pre + "freq_Em_witness_lower_bound", _fmt(s.freq_Ewit)),
                      (pre + "mean_sq_ratio", _fmt(s.mean_sq_ratio)),
                      (pre + "straight_sq_ratio", _fmt(s.straight_sq_ratio)),
                      (pre + "quantiles_T_over_n", " ".join(_fmt(q) for q in s.quantiles))]
        for q in self.squares:
            pre = f"square{q.n}."
            items += [(pre + "mean_abs_S_ratio", _fmt(q.mean_abs_S_ratio)),
                      (pre + "mean_I", _fmt(q.mean_I)),
                      (pre + "freq_I_positive", _fmt(q.freq_I_positive)),
                      (pre + "mean_D_ratio_proxy", _fmt(q.mean_D_ratio)),
                      (pre + "lipschitz_violations", str(q.lipschitz_violations))]
        items += [(f"checks.{k}", str(v)) for k, v in vars(self.counters).items()]
        if self.mu_F is not None:
            m = self.mu_F
            items += [("mu_F.estimate", _fmt(m.estimate)), ("mu_F.se", _fmt(m.se)),
                      ("mu_F.ci", f"{_fmt(m.ci[0])} {_fmt(m.ci[1])}"),
                      ("mu_F.monotone_means", str(m.monotone)),
                      ("mu_F.bracket_ok", str(m.bracket_ok))]
        return items


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def _aggregate(plan: ExperimentPlan, consts: ModelConstants, conds: ConditionReport,
               results: list[dict]) -> ExperimentReport:
    R = plan.replications
    S = {k: np.stack([res["scalars"][k] for res in results]) for k in _SCALARS}
    stats = []
    sq_index = {n: q for q, n in enumerate(plan.squares)}
    Wc_all = np.stack([res["squares"]["Wc"] for res in results]) if plan.squares else None
    for i, n in enumerate(plan.targets):
        T, Th, L = S["T"][:, i], S["That"][:, i], S["len_T"][:, i]
        mT, seT = _mean_se(T)
        vT, sevT = _var_se(T)
        vTh, sevTh = _var_se(Th)
        ml, sel = _mean_se(L)
        vc = S["Vc"][:, i].astype(bool)
        share = float(S["Vc_cert"][vc, i].mean()) if vc.any() else math.nan
        ratio2 = (T / n) ** 2
        m2, se2 = _mean_se(ratio2)
        stats.append(NStats(
            n=n, reps=R, mean_T=mT, se_T=seT, var_T=vT, se_var_T=sevT,
            second_T=float(np.mean(T * T)), mean_That=float(Th.mean()), var_That=vTh,
            se_var_That=sevTh, freq_Ac=float((S["A"][:, i] == 0).mean()),
            freq_Vnc=float(vc.mean()), freq_Vnc_certified_share=share,
            freq_Wnc=float(Wc_all[:, sq_index[n]].mean()) if n in sq_index else math.nan,
            freq_Gnc=float(S["Gc"][:, i].mean()), freq_Ewit=float(S["Ewit"][:, i].mean()),
            mean_len=ml, se_len=sel, max_len=int(L.max()), cert_rate=float(S["cert_T"][:, i].mean()),
            mean_sq_ratio=m2, se_sq_ratio=se2,
            straight_sq_ratio=straight_line_second_moment(plan.model, n) / n ** 2,
            quantiles=tuple(float(q) for q in np.quantile(T / n, [0.05, 0.25, 0.5, 0.75, 0.95])),
        ))

    squares = []
    if plan.squares:
        Q = {k: np.stack([res["squares"][k] for res in results]) for k in _SQUARE_SCALARS}
        lip = np.stack([res["lip"] for res in results])
        for q, n in enumerate(plan.squares):
            i = plan.targets.index(n)
            Th = S["That"][:, i]
            Sn = Th - Th.mean()
            levels = plan.lipschitz_levels(n)
            D = np.zeros(R)
            for h in range(len(levels)):
                Sk = lip[:, q, h] - lip[:, q, h].mean()
                D = np.maximum(D, np.abs(Sk - Sn))
            I = Q["I"][:, q]
            squares.append(SquareStats(
                n=n, root=math.isqrt(n),
                mean_abs_S_ratio=float(np.abs(Sn).mean() / n), max_abs_S_ratio=float(np.abs(Sn).max() / n),
                mean_I=float(I.mean()), max_I=float(I.max()),
                freq_I_positive=float((I > 0).mean()), freq_Wnc=float(Q["Wc"][:, q].mean()),
                mean_D_ratio=float(D.mean() / n), max_D_ratio=float(D.max() / n),
                lipschitz_levels=levels, lipschitz_violations=int(Q["lip_viol"][:, q].sum()),
                I_negative=int(Q["I_neg"][:, q].sum()),
            ))

    c = Counters(
        trunc_equal_checked=int(S["teq_checked"].sum()), trunc_equal_violations=int(S["teq_viol"].sum()),
        order_violations=int(S["order_viol"].sum()), straight_violations=int(S["straight_viol"].sum()),
        detour_realizations=int(S["det_real"].sum()), detour_violations=int(S["det_viol"].sum()),
        detour_skipped=int(S["det_skip"].sum()),
        lipschitz_violations=sum(s.lipschitz_violations for s in squares),
        I_negative=sum(s.I_negative for s in squares),
    )
    return ExperimentReport(plan, consts, conds, stats, squares, c)


def run_plan(plan: ExperimentPlan, workers: int | None = None) -> ExperimentReport:
    conds = require_conditions(plan.model)
    consts = model_constants(plan.model)
    report = _aggregate(plan, consts, conds, _run_reps(plan, consts, workers))
    if plan.model.is_iid:
        report.mu_F = estimate_mu_F(report)
    return report


def subsequence_diagnostics(report: ExperimentReport) -> list[SquareStats]:
    if not report.plan.squares:
        raise PlanError("plan has no square n-values")
    return report.squares


def estimate_mu_F(source: ExperimentReport | ExperimentPlan) -> MuFEstimate:
    """Time-constant estimate from the largest ``n`` plus the sequence of means as certificate."""
    report = run_plan(source) if isinstance(source, ExperimentPlan) else source
    plan = report.plan
    if not plan.model.is_iid:
        raise PlanError("the time constant is only estimated for iid models")
    rows = [report.stat(n) for n in plan.n_list]
    fekete = tuple((s.n, s.mean_ratio, s.se_ratio) for s in rows)
    top = rows[-1]
    est, se = top.mean_ratio, top.se_ratio
    monotone = all(b[1] <= a[1] + Z * math.hypot(a[2], b[2]) for a, b in zip(fekete, fekete[1:]))
    lower, upper = report.constants.beta1 / 4, report.constants.mu
    return MuFEstimate(est, se, (est - Z * se, est + Z * se), fekete, monotone, lower, upper,
                       lower <= est <= upper + Z * se)


# ---------------------------------------------------------------------------
# exact per-realization inequalities


@dataclass
class PointwiseReport:
    realizations: int
    order_checks: int = 0
    order_violations: int = 0
    lipschitz_checks: int = 0
    lipschitz_violations: int = 0
    straight_checks: int = 0
    straight_violations: int = 0
    trunc_equal_checked: int = 0
    trunc_equal_violations: int = 0
    detour_realizations: int = 0
    detour_edges: int = 0
    detour_violations: int = 0
    detour_skipped: int = 0
    examples: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not (self.order_violations or self.lipschitz_violations or self.straight_violations
                    or self.trunc_equal_violations or self.detour_violations)


def truncation_levels(n: int) -> tuple[int, ...]:
    return tuple(sorted({1, 2, max(1, n // 2), n, 2 * n, n * n}))


def pointwise_checks(model: WeightModel, n_values: Sequence[int] = (8, 16),
                     replications: int = 1000, alpha: float | None = None,
                     box: BoxPolicy = BoxPolicy(), first_replication: int = 0) -> PointwiseReport:
    """Count violations of the deterministic inequalities on sampled realizations.

    Per realization, in one common box: ordering in the truncation level,
    the Lipschitz bound between consecutive targets, the straight-line upper
    bound, equality when truncation does not bind on the truncated geodesic,
    and the detour lower bound around heavy geodesic edges.
    """
    d = model.dim
    alpha = default_alpha(d) if alpha is None else alpha
    ns = sorted(n_values)
    B = LatticeBox(d, box.radius(ns[-1]))
    o = origin(d)
    rep = PointwiseReport(replications)
    for r in range(first_replication, first_replication + replications):
        real = model.realization(r)
        real.reserve(B.radius)
        levels = sorted(set().union(*(truncation_levels(n) for n in ns)))
        vals = {}
        for n in ns:
            full = passage_time(real, B, o, _tgt(n, d))
            vals[n, None] = full.value
            straight = float(real.weights([axis_edge(j, d) for j in range(1, n + 1)]).sum())
            rep.straight_checks += 1
            if full.value > straight * (1 + TIE_TOL):
                rep.straight_violations += 1
                rep.examples.append(f"r={r} n={n}: T={full.value!r} > straight {straight!r}")
            heavy = False
            for k in levels:
                res = passage_time(real, B, o, _tgt(n, d), Truncation(k, alpha))
                vals[n, k] = res.value
                if k == n:
                    cap = res.truncation.cap
                    if res.max_raw_weight < cap:
                        rep.trunc_equal_checked += 1
                        if abs(res.value - full.value) > TIE_TOL * max(full.value, 1.0):
                            rep.trunc_equal_violations += 1
                            rep.examples.append(f"r={r} n={n}: truncation does not bind but values differ")
                    else:
                        c, v, s = _detour_check(real, res, cap, B)
                        heavy = heavy or c > 0
                        rep.detour_edges += c
                        rep.detour_violations += v
                        rep.detour_skipped += s
            rep.detour_realizations += heavy
            chain = [vals[n, k] for k in levels] + [full.value]
            for a, b in zip(chain, chain[1:]):
                rep.order_checks += 1
                if a > b + TIE_TOL * max(b, 1.0):
                    rep.order_violations += 1
                    rep.examples.append(f"r={r} n={n}: truncation order violated")
        for n, n1 in zip(ns, ns[1:]):
            for k in levels:
                rep.lipschitz_checks += 1
                bound = float(k) ** alpha * (n1 - n)
                if abs(vals[n, k] - vals[n1, k]) > bound * (1 + TIE_TOL):
                    rep.lipschitz_violations += 1
                    rep.examples.append(f"r={r} k={k}: Lipschitz bound violated between {n} and {n1}")
    return rep
