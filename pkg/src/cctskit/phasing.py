"""Multi-period buildout of a capture/transport/storage network.

Given per-period storage targets with perfect foresight, choose when to
build each pipeline (and at what class), capture capacity, and storage
capacity so that every period's target is met and the discounted total of
capital and operating cost is minimized. Pipelines may be oversized up to
the largest class; beyond that a parallel pipe on the same route is allowed.
Once built, an edge keeps its class for good.

Timing conventions: period p covers the years from its online year up to
the next period's online year (the final period runs a full operating life).
Capital for a build online in year y is disbursed uniformly over the
construction lead years ending at y. All flows are discounted to the first
online year.

Per-period levelized costs (with and without the per-tonne storage tax
credit) are computed for each period's cohort of new capacity over its own
operating life.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from .finance import annuity_factor
from .milp import solve_milp, solve_milp_highs
from .netdesign import (
    FLOW_TOL,
    InfeasibleError,
    NetworkProblem,
    edge_class_costs,
    pump_stations,
    solve_shared,
)


@dataclass(frozen=True)
class PhaseSchedule:
    periods: tuple[tuple[int, float], ...]  # (online_year, target MtCO2/y)
    construction_lead: int = 4
    operating_life: int = 30
    discount_rate: float = 0.106

    def __post_init__(self) -> None:
        years = [y for y, _ in self.periods]
        targets = [t for _, t in self.periods]
        if any(b <= a for a, b in zip(years, years[1:])):
            raise ValueError("online years must strictly increase")
        if any(b < a for a, b in zip(targets, targets[1:])):
            raise ValueError("targets must be nondecreasing")
        if self.construction_lead < 1 or self.operating_life < 1:
            raise ValueError("construction lead and operating life must be >= 1 year")

    @property
    def base_year(self) -> int:
        return self.periods[0][0]

    def period_years(self, p: int) -> range:
        start = self.periods[p][0]
        if p + 1 < len(self.periods):
            return range(start, self.periods[p + 1][0])
        return range(start, start + self.operating_life)

    def operating_pv_factor(self, p: int) -> float:
        r = self.discount_rate
        return sum((1 + r) ** (-(y - self.base_year)) for y in self.period_years(p))

    def capital_pv_factor(self, p: int) -> float:
        """PV multiplier on overnight capital online at period p's start,
        disbursed uniformly over the construction lead years before it."""
        r = self.discount_rate
        online = self.periods[p][0]
        lead = self.construction_lead
        return sum(
            (1 + r) ** (-(online - j - self.base_year)) for j in range(1, lead + 1)
        ) / lead


@dataclass(frozen=True)
class CreditPolicy:
    bonus_rate: float = 85.0  # $/t for early construction starts
    base_rate: float = 17.0  # $/t otherwise
    credit_years: int = 12
    bonus_construction_deadline: int = 2033  # start year strictly before qualifies

    def rate_for(self, construction_start_year: int) -> float:
        if construction_start_year < self.bonus_construction_deadline:
            return self.bonus_rate
        return self.base_rate


def levelized_phase_cost(
    phase_capital: float,
    annual_costs: float,
    annual_tonnes: float,
    schedule: PhaseSchedule,
    policy: CreditPolicy,
    construction_start_year: int,
) -> tuple[float, float]:
    """(pre-credit, post-credit) levelized $/t for one cohort of capacity.

    Pre-credit levelizes capital plus recurring costs over the operating
    life; the credit subtracts the per-tonne rate scaled by the ratio of the
    credit-years annuity to the operating-life annuity.
    """
    if annual_tonnes <= 0:
        raise ValueError("annual tonnes must be positive")
    if policy.credit_years > schedule.operating_life:
        raise ValueError("credit years cannot exceed the operating life")
    a_life = annuity_factor(schedule.discount_rate, schedule.operating_life)
    a_credit = annuity_factor(schedule.discount_rate, policy.credit_years)
    pre = (phase_capital + annual_costs * a_life) / (annual_tonnes * a_life)
    rate = policy.rate_for(construction_start_year)
    post = pre - rate * a_credit / a_life
    return pre, post


@dataclass
class PhaseBuild:
    edge_id: str
    parallel_idx: int
    class_idx: int


@dataclass
class PhasePeriod:
    online_year: int
    target: float
    new_edges: list[PhaseBuild]
    new_capture: dict[str, float]  # source id -> added capacity Mt/y
    new_storage: dict[str, float]  # sink id -> added capacity Mt/y
    captures: dict[str, float]  # operating level this period
    injections: dict[str, float]
    edge_flows: dict[tuple[str, int], float]  # (edge id, parallel idx) -> Mt/y
    capital_disbursed: dict[str, float]  # overnight $ committed, by category
    pre_credit_cost: float | None
    post_credit_cost: float | None


@dataclass
class PhasePlan:
    periods: list[PhasePeriod]
    discounted_total: float
    schedule: PhaseSchedule

    def cumulative_capital(self) -> float:
        return sum(sum(p.capital_disbursed.values()) for p in self.periods)


class _PhasedModel:
    def __init__(
        self, problem: NetworkProblem, schedule: PhaseSchedule, max_parallel: int
    ):
        self.problem = problem
        self.schedule = schedule
        self.edges = problem.candidate.edges
        self.classes = problem.classes
        self.nodes = sorted(problem.candidate.nodes)
        self.E = len(self.edges)
        self.D = max_parallel
        self.C = len(self.classes)
        self.P = len(schedule.periods)
        self.S = len(problem.sources)
        self.K = len(problem.sinks)
        ed = self.E * self.D
        self.off_fp = ed * self.C * self.P
        self.off_fm = self.off_fp + ed * self.P
        self.off_x = self.off_fm + ed * self.P
        self.off_a = self.off_x + self.S * self.P
        self.off_y = self.off_a + self.S * self.P
        self.off_w = self.off_y + self.K * self.P
        self.nvar = self.off_w + self.K * self.P

    def b(self, e: int, d: int, c: int, p: int) -> int:
        return ((e * self.D + d) * self.C + c) * self.P + p

    def fp(self, e: int, d: int, p: int) -> int:
        return self.off_fp + (e * self.D + d) * self.P + p

    def fm(self, e: int, d: int, p: int) -> int:
        return self.off_fm + (e * self.D + d) * self.P + p

    def x(self, s: int, p: int) -> int:
        return self.off_x + s * self.P + p

    def a(self, s: int, p: int) -> int:
        return self.off_a + s * self.P + p

    def y(self, k: int, p: int) -> int:
        return self.off_y + k * self.P + p

    def w(self, k: int, p: int) -> int:
        return self.off_w + k * self.P + p

    def assemble(self):
        prob, sched = self.problem, self.schedule
        econ = prob.economics
        op_factor = [sched.operating_pv_factor(p) for p in range(self.P)]
        cap_factor = [sched.capital_pv_factor(p) for p in range(self.P)]
        tail_factor = [sum(op_factor[p:]) for p in range(self.P)]

        c = np.zeros(self.nvar)
        for e, edge in enumerate(self.edges):
            for ci, cls in enumerate(self.classes):
                capital, om = edge_class_costs(edge, cls, econ)
                for p in range(self.P):
                    coeff = capital * cap_factor[p] + om * tail_factor[p]
                    for d in range(self.D):
                        c[self.b(e, d, ci, p)] = coeff
        for s, src in enumerate(prob.sources):
            op_per_t = (1.0 - src.capex_fraction) * src.capture_cost * 1e6
            for p in range(self.P):
                c[self.a(s, p)] = src.unit_capital * cap_factor[p]
                c[self.x(s, p)] = op_per_t * op_factor[p]
        for k, snk in enumerate(prob.sinks):
            op_per_t = (1.0 - snk.capex_fraction) * snk.storage_cost * 1e6
            for p in range(self.P):
                c[self.w(k, p)] = snk.unit_capital * cap_factor[p]
                c[self.y(k, p)] = op_per_t * op_factor[p]

        rows_ub, rhs_ub = [], []

        def ub(row, rhs):
            rows_ub.append(row)
            rhs_ub.append(rhs)

        for e in range(self.E):
            for d in range(self.D):
                row = np.zeros(self.nvar)
                for ci in range(self.C):
                    for p in range(self.P):
                        row[self.b(e, d, ci, p)] = 1.0
                ub(row, 1.0)
        for e in range(self.E):
            for d in range(self.D):
                for p in range(self.P):
                    row = np.zeros(self.nvar)
                    row[self.fp(e, d, p)] = 1.0
                    row[self.fm(e, d, p)] = 1.0
                    for ci, cls in enumerate(self.classes):
                        for q in range(p + 1):
                            row[self.b(e, d, ci, q)] = -cls.max_flow
                    ub(row, 0.0)
        for e in range(self.E):
            for d in range(1, self.D):
                for p in range(self.P):
                    row = np.zeros(self.nvar)
                    for ci in range(self.C):
                        for q in range(p + 1):
                            row[self.b(e, d, ci, q)] = 1.0
                            row[self.b(e, d - 1, ci, q)] -= 1.0
                    ub(row, 0.0)
        for s, src in enumerate(self.problem.sources):
            for p in range(self.P):
                row = np.zeros(self.nvar)
                row[self.x(s, p)] = 1.0
                for q in range(p + 1):
                    row[self.a(s, q)] = -1.0
                ub(row, 0.0)
            row = np.zeros(self.nvar)
            for p in range(self.P):
                row[self.a(s, p)] = 1.0
            ub(row, src.max_capture)
        for k, snk in enumerate(self.problem.sinks):
            for p in range(self.P):
                row = np.zeros(self.nvar)
                row[self.y(k, p)] = 1.0
                for q in range(p + 1):
                    row[self.w(k, q)] = -1.0
                ub(row, 0.0)
            row = np.zeros(self.nvar)
            for p in range(self.P):
                row[self.w(k, p)] = 1.0
            ub(row, snk.injectivity)
        for p in range(self.P):
            row = np.zeros(self.nvar)
            for k in range(self.K):
                row[self.y(k, p)] = -1.0
            ub(row, -sched.periods[p][1])

        node_pos = {n: i for i, n in enumerate(self.nodes)}
        rows_eq, rhs_eq = [], []
        for p in range(self.P):
            balance = [np.zeros(self.nvar) for _ in self.nodes]
            for e, edge in enumerate(self.edges):
                ai, bi = node_pos[edge.node_a], node_pos[edge.node_b]
                for d in range(self.D):
                    balance[ai][self.fp(e, d, p)] -= 1.0
                    balance[ai][self.fm(e, d, p)] += 1.0
                    balance[bi][self.fp(e, d, p)] += 1.0
                    balance[bi][self.fm(e, d, p)] -= 1.0
            for s, src in enumerate(self.problem.sources):
                balance[node_pos[src.node]][self.x(s, p)] += 1.0
            for k, snk in enumerate(self.problem.sinks):
                balance[node_pos[snk.node]][self.y(k, p)] -= 1.0
            rows_eq.extend(balance)
            rhs_eq.extend([0.0] * len(balance))

        top = self.classes[-1].max_flow
        bounds = [(0.0, 1.0)] * (self.E * self.D * self.C * self.P)
        bounds += [(0.0, top * self.D)] * (2 * self.E * self.D * self.P)
        for src in self.problem.sources:
            bounds += [(0.0, src.max_capture)] * self.P
        for src in self.problem.sources:
            bounds += [(0.0, src.max_capture)] * self.P
        for snk in self.problem.sinks:
            bounds += [(0.0, snk.injectivity)] * self.P
        for snk in self.problem.sinks:
            bounds += [(0.0, snk.injectivity)] * self.P

        binaries = list(range(self.E * self.D * self.C * self.P))
        return (
            c,
            np.array(rows_ub),
            np.array(rhs_ub),
            np.array(rows_eq),
            np.array(rhs_eq),
            bounds,
            binaries,
        )

    def greedy_incumbent(self, parts):
        from scipy.optimize import linprog

        c, A_ub, b_ub, A_eq, b_eq, bounds, _ = parts
        res = linprog(
            c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, bounds=bounds,
            method="highs",
        )
        if res.status != 0:
            return None
        x = res.x
        fixed = list(bounds)
        for e in range(self.E):
            for d in range(self.D):
                flows = [
                    x[self.fp(e, d, p)] + x[self.fm(e, d, p)] for p in range(self.P)
                ]
                first = next(
                    (p for p, f in enumerate(flows) if f > FLOW_TOL), None
                )
                chosen = None
                if first is not None:
                    need = max(flows)
                    chosen = next(
                        (
                            ci
                            for ci, cls in enumerate(self.classes)
                            if cls.max_flow >= need - 1e-7
                        ),
                        self.C - 1,
                    )
                for ci in range(self.C):
                    for p in range(self.P):
                        v = 1.0 if (ci == chosen and p == first) else 0.0
                        fixed[self.b(e, d, ci, p)] = (v, v)
        res2 = linprog(
            c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, bounds=fixed,
            method="highs",
        )
        if res2.status != 0:
            return None
        return res2.x, float(res2.fun)

    def extract(self, x: np.ndarray, objective: float, policy: CreditPolicy) -> PhasePlan:
        prob, sched = self.problem, self.schedule
        econ = prob.economics
        periods: list[PhasePeriod] = []
        prev_captures: dict[str, float] = {}
        prev_op_cost = 0.0
        for p in range(self.P):
            online_year, target = sched.periods[p]
            new_edges = []
            cap_transport = 0.0
            for e, edge in enumerate(self.edges):
                for d in range(self.D):
                    for ci in range(self.C):
                        if x[self.b(e, d, ci, p)] > 0.5:
                            new_edges.append(PhaseBuild(edge.id, d, ci))
                            capital, _ = edge_class_costs(
                                edge, self.classes[ci], econ
                            )
                            cap_transport += capital
            new_capture = {
                src.id: float(x[self.a(s, p)])
                for s, src in enumerate(prob.sources)
                if x[self.a(s, p)] > FLOW_TOL
            }
            new_storage = {
                snk.id: float(x[self.w(k, p)])
                for k, snk in enumerate(prob.sinks)
                if x[self.w(k, p)] > FLOW_TOL
            }
            captures = {
                src.id: max(0.0, float(x[self.x(s, p)]))
                for s, src in enumerate(prob.sources)
            }
            injections = {
                snk.id: max(0.0, float(x[self.y(k, p)]))
                for k, snk in enumerate(prob.sinks)
            }
            edge_flows = {}
            for e, edge in enumerate(self.edges):
                for d in range(self.D):
                    f = x[self.fp(e, d, p)] - x[self.fm(e, d, p)]
                    if abs(f) > FLOW_TOL:
                        edge_flows[(edge.id, d)] = float(f)
            cap_capture = sum(
                src.unit_capital * new_capture.get(src.id, 0.0)
                for src in prob.sources
            )
            cap_storage = sum(
                snk.unit_capital * new_storage.get(snk.id, 0.0)
                for snk in prob.sinks
            )
            # cohort levelized costs: incremental tonnes and operating cost
            total_x = sum(captures.values())
            prev_x = sum(prev_captures.values())
            cohort_tonnes = (total_x - prev_x) * 1e6
            op_now = _operating_cost(prob, self, x, p)
            cohort_annual = op_now - prev_op_cost
            cohort_capital = cap_transport + cap_capture + cap_storage
            if cohort_tonnes > FLOW_TOL:
                pre, post = levelized_phase_cost(
                    cohort_capital,
                    max(0.0, cohort_annual),
                    cohort_tonnes,
                    sched,
                    policy,
                    online_year - sched.construction_lead,
                )
            else:
                pre = post = None
            periods.append(
                PhasePeriod(
                    online_year=online_year,
                    target=target,
                    new_edges=new_edges,
                    new_capture=new_capture,
                    new_storage=new_storage,
                    captures=captures,
                    injections=injections,
                    edge_flows=edge_flows,
                    capital_disbursed={
                        "capture": cap_capture,
                        "transport": cap_transport,
                        "storage": cap_storage,
                    },
                    pre_credit_cost=pre,
                    post_credit_cost=post,
                )
            )
            prev_captures = captures
            prev_op_cost = op_now
        return PhasePlan(periods=periods, discounted_total=float(objective), schedule=sched)


def _operating_cost(prob: NetworkProblem, model: "_PhasedModel", x: np.ndarray, p: int) -> float:
    """Annual operating cost (O&M plus per-tonne shares) during period p."""
    econ = prob.economics
    total = 0.0
    for e, edge in enumerate(model.edges):
        for d in range(model.D):
            built = any(
                x[model.b(e, d, ci, q)] > 0.5
                for ci in range(model.C)
                for q in range(p + 1)
            )
            if not built:
                continue
            ci = next(
                ci
                for ci in range(model.C)
                for q in range(p + 1)
                if x[model.b(e, d, ci, q)] > 0.5
            )
            _, om = edge_class_costs(edge, model.classes[ci], econ)
            total += om
    for s, src in enumerate(prob.sources):
        total += (1.0 - src.capex_fraction) * src.capture_cost * 1e6 * x[model.x(s, p)]
    for k, snk in enumerate(prob.sinks):
        total += (1.0 - snk.capex_fraction) * snk.storage_cost * 1e6 * x[model.y(k, p)]
    return total


def solve_phased(
    problem: NetworkProblem,
    schedule: PhaseSchedule,
    policy: CreditPolicy | None = None,
    max_parallel: int = 2,
    max_nodes: int = 500_000,
    strategy: str = "highs",
) -> PhasePlan:
    """Provably optimal discounted-cost buildout plan meeting every target.

    ``strategy`` is "highs" (library branch and bound, default) or "bnb"
    (the self-contained engine, for small instances and verification).
    """
    policy = policy or CreditPolicy()
    cap_total = sum(s.max_capture for s in problem.sources)
    inj_total = sum(k.injectivity for k in problem.sinks)
    for p, (year, target) in enumerate(schedule.periods):
        if target > cap_total + FLOW_TOL:
            raise InfeasibleError(
                f"period {p + 1} ({year}): target {target} exceeds total "
                f"capturable {cap_total:.6g}",
                binding="capture",
            )
        if target > inj_total + FLOW_TOL:
            raise InfeasibleError(
                f"period {p + 1} ({year}): target {target} exceeds total "
                f"injectivity {inj_total:.6g}",
                binding="injectivity",
            )
    model = _PhasedModel(problem, schedule, max_parallel)
    parts = model.assemble()
    c, A_ub, b_ub, A_eq, b_eq, bounds, binaries = parts
    if strategy == "highs":
        result = solve_milp_highs(c, A_ub, b_ub, A_eq, b_eq, bounds, binaries)
    elif strategy == "bnb":
        incumbent = model.greedy_incumbent(parts)
        result = solve_milp(
            c, A_ub, b_ub, A_eq, b_eq, bounds, binaries,
            incumbent=incumbent, max_nodes=max_nodes,
        )
    else:
        raise ValueError(f"unknown strategy {strategy!r}")
    if result is None:
        raise InfeasibleError(
            "no feasible phased buildout meets every period target",
            binding="network",
        )
    return model.extract(result.x, result.objective, policy)


def plan_discounted_cost(
    problem: NetworkProblem,
    schedule: PhaseSchedule,
    builds_by_period: list[list[tuple[str, int]]],
    captures_by_period: list[dict[str, float]],
    injections_by_period: list[dict[str, float]],
) -> float:
    """Discounted total of an externally supplied plan under the same
    timing conventions as :func:`solve_phased`.

    ``builds_by_period[p]`` lists (edge id, class idx) built online at
    period p. Capture and storage capacity additions are inferred from the
    running maxima of the per-period operating levels.
    """
    econ = problem.economics
    edge_map = {e.id: e for e in problem.candidate.edges}
    P = len(schedule.periods)
    total = 0.0
    om_running = 0.0
    cap_seen: dict[str, float] = {}
    inj_seen: dict[str, float] = {}
    src_by_id = {s.id: s for s in problem.sources}
    snk_by_id = {k.id: k for k in problem.sinks}
    for p in range(P):
        cap_pv = schedule.capital_pv_factor(p)
        op_pv = schedule.operating_pv_factor(p)
        for edge_id, ci in builds_by_period[p]:
            capital, om = edge_class_costs(
                edge_map[edge_id], problem.classes[ci], econ
            )
            total += capital * cap_pv
            om_running += om
        for sid, level in captures_by_period[p].items():
            add = max(0.0, level - cap_seen.get(sid, 0.0))
            if add > FLOW_TOL:
                total += src_by_id[sid].unit_capital * add * cap_pv
                cap_seen[sid] = level
        for kid, level in injections_by_period[p].items():
            add = max(0.0, level - inj_seen.get(kid, 0.0))
            if add > FLOW_TOL:
                total += snk_by_id[kid].unit_capital * add * cap_pv
                inj_seen[kid] = level
        op = om_running
        for sid, level in captures_by_period[p].items():
            src = src_by_id[sid]
            op += (1.0 - src.capex_fraction) * src.capture_cost * 1e6 * level
        for kid, level in injections_by_period[p].items():
            snk = snk_by_id[kid]
            op += (1.0 - snk.capex_fraction) * snk.storage_cost * 1e6 * level
        total += op * op_pv
    return total


def myopic_phase_plan(
    problem: NetworkProblem, schedule: PhaseSchedule
) -> tuple[float, list[list[tuple[str, int]]]]:
    """Re-solve the single-period design at each target, keeping prior builds.

    Returns the discounted cost of the resulting sequence (same conventions
    as :func:`solve_phased`) and the per-period build lists. Prior builds
    stay at their class and cost nothing when reused; this planner cannot
    parallel-build, so it only suits fixtures where each edge's final class
    suffices.
    """
    prebuilt: dict[str, int] = {}
    builds_by_period: list[list[tuple[str, int]]] = []
    captures_by_period: list[dict[str, float]] = []
    injections_by_period: list[dict[str, float]] = []
    for _, target in schedule.periods:
        period_problem = dataclasses.replace(problem, target=target)
        sol = solve_shared(period_problem, prebuilt=prebuilt)
        new = []
        for b in sol.builds:
            if b.edge_id not in prebuilt:
                new.append((b.edge_id, b.class_idx))
                prebuilt[b.edge_id] = b.class_idx
        builds_by_period.append(new)
        captures_by_period.append(dict(sol.captures))
        injections_by_period.append(dict(sol.injections))
    cost = plan_discounted_cost(
        problem, schedule, builds_by_period, captures_by_period, injections_by_period
    )
    return cost, builds_by_period
