"""Single-period CO2 network design.

Two designs are supported over the same candidate graph:

* ``solve_shared`` - the cost-minimizing mixed-binary program: pick at most
  one capacity class per candidate edge, route flows from capture sources to
  storage sinks, meet an aggregate storage target, and minimize annualized
  capture + transport + storage cost. Solved to proven optimality by branch
  and bound on the class binaries over an LP relaxation.
* ``solve_dedicated`` - the one-pipe-per-source baseline: sources are placed
  one at a time (largest first, then by straight-line distance from the
  largest), each on its own cheapest route to a sink with injectivity left.

Both return a :class:`NetworkSolution` whose cost report is recomputable
from the raw decisions; ``verify_solution`` re-walks the graph and checks
conservation, capacities, and the report against an independent tally.
"""

from __future__ import annotations

import heapq
import itertools
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .milp import MilpResult, solve_milp, solve_milp_highs
from .routing import CandidateEdge, CandidateNetwork

FLOW_TOL = 1e-9


class InfeasibleError(Exception):
    def __init__(self, message: str, binding: str):
        super().__init__(message)
        self.binding = binding  # "capture" | "injectivity" | "network"


@dataclass(frozen=True)
class CapacityClass:
    max_flow: float  # MtCO2/y
    capital_per_km: float  # $
    om_per_km_y: float  # $/y


#: Calibration defaults exhibiting scale economies in $/km per unit capacity.
DEFAULT_CLASSES: tuple[CapacityClass, ...] = (
    CapacityClass(1.0, 0.7e6, 17_500.0),
    CapacityClass(3.0, 1.2e6, 30_000.0),
    CapacityClass(6.0, 1.8e6, 45_000.0),
    CapacityClass(9.0, 2.3e6, 57_500.0),
    CapacityClass(25.0, 4.0e6, 100_000.0),
)


def validate_classes(classes: tuple[CapacityClass, ...]) -> None:
    for a, b in zip(classes, classes[1:]):
        if b.max_flow <= a.max_flow or b.capital_per_km <= a.capital_per_km:
            raise ValueError("classes must strictly increase in max_flow and capital")
        if b.capital_per_km / b.max_flow >= a.capital_per_km / a.max_flow:
            raise ValueError("capital per km per unit flow must strictly decrease")


@dataclass(frozen=True)
class SourceSpec:
    id: str
    node: str  # node id in the candidate network
    max_capture: float  # MtCO2/y
    capture_cost: float  # $/t, levelized
    unit_capital: float = 0.0  # overnight $ per (MtCO2/y) of capture capacity
    capex_fraction: float = 0.5  # capital share of the levelized cost


@dataclass(frozen=True)
class SinkSpec:
    id: str
    node: str
    injectivity: float  # MtCO2/y
    storage_cost: float  # $/t, levelized
    unit_capital: float = 0.0
    capex_fraction: float = 0.5


@dataclass(frozen=True)
class NetworkEconomics:
    project_years: int = 30
    fixed_charge_rate: float = 0.106  # 1/y on transport capital
    pump_spacing_km: float = 80.0
    pump_station_capital: float = 10e6
    pump_station_om_y: float = 0.25e6
    pressure_window_barg: tuple[float, float] = (86.0, 150.0)  # recorded metadata
    binary_capture: bool = False  # all-or-nothing capture per source


@dataclass
class NetworkProblem:
    candidate: CandidateNetwork
    sources: list[SourceSpec]
    sinks: list[SinkSpec]
    target: float  # MtCO2/y to capture and store
    classes: tuple[CapacityClass, ...] = DEFAULT_CLASSES
    economics: NetworkEconomics = field(default_factory=NetworkEconomics)

    def __post_init__(self) -> None:
        validate_classes(self.classes)
        if self.target < 0:
            raise ValueError("target must be >= 0")


def pump_stations(length_km: float, spacing_km: float) -> int:
    """Stations every `spacing_km` along an edge, excluding the termini."""
    return max(0, math.ceil(length_km / spacing_km) - 1)


def edge_class_costs(
    edge: CandidateEdge, cls: CapacityClass, econ: NetworkEconomics
) -> tuple[float, float]:
    """(overnight capital $, annual O&M $/y) of building the edge at a class.

    Capital scales with the terrain-weighted length; O&M with the geometric
    length. Pump stations add flat capital and O&M per station.
    """
    pumps = pump_stations(edge.length_km, econ.pump_spacing_km)
    capital = (
        cls.capital_per_km * edge.length_km * edge.cost_multiplier
        + pumps * econ.pump_station_capital
    )
    om = cls.om_per_km_y * edge.length_km + pumps * econ.pump_station_om_y
    return capital, om


def edge_annualized(
    edge: CandidateEdge, cls: CapacityClass, econ: NetworkEconomics
) -> float:
    capital, om = edge_class_costs(edge, cls, econ)
    return econ.fixed_charge_rate * capital + om


@dataclass
class EdgeBuild:
    edge_id: str
    class_idx: int
    flow: float  # MtCO2/y
    direction: tuple[str, str]  # (from node, to node)
    owner: str | None = None  # dedicated mode: the source owning this pipe


@dataclass
class SourceBreakdown:
    """Per-source cost detail (dedicated mode), one row per placed source."""

    source_id: str
    captured: float
    capture_cost: float
    transport_cost: float  # $/t
    storage_cost: float  # $/t
    total_cost: float  # $/t
    pipe_km: float
    sink_id: str
    transport_per_kt_km_delivered: float  # $ per 10^3 t-km actually moved
    transport_per_kt_km_nameplate: float  # $ per 10^3 t-km of class capacity


@dataclass
class CostReport:
    annual_tonnes: float
    levelized: dict[str, float]  # capture/transport/storage/total, $/t
    capital: dict[str, float]  # capture/transport/storage, overnight $
    total_pipeline_km: float
    km_per_mt_y: float
    storage_sites_used: int
    sej_km: float


@dataclass
class NetworkSolution:
    mode: str  # "shared" | "dedicated"
    captures: dict[str, float]
    injections: dict[str, float]
    builds: list[EdgeBuild]
    objective: float  # annualized $/y
    report: CostReport
    unplaced: list[str] = field(default_factory=list)
    source_rows: list[SourceBreakdown] = field(default_factory=list)
    prebuilt: dict[str, int] = field(default_factory=dict)  # sunk edges (id -> class)


def _aggregate_checks(problem: NetworkProblem) -> None:
    cap_total = sum(s.max_capture for s in problem.sources)
    inj_total = sum(k.injectivity for k in problem.sinks)
    if cap_total < problem.target - FLOW_TOL:
        raise InfeasibleError(
            f"target {problem.target} Mt/y exceeds total capturable "
            f"{cap_total:.6g} Mt/y",
            binding="capture",
        )
    if inj_total < problem.target - FLOW_TOL:
        raise InfeasibleError(
            f"target {problem.target} Mt/y exceeds total injectivity "
            f"{inj_total:.6g} Mt/y",
            binding="injectivity",
        )


class _SharedModel:
    """Variable layout and matrix assembly for the shared-network program."""

    def __init__(self, problem: NetworkProblem, prebuilt: dict[str, int] | None = None):
        self.problem = problem
        self.prebuilt = prebuilt or {}
        net = problem.candidate
        self.edges = net.edges
        self.classes = problem.classes
        self.nodes = sorted(net.nodes)
        self.ne = len(self.edges)
        self.nc = len(self.classes)
        self.ns = len(problem.sources)
        self.nk = len(problem.sinks)
        self.off_fp = self.ne * self.nc
        self.off_fm = self.off_fp + self.ne
        self.off_x = self.off_fm + self.ne
        self.off_y = self.off_x + self.ns
        self.off_z = self.off_y + self.nk
        self.nvar = self.off_z + (self.ns if problem.economics.binary_capture else 0)

    def b_idx(self, e: int, c: int) -> int:
        return e * self.nc + c

    def assemble(self):
        p, econ = self.problem, self.problem.economics
        c = np.zeros(self.nvar)
        for e, edge in enumerate(self.edges):
            for ci, cls in enumerate(self.classes):
                if self.prebuilt.get(edge.id) == ci:
                    continue  # sunk cost: already built at this class
                c[self.b_idx(e, ci)] = edge_annualized(edge, cls, econ)
        for s, src in enumerate(p.sources):
            c[self.off_x + s] = src.capture_cost * 1e6
        for k, snk in enumerate(p.sinks):
            c[self.off_y + k] = snk.storage_cost * 1e6

        rows_ub, rhs_ub = [], []
        for e in range(self.ne):
            row = np.zeros(self.nvar)
            for ci in range(self.nc):
                row[self.b_idx(e, ci)] = 1.0
            rows_ub.append(row)
            rhs_ub.append(1.0)
        # no single edge can carry more than the system-wide feasible flow;
        # capping class capacities at that bound tightens the LP relaxation
        flow_cap = min(
            sum(s.max_capture for s in p.sources),
            sum(k.injectivity for k in p.sinks),
        )
        for e in range(self.ne):
            row = np.zeros(self.nvar)
            row[self.off_fp + e] = 1.0
            row[self.off_fm + e] = 1.0
            for ci, cls in enumerate(self.classes):
                row[self.b_idx(e, ci)] = -min(cls.max_flow, flow_cap)
            rows_ub.append(row)
            rhs_ub.append(0.0)
        row = np.zeros(self.nvar)
        for k in range(self.nk):
            row[self.off_y + k] = -1.0
        rows_ub.append(row)
        rhs_ub.append(-p.target)

        node_pos = {n: i for i, n in enumerate(self.nodes)}
        rows_eq, rhs_eq = [], []
        balance = [np.zeros(self.nvar) for _ in self.nodes]
        for e, edge in enumerate(self.edges):
            a, b = node_pos[edge.node_a], node_pos[edge.node_b]
            balance[a][self.off_fp + e] -= 1.0  # fp leaves node_a
            balance[a][self.off_fm + e] += 1.0
            balance[b][self.off_fp + e] += 1.0
            balance[b][self.off_fm + e] -= 1.0
        for s, src in enumerate(p.sources):
            balance[node_pos[src.node]][self.off_x + s] += 1.0
        for k, snk in enumerate(p.sinks):
            balance[node_pos[snk.node]][self.off_y + k] -= 1.0
        rows_eq.extend(balance)
        rhs_eq.extend([0.0] * len(balance))
        if econ.binary_capture:
            for s, src in enumerate(p.sources):
                row = np.zeros(self.nvar)
                row[self.off_x + s] = 1.0
                row[self.off_z + s] = -src.max_capture
                rows_eq.append(row)
                rhs_eq.append(0.0)

        bounds: list[tuple[float, float]] = []
        bounds += [(0.0, 1.0)] * (self.ne * self.nc)
        for e, edge in enumerate(self.edges):
            if edge.id in self.prebuilt:
                bounds[self.b_idx(e, self.prebuilt[edge.id])] = (1.0, 1.0)
        top = self.classes[-1].max_flow
        bounds += [(0.0, top)] * (2 * self.ne)
        bounds += [(0.0, src.max_capture) for src in p.sources]
        bounds += [(0.0, snk.injectivity) for snk in p.sinks]
        if econ.binary_capture:
            bounds += [(0.0, 1.0)] * self.ns

        binaries = list(range(self.ne * self.nc))
        if econ.binary_capture:
            binaries += list(range(self.off_z, self.off_z + self.ns))
        return (
            c,
            np.array(rows_ub),
            np.array(rhs_ub),
            np.array(rows_eq),
            np.array(rhs_eq),
            bounds,
            binaries,
        )

    def extract(self, x: np.ndarray, objective: float) -> NetworkSolution:
        p = self.problem
        builds = []
        for e, edge in enumerate(self.edges):
            chosen = None
            for ci in range(self.nc):
                if x[self.b_idx(e, ci)] > 0.5:
                    chosen = ci
            if chosen is None:
                continue
            net_flow = x[self.off_fp + e] - x[self.off_fm + e]
            direction = (
                (edge.node_a, edge.node_b)
                if net_flow >= 0
                else (edge.node_b, edge.node_a)
            )
            builds.append(EdgeBuild(edge.id, chosen, abs(net_flow), direction))
        captures = {
            src.id: max(0.0, float(x[self.off_x + s]))
            for s, src in enumerate(p.sources)
        }
        injections = {
            snk.id: max(0.0, float(x[self.off_y + k]))
            for k, snk in enumerate(p.sinks)
        }
        report = summarize(p, captures, injections, builds)
        return NetworkSolution(
            mode="shared",
            captures=captures,
            injections=injections,
            builds=builds,
            objective=float(objective),
            report=report,
            prebuilt=dict(self.prebuilt),
        )


def summarize(
    problem: NetworkProblem,
    captures: dict[str, float],
    injections: dict[str, float],
    builds: list[EdgeBuild],
) -> CostReport:
    econ = problem.economics
    net = problem.candidate
    edge_map = {e.id: e for e in net.edges}
    tonnes = sum(captures.values()) * 1e6
    cap_annual = sum(
        s.capture_cost * captures.get(s.id, 0.0) * 1e6 for s in problem.sources
    )
    sto_annual = sum(
        k.storage_cost * injections.get(k.id, 0.0) * 1e6 for k in problem.sinks
    )
    trn_annual = trn_capital = km = sej = 0.0
    for b in builds:
        edge = edge_map[b.edge_id]
        cls = problem.classes[b.class_idx]
        capital, om = edge_class_costs(edge, cls, econ)
        trn_capital += capital
        trn_annual += econ.fixed_charge_rate * capital + om
        km += edge.length_km
        sej += edge.sej_km
    cap_capital = sum(
        s.unit_capital * captures.get(s.id, 0.0) for s in problem.sources
    )
    sto_capital = sum(
        k.unit_capital * injections.get(k.id, 0.0) for k in problem.sinks
    )
    lev = {
        "capture": cap_annual / tonnes if tonnes else 0.0,
        "transport": trn_annual / tonnes if tonnes else 0.0,
        "storage": sto_annual / tonnes if tonnes else 0.0,
    }
    lev["total"] = lev["capture"] + lev["transport"] + lev["storage"]
    return CostReport(
        annual_tonnes=tonnes,
        levelized=lev,
        capital={
            "capture": cap_capital,
            "transport": trn_capital,
            "storage": sto_capital,
        },
        total_pipeline_km=km,
        km_per_mt_y=km / (tonnes / 1e6) if tonnes else 0.0,
        storage_sites_used=sum(1 for v in injections.values() if v > FLOW_TOL),
        sej_km=sej,
    )


def _greedy_incumbent(model: _SharedModel, lp_parts) -> tuple[np.ndarray, float] | None:
    """Round the LP relaxation up to a feasible build, then re-optimize flows."""
    c, A_ub, b_ub, A_eq, b_eq, bounds, _ = lp_parts
    from scipy.optimize import linprog

    res = linprog(
        c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, bounds=bounds, method="highs"
    )
    if res.status != 0:
        return None
    x = res.x
    fixed = list(bounds)
    for e in range(model.ne):
        if model.edges[e].id in model.prebuilt:
            continue
        flow = x[model.off_fp + e] + x[model.off_fm + e]
        chosen = None
        if flow > FLOW_TOL:
            for ci, cls in enumerate(model.classes):
                if cls.max_flow >= flow - 1e-7:
                    chosen = ci
                    break
        for ci in range(model.nc):
            v = 1.0 if ci == chosen else 0.0
            fixed[model.b_idx(e, ci)] = (v, v)
    if model.problem.economics.binary_capture:
        for s in range(model.ns):
            v = 1.0 if x[model.off_x + s] > FLOW_TOL else 0.0
            fixed[model.off_z + s] = (v, v)
    res2 = linprog(
        c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, bounds=fixed, method="highs"
    )
    if res2.status != 0:
        return None
    return res2.x, float(res2.fun)


def solve_shared(
    problem: NetworkProblem,
    strategy: str = "highs",
    enumerate_threshold: int = 0,
    max_nodes: int = 500_000,
    prebuilt: dict[str, int] | None = None,
) -> NetworkSolution:
    """Provably optimal shared-infrastructure design.

    ``strategy`` picks the exact engine: "highs" (library branch and bound,
    default), "bnb" (the self-contained branch and bound; fine up to a few
    dozen class binaries), "enumerate" (exhaustive over class assignments
    with admissible pruning), or "auto" (enumerate when the edge count is at
    most ``enumerate_threshold``, else highs). All prove optimality.
    ``prebuilt`` marks edges already in the ground (edge id -> class index):
    they provide capacity at zero cost and the objective covers new spend
    only, which supports expansion and myopic-planning analyses.
    """
    _aggregate_checks(problem)
    if (
        problem.target <= FLOW_TOL
        and not problem.economics.binary_capture
        and not prebuilt
    ):
        captures = {s.id: 0.0 for s in problem.sources}
        injections = {k.id: 0.0 for k in problem.sinks}
        return NetworkSolution(
            mode="shared",
            captures=captures,
            injections=injections,
            builds=[],
            objective=0.0,
            report=summarize(problem, captures, injections, []),
        )
    model = _SharedModel(problem, prebuilt)
    parts = model.assemble()
    if strategy == "auto":
        strategy = "enumerate" if model.ne <= enumerate_threshold else "highs"
    if strategy == "enumerate":
        result = _solve_by_enumeration(model, parts)
    elif strategy == "highs":
        c, A_ub, b_ub, A_eq, b_eq, bounds, binaries = parts
        result = solve_milp_highs(c, A_ub, b_ub, A_eq, b_eq, bounds, binaries)
    elif strategy == "bnb":
        c, A_ub, b_ub, A_eq, b_eq, bounds, binaries = parts
        incumbent = _greedy_incumbent(model, parts)
        result = solve_milp(
            c, A_ub, b_ub, A_eq, b_eq, bounds, binaries,
            incumbent=incumbent, max_nodes=max_nodes,
        )
    else:
        raise ValueError(f"unknown strategy {strategy!r}")
    if result is None:
        raise InfeasibleError(
            "no feasible routing meets the target through the candidate network",
            binding="network",
        )
    return model.extract(result.x, result.objective)


def _solve_by_enumeration(model: _SharedModel, parts) -> MilpResult | None:
    """Exhaustive search over per-edge class assignments, with pruning.

    The flow cost with every edge at the top class lower-bounds the flow
    cost of any assignment, so subtrees whose fixed build cost plus that
    bound cannot beat the incumbent are skipped; the search stays exact.
    """
    from scipy.optimize import linprog

    c, A_ub, b_ub, A_eq, b_eq, bounds, _ = parts
    econ = model.problem.economics
    capture_options = (
        list(itertools.product((0.0, 1.0), repeat=model.ns))
        if econ.binary_capture
        else [None]
    )
    free_edges = [
        e for e in range(model.ne) if model.edges[e].id not in model.prebuilt
    ]

    def solve_assignment(assign: dict[int, int], zs):
        # assign: free edge index -> option (0 = unbuilt, i = class i-1)
        fb = list(bounds)
        for e, choice in assign.items():
            for ci in range(model.nc):
                v = 1.0 if ci == choice - 1 else 0.0
                fb[model.b_idx(e, ci)] = (v, v)
        if zs is not None:
            for s, v in enumerate(zs):
                fb[model.off_z + s] = (v, v)
        res = linprog(
            c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq,
            bounds=fb, method="highs",
        )
        return res if res.status == 0 else None

    option_cost = {
        e: [0.0]
        + [edge_annualized(model.edges[e], cls, econ) for cls in model.classes]
        for e in free_edges
    }
    best: MilpResult | None = None
    for zs in capture_options:
        all_top = solve_assignment({e: model.nc for e in free_edges}, zs)
        if all_top is None:
            continue
        flow_lb = all_top.fun - sum(option_cost[e][model.nc] for e in free_edges)
        if best is None or all_top.fun < best.objective - 1e-12:
            best = MilpResult(all_top.x.copy(), float(all_top.fun), 0)
        assign: dict[int, int] = {}

        def descend(i: int, fixed: float):
            nonlocal best
            if best is not None and fixed + flow_lb >= best.objective - 1e-12:
                return
            if i == len(free_edges):
                res = solve_assignment(assign, zs)
                if res is not None and (
                    best is None or res.fun < best.objective - 1e-12
                ):
                    best = MilpResult(res.x.copy(), float(res.fun), 0)
                return
            e = free_edges[i]
            for choice, cost in enumerate(option_cost[e]):
                assign[e] = choice
                descend(i + 1, fixed + cost)
            del assign[e]

        descend(0, 0.0)
    return best


def _graph_dijkstra(
    net: CandidateNetwork, weights: dict[str, float], start: str
) -> tuple[dict[str, float], dict[str, tuple[str, str]]]:
    """Shortest path over the contracted graph with per-edge weights."""
    adj = net.adjacency()
    dist = {start: 0.0}
    pred: dict[str, tuple[str, str]] = {}
    heap = [(0.0, start)]
    done = set()
    while heap:
        d, u = heapq.heappop(heap)
        if u in done:
            continue
        done.add(u)
        for v, edge in adj[u]:
            nd = d + weights[edge.id]
            if nd < dist.get(v, math.inf) - 1e-15:
                dist[v] = nd
                pred[v] = (u, edge.id)
                heapq.heappush(heap, (nd, v))
    return dist, pred


def solve_dedicated(problem: NetworkProblem) -> NetworkSolution:
    """One-pipe-per-source baseline with sequential sink matching.

    Placement order: largest source first, then ascending straight-line
    distance from that largest source. Each source takes the sink and route
    minimizing its own transport + storage cost; a sink drops out once its
    injectivity is exhausted. Pipes are never shared, though several may
    terminate at one sink.
    """
    econ = problem.economics
    net = problem.candidate
    if not problem.sources:
        raise ValueError("dedicated design needs at least one source")
    largest = max(problem.sources, key=lambda s: (s.max_capture, s.id))
    origin = net.nodes[largest.node].xy

    def distance(src: SourceSpec) -> float:
        xy = net.nodes[src.node].xy
        return math.hypot(xy[0] - origin[0], xy[1] - origin[1])

    rest = sorted(
        (s for s in problem.sources if s.id != largest.id),
        key=lambda s: (distance(s), s.id),
    )
    order = [largest] + rest

    remaining = {k.id: k.injectivity for k in problem.sinks}
    sink_by_id = {k.id: k for k in problem.sinks}
    captures: dict[str, float] = {s.id: 0.0 for s in problem.sources}
    injections: dict[str, float] = {k.id: 0.0 for k in problem.sinks}
    builds: list[EdgeBuild] = []
    rows: list[SourceBreakdown] = []
    unplaced: list[str] = []
    objective = 0.0

    edge_map = {e.id: e for e in net.edges}
    for src in order:
        flow = src.max_capture
        if flow <= FLOW_TOL:
            continue
        cls_idx = next(
            (ci for ci, cls in enumerate(problem.classes) if cls.max_flow >= flow - 1e-9),
            None,
        )
        if cls_idx is None:
            raise ValueError(
                f"source {src.id} captures {flow} Mt/y, above the top class"
            )
        cls = problem.classes[cls_idx]
        weights = {e.id: edge_annualized(e, cls, econ) for e in net.edges}
        dist, pred = _graph_dijkstra(net, weights, src.node)
        best = None
        for snk in problem.sinks:
            if remaining[snk.id] < flow - FLOW_TOL:
                continue
            if snk.node not in dist:
                continue
            total = dist[snk.node] + snk.storage_cost * flow * 1e6
            if best is None or total < best[0] - 1e-12 or (
                abs(total - best[0]) <= 1e-12 and snk.id < best[1]
            ):
                best = (total, snk.id)
        if best is None:
            unplaced.append(src.id)
            continue
        _, sink_id = best
        snk = sink_by_id[sink_id]
        # walk the predecessor chain back from the sink
        path_edges: list[tuple[str, str, str]] = []  # (edge id, from, to)
        node = snk.node
        while node != src.node:
            prev, eid = pred[node]
            path_edges.append((eid, prev, node))
            node = prev
        path_edges.reverse()
        km = 0.0
        transport_annualized = 0.0
        for eid, a, b in path_edges:
            builds.append(EdgeBuild(eid, cls_idx, flow, (a, b), owner=src.id))
            km += edge_map[eid].length_km
            transport_annualized += weights[eid]
        captures[src.id] = flow
        injections[sink_id] += flow
        remaining[sink_id] -= flow
        tonnes = flow * 1e6
        transport_cost = transport_annualized / tonnes
        rows.append(
            SourceBreakdown(
                source_id=src.id,
                captured=flow,
                capture_cost=src.capture_cost,
                transport_cost=transport_cost,
                storage_cost=snk.storage_cost,
                total_cost=src.capture_cost + transport_cost + snk.storage_cost,
                pipe_km=km,
                sink_id=sink_id,
                transport_per_kt_km_delivered=(
                    transport_annualized / (tonnes * km) * 1e3 if km else 0.0
                ),
                transport_per_kt_km_nameplate=(
                    transport_annualized / (cls.max_flow * 1e6 * km) * 1e3 if km else 0.0
                ),
            )
        )
        objective += (
            src.capture_cost * tonnes + transport_annualized + snk.storage_cost * tonnes
        )

    report = summarize(problem, captures, injections, builds)
    return NetworkSolution(
        mode="dedicated",
        captures=captures,
        injections=injections,
        builds=builds,
        objective=objective,
        report=report,
        unplaced=unplaced,
        source_rows=rows,
    )


@dataclass
class ComparisonReport:
    metrics: dict[str, tuple[float, float, float]]  # name -> (dedicated, shared, delta)

    def rows(self) -> list[tuple[str, float, float, float]]:
        return [(k, *v) for k, v in self.metrics.items()]


def compare_designs(
    shared: NetworkSolution, dedicated: NetworkSolution
) -> ComparisonReport:
    """Side-by-side regional metrics; shared must not cost more than dedicated."""
    if shared.mode != "shared" or dedicated.mode != "dedicated":
        raise ValueError("pass (shared, dedicated) solutions in that order")
    if shared.objective > dedicated.objective * (1 + 1e-9) + 1e-6:
        raise RuntimeError(
            "shared design costs more than dedicated; solver result inconsistent "
            f"({shared.objective} > {dedicated.objective})"
        )
    metrics = {}

    def add(name: str, ded: float, shr: float) -> None:
        metrics[name] = (ded, shr, shr - ded)

    add("annual_tonnes", dedicated.report.annual_tonnes, shared.report.annual_tonnes)
    add(
        "total_pipeline_km",
        dedicated.report.total_pipeline_km,
        shared.report.total_pipeline_km,
    )
    add("km_per_mt_y", dedicated.report.km_per_mt_y, shared.report.km_per_mt_y)
    for cat in ("capture", "transport", "storage"):
        add(
            f"capital_{cat}",
            dedicated.report.capital[cat],
            shared.report.capital[cat],
        )
        add(
            f"levelized_{cat}",
            dedicated.report.levelized[cat],
            shared.report.levelized[cat],
        )
    add(
        "levelized_total",
        dedicated.report.levelized["total"],
        shared.report.levelized["total"],
    )
    add(
        "storage_sites",
        dedicated.report.storage_sites_used,
        shared.report.storage_sites_used,
    )
    add("objective", dedicated.objective, shared.objective)
    return ComparisonReport(metrics)


@dataclass
class HubSummary:
    hub_id: str
    n_sources: int
    n_sinks: int
    captured: float  # MtCO2/y
    pipe_km: float
    transport_cost_per_t: float
    transport_intensity: float  # ($/t)/km
    storage_cost_per_t: float
    is_natural_hub: bool  # two or more capture facilities share the network


def hub_report(solution: NetworkSolution, problem: NetworkProblem) -> list[HubSummary]:
    """Connected components of the built network, smallest capture first."""
    econ = problem.economics
    net = problem.candidate
    edge_map = {e.id: e for e in net.edges}
    parent: dict[str, str] = {}

    def find(a: str) -> str:
        while parent.setdefault(a, a) != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    def union(a: str, b: str) -> None:
        parent[find(a)] = find(b)

    for b in solution.builds:
        edge = edge_map[b.edge_id]
        union(edge.node_a, edge.node_b)

    groups: dict[str, dict] = {}
    for b in solution.builds:
        edge = edge_map[b.edge_id]
        root = find(edge.node_a)
        g = groups.setdefault(
            root,
            {"km": 0.0, "trn": 0.0, "sources": set(), "sinks": set()},
        )
        g["km"] += edge.length_km
        g["trn"] += edge_annualized(edge, problem.classes[b.class_idx], econ)
    for src in problem.sources:
        if solution.captures.get(src.id, 0.0) > FLOW_TOL and src.node in parent:
            groups[find(src.node)]["sources"].add(src.id)
    for snk in problem.sinks:
        if solution.injections.get(snk.id, 0.0) > FLOW_TOL and snk.node in parent:
            groups[find(snk.node)]["sinks"].add(snk.id)

    summaries = []
    for g in groups.values():
        captured = sum(solution.captures[s] for s in g["sources"])
        tonnes = captured * 1e6
        injected = sum(solution.injections[k] for k in g["sinks"])
        storage_cost = (
            sum(
                k.storage_cost * solution.injections[k.id]
                for k in problem.sinks
                if k.id in g["sinks"]
            )
            / injected
            if injected > FLOW_TOL
            else 0.0
        )
        transport_per_t = g["trn"] / tonnes if tonnes else 0.0
        summaries.append(
            HubSummary(
                hub_id="",
                n_sources=len(g["sources"]),
                n_sinks=len(g["sinks"]),
                captured=captured,
                pipe_km=g["km"],
                transport_cost_per_t=transport_per_t,
                transport_intensity=transport_per_t / g["km"] if g["km"] else 0.0,
                storage_cost_per_t=storage_cost,
                is_natural_hub=len(g["sources"]) >= 2,
            )
        )
    summaries.sort(key=lambda h: h.captured)
    for i, h in enumerate(summaries):
        h.hub_id = f"H{i + 1}"
    return summaries


def verify_solution(
    problem: NetworkProblem, solution: NetworkSolution, tol: float = 1e-6
) -> None:
    """Independent feasibility check: re-walks the graph and the cost report.

    Raises AssertionError on any violation.
    """
    net = problem.candidate
    edge_map = {e.id: e for e in net.edges}
    balance: dict[str, float] = {n: 0.0 for n in net.nodes}
    for b in solution.builds:
        edge = edge_map[b.edge_id]
        cls = problem.classes[b.class_idx]
        assert b.flow <= cls.max_flow + tol, (
            f"edge {b.edge_id}: flow {b.flow} exceeds class cap {cls.max_flow}"
        )
        frm, to = b.direction
        assert {frm, to} == {edge.node_a, edge.node_b}, "direction mismatch"
        balance[frm] -= b.flow
        balance[to] += b.flow
    for src in problem.sources:
        x = solution.captures.get(src.id, 0.0)
        assert -tol <= x <= src.max_capture + tol, f"capture bound violated at {src.id}"
        balance[src.node] += x
    for snk in problem.sinks:
        y = solution.injections.get(snk.id, 0.0)
        assert -tol <= y <= snk.injectivity + tol, (
            f"injection bound violated at {snk.id}"
        )
        balance[snk.node] -= y
    for node, residual in balance.items():
        assert abs(residual) <= tol * max(1.0, problem.target), (
            f"flow not conserved at node {node}: residual {residual}"
        )
    total_injected = sum(solution.injections.values())
    if solution.mode == "shared":
        assert total_injected >= problem.target - tol, "target not met"
    # cost report reproduces from parts
    recomputed = summarize(
        problem, solution.captures, solution.injections, solution.builds
    )
    assert math.isclose(
        recomputed.annual_tonnes, solution.report.annual_tonnes, rel_tol=1e-6, abs_tol=1e-6
    )
    for key, val in solution.report.levelized.items():
        assert math.isclose(recomputed.levelized[key], val, rel_tol=1e-6, abs_tol=1e-9)
    # objective reproduces from parts
    econ = problem.economics
    obj = sum(
        s.capture_cost * solution.captures.get(s.id, 0.0) * 1e6 for s in problem.sources
    )
    obj += sum(
        k.storage_cost * solution.injections.get(k.id, 0.0) * 1e6 for k in problem.sinks
    )
    for b in solution.builds:
        if solution.prebuilt.get(b.edge_id) == b.class_idx:
            continue  # sunk; not part of the reported objective
        obj += edge_annualized(edge_map[b.edge_id], problem.classes[b.class_idx], econ)
    assert math.isclose(obj, solution.objective, rel_tol=1e-6, abs_tol=1e-3), (
        f"objective {solution.objective} does not reproduce from parts ({obj})"
    )
