"""Stage orchestration: screen, characterize, route, solve, phase.

Each stage reads its upstream artifacts from the scenario's output
directory and writes its own; running a stage without its inputs on disk
fails with the name of the missing artifact and the stage that produces
it. All outputs are deterministic for a fixed scenario and seed, so
re-running a stage reproduces byte-identical files.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .capture import (
    CaptureCostParams,
    FacilityRecord,
    capture_capital,
    capture_cost_per_tonne,
    co2_captured,
    cost_supply_curve,
    effective_abatement,
)
from .costsurface import build_sej_layer, compose_cost_surface
from .grid import RasterGrid, read_ascii_grid, write_ascii_grid
from .netdesign import (
    InfeasibleError,
    NetworkProblem,
    NetworkSolution,
    SinkSpec,
    SourceSpec,
    compare_designs,
    hub_report,
    solve_dedicated,
    solve_shared,
    verify_solution,
)
from .phasing import solve_phased
from .reservoir import (
    FormationParams,
    NoEligibleFormationError,
    StorageSite,
    characterize_site,
    md_to_m2,
    storage_supply_curve,
)
from .routing import CandidateEdge, CandidateNetwork, GridNode, build_candidate_network
from .scenario import Scenario
from .screening import CandidateSite, screen_sites

STAGES = (
    "capture",
    "screen",
    "characterize",
    "surface",
    "route",
    "solve-shared",
    "solve-dedicated",
    "compare",
    "phase",
)


class MissingArtifactError(FileNotFoundError):
    def __init__(self, artifact: str, producer: str):
        super().__init__(
            f"missing artifact {artifact!r}; run the {producer!r} stage first"
        )
        self.artifact = artifact
        self.producer = producer


def _artifact(out: Path, name: str, producer: str) -> Path:
    path = out / name
    if not path.exists():
        raise MissingArtifactError(name, producer)
    return path


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(header)
        w.writerows(rows)


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


# ---------------------------------------------------------------- loaders


def load_facilities(path: Path) -> list[FacilityRecord]:
    out = []
    with open(path, newline="") as f:
        for i, row in enumerate(csv.DictReader(f), start=2):
            try:
                out.append(
                    FacilityRecord(
                        id=row["id"],
                        name=row["name"],
                        location=(float(row["x"]), float(row["y"])),
                        sector=row["sector"],
                        emitted=float(row["emitted_mt"]),
                        capturable_fraction=float(row["capturable_fraction"]),
                        co2_concentration=float(row["co2_concentration"]),
                        biogenic_fraction=float(row.get("biogenic_fraction") or 0.0),
                    )
                )
            except (KeyError, ValueError) as err:
                raise ValueError(f"{path}:{i}: bad facility row ({err})")
    return out


def load_formations(path: Path, storage_cfg) -> list[FormationParams]:
    out = []
    with open(path, newline="") as f:
        for i, row in enumerate(csv.DictReader(f), start=2):
            try:
                out.append(
                    FormationParams(
                        name=row["name"],
                        depth=float(row["depth_m"]),
                        thickness=float(row["thickness_m"]),
                        permeability=md_to_m2(float(row["perm_md"])),
                        porosity=float(row["porosity"]),
                        surface_temperature=storage_cfg.surface_temperature,
                        geothermal_gradient=storage_cfg.geothermal_gradient,
                        fracture_gradient=storage_cfg.fracture_gradient,
                        depth_valid=(
                            float(row["depth_min_m"]),
                            float(row["depth_max_m"]),
                        ),
                    )
                )
            except (KeyError, ValueError) as err:
                raise ValueError(f"{path}:{i}: bad formation row ({err})")
    return out


def load_site_formations(path: Path) -> dict[str, list[str]]:
    """site_id -> formation names; '*' rows apply to every site."""
    mapping: dict[str, list[str]] = {}
    with open(path, newline="") as f:
        for row in csv.DictReader(f):
            mapping.setdefault(row["site_id"], []).append(row["formation"])
    return mapping


def load_announced_sites(path: Path) -> list[CandidateSite]:
    out = []
    with open(path, newline="") as f:
        for row in csv.DictReader(f):
            out.append(
                CandidateSite(
                    id=row["id"],
                    centroid=(float(row["x"]), float(row["y"])),
                    area=float(row["area_km2"]),
                    cell_set=frozenset(),
                    source="announced",
                )
            )
    return out


def load_tracts(
    tract_grid: RasterGrid, burdens_path: Path
) -> list[tuple[set[tuple[int, int]], set[str]]]:
    burdens: dict[int, set[str]] = {}
    with open(burdens_path, newline="") as f:
        for row in csv.DictReader(f):
            burdens[int(row["tract_id"])] = {
                b.strip() for b in row["burdens"].split(";") if b.strip()
            }
    ids = np.rint(np.asarray(tract_grid.values, dtype=float)).astype(int)
    out = []
    for tract_id, cats in sorted(burdens.items()):
        rows, cols = np.nonzero(ids == tract_id)
        cells = {(int(r), int(c)) for r, c in zip(rows, cols)}
        if cells:
            out.append((cells, cats))
    return out


# ---------------------------------------------------------------- stages


def stage_capture(scenario: Scenario) -> None:
    out = scenario.output_dir
    facilities = load_facilities(scenario.path("facilities"))
    params = scenario.capture
    rows = []
    for fac in facilities:
        captured = co2_captured(fac.emitted, fac.capturable_fraction, params)
        cost = (
            capture_cost_per_tonne(captured, fac.co2_concentration, params)
            if captured > 0
            else ""
        )
        capital = (
            capture_capital(captured, fac.co2_concentration, params)
            if captured > 0
            else ""
        )
        abatement = effective_abatement(captured, params)
        rows.append(
            [
                fac.id,
                fac.name,
                fac.location[0],
                fac.location[1],
                fac.sector,
                fac.emitted,
                fac.co2_concentration,
                fac.biogenic_fraction,
                captured,
                cost,
                abatement,
                capital,
            ]
        )
    _write_csv(
        out / "captured.csv",
        [
            "id",
            "name",
            "x",
            "y",
            "sector",
            "emitted_mt",
            "co2_concentration",
            "biogenic_fraction",
            "captured_mt_y",
            "capture_cost_usd_t",
            "effective_abatement_mt_y",
            "capture_capital_usd",
        ],
        rows,
    )


def stage_screen(scenario: Scenario) -> None:
    out = scenario.output_dir
    landcover = read_ascii_grid(scenario.path("landcover"))
    fields = read_ascii_grid(scenario.path("active_fields"))
    announced = (
        load_announced_sites(scenario.path("announced_sites"))
        if scenario.has_path("announced_sites")
        else []
    )
    sites = screen_sites(landcover, fields, scenario.screening, announced)
    _write_csv(
        out / "sites.csv",
        ["id", "x", "y", "area_km2", "source"],
        [[s.id, s.centroid[0], s.centroid[1], s.area, s.source] for s in sites],
    )


def _read_sites(out: Path) -> list[CandidateSite]:
    path = _artifact(out, "sites.csv", "screen")
    sites = []
    with open(path, newline="") as f:
        for row in csv.DictReader(f):
            sites.append(
                CandidateSite(
                    id=row["id"],
                    centroid=(float(row["x"]), float(row["y"])),
                    area=float(row["area_km2"]),
                    cell_set=frozenset(),
                    source=row["source"],
                )
            )
    return sites


def stage_characterize(scenario: Scenario) -> None:
    out = scenario.output_dir
    sites = _read_sites(out)
    formations = load_formations(scenario.path("formations"), scenario.storage)
    by_name = {f.name: f for f in formations}
    adjacency = (
        load_site_formations(scenario.path("site_formations"))
        if scenario.has_path("site_formations")
        else {}
    )
    wildcard = adjacency.get("*", [f.name for f in formations])
    rows = []
    dropped = []
    for site in sites:
        names = adjacency.get(site.id, wildcard)
        stack = [by_name[n] for n in names if n in by_name]
        try:
            result = characterize_site(
                site,
                stack,
                scenario.storage.params,
                n=scenario.storage.n_samples,
                seed=scenario.seed,
                multi_formation=scenario.storage.multi_formation,
                depth_rel_std=scenario.storage.depth_rel_std,
                prop_rel_std=scenario.storage.prop_rel_std,
            )
        except NoEligibleFormationError as err:
            dropped.append([site.id, str(err)])
            continue
        rows.append(
            [
                site.id,
                result.formation,
                result.injectivity,
                result.capacity,
                result.storage_cost,
                result.n_wells,
            ]
        )
    _write_csv(
        out / "storage_sites.csv",
        [
            "site_id",
            "formation",
            "injectivity_mt_y",
            "capacity_mt",
            "cost_usd_t",
            "n_wells",
        ],
        rows,
    )
    _write_csv(out / "dropped_sites.csv", ["site_id", "reason"], dropped)


def stage_surface(scenario: Scenario) -> None:
    out = scenario.output_dir
    layers = []
    for name, path in sorted(scenario.weight_layer_paths().items()):
        grid = read_ascii_grid(path)
        layers.append((grid, scenario.weights.layers.get(name, {})))
    if not layers:
        raise ValueError("scenario defines no weight layers")
    sej_layer = None
    if scenario.has_path("population") and scenario.has_path("tracts"):
        population = read_ascii_grid(scenario.path("population"))
        tracts = load_tracts(
            read_ascii_grid(scenario.path("tracts")),
            scenario.path("tract_burdens"),
        )
        sej_layer = build_sej_layer(population, tracts, scenario.sej)
        write_ascii_grid(sej_layer, out / "sej_layer.asc")
    surface = compose_cost_surface(
        layers,
        scenario.weights,
        sej=sej_layer if scenario.sej_mode != "off" else None,
    )
    write_ascii_grid(surface, out / "cost_surface.asc")


def _read_captured(out: Path) -> list[dict]:
    path = _artifact(out, "captured.csv", "capture")
    with open(path, newline="") as f:
        return [row for row in csv.DictReader(f)]


def _read_storage_sites(out: Path) -> list[dict]:
    path = _artifact(out, "storage_sites.csv", "characterize")
    with open(path, newline="") as f:
        return [row for row in csv.DictReader(f)]


def _site_coords(out: Path) -> dict[str, tuple[float, float]]:
    return {
        s.id: s.centroid for s in _read_sites(out)
    }


def stage_route(scenario: Scenario) -> None:
    out = scenario.output_dir
    surface = read_ascii_grid(_artifact(out, "cost_surface.asc", "surface"))
    sej_path = out / "sej_layer.asc"
    sej_layer = read_ascii_grid(sej_path) if sej_path.exists() else None
    captured = _read_captured(out)
    storage = _read_storage_sites(out)
    coords = _site_coords(out)
    sources = []
    for row in captured:
        if float(row["captured_mt_y"]) <= 0:
            continue
        cell = surface.index_of(float(row["x"]), float(row["y"]))
        sources.append((row["id"], cell))
    sinks = []
    for row in storage:
        xy = coords[row["site_id"]]
        sinks.append((row["site_id"], surface.index_of(*xy)))
    net = build_candidate_network(
        surface,
        sources,
        sinks,
        sej_layer=sej_layer,
        base_cost=scenario.weights.base_cost,
    )
    parcels = None
    if scenario.has_path("parcels"):
        parcels = np.rint(
            np.asarray(read_ascii_grid(scenario.path("parcels")).values, dtype=float)
        ).astype(int)
    _write_csv(
        out / "candidate_nodes.csv",
        ["id", "row", "col", "x", "y", "kind"],
        [
            [n.id, n.cell[0], n.cell[1], n.xy[0], n.xy[1], n.kind]
            for n in sorted(net.nodes.values(), key=lambda n: n.id)
        ],
    )
    edge_rows = []
    for e in net.edges:
        owners = ""
        if parcels is not None:
            owners = ";".join(
                str(v) for v in sorted({int(parcels[r, c]) for r, c in e.cells})
            )
        edge_rows.append(
            [
                e.id,
                e.node_a,
                e.node_b,
                e.length_km,
                e.routed_cost,
                e.cost_multiplier,
                e.sej_km,
                "|".join(f"{r}:{c}" for r, c in e.cells),
                owners,
            ]
        )
    _write_csv(
        out / "candidate_edges.csv",
        [
            "id",
            "node_a",
            "node_b",
            "length_km",
            "routed_cost",
            "cost_multiplier",
            "sej_km",
            "cells",
            "owners",
        ],
        edge_rows,
    )
    _write_csv(
        out / "candidate_terminals.csv",
        ["role", "terminal_id", "node_id"],
        [["source", tid, nid] for tid, nid in sorted(net.source_nodes.items())]
        + [["sink", tid, nid] for tid, nid in sorted(net.sink_nodes.items())],
    )
    features = []
    for e in net.edges:
        coords_line = [list(surface.cell_center(r, c)) for r, c in e.cells]
        features.append(
            {
                "type": "Feature",
                "geometry": {"type": "LineString", "coordinates": coords_line},
                "properties": {
                    "id": e.id,
                    "node_a": e.node_a,
                    "node_b": e.node_b,
                    "length_km": e.length_km,
                    "sej_km": e.sej_km,
                },
            }
        )
    _write_json(
        out / "candidate_network.geojson",
        {"type": "FeatureCollection", "features": features},
    )


def _load_network(out: Path) -> tuple[CandidateNetwork, dict[str, list[int]]]:
    nodes_path = _artifact(out, "candidate_nodes.csv", "route")
    edges_path = _artifact(out, "candidate_edges.csv", "route")
    terms_path = _artifact(out, "candidate_terminals.csv", "route")
    nodes = {}
    with open(nodes_path, newline="") as f:
        for row in csv.DictReader(f):
            nodes[row["id"]] = GridNode(
                id=row["id"],
                cell=(int(row["row"]), int(row["col"])),
                xy=(float(row["x"]), float(row["y"])),
                kind=row["kind"],
            )
    edges = []
    owners: dict[str, list[int]] = {}
    with open(edges_path, newline="") as f:
        for row in csv.DictReader(f):
            cells = tuple(
                (int(p.split(":")[0]), int(p.split(":")[1]))
                for p in row["cells"].split("|")
                if p
            )
            edges.append(
                CandidateEdge(
                    id=row["id"],
                    node_a=row["node_a"],
                    node_b=row["node_b"],
                    cells=cells,
                    length_km=float(row["length_km"]),
                    routed_cost=float(row["routed_cost"]),
                    cost_multiplier=float(row["cost_multiplier"]),
                    sej_km=float(row["sej_km"]),
                )
            )
            if row.get("owners"):
                owners[row["id"]] = [int(v) for v in row["owners"].split(";")]
    source_nodes, sink_nodes = {}, {}
    with open(terms_path, newline="") as f:
        for row in csv.DictReader(f):
            if row["role"] == "source":
                source_nodes[row["terminal_id"]] = row["node_id"]
            else:
                sink_nodes[row["terminal_id"]] = row["node_id"]
    net = CandidateNetwork(
        nodes=nodes,
        edges=edges,
        source_nodes=source_nodes,
        sink_nodes=sink_nodes,
        cellsize=0.0,
    )
    return net, owners


def _build_problem(
    scenario: Scenario, out: Path, target: float | None = None
) -> tuple[NetworkProblem, dict[str, list[int]]]:
    net, owners = _load_network(out)
    nd = scenario.netdesign
    sources = []
    for row in _read_captured(out):
        captured = float(row["captured_mt_y"])
        if captured <= 0 or row["id"] not in net.source_nodes:
            continue
        cost = float(row["capture_cost_usd_t"])
        capital = float(row["capture_capital_usd"])
        sources.append(
            SourceSpec(
                id=row["id"],
                node=net.source_nodes[row["id"]],
                max_capture=captured,
                capture_cost=cost,
                unit_capital=capital / captured,
                capex_fraction=scenario.capture.capex_fraction_of_levelized,
            )
        )
    sinks = []
    fcr = nd.economics.fixed_charge_rate
    for row in _read_storage_sites(out):
        inj = float(row["injectivity_mt_y"])
        if inj <= 0 or row["site_id"] not in net.sink_nodes:
            continue
        cost = float(row["cost_usd_t"])
        sinks.append(
            SinkSpec(
                id=row["site_id"],
                node=net.sink_nodes[row["site_id"]],
                injectivity=inj,
                storage_cost=cost,
                unit_capital=nd.storage_capex_fraction * cost * 1e6 / fcr,
                capex_fraction=nd.storage_capex_fraction,
            )
        )
    problem = NetworkProblem(
        candidate=net,
        sources=sources,
        sinks=sinks,
        target=nd.target if target is None else target,
        classes=nd.classes,
        economics=nd.economics,
    )
    return problem, owners


def _flow_class_label(flow: float, breakpoints: list[float]) -> str:
    if flow < breakpoints[0]:
        return f"<{breakpoints[0]:g}"
    for lo, hi in zip(breakpoints, breakpoints[1:]):
        if flow < hi:
            return f"{lo:g}-{hi:g}"
    return f">{breakpoints[-1]:g}"


def _solution_outputs(
    scenario: Scenario,
    out: Path,
    tag: str,
    problem: NetworkProblem,
    solution: NetworkSolution,
    owners: dict[str, list[int]],
) -> None:
    edge_map = {e.id: e for e in problem.candidate.edges}
    geo_path = _artifact(out, "candidate_network.geojson", "route")
    geometry = {
        f["properties"]["id"]: f["geometry"]
        for f in json.loads(geo_path.read_text())["features"]
    }
    features = []
    for i, b in enumerate(solution.builds):
        edge = edge_map[b.edge_id]
        cls = problem.classes[b.class_idx]
        props = {
            "edge_id": b.edge_id,
            "from": b.direction[0],
            "to": b.direction[1],
            "class_max_flow_mt_y": cls.max_flow,
            "flow_mt_y": b.flow,
            "length_km": edge.length_km,
            "sej_km": edge.sej_km,
        }
        if b.owner:
            props["owner"] = b.owner
        features.append(
            {
                "type": "Feature",
                "geometry": geometry[b.edge_id],
                "properties": props,
            }
        )
    _write_json(
        out / f"{tag}_solution.geojson",
        {"type": "FeatureCollection", "features": features},
    )
    flow_rows = [
        [
            b.edge_id,
            b.direction[0],
            b.direction[1],
            b.class_idx,
            problem.classes[b.class_idx].max_flow,
            b.flow,
            edge_map[b.edge_id].length_km,
            edge_map[b.edge_id].sej_km,
            b.owner or "",
        ]
        for b in solution.builds
    ]
    _write_csv(
        out / f"{tag}_flows.csv",
        [
            "edge_id",
            "from_node",
            "to_node",
            "class_idx",
            "class_max_flow_mt_y",
            "flow_mt_y",
            "length_km",
            "sej_km",
            "owner",
        ],
        flow_rows,
    )
    report = solution.report
    owners_crossed = sorted(
        {o for b in solution.builds for o in owners.get(b.edge_id, [])}
    )
    metrics = [
        ["annual_capture_mt_y", report.annual_tonnes / 1e6],
        ["levelized_capture_usd_t", report.levelized["capture"]],
        ["levelized_transport_usd_t", report.levelized["transport"]],
        ["levelized_storage_usd_t", report.levelized["storage"]],
        ["levelized_total_usd_t", report.levelized["total"]],
        ["total_pipeline_km", report.total_pipeline_km],
        ["km_per_mt_y", report.km_per_mt_y],
        ["storage_sites_used", report.storage_sites_used],
        ["capital_capture_usd", report.capital["capture"]],
        ["capital_transport_usd", report.capital["transport"]],
        ["capital_storage_usd", report.capital["storage"]],
        ["sej_km", report.sej_km],
        ["owners_crossed", len(owners_crossed)],
        ["objective_annualized_usd_y", solution.objective],
        ["unplaced_sources", ";".join(solution.unplaced)],
    ]
    _write_csv(out / f"{tag}_metrics.csv", ["metric", "value"], metrics)
    _write_csv(
        out / f"{tag}_captures.csv",
        ["source_id", "captured_mt_y"],
        [[sid, val] for sid, val in sorted(solution.captures.items())],
    )
    _write_csv(
        out / f"{tag}_injections.csv",
        ["site_id", "injected_mt_y"],
        [[kid, val] for kid, val in sorted(solution.injections.items())],
    )


def stage_solve_shared(scenario: Scenario) -> None:
    out = scenario.output_dir
    problem, owners = _build_problem(scenario, out)
    solution = solve_shared(problem, max_nodes=scenario.netdesign.max_bnb_nodes)
    verify_solution(problem, solution)
    _solution_outputs(scenario, out, "shared", problem, solution, owners)
    hubs = hub_report(solution, problem)
    _write_csv(
        out / "hubs.csv",
        [
            "hub_id",
            "n_sources",
            "n_sinks",
            "captured_mt_y",
            "pipe_km",
            "transport_usd_t",
            "transport_usd_t_per_km",
            "storage_usd_t",
            "natural_hub",
        ],
        [
            [
                h.hub_id,
                h.n_sources,
                h.n_sinks,
                h.captured,
                h.pipe_km,
                h.transport_cost_per_t,
                h.transport_intensity,
                h.storage_cost_per_t,
                int(h.is_natural_hub),
            ]
            for h in hubs
        ],
    )


def stage_solve_dedicated(scenario: Scenario) -> None:
    out = scenario.output_dir
    problem, owners = _build_problem(scenario, out)
    full = NetworkProblem(
        candidate=problem.candidate,
        sources=problem.sources,
        sinks=problem.sinks,
        target=sum(s.max_capture for s in problem.sources),
        classes=problem.classes,
        economics=problem.economics,
    )
    solution = solve_dedicated(full)
    verify_solution(full, solution)
    _solution_outputs(scenario, out, "dedicated", full, solution, owners)
    _write_csv(
        out / "dedicated_sources.csv",
        [
            "source_id",
            "captured_mt_y",
            "capture_usd_t",
            "transport_usd_t",
            "storage_usd_t",
            "total_usd_t",
            "pipe_km",
            "sink_id",
            "transport_usd_per_kt_km_delivered",
            "transport_usd_per_kt_km_nameplate",
        ],
        [
            [
                r.source_id,
                r.captured,
                r.capture_cost,
                r.transport_cost,
                r.storage_cost,
                r.total_cost,
                r.pipe_km,
                r.sink_id,
                r.transport_per_kt_km_delivered,
                r.transport_per_kt_km_nameplate,
            ]
            for r in solution.source_rows
        ],
    )


def stage_compare(scenario: Scenario) -> None:
    out = scenario.output_dir
    problem, _ = _build_problem(scenario, out)
    full_target = sum(s.max_capture for s in problem.sources)
    full = NetworkProblem(
        candidate=problem.candidate,
        sources=problem.sources,
        sinks=problem.sinks,
        target=full_target,
        classes=problem.classes,
        economics=problem.economics,
    )
    dedicated = solve_dedicated(full)
    placed = sum(dedicated.captures.values())
    matched = NetworkProblem(
        candidate=problem.candidate,
        sources=problem.sources,
        sinks=problem.sinks,
        target=placed,
        classes=problem.classes,
        economics=problem.economics,
    )
    shared = solve_shared(matched, max_nodes=scenario.netdesign.max_bnb_nodes)
    report = compare_designs(shared, dedicated)
    _write_csv(
        out / "comparison.csv",
        ["metric", "dedicated", "shared", "delta"],
        [[name, d, s, delta] for name, d, s, delta in report.rows()],
    )


def stage_phase(scenario: Scenario) -> None:
    out = scenario.output_dir
    problem, _ = _build_problem(scenario, out)
    bbox = scenario.phasing.region_bbox
    if bbox is not None:
        xmin, ymin, xmax, ymax = bbox

        def inside(node_id: str) -> bool:
            x, y = problem.candidate.nodes[node_id].xy
            return xmin <= x <= xmax and ymin <= y <= ymax

        problem = NetworkProblem(
            candidate=problem.candidate,
            sources=[s for s in problem.sources if inside(s.node)],
            sinks=[k for k in problem.sinks if inside(k.node)],
            target=problem.target,
            classes=problem.classes,
            economics=problem.economics,
        )
    plan = solve_phased(
        problem,
        scenario.phasing.schedule,
        scenario.phasing.credit,
        max_parallel=scenario.phasing.max_parallel,
        max_nodes=scenario.netdesign.max_bnb_nodes,
    )
    plan_rows = []
    build_rows = []
    edge_map = {e.id: e for e in problem.candidate.edges}
    geo_path = _artifact(out, "candidate_network.geojson", "route")
    geometry = {
        f["properties"]["id"]: f["geometry"]
        for f in json.loads(geo_path.read_text())["features"]
    }
    built_so_far: list = []
    for i, period in enumerate(plan.periods, start=1):
        cap = period.capital_disbursed
        plan_rows.append(
            [
                i,
                period.online_year,
                period.target,
                sum(period.new_capture.values()),
                sum(period.captures.values()),
                cap["capture"],
                cap["transport"],
                cap["storage"],
                cap["capture"] + cap["transport"] + cap["storage"],
                period.pre_credit_cost if period.pre_credit_cost is not None else "",
                period.post_credit_cost if period.post_credit_cost is not None else "",
            ]
        )
        for b in period.new_edges:
            build_rows.append(
                [
                    i,
                    period.online_year,
                    b.edge_id,
                    b.parallel_idx,
                    b.class_idx,
                    problem.classes[b.class_idx].max_flow,
                    edge_map[b.edge_id].length_km,
                ]
            )
            built_so_far.append(b)
        features = []
        for b in built_so_far:
            flow = period.edge_flows.get((b.edge_id, b.parallel_idx), 0.0)
            features.append(
                {
                    "type": "Feature",
                    "geometry": geometry[b.edge_id],
                    "properties": {
                        "edge_id": b.edge_id,
                        "parallel_idx": b.parallel_idx,
                        "class_max_flow_mt_y": problem.classes[b.class_idx].max_flow,
                        "flow_mt_y": abs(flow),
                    },
                }
            )
        _write_json(
            out / f"phase_{period.online_year}.geojson",
            {"type": "FeatureCollection", "features": features},
        )
    _write_csv(
        out / "phase_plan.csv",
        [
            "period",
            "online_year",
            "target_mt_y",
            "new_capture_mt_y",
            "operating_capture_mt_y",
            "capital_capture_usd",
            "capital_transport_usd",
            "capital_storage_usd",
            "capital_total_usd",
            "pre_credit_usd_t",
            "post_credit_usd_t",
        ],
        plan_rows,
    )
    _write_csv(
        out / "phase_builds.csv",
        [
            "period",
            "online_year",
            "edge_id",
            "parallel_idx",
            "class_idx",
            "class_max_flow_mt_y",
            "length_km",
        ],
        build_rows,
    )
    _write_csv(
        out / "phase_total.csv",
        ["metric", "value"],
        [
            ["discounted_total_usd", plan.discounted_total],
            ["cumulative_capital_usd", plan.cumulative_capital()],
        ],
    )


# ---------------------------------------------------------------- plots


def emit_plots(out: Path, classes=None) -> list[Path]:
    """Write plot-ready series derived from whatever artifacts exist."""
    from .netdesign import DEFAULT_CLASSES

    classes = classes or DEFAULT_CLASSES
    written = []

    def emit(name: str, header: list[str], rows: list[list]) -> None:
        path = out / name
        _write_csv(path, header, rows)
        written.append(path)

    if (out / "captured.csv").exists():
        rows = _read_captured(out)
        ranked = sorted(rows, key=lambda r: -float(r["emitted_mt"]))
        acc = 0.0
        series = []
        for i, r in enumerate(ranked, start=1):
            acc += float(r["emitted_mt"])
            series.append([i, r["id"], float(r["emitted_mt"]), acc])
        emit(
            "plot_emissions_rank.csv",
            ["rank", "facility_id", "emitted_mt", "cumulative_mt"],
            series,
        )
        priced = [
            (float(r["capture_cost_usd_t"]), float(r["captured_mt_y"]), r["id"])
            for r in rows
            if r["capture_cost_usd_t"]
        ]
        priced.sort()
        acc = 0.0
        series = []
        for cost, cap, fid in priced:
            acc += cap
            series.append([fid, acc, cost])
        emit(
            "plot_capture_supply.csv",
            ["facility_id", "cumulative_capture_mt_y", "capture_cost_usd_t"],
            series,
        )
    if (out / "storage_sites.csv").exists():
        rows = _read_storage_sites(out)
        emit(
            "plot_injectivity_by_site.csv",
            ["site_id", "injectivity_mt_y"],
            [[r["site_id"], float(r["injectivity_mt_y"])] for r in rows],
        )
        priced = sorted(
            (float(r["cost_usd_t"]), float(r["injectivity_mt_y"]), r["site_id"])
            for r in rows
        )
        acc = 0.0
        series = []
        for cost, inj, sid in priced:
            acc += inj
            series.append([sid, acc, cost])
        emit(
            "plot_storage_supply.csv",
            ["site_id", "cumulative_injectivity_mt_y", "storage_cost_usd_t"],
            series,
        )
    if (out / "shared_flows.csv").exists():
        breakpoints = [c.max_flow for c in classes[:-1]]
        buckets = {_flow_class_label(0.0, breakpoints): 0.0}
        labels = [f"<{breakpoints[0]:g}"]
        for lo, hi in zip(breakpoints, breakpoints[1:]):
            labels.append(f"{lo:g}-{hi:g}")
        labels.append(f">{breakpoints[-1]:g}")
        buckets = {lab: 0.0 for lab in labels}
        with open(out / "shared_flows.csv", newline="") as f:
            for row in csv.DictReader(f):
                lab = _flow_class_label(float(row["flow_mt_y"]), breakpoints)
                buckets[lab] += float(row["sej_km"])
        rows = [[lab, buckets[lab]] for lab in labels]
        rows.append(["Total", sum(buckets.values())])
        emit("plot_sej_km_by_flow_class.csv", ["flow_class_mt_y", "km_in_sej"], rows)
    if (out / "phase_plan.csv").exists():
        with open(out / "phase_plan.csv", newline="") as f:
            rows = list(csv.DictReader(f))
        emit(
            "plot_phase_costs.csv",
            [
                "online_year",
                "capital_total_usd",
                "pre_credit_usd_t",
                "post_credit_usd_t",
            ],
            [
                [
                    r["online_year"],
                    float(r["capital_total_usd"]),
                    r["pre_credit_usd_t"],
                    r["post_credit_usd_t"],
                ]
                for r in rows
            ],
        )
    return written


# ---------------------------------------------------------------- runner

_STAGE_FUNCS = {
    "capture": stage_capture,
    "screen": stage_screen,
    "characterize": stage_characterize,
    "surface": stage_surface,
    "route": stage_route,
    "solve-shared": stage_solve_shared,
    "solve-dedicated": stage_solve_dedicated,
    "compare": stage_compare,
    "phase": stage_phase,
}


def run(scenario: Scenario, stage: str) -> None:
    """Execute one stage, or every stage in dependency order for "all"."""
    out = scenario.output_dir
    out.mkdir(parents=True, exist_ok=True)
    _write_json(
        out / "run_metadata.json",
        {
            "toolkit_version": __version__,
            "config_hash": scenario.config_hash(),
            "seed": scenario.seed,
            "sej_mode": scenario.sej_mode,
            "resolved_config": scenario.to_dict(),
        },
    )
    if stage == "all":
        for name in STAGES:
            _STAGE_FUNCS[name](scenario)
        emit_plots(out, scenario.netdesign.classes)
        return
    if stage not in _STAGE_FUNCS:
        raise ValueError(f"unknown stage {stage!r}; choose from {STAGES + ('all',)}")
    _STAGE_FUNCS[stage](scenario)
