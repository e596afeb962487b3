"""Least-cost paths over a cost surface and candidate-network assembly.

Paths run on 8-connected cells; a step costs its length (straight or
diagonal) times the mean of the two cells' $/km weights. The candidate
network unions the pairwise terminal-to-terminal paths, places junction
nodes where routed paths meet or diverge, and contracts the rest into
edges, so the downstream network optimization sees a small graph whose
edges remember their full cell geometry.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

import numpy as np

from .grid import RasterGrid, require_aligned

SQRT2 = math.sqrt(2.0)

# (dr, dc, step length in cells)
_NEIGHBORS = (
    (-1, 0, 1.0),
    (0, -1, 1.0),
    (0, 1, 1.0),
    (1, 0, 1.0),
    (-1, -1, SQRT2),
    (-1, 1, SQRT2),
    (1, -1, SQRT2),
    (1, 1, SQRT2),
)


@dataclass(frozen=True)
class RoutedPath:
    cells: tuple[tuple[int, int], ...]
    length_km: float
    routed_cost: float  # $, sum of step costs
    endpoints: tuple[str, str] | None = None


def _check_surface(surface: RasterGrid) -> np.ndarray:
    w = np.asarray(surface.values, dtype=float)
    if not np.all(np.isfinite(w)) or np.any(w <= 0):
        raise ValueError("cost surface must be strictly positive and finite")
    return w


def _dijkstra(
    surface: RasterGrid, src: tuple[int, int]
) -> tuple[np.ndarray, np.ndarray]:
    """Exact single-source shortest paths; ties resolved toward lower cell index."""
    w = _check_surface(surface)
    nrows, ncols = w.shape
    n = nrows * ncols
    flat = w.ravel()
    km = surface.cellsize / 1000.0
    dist = np.full(n, np.inf)
    pred = np.full(n, -1, dtype=np.int64)
    s = src[0] * ncols + src[1]
    dist[s] = 0.0
    heap = [(0.0, s)]
    visited = np.zeros(n, dtype=bool)
    while heap:
        d, u = heapq.heappop(heap)
        if visited[u]:
            continue
        visited[u] = True
        ur, uc = divmod(u, ncols)
        wu = flat[u]
        for dr, dc, step in _NEIGHBORS:
            vr, vc = ur + dr, uc + dc
            if not (0 <= vr < nrows and 0 <= vc < ncols):
                continue
            v = vr * ncols + vc
            if visited[v]:
                continue
            nd = d + step * km * 0.5 * (wu + flat[v])
            if nd < dist[v] - 1e-15:
                dist[v] = nd
                pred[v] = u
                heapq.heappush(heap, (nd, v))
    return dist, pred


def _walk_back(
    pred: np.ndarray, ncols: int, src: tuple[int, int], dst: tuple[int, int]
) -> list[tuple[int, int]]:
    cells = [dst]
    cur = dst[0] * ncols + dst[1]
    s = src[0] * ncols + src[1]
    while cur != s:
        cur = int(pred[cur])
        if cur < 0:
            raise RuntimeError("destination unreachable; surface should be connected")
        cells.append(divmod(cur, ncols))
    cells.reverse()
    return cells


def _path_from_cells(
    surface: RasterGrid, cells: list[tuple[int, int]], cost: float
) -> RoutedPath:
    km = surface.cellsize / 1000.0
    length = 0.0
    for (r1, c1), (r2, c2) in zip(cells, cells[1:]):
        length += km * (SQRT2 if r1 != r2 and c1 != c2 else 1.0)
    return RoutedPath(tuple(cells), length, cost)


def least_cost_path(
    surface: RasterGrid, src: tuple[int, int], dst: tuple[int, int]
) -> RoutedPath:
    """Minimum-cost 8-connected path between two cells; exact."""
    for cell in (src, dst):
        if not (0 <= cell[0] < surface.nrows and 0 <= cell[1] < surface.ncols):
            raise ValueError(f"cell {cell} outside the grid")
    if src == dst:
        _check_surface(surface)
        return RoutedPath((src,), 0.0, 0.0)
    dist, pred = _dijkstra(surface, src)
    d = dist[dst[0] * surface.ncols + dst[1]]
    cells = _walk_back(pred, surface.ncols, src, dst)
    return _path_from_cells(surface, cells, float(d))


def least_cost_paths(
    surface: RasterGrid, src: tuple[int, int], dsts: list[tuple[int, int]]
) -> list[RoutedPath]:
    """Paths from one source cell to many destinations in a single search."""
    dist, pred = _dijkstra(surface, src)
    out = []
    for dst in dsts:
        if dst == src:
            out.append(RoutedPath((src,), 0.0, 0.0))
            continue
        d = dist[dst[0] * surface.ncols + dst[1]]
        cells = _walk_back(pred, surface.ncols, src, dst)
        out.append(_path_from_cells(surface, cells, float(d)))
    return out


def path_sej_km(path: RoutedPath, sej_layer: RasterGrid, cellsize: float | None = None) -> float:
    """Kilometers of a path inside the SEJ layer.

    Half of each step is attributed to each endpoint cell, so a straight run
    through an n-cell band counts n cell-lengths.
    """
    marked = np.asarray(sej_layer.values, dtype=bool)
    km = (sej_layer.cellsize if cellsize is None else cellsize) / 1000.0
    total = 0.0
    for (r1, c1), (r2, c2) in zip(path.cells, path.cells[1:]):
        step = km * (SQRT2 if r1 != r2 and c1 != c2 else 1.0)
        total += step * 0.5 * (int(marked[r1, c1]) + int(marked[r2, c2]))
    return total


@dataclass(frozen=True)
class GridNode:
    id: str
    cell: tuple[int, int]
    xy: tuple[float, float]
    kind: str  # "terminal" | "junction"


@dataclass(frozen=True)
class CandidateEdge:
    id: str
    node_a: str
    node_b: str
    cells: tuple[tuple[int, int], ...]  # node_a cell first
    length_km: float
    routed_cost: float
    cost_multiplier: float  # routed cost / (base cost * length)
    sej_km: float = 0.0


@dataclass
class CandidateNetwork:
    nodes: dict[str, GridNode]
    edges: list[CandidateEdge]
    source_nodes: dict[str, str]  # terminal id -> node id
    sink_nodes: dict[str, str]
    cellsize: float

    def edge_by_id(self, edge_id: str) -> CandidateEdge:
        for e in self.edges:
            if e.id == edge_id:
                return e
        raise KeyError(edge_id)

    def adjacency(self) -> dict[str, list[tuple[str, CandidateEdge]]]:
        adj: dict[str, list[tuple[str, CandidateEdge]]] = {n: [] for n in self.nodes}
        for e in self.edges:
            adj[e.node_a].append((e.node_b, e))
            adj[e.node_b].append((e.node_a, e))
        return adj


def build_candidate_network(
    surface: RasterGrid,
    sources: list[tuple[str, tuple[int, int]]],
    sinks: list[tuple[str, tuple[int, int]]],
    sej_layer: RasterGrid | None = None,
    base_cost: float = 1.0,
) -> CandidateNetwork:
    """Union of pairwise least-cost paths among all terminals, contracted.

    Terminal pairs of every kind (source-sink, source-source, sink-sink) are
    routed so the optimizer can exploit trunk lines between any terminals.
    Junctions appear wherever the unioned paths branch; runs of degree-2
    cells between nodes collapse into single edges carrying length, routed
    cost, and (when an SEJ layer is supplied) kilometers inside it.
    """
    if not sources or not sinks:
        raise ValueError("need at least one source and one sink")
    if sej_layer is not None:
        require_aligned(surface, sej_layer)
    terminal_cells: list[tuple[int, int]] = []
    for _, cell in sources + sinks:
        if cell not in terminal_cells:
            terminal_cells.append(cell)

    km = surface.cellsize / 1000.0
    w = _check_surface(surface)
    # Search on an infinitesimally jittered copy so equal-cost staircases
    # resolve the same way from every terminal; unions then overlap instead
    # of braiding. Edge costs are tallied from the true weights.
    search_surface = surface.like(w * _tie_break_jitter(w.shape))
    # union of micro-steps between adjacent cells, keyed by unordered cell pair
    steps: dict[tuple[tuple[int, int], tuple[int, int]], tuple[float, float]] = {}
    for i, a in enumerate(terminal_cells):
        dsts = [b for b in terminal_cells[i + 1 :]]
        if not dsts:
            continue
        for path in least_cost_paths(search_surface, a, dsts):
            for c1, c2 in zip(path.cells, path.cells[1:]):
                key = (c1, c2) if c1 <= c2 else (c2, c1)
                if key in steps:
                    continue
                step_len = km * (SQRT2 if c1[0] != c2[0] and c1[1] != c2[1] else 1.0)
                cost = step_len * 0.5 * (w[c1] + w[c2])
                steps[key] = (step_len, cost)

    marked = (
        np.asarray(sej_layer.values, dtype=bool) if sej_layer is not None else None
    )
    terminals = set(terminal_cells)
    work = _contract_chains(steps, terminals, marked)
    work = _simplify_graph(work, terminals)

    node_cells = set(terminals)
    for ed in work:
        node_cells.add(ed["cells"][0])
        node_cells.add(ed["cells"][-1])
    nodes: dict[str, GridNode] = {}
    cell_to_node: dict[tuple[int, int], str] = {}
    for i, cell in enumerate(sorted(node_cells)):
        nid = f"n{i}"
        kind = "terminal" if cell in terminals else "junction"
        nodes[nid] = GridNode(nid, cell, surface.cell_center(*cell), kind)
        cell_to_node[cell] = nid

    edges: list[CandidateEdge] = []
    for ed in sorted(work, key=lambda d: (d["cells"][0], d["cells"][-1], d["cells"])):
        length, cost = ed["length"], ed["cost"]
        edges.append(
            CandidateEdge(
                id=f"e{len(edges)}",
                node_a=cell_to_node[ed["cells"][0]],
                node_b=cell_to_node[ed["cells"][-1]],
                cells=tuple(ed["cells"]),
                length_km=length,
                routed_cost=cost,
                cost_multiplier=cost / (base_cost * length),
                sej_km=ed["sej"],
            )
        )

    network = CandidateNetwork(
        nodes=nodes,
        edges=edges,
        source_nodes={sid: cell_to_node[cell] for sid, cell in sources},
        sink_nodes={kid: cell_to_node[cell] for kid, cell in sinks},
        cellsize=surface.cellsize,
    )
    _assert_connected(network)
    return network


def _tie_break_jitter(shape: tuple[int, int]) -> np.ndarray:
    """Deterministic per-cell factors in [1, 1 + 1e-9): tie-breaking only."""
    rows = np.arange(shape[0], dtype=np.uint64)[:, None]
    cols = np.arange(shape[1], dtype=np.uint64)[None, :]
    h = (rows * np.uint64(2654435761) + cols * np.uint64(97002721)) % np.uint64(
        2**31
    )
    return 1.0 + 1e-9 * (h.astype(float) / 2**31)


def _contract_chains(steps, terminals, marked):
    """Collapse runs of degree-2 cells between anchors into working edges."""
    adj: dict[tuple[int, int], set[tuple[int, int]]] = {}
    for c1, c2 in steps:
        adj.setdefault(c1, set()).add(c2)
        adj.setdefault(c2, set()).add(c1)
    anchors = set(terminals)
    anchors.update(c for c, nbrs in adj.items() if len(nbrs) != 2)
    work = []
    seen: set[tuple[tuple[int, int], tuple[int, int]]] = set()
    for start in sorted(anchors):
        for nbr in sorted(adj.get(start, ())):
            key = (start, nbr) if start <= nbr else (nbr, start)
            if key in seen:
                continue
            chain = [start, nbr]
            seen.add(key)
            while chain[-1] not in anchors:
                nxt = [c for c in adj[chain[-1]] if c != chain[-2]]
                chain.append(nxt[0])
                k2 = (
                    (chain[-2], chain[-1])
                    if chain[-2] <= chain[-1]
                    else (chain[-1], chain[-2])
                )
                seen.add(k2)
            if chain[-1] == start:
                continue  # self-loop carries no flow
            work.append(_make_work_edge(chain, steps, marked))
    return work


def _make_work_edge(chain, steps, marked):
    length = cost = sej = 0.0
    for c1, c2 in zip(chain, chain[1:]):
        k = (c1, c2) if c1 <= c2 else (c2, c1)
        sl, sc = steps[k]
        length += sl
        cost += sc
        if marked is not None:
            sej += sl * 0.5 * (int(marked[c1]) + int(marked[c2]))
    return {"cells": tuple(chain), "length": length, "cost": cost, "sej": sej}


def _simplify_graph(work: list[dict], terminals: set) -> list[dict]:
    """Iteratively drop dangling junction chains, prune dominated parallel
    edges, and re-contract degree-2 junctions.

    A parallel edge is pruned only when a sibling is no worse in routed
    cost, length, and SEJ kilometers at once, so genuine alternatives (a
    short costly corridor vs. a long clean one) survive. Pruning trades
    away the option of building both parallels for capacity, which only
    matters when a single link would have to exceed the largest pipe class.
    """

    def ends(ed):
        return ed["cells"][0], ed["cells"][-1]

    def dominates(a, b):
        return (
            a["cost"] <= b["cost"] + 1e-9
            and a["length"] <= b["length"] + 1e-9
            and a["sej"] <= b["sej"] + 1e-9
        )

    changed = True
    while changed:
        changed = False
        # dangling non-terminal endpoints
        degree: dict[tuple[int, int], int] = {}
        for ed in work:
            for cell in ends(ed):
                degree[cell] = degree.get(cell, 0) + 1
        kept = []
        for ed in work:
            a, b = ends(ed)
            if (degree[a] == 1 and a not in terminals) or (
                degree[b] == 1 and b not in terminals
            ):
                changed = True
                continue
            kept.append(ed)
        work = kept
        # dominated parallels
        groups: dict[tuple, list[dict]] = {}
        for ed in work:
            a, b = ends(ed)
            groups.setdefault((a, b) if a <= b else (b, a), []).append(ed)
        kept = []
        for key in sorted(groups):
            group = sorted(
                groups[key], key=lambda d: (d["cost"], d["length"], d["sej"], d["cells"])
            )
            survivors: list[dict] = []
            for ed in group:
                if any(dominates(s, ed) for s in survivors):
                    changed = True
                    continue
                survivors.append(ed)
            kept.extend(survivors)
        work = kept
        # contract non-terminal degree-2 cells
        while True:
            incident: dict[tuple[int, int], list[int]] = {}
            for i, ed in enumerate(work):
                for cell in ends(ed):
                    incident.setdefault(cell, []).append(i)
            target = None
            for cell in sorted(incident):
                if cell in terminals:
                    continue
                ids = incident[cell]
                if len(ids) == 2 and ids[0] != ids[1]:
                    target = (cell, ids)
                    break
                if len(ids) == 2 and ids[0] == ids[1]:
                    target = (cell, ids)  # an attached loop; drop it
                    break
            if target is None:
                break
            changed = True
            cell, ids = target
            if ids[0] == ids[1]:
                work = [ed for i, ed in enumerate(work) if i != ids[0]]
                continue
            e1, e2 = work[ids[0]], work[ids[1]]
            c1 = list(e1["cells"] if e1["cells"][-1] == cell else e1["cells"][::-1])
            c2 = list(e2["cells"] if e2["cells"][0] == cell else e2["cells"][::-1])
            merged = {
                "cells": tuple(c1 + c2[1:]),
                "length": e1["length"] + e2["length"],
                "cost": e1["cost"] + e2["cost"],
                "sej": e1["sej"] + e2["sej"],
            }
            work = [ed for i, ed in enumerate(work) if i not in ids]
            if merged["cells"][0] != merged["cells"][-1]:
                work.append(merged)
    return work


def _assert_connected(net: CandidateNetwork) -> None:
    adj = net.adjacency()
    sink_node_ids = set(net.sink_nodes.values())
    for sid, start in net.source_nodes.items():
        stack, seen = [start], {start}
        reached = False
        while stack:
            u = stack.pop()
            if u in sink_node_ids:
                reached = True
                break
            for v, _ in adj[u]:
                if v not in seen:
                    seen.add(v)
                    stack.append(v)
        if not reached:
            raise RuntimeError(f"candidate network leaves source {sid} without a sink")
