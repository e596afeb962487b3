"""Routing tests: optimality oracles, invariants, network assembly."""

import math

import numpy as np
import pytest

from cctskit.grid import RasterGrid
from cctskit.routing import (
    build_candidate_network,
    least_cost_path,
    path_sej_km,
    RoutedPath,
)

SQRT2 = math.sqrt(2.0)


def make_surface(values, cellsize=1000.0):
    values = np.asarray(values, dtype=float)
    return RasterGrid(
        ncols=values.shape[1],
        nrows=values.shape[0],
        cellsize=cellsize,
        origin=(0.0, 0.0),
        values=values,
    )


def bellman_ford_oracle(values, cellsize, src, dst):
    """Independent shortest-path cost by repeated relaxation."""
    nrows, ncols = values.shape
    km = cellsize / 1000.0
    dist = {(r, c): math.inf for r in range(nrows) for c in range(ncols)}
    dist[src] = 0.0
    for _ in range(nrows * ncols):
        changed = False
        for r in range(nrows):
            for c in range(ncols):
                d = dist[(r, c)]
                if d == math.inf:
                    continue
                for dr in (-1, 0, 1):
                    for dc in (-1, 0, 1):
                        if dr == 0 and dc == 0:
                            continue
                        nr, nc = r + dr, c + dc
                        if not (0 <= nr < nrows and 0 <= nc < ncols):
                            continue
                        step = km * (SQRT2 if dr and dc else 1.0)
                        nd = d + step * 0.5 * (values[r, c] + values[nr, nc])
                        if nd < dist[(nr, nc)] - 1e-15:
                            dist[(nr, nc)] = nd
                            changed = True
        if not changed:
            break
    return dist[dst]


def enumerate_paths_oracle(values, cellsize, src, dst):
    """Exhaustive search over all simple paths with admissible pruning.

    Branches whose partial cost already meets the best known cost are cut;
    with strictly positive weights this still visits every potentially
    optimal simple path, so the returned cost is exact.
    """
    nrows, ncols = values.shape
    km = cellsize / 1000.0
    best = [math.inf]
    on_path = {src}

    def extend(cell, cost):
        if cost >= best[0] - 1e-15:
            return
        if cell == dst:
            best[0] = cost
            return
        r, c = cell
        for dr in (-1, 0, 1):
            for dc in (-1, 0, 1):
                if dr == 0 and dc == 0:
                    continue
                nxt = (r + dr, c + dc)
                if not (0 <= nxt[0] < nrows and 0 <= nxt[1] < ncols):
                    continue
                if nxt in on_path:
                    continue
                step = km * (SQRT2 if dr and dc else 1.0)
                ncost = cost + step * 0.5 * (values[cell] + values[nxt])
                on_path.add(nxt)
                extend(nxt, ncost)
                on_path.remove(nxt)

    extend(src, 0.0)
    return best[0]


class TestLeastCostPath:
    def test_straight_line(self):
        surface = make_surface(np.ones((5, 5)))
        path = least_cost_path(surface, (0, 0), (0, 4))
        assert path.routed_cost == pytest.approx(4.0)
        assert path.length_km == pytest.approx(4.0)

    def test_diagonal(self):
        surface = make_surface(np.ones((5, 5)))
        path = least_cost_path(surface, (0, 0), (2, 2))
        assert path.routed_cost == pytest.approx(2 * SQRT2)

    def test_degenerate_same_cell(self):
        surface = make_surface(np.ones((3, 3)))
        path = least_cost_path(surface, (1, 1), (1, 1))
        assert path.cells == ((1, 1),)
        assert path.routed_cost == 0.0

    def test_wall_with_gap(self):
        vals = np.ones((5, 5))
        vals[:, 2] = 100.0
        vals[2, 2] = 1.0  # the gap
        surface = make_surface(vals)
        path = least_cost_path(surface, (2, 0), (2, 4))
        assert (2, 2) in path.cells
        want = enumerate_paths_oracle(vals, 1000.0, (2, 0), (2, 4))
        assert path.routed_cost == pytest.approx(want)

    def test_matches_enumeration_on_random_surfaces(self):
        rng = np.random.default_rng(31)
        for trial in range(20):
            vals = rng.uniform(0.5, 10.0, size=(6, 6))
            surface = make_surface(vals)
            src = (int(rng.integers(6)), int(rng.integers(6)))
            dst = (int(rng.integers(6)), int(rng.integers(6)))
            if src == dst:
                dst = ((src[0] + 3) % 6, (src[1] + 2) % 6)
            got = least_cost_path(surface, src, dst).routed_cost
            want = enumerate_paths_oracle(vals, 1000.0, src, dst)
            assert got == pytest.approx(want, rel=1e-12), f"trial {trial}"

    def test_matches_bellman_ford(self):
        rng = np.random.default_rng(77)
        vals = rng.uniform(0.2, 50.0, size=(8, 7))
        surface = make_surface(vals, cellsize=2500.0)
        got = least_cost_path(surface, (0, 0), (7, 6)).routed_cost
        assert got == pytest.approx(bellman_ford_oracle(vals, 2500.0, (0, 0), (7, 6)))

    def test_scale_invariance(self):
        rng = np.random.default_rng(13)
        for _ in range(10):
            vals = rng.uniform(0.5, 8.0, size=(6, 6))
            alpha = float(rng.uniform(0.1, 20.0))
            a = least_cost_path(make_surface(vals), (0, 0), (5, 5))
            b = least_cost_path(make_surface(alpha * vals), (0, 0), (5, 5))
            assert b.routed_cost == pytest.approx(alpha * a.routed_cost)
            assert b.cells == a.cells

    def test_triangle_inequality(self):
        rng = np.random.default_rng(19)
        vals = rng.uniform(0.5, 12.0, size=(6, 6))
        surface = make_surface(vals)
        cells = [
            (int(rng.integers(6)), int(rng.integers(6))) for _ in range(30)
        ]
        for a, b, c in zip(cells, cells[10:], cells[20:]):
            if len({a, b, c}) < 3:
                continue
            ac = least_cost_path(surface, a, c).routed_cost
            ab = least_cost_path(surface, a, b).routed_cost
            bc = least_cost_path(surface, b, c).routed_cost
            assert ac <= ab + bc + 1e-9

    def test_rejects_nonpositive_surface(self):
        vals = np.ones((4, 4))
        vals[2, 2] = 0.0
        with pytest.raises(ValueError):
            least_cost_path(make_surface(vals), (0, 0), (3, 3))


class TestPathSejKm:
    def _straight_path(self, cols, row=0, cellsize=1000.0):
        cells = tuple((row, c) for c in cols)
        length = (len(cols) - 1) * cellsize / 1000.0
        return RoutedPath(cells, length, length)

    def test_no_sej_cells(self):
        sej = make_surface(np.zeros((3, 8)))
        path = self._straight_path(range(8))
        assert path_sej_km(path, sej) == 0.0

    def test_fully_inside(self):
        sej = make_surface(np.ones((3, 8)))
        path = self._straight_path(range(8))
        assert path_sej_km(path, sej) == pytest.approx(path.length_km)

    def test_three_cell_band(self):
        vals = np.zeros((3, 10))
        vals[0, 4:7] = 1.0  # three-cell band
        sej = make_surface(vals)
        path = self._straight_path(range(10))
        assert path_sej_km(path, sej) == pytest.approx(3.0)


class TestCandidateNetwork:
    def test_single_pair_single_edge(self):
        surface = make_surface(np.ones((5, 9)))
        net = build_candidate_network(surface, [("f1", (2, 0))], [("k1", (2, 8))])
        assert len(net.edges) == 1
        direct = least_cost_path(surface, (2, 0), (2, 8))
        assert net.edges[0].length_km == pytest.approx(direct.length_km)
        assert net.edges[0].routed_cost == pytest.approx(direct.routed_cost)

    def test_collinear_sources_share_trunk(self):
        surface = make_surface(np.ones((5, 21)))
        sources = [("f1", (2, 8)), ("f2", (2, 14))]
        sinks = [("k1", (2, 0))]
        net = build_candidate_network(surface, sources, sinks)
        unique_km = sum(e.length_km for e in net.edges)
        independent = (
            least_cost_path(surface, (2, 8), (2, 0)).length_km
            + least_cost_path(surface, (2, 14), (2, 0)).length_km
        )
        assert unique_km < independent
        assert unique_km == pytest.approx(14.0)  # trunk spans the far source

    def test_coincident_terminals_merge(self):
        surface = make_surface(np.ones((5, 5)))
        net = build_candidate_network(
            surface,
            [("f1", (1, 1)), ("f2", (1, 1))],
            [("k1", (3, 3))],
        )
        assert net.source_nodes["f1"] == net.source_nodes["f2"]

    def test_junction_on_y_shape(self):
        surface = make_surface(np.ones((9, 9)))
        sources = [("f1", (0, 0)), ("f2", (8, 0))]
        sinks = [("k1", (4, 8))]
        net = build_candidate_network(surface, sources, sinks)
        kinds = {n.kind for n in net.nodes.values()}
        # two diagonal arms join a straight trunk: at least one junction node
        assert "junction" in kinds or len(net.edges) == 3

    def test_total_unique_length_bounded(self):
        rng = np.random.default_rng(3)
        vals = rng.uniform(0.5, 4.0, size=(12, 12))
        surface = make_surface(vals)
        sources = [("f1", (0, 0)), ("f2", (11, 0)), ("f3", (0, 11))]
        sinks = [("k1", (11, 11))]
        net = build_candidate_network(surface, sources, sinks)
        pairwise = 0.0
        terminals = [(0, 0), (11, 0), (0, 11), (11, 11)]
        for i, a in enumerate(terminals):
            for b in terminals[i + 1 :]:
                pairwise += least_cost_path(surface, a, b).length_km
        assert sum(e.length_km for e in net.edges) <= pairwise + 1e-9

    def test_edge_sej_accounting(self):
        vals = np.ones((5, 11))
        surface = make_surface(vals)
        sej_vals = np.zeros((5, 11))
        sej_vals[2, 4:7] = 1.0
        sej = make_surface(sej_vals)
        net = build_candidate_network(
            surface, [("f1", (2, 0))], [("k1", (2, 10))], sej_layer=sej
        )
        assert sum(e.sej_km for e in net.edges) == pytest.approx(3.0)
