"""SEJ layer and cost-surface composition tests."""

import numpy as np
import pytest

from cctskit.costsurface import (
    SEJ3_CATEGORIES,
    SEJ8_CATEGORIES,
    SejParams,
    WeightTable,
    build_sej_layer,
    compose_cost_surface,
)
from cctskit.grid import RasterGrid


def make_grid(values, cellsize=90.0):
    values = np.asarray(values)
    return RasterGrid(
        ncols=values.shape[1],
        nrows=values.shape[0],
        cellsize=cellsize,
        origin=(0.0, 0.0),
        values=values,
    )


class TestSejLayer:
    def test_presets_nest(self):
        assert SEJ3_CATEGORIES < SEJ8_CATEGORIES
        assert SejParams.sej3().categories == SEJ3_CATEGORIES
        assert SejParams.sej8().categories == SEJ8_CATEGORIES

    def test_empty_population(self):
        pop = make_grid(np.zeros((9, 9)))
        tracts = [({(r, c) for r in range(9) for c in range(9)}, {"health"})]
        out = build_sej_layer(pop, tracts, SejParams.sej3())
        assert not np.asarray(out.values).any()

    def test_single_marked_cell_dilates_to_13(self):
        pop = np.zeros((9, 9))
        pop[4, 4] = 6.0
        tracts = [({(4, 4)}, {"health"})]
        out = np.asarray(
            build_sej_layer(make_grid(pop), tracts, SejParams.sej3()).values
        )
        assert out.sum() == 13
        # brute-force distance oracle at 90 m cells with a 182 m buffer
        for r in range(9):
            for c in range(9):
                d2 = ((r - 4) ** 2 + (c - 4) ** 2) * 90.0**2
                assert out[r, c] == (d2 <= 182.0**2)

    def test_threshold_is_strict(self):
        pop = np.zeros((5, 5))
        pop[2, 2] = 5.0  # not greater than five
        tracts = [({(2, 2)}, {"health"})]
        out = build_sej_layer(make_grid(pop), tracts, SejParams.sej3())
        assert not np.asarray(out.values).any()

    def test_burden_category_filter(self):
        pop = np.zeros((5, 5))
        pop[1, 1] = 10.0
        pop[3, 3] = 10.0
        tracts = [({(1, 1)}, {"housing"}), ({(3, 3)}, {"legacy_pollution"})]
        sej3 = np.asarray(build_sej_layer(make_grid(pop), tracts, SejParams.sej3()).values)
        sej8 = np.asarray(build_sej_layer(make_grid(pop), tracts, SejParams.sej8()).values)
        assert not sej3[1, 1] and sej3[3, 3]
        assert sej8[1, 1] and sej8[3, 3]

    def test_unknown_category_rejected(self):
        with pytest.raises(ValueError):
            SejParams(categories=frozenset({"noise"}))


class TestComposeSurface:
    def test_neutral_weights_give_base_cost(self):
        lc = make_grid(np.ones((4, 4)), cellsize=2000.0)
        table = WeightTable(layers={"landcover": {}}, base_cost=250.0)
        out = compose_cost_surface([(lc, {})], table)
        assert np.allclose(out.values, 250.0)

    def test_right_of_way_discount(self):
        lc = np.ones((3, 3))
        lc[1, 1] = 7.0
        grid = make_grid(lc, cellsize=2000.0)
        table = WeightTable(base_cost=100.0)
        out = np.asarray(compose_cost_surface([(grid, {7: 0.5})], table).values)
        assert out[1, 1] == pytest.approx(50.0)
        assert out[0, 0] == pytest.approx(100.0)

    def test_matches_product_oracle(self):
        rivers = np.zeros((5, 5))
        rivers[2, :] = 3.0  # river row, category 3
        rail = np.zeros((5, 5))
        rail[3, :] = 9.0  # rail right-of-way, category 9
        g1, g2 = make_grid(rivers, 2000.0), make_grid(rail, 2000.0)
        table = WeightTable(base_cost=10.0)
        out = np.asarray(
            compose_cost_surface([(g1, {3: 20.0}), (g2, {9: 0.5})], table).values
        )
        for r in range(5):
            for c in range(5):
                want = 10.0
                if rivers[r, c] == 3.0:
                    want *= 20.0
                if rail[r, c] == 9.0:
                    want *= 0.5
                assert out[r, c] == pytest.approx(want)

    def test_layer_order_does_not_matter(self):
        rng = np.random.default_rng(2)
        a = make_grid(rng.integers(0, 3, size=(6, 6)).astype(float), 2000.0)
        b = make_grid(rng.integers(0, 3, size=(6, 6)).astype(float), 2000.0)
        table = WeightTable(base_cost=5.0)
        wa, wb = {0: 1.0, 1: 2.0, 2: 4.0}, {0: 1.0, 1: 0.5, 2: 8.0}
        fwd = compose_cost_surface([(a, wa), (b, wb)], table)
        rev = compose_cost_surface([(b, wb), (a, wa)], table)
        assert np.allclose(fwd.values, rev.values)

    def test_sej_layer_only_raises_costs(self):
        lc = make_grid(np.ones((4, 4)), 2000.0)
        sej_vals = np.zeros((4, 4), dtype=bool)
        sej_vals[1, 1] = True
        sej = make_grid(sej_vals.astype(float), 2000.0)
        table = WeightTable(base_cost=10.0, sej_weight=1e6)
        with_sej = np.asarray(compose_cost_surface([(lc, {})], table, sej=sej).values)
        without = np.asarray(compose_cost_surface([(lc, {})], table).values)
        assert np.all(without <= with_sej)
        assert with_sej[1, 1] == pytest.approx(1e7)

    def test_base_cost_scaling(self):
        lc = make_grid(np.ones((3, 3)), 2000.0)
        t1 = WeightTable(base_cost=10.0)
        t2 = WeightTable(base_cost=30.0)
        a = np.asarray(compose_cost_surface([(lc, {})], t1).values)
        b = np.asarray(compose_cost_surface([(lc, {})], t2).values)
        assert np.allclose(3.0 * a, b)

    def test_nonpositive_weight_rejected(self):
        with pytest.raises(ValueError):
            WeightTable(layers={"x": {1: 0.0}})
