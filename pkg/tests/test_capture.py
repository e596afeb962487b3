"""Capture cost model tests against independent one-line oracles."""

import math

import numpy as np
import pytest

from cctskit.capture import (
    CaptureCostParams,
    FacilityRecord,
    capture_capital,
    capture_cost_per_tonne,
    co2_captured,
    cost_supply_curve,
)

PARAMS = CaptureCostParams()


def eq1_oracle(captured, c0, b):
    # independent single-expression evaluation of the power law
    return c0 * captured ** (-b)


class TestCo2Captured:
    def test_zero_emissions(self):
        assert co2_captured(0.0, 1.0, PARAMS) == 0.0

    def test_design_fraction(self):
        assert co2_captured(1.0, 1.0, PARAMS) == pytest.approx(0.95)

    def test_partial_capturable(self):
        assert co2_captured(2.0, 0.5, PARAMS) == pytest.approx(0.95)

    def test_exactness_on_random_inputs(self):
        rng = np.random.default_rng(7)
        for _ in range(1000):
            emitted = float(rng.uniform(0, 10))
            frac = float(rng.uniform(0, 1))
            assert co2_captured(emitted, frac, PARAMS) == emitted * frac * 0.95

    def test_rejects_bad_inputs(self):
        with pytest.raises(ValueError):
            co2_captured(-1.0, 0.5, PARAMS)
        with pytest.raises(ValueError):
            co2_captured(1.0, 1.5, PARAMS)


class TestCostPerTonne:
    def test_cf_donaldsonville_row(self):
        # 5.0009 Mt/y of 94% CO2 lands at ~14 $/t
        assert capture_cost_per_tonne(5.0009, 0.94, PARAMS) == pytest.approx(
            13.84, abs=0.05
        )

    def test_unit_capture_returns_c0(self):
        for conc, c0, _ in PARAMS.rows:
            assert capture_cost_per_tonne(1.0, conc, PARAMS) == pytest.approx(c0)

    def test_small_gas_plant(self):
        expected = eq1_oracle(0.186, 27.0, 0.415)
        assert expected == pytest.approx(54.3, abs=0.1)
        assert capture_cost_per_tonne(0.186, 0.94, PARAMS) == pytest.approx(expected)

    def test_zero_and_negative_messages_differ(self):
        with pytest.raises(ValueError, match="zero"):
            capture_cost_per_tonne(0.0, 0.5, PARAMS)
        with pytest.raises(ValueError, match="positive"):
            capture_cost_per_tonne(-1.0, 0.5, PARAMS)

    def test_cost_decreases_with_scale(self):
        rng = np.random.default_rng(11)
        for _ in range(100):
            conc = float(rng.uniform(0.05, 0.94))
            a, b = sorted(rng.uniform(0.01, 20, size=2))
            if a == b:
                continue
            assert capture_cost_per_tonne(b, conc, PARAMS) < capture_cost_per_tonne(
                a, conc, PARAMS
            )

    def test_cost_nonincreasing_in_concentration_at_unit_rate(self):
        costs = [capture_cost_per_tonne(1.0, c, PARAMS) for c, _, _ in PARAMS.rows]
        assert costs == sorted(costs, reverse=True)

    def test_interpolation_hits_anchor_rows(self):
        for conc, c0, b in PARAMS.rows:
            got_c0, got_b = PARAMS.coefficients(conc)
            assert got_c0 == pytest.approx(c0)
            assert got_b == pytest.approx(b)

    def test_clamping_outside_anchors(self):
        assert PARAMS.coefficients(0.01) == PARAMS.coefficients(0.05)
        assert PARAMS.coefficients(0.99) == PARAMS.coefficients(0.94)

    def test_interpolation_is_log_linear_between_anchors(self):
        # halfway in ln-space between 10% and 15%
        conc = math.exp((math.log(0.10) + math.log(0.15)) / 2)
        c0, b = PARAMS.coefficients(conc)
        assert c0 == pytest.approx((105.0 + 99.0) / 2)
        assert b == pytest.approx((0.167 + 0.175) / 2)


class TestCaptureCapital:
    def test_unit_rate_fifteen_percent(self):
        # 0.5 * 99 * 1e6 * 0.90 / 0.106
        expected = 0.5 * 99.0 * 1e6 * 0.90 / 0.106
        assert capture_capital(1.0, 0.15, PARAMS) == pytest.approx(expected)
        assert expected == pytest.approx(4.203e8, rel=1e-3)

    def test_linearity_in_capex_fraction(self):
        doubled = CaptureCostParams(capex_fraction_of_levelized=1.0)
        assert capture_capital(2.5, 0.10, doubled) == pytest.approx(
            2 * capture_capital(2.5, 0.10, PARAMS)
        )

    def test_cf_row_capital(self):
        cost = eq1_oracle(5.0009, 27.0, 0.415)
        expected = 0.5 * cost * 5.0009e6 * 0.90 / 0.106
        assert expected == pytest.approx(2.94e8, rel=1e-2)
        assert capture_capital(5.0009, 0.94, PARAMS) == pytest.approx(expected)


def _facility(i, emitted, conc, frac=1.0):
    return FacilityRecord(
        id=f"F{i}",
        name=f"plant {i}",
        location=(float(i), 0.0),
        sector="test",
        emitted=emitted,
        capturable_fraction=frac,
        co2_concentration=conc,
    )


def supply_curve_oracle(facilities, params):
    # naive sort-then-scan, coded independently of the implementation
    pts = []
    for f in facilities:
        cap = f.emitted * f.capturable_fraction * params.design_capture_fraction
        if cap <= 0:
            continue
        c0, b = params.coefficients(f.co2_concentration)
        pts.append((c0 * cap ** (-b), cap))
    pts.sort()
    out, acc = [], 0.0
    for cost, cap in pts:
        acc += cap
        out.append((acc, cost))
    return out


class TestSupplyCurve:
    def test_single_facility(self):
        fac = _facility(0, 1.0, 0.15)
        curve = cost_supply_curve([fac], PARAMS)
        assert len(curve) == 1
        assert curve[0][0] == pytest.approx(0.95)
        assert curve[0][1] == pytest.approx(capture_cost_per_tonne(0.95, 0.15, PARAMS))

    def test_two_facilities_ordered_by_cost(self):
        cheap = _facility(0, 5.0, 0.94)
        dear = _facility(1, 0.05, 0.05)
        for order in ([cheap, dear], [dear, cheap]):
            curve = cost_supply_curve(order, PARAMS)
            assert curve[0][1] < curve[1][1]

    def test_matches_oracle_on_inventory(self):
        rng = np.random.default_rng(3)
        facs = [
            _facility(i, float(rng.uniform(0.01, 8.0)), float(rng.uniform(0.05, 0.94)))
            for i in range(12)
        ]
        got = cost_supply_curve(facs, PARAMS)
        want = supply_curve_oracle(facs, PARAMS)
        assert len(got) == len(want) == 12
        for (ga, gc), (wa, wc) in zip(got, want):
            assert ga == pytest.approx(wa)
            assert gc == pytest.approx(wc)

    def test_permutation_invariance(self):
        rng = np.random.default_rng(5)
        facs = [
            _facility(i, float(rng.uniform(0.01, 8.0)), float(rng.uniform(0.05, 0.94)))
            for i in range(8)
        ]
        base = cost_supply_curve(facs, PARAMS)
        perm = list(facs)
        rng.shuffle(perm)
        assert cost_supply_curve(perm, PARAMS) == base

    def test_empty_inventory(self):
        assert cost_supply_curve([], PARAMS) == []

    def test_curve_is_monotone(self):
        rng = np.random.default_rng(9)
        facs = [
            _facility(i, float(rng.uniform(0.01, 8.0)), float(rng.uniform(0.05, 0.94)))
            for i in range(20)
        ]
        curve = cost_supply_curve(facs, PARAMS)
        cums = [p[0] for p in curve]
        costs = [p[1] for p in curve]
        assert cums == sorted(cums)
        assert costs == sorted(costs)
