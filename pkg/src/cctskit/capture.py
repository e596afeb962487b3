"""Per-facility CO2 capture amounts and levelized capture costs.

The cost of an amine retrofit (separation + dehydration + compression to
pipeline pressure) at a facility is modeled as a power law in the annual
amount captured,

    cost [$/t] = C0(conc) * captured[Mt/y] ** (-b(conc)),

with coefficient and exponent depending on the CO2 volume fraction of the
target stream. Between the four anchor concentrations the pair (C0, b) is
interpolated piecewise-linearly in ln(concentration); outside the anchors it
is clamped to the nearest anchor row.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field


@dataclass(frozen=True)
class FacilityRecord:
    """One industrial CO2 emitter (or one capture stream of one)."""

    id: str
    name: str
    location: tuple[float, float]  # projected meters
    sector: str
    emitted: float  # MtCO2/y
    capturable_fraction: float
    co2_concentration: float  # volume fraction of the target stream
    biogenic_fraction: float = 0.0  # metadata only

    def __post_init__(self) -> None:
        if self.emitted < 0:
            raise ValueError(f"facility {self.id}: emitted must be >= 0")
        if not 0.0 <= self.capturable_fraction <= 1.0:
            raise ValueError(f"facility {self.id}: capturable_fraction outside [0, 1]")
        if not 0.0 < self.co2_concentration <= 1.0:
            raise ValueError(f"facility {self.id}: co2_concentration outside (0, 1]")
        if not 0.0 <= self.biogenic_fraction <= 1.0:
            raise ValueError(f"facility {self.id}: biogenic_fraction outside [0, 1]")


#: (concentration, C0 $/t at 1 Mt/y, exponent b) for mature-technology plants
DEFAULT_COST_ROWS: tuple[tuple[float, float, float], ...] = (
    (0.05, 123.0, 0.146),
    (0.10, 105.0, 0.167),
    (0.15, 99.0, 0.175),
    (0.94, 27.0, 0.415),
)


@dataclass(frozen=True)
class CaptureCostParams:
    rows: tuple[tuple[float, float, float], ...] = DEFAULT_COST_ROWS
    capacity_factor: float = 0.90
    capital_charge_rate: float = 0.106  # 1/y
    design_capture_fraction: float = 0.95
    effective_capture_ratio: float = 0.73  # reported metadata; cogeneration CO2 uncaptured
    capex_fraction_of_levelized: float = 0.5  # calibration default

    def __post_init__(self) -> None:
        concs = [r[0] for r in self.rows]
        if any(c2 <= c1 for c1, c2 in zip(concs, concs[1:])):
            raise ValueError("cost rows must be sorted by strictly increasing concentration")
        if any(c0 <= 0 or b <= 0 for _, c0, b in self.rows):
            raise ValueError("all C0 and b must be positive")

    def coefficients(self, concentration: float) -> tuple[float, float]:
        """(C0, b) at the given stream concentration.

        Log-linear interpolation between anchor rows; clamped outside them.
        """
        if not 0.0 < concentration <= 1.0:
            raise ValueError("concentration must be in (0, 1]")
        rows = self.rows
        if concentration <= rows[0][0]:
            return rows[0][1], rows[0][2]
        if concentration >= rows[-1][0]:
            return rows[-1][1], rows[-1][2]
        for (c_lo, c0_lo, b_lo), (c_hi, c0_hi, b_hi) in zip(rows, rows[1:]):
            if c_lo <= concentration <= c_hi:
                t = (math.log(concentration) - math.log(c_lo)) / (
                    math.log(c_hi) - math.log(c_lo)
                )
                return c0_lo + t * (c0_hi - c0_lo), b_lo + t * (b_hi - b_lo)
        raise AssertionError("unreachable")


def co2_captured(
    emitted: float, capturable_fraction: float, params: CaptureCostParams
) -> float:
    """Annual capture (Mt/y) = emitted * capturable fraction * design fraction."""
    if emitted < 0:
        raise ValueError("emitted must be >= 0")
    if not 0.0 <= capturable_fraction <= 1.0:
        raise ValueError("capturable_fraction outside [0, 1]")
    return emitted * capturable_fraction * params.design_capture_fraction


def capture_cost_per_tonne(
    captured: float, concentration: float, params: CaptureCostParams
) -> float:
    """Levelized capture cost ($/t) for a given annual capture rate."""
    if captured == 0:
        raise ValueError("captured is zero; capture cost is undefined at zero rate")
    if captured < 0:
        raise ValueError("captured must be positive")
    c0, b = params.coefficients(concentration)
    return c0 * captured ** (-b)


def capture_capital(
    captured: float, concentration: float, params: CaptureCostParams
) -> float:
    """Overnight capture-plant capital ($) backed out of the levelized cost.

    The power-law cost is total levelized; the capital share is a
    configurable fraction of it (calibration default 0.5). Overnight capital
    recovers that share at the capital charge rate over capacity-factored
    annual tonnes.
    """
    cost = capture_cost_per_tonne(captured, concentration, params)
    annual_capital_charge = params.capex_fraction_of_levelized * cost * captured * 1e6
    return annual_capital_charge * params.capacity_factor / params.capital_charge_rate


def effective_abatement(captured: float, params: CaptureCostParams) -> float:
    """Net annual abatement (Mt/y) after uncaptured cogeneration emissions."""
    return captured * params.effective_capture_ratio


def cost_supply_curve(
    facilities: list[FacilityRecord], params: CaptureCostParams
) -> list[tuple[float, float]]:
    """(cumulative Mt/y captured, $/t) points sorted from cheapest facility up.

    Facilities with zero capture are skipped (their cost is undefined).
    """
    priced = []
    for fac in facilities:
        cap = co2_captured(fac.emitted, fac.capturable_fraction, params)
        if cap <= 0:
            continue
        priced.append((capture_cost_per_tonne(cap, fac.co2_concentration, params), cap))
    priced.sort(key=lambda pair: pair[0])
    curve = []
    cumulative = 0.0
    for cost, cap in priced:
        cumulative += cap
        curve.append((cumulative, cost))
    return curve
