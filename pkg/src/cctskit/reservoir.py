"""Monte Carlo subsurface characterization of candidate storage sites.

Each candidate site is underlain by one or more saline formations described
by mean depth, thickness, permeability, and porosity. Parameter uncertainty
is handled by sampling normal distributions around the means (10% relative
standard deviation for depth and temperature, 15% for the rock properties),
clamping draws to model validity ranges, and averaging the resulting
injectivity and capacity estimates over the draws.

The flow model is deliberately simple and fully closed-form: a cylindrical
reservoir of uniform properties per injection well, steady-state radial
Darcy flow of CO2 at reservoir conditions, injection pressure capped at a
fraction of the fracture pressure, and volumetric capacity from pore volume
times a storage efficiency. No plume interference, leakage, or geochemistry.
Storage cost levelizes site capital (characterization, injection wells,
paired water-production wells, pumps) plus annual monitoring, O&M, and
produced-water disposal over the injection period.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .co2props import co2_density, co2_viscosity
from .finance import annuity_factor
from .screening import CandidateSite

MILLIDARCY_M2 = 9.869e-16
HYDROSTATIC_PA_PER_M = 9810.0
SECONDS_PER_YEAR = 365.25 * 86400.0
WELL_RADIUS_M = 0.1

# 3,000-13,000 ft eligibility window for storage formations
DEPTH_ELIGIBLE_M = (914.4, 3962.4)


class NoEligibleFormationError(Exception):
    """No formation under a site is usable (outside the depth window, or
    injection is pressure-infeasible everywhere)."""


def md_to_m2(perm_md: float) -> float:
    return perm_md * MILLIDARCY_M2


@dataclass(frozen=True)
class FormationParams:
    """Mean subsurface properties of one storage formation."""

    name: str
    depth: float  # m
    thickness: float  # m
    permeability: float  # m2
    porosity: float  # fraction
    surface_temperature: float = 20.0  # C
    geothermal_gradient: float = 32.0  # C/km
    fracture_gradient: float = 16_000.0  # Pa/m
    depth_valid: tuple[float, float] = DEPTH_ELIGIBLE_M

    def __post_init__(self) -> None:
        if min(self.depth, self.thickness, self.permeability) <= 0:
            raise ValueError(f"formation {self.name}: means must be positive")
        if not 0.0 < self.porosity < 1.0:
            raise ValueError(f"formation {self.name}: porosity outside (0, 1)")

    @classmethod
    def from_millidarcy(cls, *, permeability_md: float, **kwargs) -> "FormationParams":
        return cls(permeability=md_to_m2(permeability_md), **kwargs)

    @property
    def mean_temperature(self) -> float:
        return self.surface_temperature + self.geothermal_gradient * self.depth / 1000.0

    def is_eligible(self) -> bool:
        lo, hi = self.depth_valid
        return lo <= self.depth <= hi


@dataclass(frozen=True)
class ValidityLimits:
    """Clamp ranges applied to sampled parameters (calibration defaults).

    Draws outside a range are clamped to the boundary, keeping samples inside
    the validity envelope of the flow model and the property table.
    """

    depth: tuple[float, float] = (600.0, 4000.0)  # m
    thickness: tuple[float, float] = (5.0, 500.0)  # m
    permeability: tuple[float, float] = (0.1 * MILLIDARCY_M2, 5000.0 * MILLIDARCY_M2)
    porosity: tuple[float, float] = (0.01, 0.40)
    temperature: tuple[float, float] = (20.0, 150.0)  # C


DEFAULT_LIMITS = ValidityLimits()


@dataclass(frozen=True)
class SampledReservoir:
    """One concrete draw of formation parameters with derived fluid state."""

    depth: float
    thickness: float
    permeability: float
    porosity: float
    temperature: float
    pressure: float  # Pa, hydrostatic at depth
    density: float  # kg/m3 CO2 at (pressure, temperature)
    viscosity: float  # Pa.s

    @classmethod
    def at(
        cls,
        depth: float,
        thickness: float,
        permeability: float,
        porosity: float,
        temperature: float,
    ) -> "SampledReservoir":
        pressure = HYDROSTATIC_PA_PER_M * depth
        return cls(
            depth=depth,
            thickness=thickness,
            permeability=permeability,
            porosity=porosity,
            temperature=temperature,
            pressure=pressure,
            density=co2_density(pressure, temperature),
            viscosity=co2_viscosity(pressure, temperature),
        )


@dataclass(frozen=True)
class StorageUnitCosts:
    """Per-site and per-well cost items (calibration defaults, 2020$)."""

    site_characterization: float = 15e6
    injection_well: float = 10e6
    water_well: float = 5e6
    pump: float = 3e6
    monitoring_per_year: float = 1e6
    om_fraction_of_capital: float = 0.04  # 1/y


@dataclass(frozen=True)
class StorageCostParams:
    per_well_cap: float = 1.0  # MtCO2/y per injection well
    injection_years: int = 30
    discount_rate: float = 0.15
    pressure_fraction_of_fracture: float = 0.80
    water_disposal_cost: float = 2.0  # $/m3
    storage_efficiency: float = 0.05  # fraction of pore volume, calibration default
    well_density_cap: float = 0.1  # wells/km2 (one per 10 km2), calibration default
    unit_costs: StorageUnitCosts = field(default_factory=StorageUnitCosts)

    def __post_init__(self) -> None:
        if self.pressure_fraction_of_fracture > 1.0:
            raise ValueError("pressure fraction of fracture must be <= 1")
        if min(
            self.per_well_cap,
            self.injection_years,
            self.storage_efficiency,
            self.well_density_cap,
        ) <= 0:
            raise ValueError("storage cost parameters must be positive")
        if self.discount_rate < 0 or self.water_disposal_cost < 0:
            raise ValueError("discount rate and water cost must be >= 0")


@dataclass(frozen=True)
class StorageSite:
    """A characterized site: screened surface footprint plus reservoir estimates."""

    site: CandidateSite
    formation: str
    injectivity: float  # MtCO2/y
    capacity: float  # MtCO2
    storage_cost: float  # $/t
    n_wells: int


def derive_seed(global_seed: int, *parts: object) -> int:
    """Stable per-site/per-formation seed, independent of execution order."""
    digest = hashlib.sha256(repr((global_seed,) + parts).encode()).digest()
    return int.from_bytes(digest[:8], "big")


def sample_parameters(
    formation: FormationParams,
    n: int,
    seed: int,
    depth_rel_std: float = 0.10,
    prop_rel_std: float = 0.15,
    limits: ValidityLimits = DEFAULT_LIMITS,
) -> list[SampledReservoir]:
    """Draw n parameter sets around the formation means.

    Depth and temperature use the 10% relative standard deviation; thickness,
    permeability, and porosity the 15% one. The temperature mean follows the
    geothermal gradient evaluated at the mean depth. Each draw derives
    hydrostatic pressure from its own depth and CO2 properties from its own
    (pressure, temperature).
    """
    if n < 1:
        raise ValueError("need at least one sample")
    rng = np.random.default_rng(seed)
    mean_t = formation.mean_temperature

    def draws(mean: float, rel_std: float, clamp: tuple[float, float]) -> np.ndarray:
        if rel_std == 0:
            vals = np.full(n, mean)
        else:
            vals = rng.normal(mean, rel_std * mean, size=n)
        return np.clip(vals, clamp[0], clamp[1])

    depth = draws(formation.depth, depth_rel_std, limits.depth)
    temperature = draws(mean_t, depth_rel_std, limits.temperature)
    thickness = draws(formation.thickness, prop_rel_std, limits.thickness)
    permeability = draws(formation.permeability, prop_rel_std, limits.permeability)
    porosity = draws(formation.porosity, prop_rel_std, limits.porosity)

    out = []
    for i in range(n):
        pressure = HYDROSTATIC_PA_PER_M * depth[i]
        out.append(
            SampledReservoir(
                depth=float(depth[i]),
                thickness=float(thickness[i]),
                permeability=float(permeability[i]),
                porosity=float(porosity[i]),
                temperature=float(temperature[i]),
                pressure=pressure,
                density=co2_density(pressure, float(temperature[i])),
                viscosity=co2_viscosity(pressure, float(temperature[i])),
            )
        )
    return out


def available_drawdown(sample: SampledReservoir, params: StorageCostParams, fracture_gradient: float) -> float:
    """Allowed bottom-hole overpressure (Pa): capped injection pressure minus hydrostatic."""
    return (
        params.pressure_fraction_of_fracture * fracture_gradient * sample.depth
        - sample.pressure
    )


def well_rate_uncapped(
    sample: SampledReservoir,
    area_km2: float,
    n_wells: int,
    params: StorageCostParams,
    fracture_gradient: float = 16_000.0,
) -> float:
    """Uncapped steady radial-flow injection rate per well (MtCO2/y).

    Q = 2 pi k h rho dP / (mu ln(r_e / r_w)), with the drainage radius r_e
    from an equal split of the site area among wells.
    """
    dp = available_drawdown(sample, params, fracture_gradient)
    if dp <= 0:
        return 0.0
    r_e = math.sqrt(area_km2 * 1e6 / (math.pi * n_wells))
    kg_s = (
        2.0
        * math.pi
        * sample.permeability
        * sample.thickness
        * sample.density
        * dp
        / (sample.viscosity * math.log(r_e / WELL_RADIUS_M))
    )
    return kg_s * SECONDS_PER_YEAR / 1e9


@dataclass(frozen=True)
class WellfieldEstimate:
    injectivity: float  # MtCO2/y, site total
    capacity: float  # MtCO2
    n_wells: int
    pressure_feasible: bool


def injectivity_capacity(
    sample: SampledReservoir,
    area_km2: float,
    params: StorageCostParams,
    fracture_gradient: float = 16_000.0,
) -> WellfieldEstimate:
    """Site capacity, well count, and capped injectivity for one parameter draw.

    Capacity is pore volume times CO2 density times storage efficiency. The
    well count is sized so each well has roughly a full injection period of
    work at its cap, limited by an areal well-density cap. Site injectivity
    is wells times the capped per-well rate, never exceeding what capacity
    can absorb over the injection period.
    """
    if area_km2 <= 0:
        raise ValueError("site area must be positive")
    capacity = (
        area_km2
        * 1e6
        * sample.thickness
        * sample.porosity
        * sample.density
        * params.storage_efficiency
        / 1e9
    )
    n_wells = max(
        1,
        min(
            math.floor(capacity / (params.per_well_cap * params.injection_years)),
            math.floor(area_km2 * params.well_density_cap),
        ),
    )
    dp = available_drawdown(sample, params, fracture_gradient)
    if dp <= 0:
        return WellfieldEstimate(0.0, capacity, n_wells, pressure_feasible=False)
    per_well = min(
        well_rate_uncapped(sample, area_km2, n_wells, params, fracture_gradient),
        params.per_well_cap,
    )
    injectivity = min(n_wells * per_well, capacity / params.injection_years)
    return WellfieldEstimate(injectivity, capacity, n_wells, pressure_feasible=True)


def storage_cost(
    injectivity: float,
    capacity: float,
    n_wells: int,
    sample: SampledReservoir,
    params: StorageCostParams,
) -> float:
    """Levelized storage cost ($/t): PV of costs over PV of tonnes injected.

    Capital (site characterization plus per-well items: injection well, one
    water-production well, one pump) lands at year zero; monitoring, O&M, and
    produced-water disposal recur annually over the injection period. The
    produced-water volume equals the reservoir volume of injected CO2.
    """
    if injectivity <= 0:
        raise ValueError("storage cost undefined for nonpositive injectivity")
    uc = params.unit_costs
    capital = uc.site_characterization + n_wells * (
        uc.injection_well + uc.water_well + uc.pump
    )
    annual_tonnes = injectivity * 1e6
    water_m3 = injectivity * 1e9 / sample.density
    annual_cost = (
        uc.monitoring_per_year
        + uc.om_fraction_of_capital * capital
        + water_m3 * params.water_disposal_cost
    )
    a = annuity_factor(params.discount_rate, params.injection_years)
    return (capital + annual_cost * a) / (annual_tonnes * a)


def _mean_sample(samples: list[SampledReservoir]) -> SampledReservoir:
    return SampledReservoir.at(
        depth=float(np.mean([s.depth for s in samples])),
        thickness=float(np.mean([s.thickness for s in samples])),
        permeability=float(np.mean([s.permeability for s in samples])),
        porosity=float(np.mean([s.porosity for s in samples])),
        temperature=float(np.mean([s.temperature for s in samples])),
    )


def characterize_site(
    site: CandidateSite,
    formations: list[FormationParams],
    cost_params: StorageCostParams,
    n: int = 100,
    seed: int = 0,
    multi_formation: bool = False,
    depth_rel_std: float = 0.10,
    prop_rel_std: float = 0.15,
    limits: ValidityLimits = DEFAULT_LIMITS,
) -> StorageSite:
    """Estimate injectivity, capacity, and cost for one site.

    Per eligible formation, injectivity and capacity are means over the n
    sampled draws; the well count covers the mean injectivity; the levelized
    cost is evaluated at the mean of the drawn parameters. Single-formation
    mode keeps the cheapest formation; multi-formation mode stacks all
    feasible formations, summing injectivity and capacity and reporting a
    capacity-weighted mean cost.

    Sampling seeds derive from (seed, site id, formation name), so results
    do not depend on the order sites are processed in.
    """
    eligible = [f for f in formations if f.is_eligible()]
    if not eligible:
        raise NoEligibleFormationError(
            f"site {site.id}: no underlying formation within the "
            f"{DEPTH_ELIGIBLE_M[0]:.0f}-{DEPTH_ELIGIBLE_M[1]:.0f} m depth window"
        )
    per_formation = []
    for formation in eligible:
        samples = sample_parameters(
            formation,
            n,
            seed=derive_seed(seed, site.id, formation.name),
            depth_rel_std=depth_rel_std,
            prop_rel_std=prop_rel_std,
            limits=limits,
        )
        estimates = [
            injectivity_capacity(s, site.area, cost_params, formation.fracture_gradient)
            for s in samples
        ]
        injectivity = float(np.mean([e.injectivity for e in estimates]))
        capacity = float(np.mean([e.capacity for e in estimates]))
        if injectivity <= 0:
            continue  # pressure-infeasible everywhere; formation unusable
        n_wells = max(1, math.ceil(injectivity / cost_params.per_well_cap - 1e-9))
        cost = storage_cost(
            injectivity, capacity, n_wells, _mean_sample(samples), cost_params
        )
        per_formation.append((formation.name, injectivity, capacity, cost, n_wells))
    if not per_formation:
        raise NoEligibleFormationError(
            f"site {site.id}: injection pressure-infeasible in every eligible formation"
        )
    if not multi_formation:
        name, injectivity, capacity, cost, n_wells = min(
            per_formation, key=lambda item: item[3]
        )
        return StorageSite(site, name, injectivity, capacity, cost, n_wells)
    injectivity = sum(item[1] for item in per_formation)
    capacity = sum(item[2] for item in per_formation)
    cost = sum(item[3] * item[2] for item in per_formation) / capacity
    n_wells = sum(item[4] for item in per_formation)
    return StorageSite(
        site,
        "+".join(item[0] for item in per_formation),
        injectivity,
        capacity,
        cost,
        n_wells,
    )


def storage_supply_curve(sites: list[StorageSite]) -> list[tuple[float, float]]:
    """(cumulative MtCO2/y injectivity, $/t) sorted from cheapest site up."""
    ordered = sorted(sites, key=lambda s: s.storage_cost)
    curve = []
    cumulative = 0.0
    for s in ordered:
        cumulative += s.injectivity
        curve.append((cumulative, s.storage_cost))
    return curve
