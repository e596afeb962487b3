"""Scenario configuration: TOML in, JSON out, defaults materialized.

A scenario bundles dataset paths and every parameter block the pipeline
needs. Values omitted from the TOML fall back to package defaults; the
fully resolved configuration is echoed into run metadata so no default is
ever silent.
"""

from __future__ import annotations

import hashlib
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .capture import DEFAULT_COST_ROWS, CaptureCostParams
from .costsurface import SejParams, WeightTable
from .netdesign import DEFAULT_CLASSES, CapacityClass, NetworkEconomics
from .phasing import CreditPolicy, PhaseSchedule
from .reservoir import StorageCostParams, StorageUnitCosts
from .screening import ScreeningParams

SEJ_MODES = ("off", "sej3", "sej8")


@dataclass
class StorageConfig:
    params: StorageCostParams
    n_samples: int = 100
    multi_formation: bool = False
    geothermal_gradient: float = 32.0
    fracture_gradient: float = 16_000.0
    surface_temperature: float = 20.0
    depth_rel_std: float = 0.10
    prop_rel_std: float = 0.15


@dataclass
class NetdesignConfig:
    target: float
    economics: NetworkEconomics
    classes: tuple[CapacityClass, ...]
    storage_capex_fraction: float = 0.5
    max_bnb_nodes: int = 500_000


@dataclass
class PhasingConfig:
    schedule: PhaseSchedule
    credit: CreditPolicy
    max_parallel: int = 1
    region_bbox: tuple[float, float, float, float] | None = None  # xmin,ymin,xmax,ymax


@dataclass
class Scenario:
    name: str
    base_dir: Path
    output_dir: Path
    seed: int
    paths: dict[str, object]  # dataset name -> relative path (weight_layers nested)
    capture: CaptureCostParams
    screening: ScreeningParams
    storage: StorageConfig
    weights: WeightTable
    sej_mode: str
    sej: SejParams
    netdesign: NetdesignConfig
    phasing: PhasingConfig

    def path(self, key: str) -> Path:
        rel = self.paths.get(key)
        if rel is None:
            raise KeyError(f"scenario has no path for {key!r}")
        return self.base_dir / str(rel)

    def has_path(self, key: str) -> bool:
        return key in self.paths

    def weight_layer_paths(self) -> dict[str, Path]:
        layers = self.paths.get("weight_layers", {})
        return {name: self.base_dir / str(rel) for name, rel in layers.items()}

    def to_dict(self) -> dict:
        """Fully resolved configuration, defaults included."""
        return {
            "name": self.name,
            "seed": self.seed,
            "output_dir": str(self.output_dir),
            "paths": self.paths,
            "capture": {
                "cost_rows": [list(r) for r in self.capture.rows],
                "capacity_factor": self.capture.capacity_factor,
                "capital_charge_rate": self.capture.capital_charge_rate,
                "design_capture_fraction": self.capture.design_capture_fraction,
                "effective_capture_ratio": self.capture.effective_capture_ratio,
                "capex_fraction_of_levelized": self.capture.capex_fraction_of_levelized,
            },
            "screening": {
                "excluded_landcover_classes": sorted(
                    self.screening.excluded_landcover_classes
                ),
                "landcover_buffer": self.screening.landcover_buffer,
                "field_buffer": self.screening.field_buffer,
                "min_contiguous_area": self.screening.min_contiguous_area,
            },
            "storage": {
                "per_well_cap": self.storage.params.per_well_cap,
                "injection_years": self.storage.params.injection_years,
                "discount_rate": self.storage.params.discount_rate,
                "pressure_fraction_of_fracture": self.storage.params.pressure_fraction_of_fracture,
                "water_disposal_cost": self.storage.params.water_disposal_cost,
                "storage_efficiency": self.storage.params.storage_efficiency,
                "well_density_cap": self.storage.params.well_density_cap,
                "unit_costs": {
                    "site_characterization": self.storage.params.unit_costs.site_characterization,
                    "injection_well": self.storage.params.unit_costs.injection_well,
                    "water_well": self.storage.params.unit_costs.water_well,
                    "pump": self.storage.params.unit_costs.pump,
                    "monitoring_per_year": self.storage.params.unit_costs.monitoring_per_year,
                    "om_fraction_of_capital": self.storage.params.unit_costs.om_fraction_of_capital,
                },
                "n_samples": self.storage.n_samples,
                "multi_formation": self.storage.multi_formation,
                "geothermal_gradient": self.storage.geothermal_gradient,
                "fracture_gradient": self.storage.fracture_gradient,
                "surface_temperature": self.storage.surface_temperature,
                "depth_rel_std": self.storage.depth_rel_std,
                "prop_rel_std": self.storage.prop_rel_std,
            },
            "weights": {
                "base_cost": self.weights.base_cost,
                "sej_weight": self.weights.sej_weight,
                "layers": {
                    name: {str(k): v for k, v in mapping.items()}
                    for name, mapping in self.weights.layers.items()
                },
            },
            "sej": {
                "mode": self.sej_mode,
                "population_threshold": self.sej.population_threshold,
                "buffer": self.sej.buffer,
                "categories": sorted(self.sej.categories),
            },
            "netdesign": {
                "target": self.netdesign.target,
                "project_years": self.netdesign.economics.project_years,
                "fixed_charge_rate": self.netdesign.economics.fixed_charge_rate,
                "pump_spacing_km": self.netdesign.economics.pump_spacing_km,
                "pump_station_capital": self.netdesign.economics.pump_station_capital,
                "pump_station_om_y": self.netdesign.economics.pump_station_om_y,
                "binary_capture": self.netdesign.economics.binary_capture,
                "storage_capex_fraction": self.netdesign.storage_capex_fraction,
                "max_bnb_nodes": self.netdesign.max_bnb_nodes,
                "classes": [
                    {
                        "max_flow": c.max_flow,
                        "capital_per_km": c.capital_per_km,
                        "om_per_km_y": c.om_per_km_y,
                    }
                    for c in self.netdesign.classes
                ],
            },
            "phasing": {
                "online_years": [y for y, _ in self.phasing.schedule.periods],
                "targets": [t for _, t in self.phasing.schedule.periods],
                "construction_lead": self.phasing.schedule.construction_lead,
                "operating_life": self.phasing.schedule.operating_life,
                "discount_rate": self.phasing.schedule.discount_rate,
                "max_parallel": self.phasing.max_parallel,
                "region_bbox": (
                    list(self.phasing.region_bbox)
                    if self.phasing.region_bbox
                    else None
                ),
                "credit": {
                    "bonus_rate": self.phasing.credit.bonus_rate,
                    "base_rate": self.phasing.credit.base_rate,
                    "credit_years": self.phasing.credit.credit_years,
                    "bonus_construction_deadline": self.phasing.credit.bonus_construction_deadline,
                },
            },
        }

    def config_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def _sej_params(mode: str, raw: dict) -> SejParams:
    base = SejParams.sej8() if mode == "sej8" else SejParams.sej3()
    return SejParams(
        population_threshold=float(raw.get("population_threshold", 5.0)),
        buffer=float(raw.get("buffer", 182.0)),
        categories=base.categories,
    )


def from_dict(raw: dict, base_dir: Path, output_dir: Path | None = None) -> Scenario:
    cap_raw = raw.get("capture", {})
    capture = CaptureCostParams(
        rows=tuple(tuple(r) for r in cap_raw.get("cost_rows", DEFAULT_COST_ROWS)),
        capacity_factor=float(cap_raw.get("capacity_factor", 0.90)),
        capital_charge_rate=float(cap_raw.get("capital_charge_rate", 0.106)),
        design_capture_fraction=float(cap_raw.get("design_capture_fraction", 0.95)),
        effective_capture_ratio=float(cap_raw.get("effective_capture_ratio", 0.73)),
        capex_fraction_of_levelized=float(
            cap_raw.get("capex_fraction_of_levelized", 0.5)
        ),
    )
    scr_raw = raw.get("screening", {})
    screening = ScreeningParams(
        excluded_landcover_classes=frozenset(
            int(v) for v in scr_raw.get("excluded_landcover_classes", ())
        ),
        landcover_buffer=float(scr_raw.get("landcover_buffer", 20_000.0)),
        field_buffer=float(scr_raw.get("field_buffer", 5_000.0)),
        min_contiguous_area=float(scr_raw.get("min_contiguous_area", 78.5)),
    )
    sto_raw = raw.get("storage", {})
    uc_raw = sto_raw.get("unit_costs", {})
    unit_costs = StorageUnitCosts(
        site_characterization=float(uc_raw.get("site_characterization", 15e6)),
        injection_well=float(uc_raw.get("injection_well", 10e6)),
        water_well=float(uc_raw.get("water_well", 5e6)),
        pump=float(uc_raw.get("pump", 3e6)),
        monitoring_per_year=float(uc_raw.get("monitoring_per_year", 1e6)),
        om_fraction_of_capital=float(uc_raw.get("om_fraction_of_capital", 0.04)),
    )
    storage = StorageConfig(
        params=StorageCostParams(
            per_well_cap=float(sto_raw.get("per_well_cap", 1.0)),
            injection_years=int(sto_raw.get("injection_years", 30)),
            discount_rate=float(sto_raw.get("discount_rate", 0.15)),
            pressure_fraction_of_fracture=float(
                sto_raw.get("pressure_fraction_of_fracture", 0.80)
            ),
            water_disposal_cost=float(sto_raw.get("water_disposal_cost", 2.0)),
            storage_efficiency=float(sto_raw.get("storage_efficiency", 0.05)),
            well_density_cap=float(sto_raw.get("well_density_cap", 0.1)),
            unit_costs=unit_costs,
        ),
        n_samples=int(sto_raw.get("n_samples", 100)),
        multi_formation=bool(sto_raw.get("multi_formation", False)),
        geothermal_gradient=float(sto_raw.get("geothermal_gradient", 32.0)),
        fracture_gradient=float(sto_raw.get("fracture_gradient", 16_000.0)),
        surface_temperature=float(sto_raw.get("surface_temperature", 20.0)),
        depth_rel_std=float(sto_raw.get("depth_rel_std", 0.10)),
        prop_rel_std=float(sto_raw.get("prop_rel_std", 0.15)),
    )
    w_raw = raw.get("weights", {})
    weights = WeightTable(
        layers={
            name: {int(k): float(v) for k, v in mapping.items()}
            for name, mapping in w_raw.get("layers", {}).items()
        },
        sej_weight=float(w_raw.get("sej_weight", 1e6)),
        base_cost=float(w_raw.get("base_cost", 1.0)),
    )
    sej_raw = raw.get("sej", {})
    sej_mode = str(sej_raw.get("mode", "off")).lower()
    if sej_mode not in SEJ_MODES:
        raise ValueError(f"sej mode must be one of {SEJ_MODES}, got {sej_mode!r}")
    nd_raw = raw.get("netdesign", {})
    classes = tuple(
        CapacityClass(
            max_flow=float(c["max_flow"]),
            capital_per_km=float(c["capital_per_km"]),
            om_per_km_y=float(c["om_per_km_y"]),
        )
        for c in nd_raw.get("classes", [])
    ) or DEFAULT_CLASSES
    netdesign = NetdesignConfig(
        target=float(nd_raw.get("target", 0.0)),
        economics=NetworkEconomics(
            project_years=int(nd_raw.get("project_years", 30)),
            fixed_charge_rate=float(nd_raw.get("fixed_charge_rate", 0.106)),
            pump_spacing_km=float(nd_raw.get("pump_spacing_km", 80.0)),
            pump_station_capital=float(nd_raw.get("pump_station_capital", 10e6)),
            pump_station_om_y=float(nd_raw.get("pump_station_om_y", 0.25e6)),
            binary_capture=bool(nd_raw.get("binary_capture", False)),
        ),
        classes=classes,
        storage_capex_fraction=float(nd_raw.get("storage_capex_fraction", 0.5)),
        max_bnb_nodes=int(nd_raw.get("max_bnb_nodes", 500_000)),
    )
    ph_raw = raw.get("phasing", {})
    years = [int(y) for y in ph_raw.get("online_years", [2030])]
    targets = [float(t) for t in ph_raw.get("targets", [netdesign.target])]
    if len(years) != len(targets):
        raise ValueError("phasing online_years and targets must pair up")
    schedule = PhaseSchedule(
        periods=tuple(zip(years, targets)),
        construction_lead=int(ph_raw.get("construction_lead", 4)),
        operating_life=int(ph_raw.get("operating_life", 30)),
        discount_rate=float(ph_raw.get("discount_rate", 0.106)),
    )
    cr_raw = ph_raw.get("credit", raw.get("credit", {}))
    credit = CreditPolicy(
        bonus_rate=float(cr_raw.get("bonus_rate", 85.0)),
        base_rate=float(cr_raw.get("base_rate", 17.0)),
        credit_years=int(cr_raw.get("credit_years", 12)),
        bonus_construction_deadline=int(
            cr_raw.get("bonus_construction_deadline", 2033)
        ),
    )
    bbox = ph_raw.get("region_bbox")
    phasing = PhasingConfig(
        schedule=schedule,
        credit=credit,
        max_parallel=int(ph_raw.get("max_parallel", 1)),
        region_bbox=tuple(float(v) for v in bbox) if bbox else None,
    )
    out = raw.get("output_dir", "out")
    return Scenario(
        name=str(raw.get("name", "scenario")),
        base_dir=base_dir,
        output_dir=output_dir if output_dir is not None else base_dir / str(out),
        seed=int(raw.get("seed", 0)),
        paths=raw.get("paths", {}),
        capture=capture,
        screening=screening,
        storage=storage,
        weights=weights,
        sej_mode=sej_mode,
        sej=_sej_params(sej_mode, sej_raw),
        netdesign=netdesign,
        phasing=phasing,
    )


def load_scenario(
    path: str | Path,
    sej_mode: str | None = None,
    seed: int | None = None,
    output_dir: str | Path | None = None,
) -> Scenario:
    """Read a TOML scenario; CLI overrides replace file values."""
    path = Path(path)
    try:
        with open(path, "rb") as f:
            raw = tomllib.load(f)
    except tomllib.TOMLDecodeError as err:
        raise ValueError(f"{path}: {err}")
    if sej_mode is not None:
        raw.setdefault("sej", {})["mode"] = sej_mode
    if seed is not None:
        raw["seed"] = seed
    scenario = from_dict(
        raw, path.parent, Path(output_dir) if output_dir is not None else None
    )
    missing = []
    for key, rel in scenario.paths.items():
        if key == "weight_layers":
            missing += [
                f"{k}: {p}" for k, p in scenario.weight_layer_paths().items()
                if not p.exists()
            ]
        elif not (scenario.base_dir / str(rel)).exists():
            missing.append(f"{key}: {rel}")
    if missing:
        raise FileNotFoundError(
            f"{path}: referenced files missing: " + "; ".join(missing)
        )
    return scenario


def export_json(scenario: Scenario, path: str | Path) -> None:
    Path(path).write_text(json.dumps(scenario.to_dict(), indent=2, sort_keys=True) + "\n")
