"""Synthetic "mini-gulf" fixture: a small coastal industrial region.

100x100 cells at 2 km: a coastal water band in the south, a north-south
river, two cities, wetlands, scattered lakes and oil/gas fields, twelve
industrial facilities in three clusters, three stacked saline formations,
and two announced storage sites. Sized so the complete pipeline (screen,
characterize, route, optimize, phase) runs in minutes.

Usage: python -m cctskit.fixtures <directory>
"""

from __future__ import annotations

import csv
import sys
from pathlib import Path

import numpy as np

from .grid import RasterGrid, write_ascii_grid

N = 100
CELLSIZE = 2000.0

OPEN, WETLAND, FOREST, WATER, DEVELOPED = 1, 5, 7, 11, 21

FACILITIES = [
    # id, name, cell (row, col), sector, emitted, capturable, conc, biogenic
    ("F1", "Delta Ammonia (process)", (62, 70), "ammonia", 3.0, 0.60, 0.94, 0.0),
    ("F2", "Delta Ammonia (flue)", (62, 70), "ammonia", 1.2, 0.90, 0.05, 0.0),
    ("F3", "Eastbank Refining", (66, 75), "refinery", 2.6, 0.85, 0.12, 0.0),
    ("F4", "Cypress Power", (58, 64), "gas_power", 1.8, 0.95, 0.04, 0.0),
    ("F5", "Pelican Chemicals", (70, 66), "petrochemical", 0.9, 0.80, 0.10, 0.0),
    ("F6", "Westlake Gas Plant", (63, 16), "gas_processing", 0.18, 0.95, 0.94, 0.0),
    ("F7", "Sabine Refining", (66, 24), "refinery", 1.5, 0.85, 0.13, 0.0),
    ("F8", "Gulf Lime Works", (70, 20), "minerals", 0.4, 0.90, 0.20, 0.0),
    ("F9", "Calcasieu Power", (61, 28), "gas_power", 1.1, 0.95, 0.05, 0.0),
    ("F10", "Pinehill Paper", (8, 34), "pulp_paper", 0.8, 0.90, 0.13, 0.78),
    ("F11", "Redline Gas Plant", (15, 44), "gas_processing", 0.04, 0.95, 0.94, 0.0),
    ("F12", "Northlake Power", (18, 38), "gas_power", 1.4, 0.95, 0.05, 0.0),
]

FORMATIONS = [
    # name, depth m, thickness m, perm mD, porosity, eligibility window m
    ("upper-gulf-sand", 1200.0, 12.0, 80.0, 0.22, 914.4, 3962.4),
    ("mid-gulf-sand", 2400.0, 25.0, 250.0, 0.24, 914.4, 3962.4),
    ("deep-gulf-sand", 3400.0, 40.0, 350.0, 0.20, 914.4, 3962.4),
]

ANNOUNCED = [
    # id, cell, area km2
    ("A1", (74, 9), 120.0),
    ("A2", (73, 84), 150.0),
]


def cell_xy(row: int, col: int) -> tuple[float, float]:
    return (col + 0.5) * CELLSIZE, (N - row - 0.5) * CELLSIZE


def _grid(values: np.ndarray) -> RasterGrid:
    return RasterGrid(
        ncols=N, nrows=N, cellsize=CELLSIZE, origin=(0.0, 0.0), values=values
    )


def build_landcover(rng: np.random.Generator) -> np.ndarray:
    lc = np.full((N, N), OPEN, dtype=float)
    lc[55:71, 60:91] = FOREST
    lc[75:88, 0:41] = WETLAND
    lc[90:, :] = WATER  # coastal band
    lc[0:90, 55] = WATER  # main river, north to coast
    lc[0:90, 22] = WATER  # west river
    lc[55, 22:56] = WATER  # bayou joining the rivers
    lc[25, 0:23] = WATER  # western bayou
    lc[30:37, 30:43] = DEVELOPED  # river city
    lc[35, 55:100] = DEVELOPED  # east-west highway corridor
    lc[10:15, 70:79] = DEVELOPED  # north-east city
    for _ in range(8):  # scattered lakes
        r = int(rng.integers(0, 86))
        c = int(rng.integers(0, 96))
        h = int(rng.integers(2, 4))
        w = int(rng.integers(2, 4))
        lc[r : r + h, c : c + w] = WATER
    return lc


def build_fields(rng: np.random.Generator) -> np.ndarray:
    mask = np.zeros((N, N), dtype=float)
    mask[25:33, 5:12] = 1
    mask[60:67, 78:86] = 1
    mask[48:54, 40:46] = 1
    for _ in range(26):  # the region is pocked with legacy fields
        r = int(rng.integers(0, 84))
        c = int(rng.integers(0, 94))
        h = int(rng.integers(2, 6))
        w = int(rng.integers(2, 6))
        mask[r : r + h, c : c + w] = 1
    return mask


def build_rights_of_way() -> np.ndarray:
    """Legacy pipeline/rail corridors; routing snaps onto these."""
    row = np.zeros((N, N), dtype=float)
    row[68, 4:89] = 1  # east-west trunk through both southern clusters
    row[8:69, 46] = 1  # north-south trunk east of the river city
    row[12:69, 72] = 1  # north-south spur through the industrial south-east
    row[16, 40:73] = 1  # northern link between the clusters
    row[68:76, 9] = 1  # spur to the western announced site
    return row


def build_land_value(rng: np.random.Generator) -> np.ndarray:
    value = np.ones((N, N), dtype=float)
    value[26:42, 26:48] = 3  # around the river city
    value[5:20, 64:84] = 3  # around the north-east city
    value[52:75, 55:90] = 2  # industrial south-east
    return value


def build_parcels() -> np.ndarray:
    r = np.arange(N)
    blocks = (r[:, None] // 10) * 10 + (r[None, :] // 10) + 1
    return blocks.astype(float)


def build_population(lc: np.ndarray) -> np.ndarray:
    pop = np.zeros((N, N), dtype=float)
    pop[lc == DEVELOPED] = 40.0
    pop[46:59, 36:55] = 10.0  # riverside communities downstream of the city
    pop[8:17, 66:81] = np.maximum(pop[8:17, 66:81], 12.0)
    return pop


def build_tracts() -> np.ndarray:
    tracts = np.zeros((N, N), dtype=float)
    tracts[45:60, 35:56] = 1  # river city and communities downstream
    tracts[8:17, 66:81] = 2  # north-east city fringe
    return tracts


SCENARIO_TOML = """\
name = "mini-gulf"
seed = 42
output_dir = "out"

[paths]
facilities = "facilities.csv"
landcover = "landcover.asc"
active_fields = "active_fields.asc"
population = "population.asc"
tracts = "tracts.asc"
tract_burdens = "tract_burdens.csv"
formations = "formations.csv"
site_formations = "site_formations.csv"
announced_sites = "announced_sites.csv"
parcels = "parcels.asc"

[paths.weight_layers]
landcover = "landcover.asc"
rights_of_way = "rights_of_way.asc"
land_value = "land_value.asc"

[screening]
excluded_landcover_classes = [11, 21]
landcover_buffer = 8000.0
field_buffer = 5000.0
min_contiguous_area = 78.5

[storage]
n_samples = 100

[weights]
base_cost = 1.0
sej_weight = 1e6

[weights.layers.landcover]
5 = 4.0
7 = 1.5
11 = 25.0
21 = 8.0

[weights.layers.rights_of_way]
1 = 0.35

[weights.layers.land_value]
2 = 1.3
3 = 2.0

[sej]
mode = "off"
population_threshold = 5.0
buffer = 182.0

[netdesign]
target = 6.0
storage_capex_fraction = 0.5

[phasing]
online_years = [2030, 2035, 2040]
targets = [0.8, 2.5, 4.2]
construction_lead = 4
operating_life = 30
discount_rate = 0.106
max_parallel = 1
region_bbox = [110000.0, 0.0, 200000.0, 110000.0]

[phasing.credit]
bonus_rate = 85.0
base_rate = 17.0
credit_years = 12
bonus_construction_deadline = 2033
"""


def write_mini_gulf(directory: str | Path) -> Path:
    """Generate the fixture into a directory; returns the scenario path."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(7042)

    lc = build_landcover(rng)
    write_ascii_grid(_grid(lc), directory / "landcover.asc")
    write_ascii_grid(_grid(build_fields(rng)), directory / "active_fields.asc")
    write_ascii_grid(_grid(build_rights_of_way()), directory / "rights_of_way.asc")
    write_ascii_grid(_grid(build_land_value(rng)), directory / "land_value.asc")
    write_ascii_grid(_grid(build_parcels()), directory / "parcels.asc")
    write_ascii_grid(_grid(build_population(lc)), directory / "population.asc")
    write_ascii_grid(_grid(build_tracts()), directory / "tracts.asc")

    with open(directory / "facilities.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(
            [
                "id", "name", "x", "y", "sector", "emitted_mt",
                "capturable_fraction", "co2_concentration", "biogenic_fraction",
            ]
        )
        for fid, name, cell, sector, emitted, frac, conc, bio in FACILITIES:
            x, y = cell_xy(*cell)
            w.writerow([fid, name, x, y, sector, emitted, frac, conc, bio])

    with open(directory / "formations.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(
            ["name", "depth_m", "thickness_m", "perm_md", "porosity",
             "depth_min_m", "depth_max_m"]
        )
        w.writerows(FORMATIONS)

    with open(directory / "site_formations.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["site_id", "formation"])
        for name, *_ in FORMATIONS:
            w.writerow(["*", name])

    with open(directory / "announced_sites.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["id", "x", "y", "area_km2", "source"])
        for sid, cell, area in ANNOUNCED:
            x, y = cell_xy(*cell)
            w.writerow([sid, x, y, area, "announced"])

    with open(directory / "tract_burdens.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["tract_id", "burdens"])
        w.writerow([1, "health;legacy_pollution"])
        w.writerow([2, "housing"])

    scenario_path = directory / "scenario.toml"
    scenario_path.write_text(SCENARIO_TOML)
    return scenario_path


if __name__ == "__main__":
    target = sys.argv[1] if len(sys.argv) > 1 else "mini-gulf"
    path = write_mini_gulf(target)
    print(f"wrote fixture scenario to {path}")
