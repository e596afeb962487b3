"""CO2 density and viscosity from an embedded (pressure, temperature) table.

The table (data/co2_properties.csv, regenerated by tools/make_co2_table.py)
covers 5-40 MPa and 20-150 C. Lookups bilinearly interpolate and clamp to
the table edge, so callers probing slightly outside the envelope get the
boundary value rather than an extrapolation.
"""

from __future__ import annotations

import csv
from functools import lru_cache
from importlib import resources

import numpy as np

TABLE_RESOURCE = "co2_properties.csv"


@lru_cache(maxsize=1)
def _load_table() -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    text = resources.files("cctskit.data").joinpath(TABLE_RESOURCE).read_text()
    pressures, temps, dens, visc = [], [], {}, {}
    for row in csv.DictReader(
        line for line in text.splitlines() if line and not line.startswith("#")
    ):
        p = float(row["pressure_mpa"])
        t = float(row["temperature_c"])
        if p not in pressures:
            pressures.append(p)
        if t not in temps:
            temps.append(t)
        dens[(p, t)] = float(row["density_kg_m3"])
        visc[(p, t)] = float(row["viscosity_pa_s"])
    p_axis = np.array(sorted(pressures))
    t_axis = np.array(sorted(temps))
    rho = np.array([[dens[(p, t)] for t in t_axis] for p in p_axis])
    mu = np.array([[visc[(p, t)] for t in t_axis] for p in p_axis])
    return p_axis, t_axis, rho, mu


def _bilinear(
    grid: np.ndarray, p_axis: np.ndarray, t_axis: np.ndarray, p: float, t: float
) -> float:
    p = float(np.clip(p, p_axis[0], p_axis[-1]))
    t = float(np.clip(t, t_axis[0], t_axis[-1]))
    i = int(np.clip(np.searchsorted(p_axis, p) - 1, 0, len(p_axis) - 2))
    j = int(np.clip(np.searchsorted(t_axis, t) - 1, 0, len(t_axis) - 2))
    fp = (p - p_axis[i]) / (p_axis[i + 1] - p_axis[i])
    ft = (t - t_axis[j]) / (t_axis[j + 1] - t_axis[j])
    return float(
        grid[i, j] * (1 - fp) * (1 - ft)
        + grid[i + 1, j] * fp * (1 - ft)
        + grid[i, j + 1] * (1 - fp) * ft
        + grid[i + 1, j + 1] * fp * ft
    )


def co2_density(pressure_pa: float, temperature_c: float) -> float:
    """CO2 density (kg/m3) at reservoir pressure (Pa) and temperature (C)."""
    p_axis, t_axis, rho, _ = _load_table()
    return _bilinear(rho, p_axis, t_axis, pressure_pa / 1e6, temperature_c)


def co2_viscosity(pressure_pa: float, temperature_c: float) -> float:
    """CO2 viscosity (Pa.s) at reservoir pressure (Pa) and temperature (C)."""
    p_axis, t_axis, _, mu = _load_table()
    return _bilinear(mu, p_axis, t_axis, pressure_pa / 1e6, temperature_c)
