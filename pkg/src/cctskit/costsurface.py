"""Weighted pipeline-routing cost surfaces.

Each categorical layer (land cover, rights-of-way, slope class, rivers,
land-value class, ...) contributes a multiplicative weight per cell; the
composed surface is the base cost ($/km at weight 1) times the product of
all layer weights, times a large penalty on cells of the social and
environmental justice (SEJ) layer when that layer is active. Weight 1 is
neutral; categories missing from a weight mapping stay neutral.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .grid import RasterGrid, require_aligned
from .screening import buffer_exclusion

SEJ3_CATEGORIES = frozenset({"health", "water_wastewater", "legacy_pollution"})
SEJ8_CATEGORIES = SEJ3_CATEGORIES | frozenset(
    {"climate_change", "energy", "housing", "transportation", "workforce_development"}
)


@dataclass(frozen=True)
class SejParams:
    """Rules for marking populated disadvantaged-community cells."""

    population_threshold: float = 5.0  # persons per cell, strict inequality
    buffer: float = 182.0  # m
    categories: frozenset[str] = SEJ3_CATEGORIES

    def __post_init__(self) -> None:
        if not self.categories:
            raise ValueError("at least one burden category required")
        unknown = self.categories - SEJ8_CATEGORIES
        if unknown:
            raise ValueError(f"unknown burden categories: {sorted(unknown)}")

    @classmethod
    def sej3(cls) -> "SejParams":
        return cls(categories=SEJ3_CATEGORIES)

    @classmethod
    def sej8(cls) -> "SejParams":
        return cls(categories=SEJ8_CATEGORIES)


@dataclass(frozen=True)
class WeightTable:
    """Per-layer categorical weights plus the SEJ multiplier and base cost."""

    layers: Mapping[str, Mapping[int, float]] = field(default_factory=dict)
    sej_weight: float = 1e6
    base_cost: float = 1.0  # $/km at weight 1

    def __post_init__(self) -> None:
        if self.base_cost <= 0 or self.sej_weight <= 0:
            raise ValueError("base cost and SEJ weight must be positive")
        for name, mapping in self.layers.items():
            if any(w <= 0 for w in mapping.values()):
                raise ValueError(f"layer {name}: weights must be positive")


def build_sej_layer(
    population: RasterGrid,
    tracts: Sequence[tuple[set[tuple[int, int]], set[str]]],
    params: SejParams,
) -> RasterGrid:
    """Boolean layer of populated cells inside burdened tracts, buffered.

    A cell is marked when its population strictly exceeds the threshold and
    it lies in a tract carrying at least one of the configured burden
    categories; the marked set is then dilated by the buffer radius.
    """
    marked = np.zeros((population.nrows, population.ncols), dtype=bool)
    pop = np.asarray(population.values, dtype=float)
    for cells, burdens in tracts:
        if not burdens & params.categories:
            continue
        for r, c in cells:
            if not (0 <= r < population.nrows and 0 <= c < population.ncols):
                raise ValueError(f"tract cell {(r, c)} outside the population grid")
            if pop[r, c] > params.population_threshold:
                marked[r, c] = True
    return buffer_exclusion(population.like(marked), params.buffer)


def compose_cost_surface(
    layers: Sequence[tuple[RasterGrid, Mapping[int, float]]],
    table: WeightTable,
    sej: RasterGrid | None = None,
) -> RasterGrid:
    """Multiply layer weights into a per-cell $/km traversal cost grid."""
    if not layers and sej is None:
        raise ValueError("need at least one layer or an SEJ layer")
    grids = [g for g, _ in layers] + ([sej] if sej is not None else [])
    require_aligned(*grids)
    ref = grids[0]
    cost = np.full((ref.nrows, ref.ncols), table.base_cost, dtype=float)
    for grid, mapping in layers:
        cats = np.rint(np.asarray(grid.values, dtype=float)).astype(int)
        weights = np.ones_like(cost)
        for cat, w in mapping.items():
            weights[cats == cat] = w
        cost *= weights
    if sej is not None:
        cost[np.asarray(sej.values, dtype=bool)] *= table.sej_weight
    if not np.all(np.isfinite(cost)) or np.any(cost <= 0):
        raise ValueError("composed cost surface has nonpositive or non-finite cells")
    return ref.like(cost)
