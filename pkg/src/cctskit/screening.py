"""Surface screening of a region for candidate CO2 injection sites.

Excluded land-cover classes and active oil/gas fields are dilated by
configurable buffer radii; what remains free must form a contiguous area of
at least a minimum size (default 78.5 km2, the footprint of a 5 km-radius
circle) to be kept as a candidate site. Announced sites from project
disclosures bypass the screening and are appended as-is.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .grid import RasterGrid, require_aligned


@dataclass(frozen=True)
class ScreeningParams:
    excluded_landcover_classes: frozenset[int] = frozenset()
    landcover_buffer: float = 20_000.0  # m
    field_buffer: float = 5_000.0  # m
    min_contiguous_area: float = 78.5  # km2

    def __post_init__(self) -> None:
        if self.landcover_buffer < 0 or self.field_buffer < 0:
            raise ValueError("buffers must be >= 0")
        if self.min_contiguous_area <= 0:
            raise ValueError("min_contiguous_area must be positive")


@dataclass(frozen=True)
class CandidateSite:
    id: str
    centroid: tuple[float, float]  # projected meters
    area: float  # km2
    cell_set: frozenset[tuple[int, int]]  # (row, col) members; empty for announced
    source: str = "screened"  # or "announced"


def euclidean_disk(radius: float, cellsize: float) -> np.ndarray:
    """Boolean footprint of cells whose center lies within radius of the origin cell center."""
    n = int(radius // cellsize)
    if n == 0:
        return np.ones((1, 1), dtype=bool)
    dy, dx = np.mgrid[-n : n + 1, -n : n + 1]
    return (dx * dx + dy * dy) * cellsize * cellsize <= radius * radius + 1e-9


def buffer_exclusion(mask: RasterGrid, radius: float) -> RasterGrid:
    """Dilate a boolean mask by a Euclidean disk of the given radius (m)."""
    if radius < 0:
        raise ValueError("buffer radius must be >= 0")
    values = np.asarray(mask.values, dtype=bool)
    if radius == 0:
        return mask.like(values.copy())
    footprint = euclidean_disk(radius, mask.cellsize)
    return mask.like(ndimage.binary_dilation(values, structure=footprint))


_FOUR_CONNECTED = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)


def contiguous_candidates(
    free_mask: RasterGrid, min_area: float, id_prefix: str = "S"
) -> list[CandidateSite]:
    """4-connected components of the free mask at least min_area km2 big.

    Sites are ordered by centroid (y, then x) and numbered in that order.
    """
    values = np.asarray(free_mask.values, dtype=bool)
    labels, n = ndimage.label(values, structure=_FOUR_CONNECTED)
    cell_area_km2 = free_mask.cellsize**2 / 1e6
    raw = []
    for lab in range(1, n + 1):
        member = labels == lab
        count = int(member.sum())
        area = count * cell_area_km2
        if area < min_area:
            continue
        rows, cols = np.nonzero(member)
        centers = np.array([free_mask.cell_center(r, c) for r, c in zip(rows, cols)])
        centroid = (float(centers[:, 0].mean()), float(centers[:, 1].mean()))
        cells = frozenset((int(r), int(c)) for r, c in zip(rows, cols))
        raw.append((centroid, area, cells))
    raw.sort(key=lambda item: (item[0][1], item[0][0]))
    return [
        CandidateSite(
            id=f"{id_prefix}{i + 1}",
            centroid=centroid,
            area=area,
            cell_set=cells,
            source="screened",
        )
        for i, (centroid, area, cells) in enumerate(raw)
    ]


def screen_sites(
    landcover: RasterGrid,
    active_fields_mask: RasterGrid,
    params: ScreeningParams,
    announced: list[CandidateSite] | None = None,
) -> list[CandidateSite]:
    """Run the full screening: buffer exclusions, keep large contiguous areas.

    ``landcover`` is categorical; classes listed in
    ``params.excluded_landcover_classes`` (developed areas, roads, waterways,
    water bodies) are excluded together with their buffer.
    """
    require_aligned(landcover, active_fields_mask)
    excluded = np.isin(landcover.values, list(params.excluded_landcover_classes))
    lc_buffered = buffer_exclusion(landcover.like(excluded), params.landcover_buffer)
    field_buffered = buffer_exclusion(
        active_fields_mask.like(np.asarray(active_fields_mask.values, dtype=bool)),
        params.field_buffer,
    )
    free = ~(np.asarray(lc_buffered.values) | np.asarray(field_buffered.values))
    sites = contiguous_candidates(landcover.like(free), params.min_contiguous_area)
    if announced:
        sites = sites + list(announced)
    return sites
