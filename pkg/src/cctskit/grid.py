"""Uniform georeferenced cell grids and ESRI ASCII grid I/O.

All raster layers in the toolkit (land cover, screening masks, cost
surfaces, population) are carried as :class:`RasterGrid`. Grids combined in
one operation must share shape, cell size, and origin; there is no implicit
resampling.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class GridAlignmentError(ValueError):
    """Raised when an operation combines grids with mismatched geometry."""


@dataclass
class RasterGrid:
    """A row-major cell grid. Row 0 is the northernmost row.

    ``origin`` is the (x, y) of the lower-left corner in projected meters,
    matching the xllcorner/yllcorner convention of ESRI ASCII files.
    """

    ncols: int
    nrows: int
    cellsize: float
    origin: tuple[float, float]
    values: np.ndarray
    nodata: float = -9999.0

    def __post_init__(self) -> None:
        if self.ncols <= 0 or self.nrows <= 0:
            raise ValueError("grid dimensions must be positive")
        if self.cellsize <= 0:
            raise ValueError("cellsize must be positive")
        self.values = np.asarray(self.values)
        if self.values.shape != (self.nrows, self.ncols):
            if self.values.size == self.nrows * self.ncols:
                self.values = self.values.reshape(self.nrows, self.ncols)
            else:
                raise ValueError(
                    f"payload has {self.values.size} cells, expected "
                    f"{self.nrows * self.ncols}"
                )

    def cell_center(self, row: int, col: int) -> tuple[float, float]:
        x0, y0 = self.origin
        x = x0 + (col + 0.5) * self.cellsize
        y = y0 + (self.nrows - row - 0.5) * self.cellsize
        return x, y

    def index_of(self, x: float, y: float) -> tuple[int, int]:
        """Cell containing point (x, y); clamped to the grid edge."""
        x0, y0 = self.origin
        col = int((x - x0) // self.cellsize)
        row = self.nrows - 1 - int((y - y0) // self.cellsize)
        return min(max(row, 0), self.nrows - 1), min(max(col, 0), self.ncols - 1)

    def aligned_with(self, other: "RasterGrid") -> bool:
        return (
            self.ncols == other.ncols
            and self.nrows == other.nrows
            and abs(self.cellsize - other.cellsize) < 1e-9
            and abs(self.origin[0] - other.origin[0]) < 1e-6
            and abs(self.origin[1] - other.origin[1]) < 1e-6
        )

    def like(self, values: np.ndarray, nodata: float | None = None) -> "RasterGrid":
        """New grid with this grid's geometry and the given payload."""
        return RasterGrid(
            ncols=self.ncols,
            nrows=self.nrows,
            cellsize=self.cellsize,
            origin=self.origin,
            values=values,
            nodata=self.nodata if nodata is None else nodata,
        )


def require_aligned(*grids: RasterGrid) -> None:
    first = grids[0]
    for g in grids[1:]:
        if not first.aligned_with(g):
            raise GridAlignmentError(
                f"grids are not aligned: ({first.nrows}x{first.ncols} @ "
                f"{first.cellsize} m, origin {first.origin}) vs "
                f"({g.nrows}x{g.ncols} @ {g.cellsize} m, origin {g.origin})"
            )


def read_ascii_grid(path: str | Path) -> RasterGrid:
    """Read an ESRI ASCII grid (ncols/nrows/xllcorner/yllcorner header)."""
    path = Path(path)
    header: dict[str, float] = {}
    rows: list[np.ndarray] = []
    with open(path) as f:
        for lineno, raw in enumerate(f, start=1):
            line = raw.strip()
            if not line:
                continue
            parts = line.split()
            if parts[0].lower() in (
                "ncols",
                "nrows",
                "xllcorner",
                "yllcorner",
                "cellsize",
                "nodata_value",
            ):
                header[parts[0].lower()] = float(parts[1])
            else:
                try:
                    rows.append(np.array([float(v) for v in parts]))
                except ValueError as err:
                    raise ValueError(f"{path}:{lineno}: bad cell value ({err})")
    for key in ("ncols", "nrows", "xllcorner", "yllcorner", "cellsize"):
        if key not in header:
            raise ValueError(f"{path}: missing header field {key}")
    values = np.vstack(rows)
    return RasterGrid(
        ncols=int(header["ncols"]),
        nrows=int(header["nrows"]),
        cellsize=header["cellsize"],
        origin=(header["xllcorner"], header["yllcorner"]),
        values=values,
        nodata=header.get("nodata_value", -9999.0),
    )


def write_ascii_grid(grid: RasterGrid, path: str | Path) -> None:
    path = Path(path)
    with open(path, "w") as f:
        f.write(f"ncols {grid.ncols}\n")
        f.write(f"nrows {grid.nrows}\n")
        f.write(f"xllcorner {grid.origin[0]:.6f}\n")
        f.write(f"yllcorner {grid.origin[1]:.6f}\n")
        f.write(f"cellsize {grid.cellsize:.6f}\n")
        f.write(f"NODATA_value {grid.nodata:g}\n")
        vals = grid.values
        if vals.dtype == bool:
            vals = vals.astype(int)
        for r in range(grid.nrows):
            f.write(" ".join(f"{v:g}" for v in vals[r]) + "\n")
