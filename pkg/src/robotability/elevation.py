"""Elevation sampling from a regular-grid raster.

Raster values are cell-centered on a regular grid anchored at the lower
left corner. Sampling takes the value of the containing cell; queries that
fall outside the grid are clamped to the nearest edge cell (with a warning)
under the default policy, or rejected under the "error" policy. Nodata
cells sample as NaN and are rejected downstream.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError, ValidationError


@dataclass(frozen=True)
class ElevationGrid:
    """Row 0 of `values` is the northernmost row (as stored in .asc files)."""

    values: np.ndarray  # (nrows, ncols), NaN where nodata
    x_origin: float  # lower-left corner
    y_origin: float
    cell_size: float
    out_of_bounds: str = "clamp"  # or "error"

    def __post_init__(self):
        if self.cell_size <= 0:
            raise ValidationError(f"cell size must be positive, got {self.cell_size}")
        if self.out_of_bounds not in ("clamp", "error"):
            raise ValidationError(f"unknown out-of-bounds policy {self.out_of_bounds!r}")
        if self.values.ndim != 2 or self.values.size == 0:
            raise ValidationError("elevation grid must be a non-empty 2-D array")

    def sample(self, xy: np.ndarray) -> np.ndarray:
        """Elevations for an (m, 2) coordinate array; NaN where nodata."""
        xy = np.asarray(xy, dtype=float).reshape(-1, 2)
        nrows, ncols = self.values.shape
        col = np.floor((xy[:, 0] - self.x_origin) / self.cell_size).astype(np.int64)
        row_from_bottom = np.floor((xy[:, 1] - self.y_origin) / self.cell_size).astype(np.int64)
        out = (col < 0) | (col >= ncols) | (row_from_bottom < 0) | (row_from_bottom >= nrows)
        if np.any(out):
            if self.out_of_bounds == "error":
                bad = int(np.nonzero(out)[0][0])
                raise DataError(
                    f"coordinate ({xy[bad, 0]}, {xy[bad, 1]}) is outside the elevation grid"
                )
            warnings.warn(
                f"{int(out.sum())} sample(s) outside the elevation grid; clamped to edge",
                stacklevel=2,
            )
            col = np.clip(col, 0, ncols - 1)
            row_from_bottom = np.clip(row_from_bottom, 0, nrows - 1)
        row = nrows - 1 - row_from_bottom
        return self.values[row, col]


def read_ascii_grid(path: str | Path, out_of_bounds: str = "clamp") -> ElevationGrid:
    """Read an ASCII grid: 5-6 header lines, then rows north to south."""
    path = Path(path)
    lines = path.read_text(encoding="utf-8").split("\n")
    header: dict[str, float] = {}
    body_start = 0
    for i, line in enumerate(lines):
        parts = line.split()
        if len(parts) == 2 and parts[0].lower() in (
            "ncols", "nrows", "xllcorner", "yllcorner", "cellsize", "nodata_value",
        ):
            header[parts[0].lower()] = float(parts[1])
            body_start = i + 1
        else:
            break
    for key in ("ncols", "nrows", "xllcorner", "yllcorner", "cellsize"):
        if key not in header:
            raise ValidationError(f"{path}: missing header field {key!r}")
    ncols = int(header["ncols"])
    nrows = int(header["nrows"])
    nodata = header.get("nodata_value")

    data = np.loadtxt(lines[body_start:], dtype=float, ndmin=2)
    if data.shape != (nrows, ncols):
        data = data.reshape(nrows, ncols)
    if nodata is not None:
        data = np.where(data == nodata, np.nan, data)
    return ElevationGrid(
        values=data,
        x_origin=header["xllcorner"],
        y_origin=header["yllcorner"],
        cell_size=header["cellsize"],
        out_of_bounds=out_of_bounds,
    )


def write_ascii_grid(grid: ElevationGrid, path: str | Path, nodata: float = -9999.0) -> None:
    vals = np.where(np.isnan(grid.values), nodata, grid.values)
    nrows, ncols = vals.shape
    lines = [
        f"ncols {ncols}",
        f"nrows {nrows}",
        f"xllcorner {grid.x_origin!r}",
        f"yllcorner {grid.y_origin!r}",
        f"cellsize {grid.cell_size!r}",
        f"NODATA_value {nodata!r}",
    ]
    lines += [" ".join(repr(float(v)) for v in row) for row in vals]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
