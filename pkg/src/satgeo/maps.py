"""Per-pixel world maps: each satellite image pixel carries the (lat, lon, h)
of the highest surface point that projects there.

Stored on disk as a co-registered raster triple ``<base>_lat``, ``<base>_lon``,
``<base>_depth``; lat/lon planes are float64 degrees, the height plane float32
meters. Invalid pixels are NaN in all three planes on disk; in memory the
height plane uses the sentinel -1e30 (the value every z-buffer comparison
starts from).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .geodesy import GeoPoint
from .ingest.rasters import read_raster, write_raster
from .geodesy import GeoTransform, RasterGrid

INVALID_HT = -1e30


class MapConsistencyError(ValueError):
    """Plane shapes disagree or validity differs across planes."""


class MapBoundsError(IndexError):
    """Pixel outside the map."""


@dataclass(frozen=True)
class DepthMap:
    """In-memory world map for one satellite image."""

    lat: np.ndarray      # float64, degrees; NaN where invalid
    lon: np.ndarray      # float64, degrees; NaN where invalid
    ht: np.ndarray       # float32, meters; INVALID_HT where invalid

    def __post_init__(self):
        if not (self.lat.shape == self.lon.shape == self.ht.shape):
            raise MapConsistencyError(
                f"plane shapes differ: {self.lat.shape} {self.lon.shape} {self.ht.shape}"
            )
        valid = self.valid_mask()
        latlon_valid = ~np.isnan(self.lat) & ~np.isnan(self.lon)
        if not np.array_equal(valid, latlon_valid):
            raise MapConsistencyError("pixel validity differs across planes")

    @property
    def height(self) -> int:
        return self.lat.shape[0]

    @property
    def width(self) -> int:
        return self.lat.shape[1]

    def valid_mask(self) -> np.ndarray:
        return self.ht > INVALID_HT

    def lookup(self, row: float, col: float) -> GeoPoint | None:
        """Nearest-cell read. Returns None for a valid-bounds invalid pixel;
        raises MapBoundsError outside the map. Halves round away from zero."""
        r = int(math.copysign(math.floor(abs(row) + 0.5), row))
        c = int(math.copysign(math.floor(abs(col) + 0.5), col))
        if not (0 <= r < self.height and 0 <= c < self.width):
            raise MapBoundsError(f"pixel ({row}, {col}) outside {self.height}x{self.width} map")
        if self.ht[r, c] <= INVALID_HT:
            return None
        return GeoPoint(float(self.lat[r, c]), float(self.lon[r, c]), float(self.ht[r, c]))


def make_depth_map(lat, lon, ht) -> DepthMap:
    """Build a DepthMap, normalizing dtypes and the invalid sentinel."""
    lat = np.asarray(lat, dtype=np.float64)
    lon = np.asarray(lon, dtype=np.float64)
    ht = np.asarray(ht, dtype=np.float32)
    invalid = ~(ht > INVALID_HT) | np.isnan(ht)
    lat = np.where(invalid, np.nan, lat)
    lon = np.where(invalid, np.nan, lon)
    ht = np.where(invalid, np.float32(INVALID_HT), ht)
    return DepthMap(lat, lon, ht)


def _plane_paths(basename, suffix: str):
    base = Path(basename)
    return (
        base.parent / f"{base.name}_lat{suffix}",
        base.parent / f"{base.name}_lon{suffix}",
        base.parent / f"{base.name}_depth{suffix}",
    )


def write_depth_map(dmap: DepthMap, basename, geotransform: GeoTransform | None = None,
                    suffix: str = ".grd") -> None:
    """Write the raster triple. Invalid pixels become NaN in all three planes."""
    gt = geotransform or GeoTransform(0.0, 0.0, 1.0, 1.0)
    invalid = ~dmap.valid_mask()
    ht = dmap.ht.astype(np.float32).copy()
    ht[invalid] = np.nan
    p_lat, p_lon, p_ht = _plane_paths(basename, suffix)
    write_raster(RasterGrid(dmap.lat, gt, float("nan")), p_lat)
    write_raster(RasterGrid(dmap.lon, gt, float("nan")), p_lon)
    write_raster(RasterGrid(ht, gt, float("nan")), p_ht)


def read_depth_map(basename, suffix: str = ".grd") -> DepthMap:
    """Read a raster triple back. Any cross-plane validity mismatch is rejected.

    lat/lon planes are written as float64; float32 planes are accepted but
    carry only ~1 m of angular precision (vs ~1 cm at float64), so a warning
    is emitted.
    """
    p_lat, p_lon, p_ht = _plane_paths(basename, suffix)
    lat_grid = read_raster(p_lat)
    lon_grid = read_raster(p_lon)
    if lat_grid.values.dtype == np.float32 or lon_grid.values.dtype == np.float32:
        import warnings

        warnings.warn(
            f"{basename}: float32 lat/lon planes limit positions to ~1 m; "
            "regenerate as float64 for cm-level work",
            stacklevel=2,
        )
    lat = lat_grid.values.astype(np.float64)
    lon = lon_grid.values.astype(np.float64)
    ht = read_raster(p_ht).values.astype(np.float32)
    if not (lat.shape == lon.shape == ht.shape):
        raise MapConsistencyError(
            f"plane shapes differ on disk: {lat.shape} {lon.shape} {ht.shape}"
        )
    nan_lat = np.isnan(lat) | np.isnan(lon)
    nan_ht = np.isnan(ht)
    if not np.array_equal(nan_lat, nan_ht):
        raise MapConsistencyError("pixel valid in some planes but not others")
    ht_filled = np.where(nan_ht, np.float32(INVALID_HT), ht)
    return DepthMap(lat, lon, ht_filled)
