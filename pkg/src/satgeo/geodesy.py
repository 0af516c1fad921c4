"""Coordinate frames (geodetic, ECEF, UTM) and geo-referenced raster grids.

All latitudes/longitudes are WGS84 degrees, heights are ellipsoidal meters.
Everything here is a pure function over immutable values; instances are safe
to share across workers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

# WGS84 ellipsoid
WGS84_A = 6378137.0
WGS84_F = 1.0 / 298.257223563
WGS84_B = WGS84_A * (1.0 - WGS84_F)
WGS84_E2 = WGS84_F * (2.0 - WGS84_F)          # first eccentricity squared
WGS84_EP2 = WGS84_E2 / (1.0 - WGS84_E2)       # second eccentricity squared

UTM_K0 = 0.9996
UTM_FALSE_EASTING = 500000.0
UTM_FALSE_NORTHING_SOUTH = 10000000.0


class GeodesyError(ValueError):
    """Invalid coordinate or unsupported projection request."""


@dataclass(frozen=True)
class GeoPoint:
    """Geodetic position: latitude/longitude in degrees, ellipsoidal height in meters."""

    lat: float
    lon: float
    h: float = 0.0

    def __post_init__(self):
        if not (-90.0 <= self.lat <= 90.0):
            raise GeodesyError(f"latitude {self.lat} outside [-90, 90]")
        if not (-180.0 <= self.lon <= 180.0):
            raise GeodesyError(f"longitude {self.lon} outside [-180, 180]")
        if not math.isfinite(self.h):
            raise GeodesyError(f"height {self.h} not finite")


@dataclass(frozen=True)
class EcefPoint:
    """Earth-Centered Earth-Fixed Cartesian position, meters."""

    x: float
    y: float
    z: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.x, self.y, self.z)):
            raise GeodesyError("ECEF components must be finite")

    def distance(self, other: "EcefPoint") -> float:
        return math.sqrt(
            (self.x - other.x) ** 2 + (self.y - other.y) ** 2 + (self.z - other.z) ** 2
        )


@dataclass(frozen=True)
class UtmPoint:
    """UTM position: easting/northing in meters within a numbered zone."""

    easting: float
    northing: float
    zone: int
    hemisphere: str  # "north" | "south"

    def __post_init__(self):
        if not 1 <= self.zone <= 60:
            raise GeodesyError(f"UTM zone {self.zone} outside 1..60")
        if self.hemisphere not in ("north", "south"):
            raise GeodesyError(f"hemisphere must be north|south, got {self.hemisphere!r}")


@dataclass(frozen=True)
class GeoTransform:
    """North-up mapping between raster pixel indices and geographic coordinates.

    The origin is the outer corner of the top-left pixel; values live at pixel
    centers. Latitude decreases with increasing row index, so pixel_size_lat is
    stored positive.
    """

    origin_lon: float
    origin_lat: float
    pixel_size_lon: float
    pixel_size_lat: float

    def __post_init__(self):
        if self.pixel_size_lon == 0.0 or self.pixel_size_lat == 0.0:
            raise GeodesyError("pixel sizes must be nonzero")


@dataclass(frozen=True)
class RasterGrid:
    """A single-band geo-referenced grid (DSM, DEM, water mask, or image band).

    values must be 2-D with dtype uint16, float32 or float64. nodata marks
    missing cells; NaN is allowed (and compared NaN-aware).
    """

    values: np.ndarray
    geotransform: GeoTransform
    nodata: float = float("nan")

    def __post_init__(self):
        if self.values.ndim != 2:
            raise GeodesyError(f"raster values must be 2-D, got shape {self.values.shape}")
        if self.values.dtype not in (np.uint16, np.float32, np.float64):
            raise GeodesyError(f"unsupported raster dtype {self.values.dtype}")

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    def valid_mask(self) -> np.ndarray:
        """Boolean mask of cells holding real data (True = valid)."""
        if isinstance(self.nodata, float) and math.isnan(self.nodata):
            return ~np.isnan(self.values)
        return self.values != np.asarray(self.nodata, dtype=self.values.dtype)


def geo_to_ecef(lat, lon, h=0.0):
    """Convert geodetic coordinates (degrees, meters) to ECEF meters.

    Accepts scalars or arrays; returns (x, y, z) with the input's shape.
    """
    lat_r = np.radians(lat)
    lon_r = np.radians(lon)
    s = np.sin(lat_r)
    n = WGS84_A / np.sqrt(1.0 - WGS84_E2 * s * s)
    x = (n + h) * np.cos(lat_r) * np.cos(lon_r)
    y = (n + h) * np.cos(lat_r) * np.sin(lon_r)
    z = (n * (1.0 - WGS84_E2) + h) * s
    return x, y, z


def geo_to_ecef_point(p: GeoPoint) -> EcefPoint:
    x, y, z = geo_to_ecef(p.lat, p.lon, p.h)
    return EcefPoint(float(x), float(y), float(z))


def ecef_to_geo(x, y, z):
    """Convert ECEF meters to geodetic (lat, lon, h). Bowring's method, one refinement."""
    lon = np.degrees(np.arctan2(y, x))
    p = np.hypot(x, y)
    theta = np.arctan2(z * WGS84_A, p * WGS84_B)
    st, ct = np.sin(theta), np.cos(theta)
    lat_r = np.arctan2(
        z + WGS84_EP2 * WGS84_B * st ** 3,
        p - WGS84_E2 * WGS84_A * ct ** 3,
    )
    # one Bowring refinement keeps the error sub-micrometer for |h| < 10 km
    beta = np.arctan2((1.0 - WGS84_F) * np.sin(lat_r), np.cos(lat_r))
    sb, cb = np.sin(beta), np.cos(beta)
    lat_r = np.arctan2(
        z + WGS84_EP2 * WGS84_B * sb ** 3,
        p - WGS84_E2 * WGS84_A * cb ** 3,
    )
    s = np.sin(lat_r)
    n = WGS84_A / np.sqrt(1.0 - WGS84_E2 * s * s)
    h = np.where(
        np.abs(np.cos(lat_r)) > 1e-10,
        p / np.cos(lat_r) - n,
        np.abs(z) / np.abs(s) - n * (1.0 - WGS84_E2),
    )
    return np.degrees(lat_r), lon, h


def ecef_jacobian(p: GeoPoint) -> np.ndarray:
    """3x3 Jacobian d(x,y,z)/d(lat_deg, lon_deg, h) at a geodetic point."""
    lat_r = math.radians(p.lat)
    lon_r = math.radians(p.lon)
    s, c = math.sin(lat_r), math.cos(lat_r)
    sl, cl = math.sin(lon_r), math.cos(lon_r)
    w = math.sqrt(1.0 - WGS84_E2 * s * s)
    n = WGS84_A / w
    dn_dlat = WGS84_A * WGS84_E2 * s * c / w ** 3
    d2r = math.pi / 180.0
    dx_dlat = (dn_dlat * c - (n + p.h) * s) * cl * d2r
    dy_dlat = (dn_dlat * c - (n + p.h) * s) * sl * d2r
    dz_dlat = (dn_dlat * (1.0 - WGS84_E2) * s + (n * (1.0 - WGS84_E2) + p.h) * c) * d2r
    dx_dlon = -(n + p.h) * c * sl * d2r
    dy_dlon = (n + p.h) * c * cl * d2r
    return np.array(
        [
            [dx_dlat, dx_dlon, c * cl],
            [dy_dlat, dy_dlon, c * sl],
            [dz_dlat, 0.0, s],
        ]
    )


def meters_per_degree(lat: float) -> tuple[float, float]:
    """Local ground meters per degree of (latitude, longitude) at a latitude."""
    lat_r = math.radians(lat)
    s = math.sin(lat_r)
    w2 = 1.0 - WGS84_E2 * s * s
    m = WGS84_A * (1.0 - WGS84_E2) / w2 ** 1.5   # meridional radius
    n = WGS84_A / math.sqrt(w2)                  # prime vertical radius
    d2r = math.pi / 180.0
    return m * d2r, n * math.cos(lat_r) * d2r


def utm_zone(lon: float) -> int:
    zone = int(math.floor((lon + 180.0) / 6.0)) + 1
    return min(max(zone, 1), 60)


def _zone_central_meridian(zone: int) -> float:
    return (zone - 1) * 6.0 - 180.0 + 3.0


def geo_to_utm(lat, lon, zone: int | None = None) -> UtmPoint:
    """Project geodetic coordinates to UTM (scale 0.9996, false easting 500 km).

    A zone may be pinned explicitly so that a batch of points spanning a zone
    boundary stays in one planar frame; by default the point's natural zone is
    used. Accepts scalars or equal-shaped arrays (then returns arrays packed in
    a UtmPoint whose easting/northing are ndarrays).
    """
    lat_a = np.asarray(lat, dtype=float)
    lon_a = np.asarray(lon, dtype=float)
    if np.any(np.abs(lat_a) >= 84.0):
        raise GeodesyError("latitude outside UTM range (|lat| < 84)")
    if zone is None:
        zone = utm_zone(float(np.ravel(lon_a)[0]))
    lon0 = _zone_central_meridian(zone)

    phi = np.radians(lat_a)
    dlam = np.radians(lon_a - lon0)
    n = WGS84_A / np.sqrt(1.0 - WGS84_E2 * np.sin(phi) ** 2)
    t = np.tan(phi) ** 2
    c = WGS84_EP2 * np.cos(phi) ** 2
    a = dlam * np.cos(phi)
    m = _meridian_arc(phi)
    e2, ep2 = WGS84_E2, WGS84_EP2
    easting = UTM_FALSE_EASTING + UTM_K0 * n * (
        a
        + (1 - t + c) * a ** 3 / 6.0
        + (5 - 18 * t + t ** 2 + 72 * c - 58 * ep2) * a ** 5 / 120.0
    )
    northing = UTM_K0 * (
        m
        + n
        * np.tan(phi)
        * (
            a ** 2 / 2.0
            + (5 - t + 9 * c + 4 * c ** 2) * a ** 4 / 24.0
            + (61 - 58 * t + t ** 2 + 600 * c - 330 * ep2) * a ** 6 / 720.0
        )
    )
    south = bool(np.ravel(lat_a)[0] < 0.0)
    if south:
        northing = northing + UTM_FALSE_NORTHING_SOUTH
    if lat_a.ndim == 0:
        return UtmPoint(float(easting), float(northing), zone, "south" if south else "north")
    return UtmPoint(easting, northing, zone, "south" if south else "north")


def utm_to_geo(easting, northing, zone: int, hemisphere: str = "north"):
    """Inverse UTM projection back to (lat, lon) degrees."""
    if hemisphere not in ("north", "south"):
        raise GeodesyError(f"hemisphere must be north|south, got {hemisphere!r}")
    x = np.asarray(easting, dtype=float) - UTM_FALSE_EASTING
    y = np.asarray(northing, dtype=float)
    if hemisphere == "south":
        y = y - UTM_FALSE_NORTHING_SOUTH
    e2, ep2 = WGS84_E2, WGS84_EP2
    m = y / UTM_K0
    mu = m / (WGS84_A * (1 - e2 / 4 - 3 * e2 ** 2 / 64 - 5 * e2 ** 3 / 256))
    e1 = (1 - math.sqrt(1 - e2)) / (1 + math.sqrt(1 - e2))
    phi1 = (
        mu
        + (3 * e1 / 2 - 27 * e1 ** 3 / 32) * np.sin(2 * mu)
        + (21 * e1 ** 2 / 16 - 55 * e1 ** 4 / 32) * np.sin(4 * mu)
        + (151 * e1 ** 3 / 96) * np.sin(6 * mu)
        + (1097 * e1 ** 4 / 512) * np.sin(8 * mu)
    )
    s1, c1 = np.sin(phi1), np.cos(phi1)
    n1 = WGS84_A / np.sqrt(1 - e2 * s1 ** 2)
    r1 = WGS84_A * (1 - e2) / (1 - e2 * s1 ** 2) ** 1.5
    t1 = np.tan(phi1) ** 2
    c1t = ep2 * c1 ** 2
    d = x / (n1 * UTM_K0)
    lat_r = phi1 - (n1 * np.tan(phi1) / r1) * (
        d ** 2 / 2
        - (5 + 3 * t1 + 10 * c1t - 4 * c1t ** 2 - 9 * ep2) * d ** 4 / 24
        + (61 + 90 * t1 + 298 * c1t + 45 * t1 ** 2 - 252 * ep2 - 3 * c1t ** 2) * d ** 6 / 720
    )
    dlam = (
        d
        - (1 + 2 * t1 + c1t) * d ** 3 / 6
        + (5 - 2 * c1t + 28 * t1 - 3 * c1t ** 2 + 8 * ep2 + 24 * t1 ** 2) * d ** 5 / 120
    ) / c1
    lat = np.degrees(lat_r)
    lon = _zone_central_meridian(zone) + np.degrees(dlam)
    if lat.ndim == 0:
        return float(lat), float(lon)
    return lat, lon


def _meridian_arc(phi):
    """Meridian arc length from the equator, Snyder's e^6 series."""
    e2 = WGS84_E2
    return WGS84_A * (
        (1 - e2 / 4 - 3 * e2 ** 2 / 64 - 5 * e2 ** 3 / 256) * phi
        - (3 * e2 / 8 + 3 * e2 ** 2 / 32 + 45 * e2 ** 3 / 1024) * np.sin(2 * phi)
        + (15 * e2 ** 2 / 256 + 45 * e2 ** 3 / 1024) * np.sin(4 * phi)
        - (35 * e2 ** 3 / 3072) * np.sin(6 * phi)
    )


def pixel_to_geo(gt: GeoTransform, row, col):
    """Geographic coordinates of a (possibly fractional) pixel center.

    Returns (lat, lon). Extrapolation beyond the grid is allowed.
    """
    lon = gt.origin_lon + (np.asarray(col, dtype=float) + 0.5) * gt.pixel_size_lon
    lat = gt.origin_lat - (np.asarray(row, dtype=float) + 0.5) * gt.pixel_size_lat
    return lat, lon


def geo_to_pixel(gt: GeoTransform, lat, lon):
    """Exact inverse of pixel_to_geo. Returns fractional (row, col)."""
    col = (np.asarray(lon, dtype=float) - gt.origin_lon) / gt.pixel_size_lon - 0.5
    row = (gt.origin_lat - np.asarray(lat, dtype=float)) / gt.pixel_size_lat - 0.5
    return row, col


def sample_bilinear(grid: RasterGrid, row, col):
    """Bilinear sample of a raster at fractional pixel coordinates.

    Coordinates must stay within the interior margin of 0.5 px (so the four
    contributing cells exist). Returns the grid's nodata when any contributing
    cell is nodata. Accepts scalars or arrays.
    """
    r = np.asarray(row, dtype=float)
    c = np.asarray(col, dtype=float)
    h, w = grid.values.shape
    if np.any(r < -0.5) or np.any(r > h - 0.5) or np.any(c < -0.5) or np.any(c > w - 0.5):
        raise GeodesyError("bilinear sample outside raster bounds")
    r0 = np.clip(np.floor(r).astype(int), 0, max(h - 2, 0))
    c0 = np.clip(np.floor(c).astype(int), 0, max(w - 2, 0))
    fr = np.clip(r - r0, 0.0, 1.0)
    fc = np.clip(c - c0, 0.0, 1.0)
    r1 = np.minimum(r0 + 1, h - 1)
    c1 = np.minimum(c0 + 1, w - 1)
    mask = grid.valid_mask()
    v = np.where(mask, grid.values.astype(np.float64, copy=False), 0.0)
    v00 = v[r0, c0]
    v01 = v[r0, c1]
    v10 = v[r1, c0]
    v11 = v[r1, c1]
    # incremental form: exact on constant fields and at nodes (the weighted
    # four-term sum carries ~1 ulp of noise, enough to flip downstream
    # comparisons between interpolated ground and exact roof heights)
    out = v00 + fc * (v01 - v00) + fr * (v10 - v00) + (fr * fc) * (v00 + v11 - v01 - v10)
    # a cell only contributes (and can poison the sample) with nonzero weight
    ok = np.ones(np.broadcast(r, c).shape, dtype=bool)
    ok = ok & (mask[r0, c0] | (fr == 1.0) | (fc == 1.0))
    ok = ok & (mask[r0, c1] | (fr == 1.0) | (fc == 0.0))
    ok = ok & (mask[r1, c0] | (fr == 0.0) | (fc == 1.0))
    ok = ok & (mask[r1, c1] | (fr == 0.0) | (fc == 0.0))
    nod = grid.nodata if not (isinstance(grid.nodata, float) and math.isnan(grid.nodata)) else np.nan
    out = np.where(ok, out, nod)
    if out.ndim == 0:
        return float(out)
    return out


def sample_nearest(grid: RasterGrid, row, col):
    """Nearest-neighbor sample (used for categorical grids such as water masks)."""
    r = np.rint(np.asarray(row, dtype=float)).astype(int)
    c = np.rint(np.asarray(col, dtype=float)).astype(int)
    h, w = grid.values.shape
    if np.any(r < 0) or np.any(r >= h) or np.any(c < 0) or np.any(c >= w):
        raise GeodesyError("nearest sample outside raster bounds")
    out = grid.values[r, c]
    if out.ndim == 0:
        return out.item()
    return out
