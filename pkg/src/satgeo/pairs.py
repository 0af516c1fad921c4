"""Image-pair characterization and training-split balancing.

View-angle difference comes from the satellites' azimuth/elevation metadata;
track-angle difference from line fits to each image's middle-row ground
points in UTM. Balancing samples a fixed target per view-angle histogram bin.
Coverage heatmaps count, per ground cell, the cameras that see it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geodesy import (
    GeodesyError,
    GeoTransform,
    RasterGrid,
    geo_to_utm,
    pixel_to_geo,
    utm_zone,
)
from .ingest.imd import ImdRecord
from .ingest.tables import PairRecord
from .maps import DepthMap
from .rpc import RpcModel

DEFAULT_N_BINS = 10


class PairError(ValueError):
    """Insufficient data for an angle computation, or UTM zone straddle."""


@dataclass(frozen=True)
class BalanceConfig:
    n_bins: int = DEFAULT_N_BINS
    target_per_bin: int = 100
    seed: int = 0

    def __post_init__(self):
        if self.n_bins < 1:
            raise ValueError("n_bins must be >= 1")
        if self.target_per_bin < 1:
            raise ValueError("target_per_bin must be >= 1")


def view_vector(meta: ImdRecord) -> np.ndarray:
    """Unit viewing vector [cos(El)cos(Az), cos(El)sin(Az), sin(El)]."""
    el = math.radians(meta.sat_elevation)
    az = math.radians(meta.sat_azimuth)
    return np.array([
        math.cos(el) * math.cos(az),
        math.cos(el) * math.sin(az),
        math.sin(el),
    ])


def view_angle_diff(a: ImdRecord, b: ImdRecord) -> float:
    """Angle between the two viewing vectors, degrees in [0, 180]."""
    dot = float(np.dot(view_vector(a), view_vector(b)))
    return math.degrees(math.acos(max(-1.0, min(1.0, dot))))


def _middle_row_direction(dmap: DepthMap, zone: int) -> np.ndarray:
    """UTM direction of the ground line under the map's middle image row,
    oriented along increasing column index."""
    row = dmap.height // 2
    valid = dmap.valid_mask()[row]
    cols = np.nonzero(valid)[0]
    if cols.size < 2:
        raise PairError("middle row has fewer than 2 valid pixels")
    lats = dmap.lat[row, cols]
    lons = dmap.lon[row, cols]
    natural = np.array([utm_zone(float(lo)) for lo in lons])
    if np.any(natural != zone):
        raise PairError("middle-row points straddle UTM zones")
    utm = geo_to_utm(lats, lons, zone=zone)
    east = np.asarray(utm.easting)
    north = np.asarray(utm.northing)
    # regress (E, N) on the column index: the slope vector is the track
    # direction, oriented along the image's positive x-axis by construction
    c = cols.astype(float)
    c0 = c - c.mean()
    denom = float(c0 @ c0)
    if denom == 0.0:
        raise PairError("degenerate column spread in middle row")
    slope = np.array([float(c0 @ (east - east.mean())),
                      float(c0 @ (north - north.mean()))]) / denom
    norm = np.linalg.norm(slope)
    if norm == 0.0:
        raise PairError("middle-row ground points do not move with column index")
    return slope / norm


def track_angle_diff(map_i: DepthMap, map_j: DepthMap) -> float:
    """Angle between the two images' ground-track directions, degrees [0, 180]."""
    first_valid = np.argwhere(map_i.valid_mask())
    if first_valid.size == 0:
        raise PairError("map_i has no valid pixels")
    r0, c0 = first_valid[0]
    zone = utm_zone(float(map_i.lon[r0, c0]))
    t_i = _middle_row_direction(map_i, zone)
    t_j = _middle_row_direction(map_j, zone)
    dot = float(np.dot(t_i, t_j))
    return math.degrees(math.acos(max(-1.0, min(1.0, dot))))


def balance_pairs(pairs: list[PairRecord], cfg: BalanceConfig) -> list[PairRecord]:
    """Uniform sample of target_per_bin pairs from each view-angle bin.

    Bins are equal-width over [0, max observed alpha_v]; bins with fewer
    pairs than the target keep everything. Deterministic under cfg.seed;
    input order is preserved within the selection.
    """
    if not pairs:
        return []
    rng = np.random.default_rng(cfg.seed)
    alpha = np.array([p.alpha_v for p in pairs])
    top = float(alpha.max())
    if top == 0.0:
        edges = np.linspace(0.0, 1.0, cfg.n_bins + 1)
    else:
        edges = np.linspace(0.0, top, cfg.n_bins + 1)
    idx = np.clip(np.searchsorted(edges, alpha, side="right") - 1, 0, cfg.n_bins - 1)
    selected: list[int] = []
    for b in range(cfg.n_bins):
        members = np.flatnonzero(idx == b)
        if members.size <= cfg.target_per_bin:
            selected.extend(members.tolist())
        else:
            picks = rng.choice(members, size=cfg.target_per_bin, replace=False)
            selected.extend(sorted(picks.tolist()))
    selected.sort()
    return [pairs[k] for k in selected]


def coverage_heatmap(cams: list[RpcModel], img_dims: list[tuple[int, int]],
                     gt: GeoTransform, shape: tuple[int, int],
                     h_ref: float) -> RasterGrid:
    """Count, per grid cell center, the cameras whose projection of
    (lat, lon, h_ref) lands inside their image bounds."""
    rows, cols = shape
    rr, cc = np.meshgrid(np.arange(rows, dtype=float), np.arange(cols, dtype=float),
                         indexing="ij")
    lat, lon = pixel_to_geo(gt, rr.ravel(), cc.ravel())
    counts = np.zeros(rows * cols, dtype=np.uint16)
    for cam, (h_img, w_img) in zip(cams, img_dims):
        r, c, bad = cam._project_masked(lat, lon, np.full(lat.shape, h_ref))
        ok = ~bad & (r >= 0) & (r < h_img) & (c >= 0) & (c < w_img)
        counts += ok.astype(np.uint16)
    return RasterGrid(counts.reshape(rows, cols), gt, nodata=65535)


def largest_covered_rect(coverage: RasterGrid, n_min: int):
    """Largest axis-aligned rectangle whose minimum coverage count is >= n_min.

    Returns (row0, col0, height, width) or None. Histogram-stack algorithm,
    O(rows * cols).
    """
    ok = coverage.values >= n_min
    rows, cols = ok.shape
    best = None
    best_area = 0
    heights = np.zeros(cols, dtype=int)
    for r in range(rows):
        heights = np.where(ok[r], heights + 1, 0)
        stack: list[int] = []
        k = 0
        while k <= cols:
            cur = heights[k] if k < cols else 0
            if not stack or heights[stack[-1]] <= cur:
                stack.append(k)
                k += 1
            else:
                top = stack.pop()
                width = k if not stack else k - stack[-1] - 1
                area = int(heights[top]) * width
                if area > best_area:
                    best_area = area
                    left = 0 if not stack else stack[-1] + 1
                    best = (r - int(heights[top]) + 1, left, int(heights[top]), width)
    return best
