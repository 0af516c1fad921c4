"""Accuracy assessment against ground control points.

Three error measures per annotated GCP: absolute 3-D error between the map's
world point and the surveyed point, relative 3-D error between two images'
map points for the same GCP, and relative 2-D error between an annotation and
the projection of the partner image's map point. All 3-D distances are ECEF
meters. A Monte-Carlo 70/30 split over GCPs estimates the constant shift that
explains the absolute errors; the shift can then be subtracted from DSMs,
depth maps, and RPC offsets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geodesy import (
    GeoPoint,
    GeoTransform,
    RasterGrid,
    ecef_jacobian,
    geo_to_ecef,
)
from .ingest.tables import AnnotationRecord, GcpRecord, STATUS_ANNOTATED
from .maps import DepthMap, MapBoundsError
from .rpc import RpcDomainError, RpcModel


class GcpAssessError(ValueError):
    """Too few GCPs or inconsistent annotation references."""


@dataclass(frozen=True)
class EcefShift:
    dx: float
    dy: float
    dz: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.dx, self.dy, self.dz)):
            raise GcpAssessError("shift components must be finite")

    def vector(self) -> np.ndarray:
        return np.array([self.dx, self.dy, self.dz])


@dataclass
class GcpErrorReport:
    abs3d: list[tuple[str, str, float]]                 # (gcp, image, meters)
    rel3d: list[tuple[str, str, str, float]]            # (gcp, image_i, image_j, meters)
    rel2d: list[tuple[str, str, str, float]]            # (gcp, image_i, image_j, px)
    abs_vectors: list[tuple[str, str, np.ndarray]]      # per-observation ECEF error
    skipped: list[tuple[str, str, str]]                 # (gcp, image, reason)

    def summary(self) -> dict[str, dict[str, float]]:
        out = {}
        for name, vals in (
            ("abs3d", [v for *_, v in self.abs3d]),
            ("rel3d", [v for *_, v in self.rel3d]),
            ("rel2d", [v for *_, v in self.rel2d]),
        ):
            if vals:
                arr = np.array(vals)
                out[name] = {
                    "mean": float(arr.mean()),
                    "median": float(np.median(arr)),
                    "std": float(arr.std()),
                    "count": int(arr.size),
                }
            else:
                out[name] = {"mean": float("nan"), "median": float("nan"),
                             "std": float("nan"), "count": 0}
        return out


def gcp_errors(gcps: list[GcpRecord], annotations: list[AnnotationRecord],
               maps: dict[str, DepthMap], cams: dict[str, RpcModel],
               ) -> GcpErrorReport:
    """All three error measures over annotated (GCP, image) observations.

    Annotations whose pixel is invalid in the image's map are reported in
    `skipped` and excluded from every aggregate. Pairs are evaluated in both
    directions for the 2-D measure (its definition is asymmetric).
    """
    gcp_by_id = {g.gcp_id: g for g in gcps}
    per_gcp: dict[str, list[tuple[str, AnnotationRecord, GeoPoint]]] = {}
    report = GcpErrorReport([], [], [], [], [])
    for ann in annotations:
        if ann.status != STATUS_ANNOTATED:
            continue
        if ann.gcp_id not in gcp_by_id:
            raise GcpAssessError(f"annotation references unknown GCP {ann.gcp_id!r}")
        if ann.image_id not in maps:
            raise GcpAssessError(f"annotation references unknown image {ann.image_id!r}")
        dmap = maps[ann.image_id]
        try:
            world = dmap.lookup(ann.row, ann.col)
        except MapBoundsError:
            report.skipped.append((ann.gcp_id, ann.image_id, "outside map"))
            continue
        if world is None:
            report.skipped.append((ann.gcp_id, ann.image_id, "invalid map pixel"))
            continue
        per_gcp.setdefault(ann.gcp_id, []).append((ann.image_id, ann, world))

    for gcp_id, entries in sorted(per_gcp.items()):
        truth = gcp_by_id[gcp_id].position
        t_ecef = np.array(geo_to_ecef(truth.lat, truth.lon, truth.h))
        for image_id, ann, world in entries:
            w_ecef = np.array(geo_to_ecef(world.lat, world.lon, world.h))
            err = w_ecef - t_ecef
            report.abs3d.append((gcp_id, image_id, float(np.linalg.norm(err))))
            report.abs_vectors.append((gcp_id, image_id, err))
        for a in range(len(entries)):
            for b in range(len(entries)):
                if a == b:
                    continue
                img_i, ann_i, world_i = entries[a]
                img_j, ann_j, world_j = entries[b]
                if a < b:
                    e_i = np.array(geo_to_ecef(world_i.lat, world_i.lon, world_i.h))
                    e_j = np.array(geo_to_ecef(world_j.lat, world_j.lon, world_j.h))
                    report.rel3d.append(
                        (gcp_id, img_i, img_j, float(np.linalg.norm(e_i - e_j)))
                    )
                cam_j = cams.get(img_j)
                if cam_j is None:
                    continue
                try:
                    pr, pc = cam_j.project(world_i.lat, world_i.lon, world_i.h)
                except RpcDomainError:
                    report.skipped.append((gcp_id, img_j, "projection outside model"))
                    continue
                report.rel2d.append(
                    (gcp_id, img_i, img_j,
                     float(math.hypot(ann_j.row - pr, ann_j.col - pc)))
                )
    return report


def monte_carlo_shift(per_observation_errors: list[tuple[str, np.ndarray]],
                      n_sims: int = 1000, seed: int = 0,
                      train_fraction: float = 0.7):
    """Estimate the constant ECEF shift by repeated 70/30 GCP splits.

    per_observation_errors holds (gcp_id, ECEF error 3-vector) per annotated
    observation; splits happen at the GCP level so test GCPs never share
    observations with training. Returns (all-data EcefShift, stats dict with
    mean/std of corrected and uncorrected test error over simulations).
    """
    if n_sims < 1:
        raise GcpAssessError("need at least one simulation")
    gcp_ids = sorted({g for g, _ in per_observation_errors})
    if len(gcp_ids) < 4:
        raise GcpAssessError(f"need >= 4 GCPs, got {len(gcp_ids)}")
    rng = np.random.default_rng(seed)
    by_gcp: dict[str, list[np.ndarray]] = {}
    for g, e in per_observation_errors:
        by_gcp.setdefault(g, []).append(np.asarray(e, dtype=float))

    n_train = min(len(gcp_ids) - 1, max(1, round(train_fraction * len(gcp_ids))))
    corrected = np.zeros(n_sims)
    uncorrected = np.zeros(n_sims)
    for s in range(n_sims):
        perm = rng.permutation(len(gcp_ids))
        train_ids = {gcp_ids[k] for k in perm[:n_train]}
        train = np.array([e for g in train_ids for e in by_gcp[g]])
        test = np.array([e for g in gcp_ids if g not in train_ids for e in by_gcp[g]])
        shift = train.mean(axis=0)
        uncorrected[s] = float(np.linalg.norm(test, axis=1).mean())
        corrected[s] = float(np.linalg.norm(test - shift, axis=1).mean())

    all_errors = np.array([e for _, e in per_observation_errors])
    all_shift = all_errors.mean(axis=0)
    stats = {
        "uncorrected_mean": float(uncorrected.mean()),
        "uncorrected_std": float(uncorrected.std()),
        "corrected_mean": float(corrected.mean()),
        "corrected_std": float(corrected.std()),
        "n_sims": n_sims,
    }
    return EcefShift(*[float(v) for v in all_shift]), stats


def shift_to_geodetic(shift: EcefShift, tile_center: GeoPoint) -> tuple[float, float, float]:
    """Convert an ECEF shift to (d_lat, d_lon, d_h) by linearizing at the tile
    center; sub-millimeter error for tiles up to a few kilometers."""
    jac = ecef_jacobian(tile_center)
    d = np.linalg.solve(jac, shift.vector())
    return float(d[0]), float(d[1]), float(d[2])


def apply_shift_to_raster(dsm: RasterGrid, shift: EcefShift,
                          tile_center: GeoPoint) -> RasterGrid:
    """Corrected DSM: geotransform moves by the horizontal deltas, heights by
    the vertical one (nodata cells untouched)."""
    d_lat, d_lon, d_h = shift_to_geodetic(shift, tile_center)
    gt = dsm.geotransform
    new_gt = GeoTransform(gt.origin_lon - d_lon, gt.origin_lat - d_lat,
                          gt.pixel_size_lon, gt.pixel_size_lat)
    values = dsm.values.astype(dsm.values.dtype, copy=True)
    mask = dsm.valid_mask()
    values[mask] = values[mask] - np.asarray(d_h, dtype=values.dtype)
    return RasterGrid(values, new_gt, dsm.nodata)


def apply_shift_to_map(dmap: DepthMap, shift: EcefShift,
                       tile_center: GeoPoint) -> DepthMap:
    """Corrected depth map: subtract the geodetic deltas from all planes."""
    d_lat, d_lon, d_h = shift_to_geodetic(shift, tile_center)
    valid = dmap.valid_mask()
    lat = dmap.lat.copy()
    lon = dmap.lon.copy()
    ht = dmap.ht.copy()
    lat[valid] -= d_lat
    lon[valid] -= d_lon
    ht[valid] -= np.float32(d_h)
    return DepthMap(lat, lon, ht)


def apply_shift_to_rpc(cam: RpcModel, shift: EcefShift,
                       tile_center: GeoPoint) -> RpcModel:
    """Corrected camera: subtract the geodetic deltas from the world offsets."""
    d_lat, d_lon, d_h = shift_to_geodetic(shift, tile_center)
    return RpcModel(
        line_num=cam.line_num, line_den=cam.line_den,
        samp_num=cam.samp_num, samp_den=cam.samp_den,
        line_off=cam.line_off, line_scale=cam.line_scale,
        samp_off=cam.samp_off, samp_scale=cam.samp_scale,
        lat_off=cam.lat_off - d_lat, lat_scale=cam.lat_scale,
        lon_off=cam.lon_off - d_lon, lon_scale=cam.lon_scale,
        h_off=cam.h_off - d_h, h_scale=cam.h_scale,
    )
