"""Ground-truth correspondence extraction and patch machinery.

A correspondence is declared by reading a pixel's world point from one image's
depth map, projecting it into the partner image, reading the partner's world
point there, and accepting when the two points sit within delta3d meters in
ECEF. Patch extraction crops p x p windows about projected world points and
re-anchors local affine cameras to window coordinates; rotation augmentation
is the crop-rotate-crop chain T2 * H(theta) * T1 applied to image, maps and
camera alike, every factor a rigid planar motion.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .geodesy import GeoPoint, geo_to_ecef
from .maps import INVALID_HT, DepthMap, make_depth_map
from .rpc import AffineCamera, RpcModel, affine_approx

DEFAULT_DELTA3D = 1.0   # meters
DEFAULT_PATCH = 448     # pixels


class PatchBoundsError(ValueError):
    """Requested window (or its rotated bounding box) leaves the image."""


@dataclass(frozen=True)
class Correspondence:
    row_i: float
    col_i: float
    row_j: float
    col_j: float
    world: GeoPoint
    dist3d: float


@dataclass(frozen=True)
class HomographyChain:
    """The three rigid factors of crop-rotate-crop, acting on (col, row, 1)."""

    t1: np.ndarray
    h_rot: np.ndarray
    t2: np.ndarray

    def __post_init__(self):
        for name in ("t1", "h_rot", "t2"):
            m = np.asarray(getattr(self, name), dtype=float)
            object.__setattr__(self, name, m)
            if m.shape != (3, 3) or not np.allclose(m[2], [0, 0, 1]):
                raise ValueError(f"{name} must be a planar affine homography")
            rot = m[:2, :2]
            if not np.allclose(rot @ rot.T, np.eye(2), atol=1e-10) or np.linalg.det(rot) < 0:
                raise ValueError(f"{name} must be a rigid planar motion")

    def composed(self) -> np.ndarray:
        return self.t2 @ self.h_rot @ self.t1


@dataclass
class PatchHalf:
    """One side of a patch pair: pixels, cropped map, window-frame camera."""

    image: np.ndarray
    dmap: DepthMap
    camera: AffineCamera
    chain: HomographyChain
    center: tuple[float, float]        # source-image (row, col) of the window center
    bbox_origin: tuple[int, int]       # source-image (row, col) of crop #1
    theta_deg: float


@dataclass
class PatchPair:
    i: PatchHalf
    j: PatchHalf
    world: GeoPoint
    source_ids: tuple[str, str] = ("", "")


def _project_with_mask(cam, lat, lon, h):
    """(rows, cols, ok) for either camera flavor; affine cameras never fail."""
    if isinstance(cam, RpcModel):
        rows, cols, bad = cam._project_masked(lat, lon, h)
        return rows, cols, ~bad
    rows, cols = cam.project(lat, lon, h)
    return np.asarray(rows), np.asarray(cols), np.ones(np.shape(rows), dtype=bool)


def _round_half_away(x):
    x = np.asarray(x)
    return (np.sign(x) * np.floor(np.abs(x) + 0.5)).astype(np.int64)


def extract_gt_matches(map_i: DepthMap, cam_j, map_j: DepthMap,
                       grid: int = 1, delta3d: float = DEFAULT_DELTA3D
                       ) -> list[Correspondence]:
    """True matches from image i's depth map into image j.

    Samples map_i on a pixel grid of the given stride; a sample is accepted
    when its real-valued projection lies inside [0, dim-1] in image j (so
    exported matches are always in-image; boundary noise within 1e-6 px snaps
    onto the edge) and the ECEF distance between the two maps' world points is
    strictly below delta3d. Empty results are legal.
    """
    if delta3d < 0:
        raise ValueError("delta3d must be nonnegative")
    rows = np.arange(0, map_i.height, grid)
    cols = np.arange(0, map_i.width, grid)
    rr, cc = np.meshgrid(rows, cols, indexing="ij")
    rr = rr.ravel()
    cc = cc.ravel()
    valid = map_i.valid_mask()[rr, cc]
    rr, cc = rr[valid], cc[valid]
    if rr.size == 0:
        return []
    lat_i = map_i.lat[rr, cc]
    lon_i = map_i.lon[rr, cc]
    ht_i = map_i.ht[rr, cc].astype(np.float64)

    rows_j, cols_j, ok = _project_with_mask(cam_j, lat_i, lon_i, ht_i)
    # bounds on the real-valued projection, so exported matches stay inside
    # the image; values within an epsilon of the edge are projection noise
    # and snap onto it. Rounding (half away from zero) only drives the map read.
    eps = 1e-6
    rows_j = np.where((rows_j >= -eps) & (rows_j < 0.0), 0.0, rows_j)
    cols_j = np.where((cols_j >= -eps) & (cols_j < 0.0), 0.0, cols_j)
    top_r, top_c = map_j.height - 1.0, map_j.width - 1.0
    rows_j = np.where((rows_j > top_r) & (rows_j <= top_r + eps), top_r, rows_j)
    cols_j = np.where((cols_j > top_c) & (cols_j <= top_c + eps), top_c, cols_j)
    ok &= (rows_j >= 0) & (rows_j <= top_r)
    ok &= (cols_j >= 0) & (cols_j <= top_c)
    rj = _round_half_away(np.where(ok, rows_j, 0.0))
    cj = _round_half_away(np.where(ok, cols_j, 0.0))
    keep = np.flatnonzero(ok)
    keep = keep[map_j.valid_mask()[rj[keep], cj[keep]]]
    if keep.size == 0:
        return []

    lat_j = map_j.lat[rj[keep], cj[keep]]
    lon_j = map_j.lon[rj[keep], cj[keep]]
    ht_j = map_j.ht[rj[keep], cj[keep]].astype(np.float64)
    a = np.stack(geo_to_ecef(lat_i[keep], lon_i[keep], ht_i[keep]))
    b = np.stack(geo_to_ecef(lat_j, lon_j, ht_j))
    dist = np.linalg.norm(a - b, axis=0)
    hit = dist < delta3d

    out = []
    for n in np.flatnonzero(hit):
        k = keep[n]
        out.append(Correspondence(
            row_i=float(rr[k]), col_i=float(cc[k]),
            row_j=float(rows_j[k]), col_j=float(cols_j[k]),
            world=GeoPoint(float(lat_i[k]), float(lon_i[k]), float(ht_i[k])),
            dist3d=float(dist[n]),
        ))
    return out


def _translation(d_col: float, d_row: float) -> np.ndarray:
    t = np.eye(3)
    t[0, 2] = d_col
    t[1, 2] = d_row
    return t


def _rotation_about(pivot_col: float, pivot_row: float, theta_rad: float) -> np.ndarray:
    c, s = math.cos(theta_rad), math.sin(theta_rad)
    rot = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
    return _translation(pivot_col, pivot_row) @ rot @ _translation(-pivot_col, -pivot_row)


def _bilinear_image(img: np.ndarray, rows, cols) -> np.ndarray:
    h, w = img.shape
    r0 = np.clip(np.floor(rows).astype(int), 0, h - 2)
    c0 = np.clip(np.floor(cols).astype(int), 0, w - 2)
    fr = np.clip(rows - r0, 0.0, 1.0)
    fc = np.clip(cols - c0, 0.0, 1.0)
    v00 = img[r0, c0]
    v01 = img[r0, c0 + 1]
    v10 = img[r0 + 1, c0]
    v11 = img[r0 + 1, c0 + 1]
    return v00 + fc * (v01 - v00) + fr * (v10 - v00) + (fr * fc) * (v00 + v11 - v01 - v10)


def rotate_augment(img: np.ndarray, dmap: DepthMap, cam: AffineCamera,
                   center_row: float, center_col: float, p: int,
                   theta_deg: float) -> PatchHalf:
    """Crop-rotate-crop: extract a p x p window rotated by theta about its
    center, with image, depth-map planes and camera transformed consistently.

    Steps: (1) crop the rotated window's bounding box (camera gains T1);
    (2) rotate about the box center (camera gains H(theta)), intensity
    bilinear, map planes nearest-neighbor; (3) crop the now axis-aligned
    p x p window (camera gains T2). The world center lands exactly at patch
    coordinate (p/2, p/2). Steps 2 and 3 are evaluated as one resampling pass
    over the final grid; the camera algebra keeps all three factors.
    """
    if p % 2 != 0:
        raise ValueError("patch size must be even")
    theta = math.radians(theta_deg)
    half = p / 2.0
    corners = np.array([[-half, -half], [half, -half], [half, half], [-half, half]])
    rot = np.array([[math.cos(theta), -math.sin(theta)],
                    [math.sin(theta), math.cos(theta)]])
    pts = corners @ rot.T + np.array([center_col, center_row])
    # one pixel of margin keeps the resampling stencils inside the crop
    bb_c0 = int(math.floor(pts[:, 0].min())) - 1
    bb_r0 = int(math.floor(pts[:, 1].min())) - 1
    bb_c1 = int(math.ceil(pts[:, 0].max())) + 2
    bb_r1 = int(math.ceil(pts[:, 1].max())) + 2
    h, w = img.shape
    if bb_r0 < 0 or bb_c0 < 0 or bb_r1 > h or bb_c1 > w:
        raise PatchBoundsError(
            f"rotated window bbox [{bb_r0}:{bb_r1}, {bb_c0}:{bb_c1}] leaves the "
            f"{h}x{w} image"
        )

    t1 = _translation(-bb_c0, -bb_r0)
    pivot_col = (bb_c1 - bb_c0 - 1) / 2.0
    pivot_row = (bb_r1 - bb_r0 - 1) / 2.0
    h_rot = _rotation_about(pivot_col, pivot_row, -theta)
    center_shifted = np.array([center_col - bb_c0, center_row - bb_r0, 1.0])
    center_rotated = h_rot @ center_shifted
    t2 = _translation(half - center_rotated[0], half - center_rotated[1])
    chain = HomographyChain(t1=t1, h_rot=h_rot, t2=t2)

    m = chain.composed()
    m_inv = np.linalg.inv(m)
    uu, vv = np.meshgrid(np.arange(p, dtype=float), np.arange(p, dtype=float),
                         indexing="xy")  # uu = col, vv = row in patch coords
    src = m_inv @ np.stack([uu.ravel(), vv.ravel(), np.ones(p * p)])
    src_col = src[0].reshape(p, p)
    src_row = src[1].reshape(p, p)

    patch = _bilinear_image(img, src_row, src_col)
    # map planes are categorical-ish (heights across building edges must not
    # blend), so nearest-neighbor
    nr = np.rint(src_row).astype(int)
    nc = np.rint(src_col).astype(int)
    inside = (nr >= 0) & (nr < h) & (nc >= 0) & (nc < w)
    nr_c = np.clip(nr, 0, h - 1)
    nc_c = np.clip(nc, 0, w - 1)
    lat = np.where(inside, dmap.lat[nr_c, nc_c], np.nan)
    lon = np.where(inside, dmap.lon[nr_c, nc_c], np.nan)
    ht = np.where(inside, dmap.ht[nr_c, nc_c], np.float32(INVALID_HT))
    patch_map = make_depth_map(lat, lon, ht)

    return PatchHalf(
        image=patch,
        dmap=patch_map,
        camera=cam.compose_pixel_map(m),
        chain=chain,
        center=(center_row, center_col),
        bbox_origin=(bb_r0, bb_c0),
        theta_deg=theta_deg,
    )


def crop_patch(img: np.ndarray, dmap: DepthMap, cam: AffineCamera,
               center_row: float, center_col: float, p: int) -> PatchHalf:
    """Plain centered crop: rotate_augment at zero rotation."""
    return rotate_augment(img, dmap, cam, center_row, center_col, p, 0.0)


def extract_patch_pair(img_i: np.ndarray, img_j: np.ndarray,
                       cam_i: RpcModel, cam_j: RpcModel,
                       map_i: DepthMap, map_j: DepthMap,
                       world: GeoPoint, p: int,
                       theta_i: float = 0.0, theta_j: float = 0.0,
                       source_ids=("", "")) -> PatchPair:
    """Both halves of a training/testing patch centered on one world point."""
    acam_i = affine_approx(cam_i, world)
    acam_j = affine_approx(cam_j, world)
    r_i, c_i = cam_i.project(world.lat, world.lon, world.h)
    r_j, c_j = cam_j.project(world.lat, world.lon, world.h)
    half_i = rotate_augment(img_i, map_i, acam_i, r_i, c_i, p, theta_i)
    half_j = rotate_augment(img_j, map_j, acam_j, r_j, c_j, p, theta_j)
    return PatchPair(i=half_i, j=half_j, world=world, source_ids=tuple(source_ids))


def sample_world_points_train(dsm, rng, n: int):
    """Random valid DSM cells as world points (roof heights)."""
    from .geodesy import pixel_to_geo

    mask = dsm.valid_mask()
    rows, cols = np.nonzero(mask)
    if rows.size == 0:
        raise PatchBoundsError("DSM has no valid cells to sample")
    picks = rng.integers(0, rows.size, size=n)
    out = []
    for k in picks:
        r, c = int(rows[k]), int(cols[k])
        lat, lon = pixel_to_geo(dsm.geotransform, float(r), float(c))
        out.append(GeoPoint(float(lat), float(lon), float(dsm.values[r, c])))
    return out


def sample_world_points_grid(dsm, stride: int):
    """Deterministic DSM cell grid at the given stride (valid cells only)."""
    from .geodesy import pixel_to_geo

    if stride <= 0:
        raise ValueError("stride must be positive")
    mask = dsm.valid_mask()
    out = []
    for r in range(0, dsm.height, stride):
        for c in range(0, dsm.width, stride):
            if mask[r, c]:
                lat, lon = pixel_to_geo(dsm.geotransform, float(r), float(c))
                out.append(GeoPoint(float(lat), float(lon), float(dsm.values[r, c])))
    return out


def extract_patch_pair_train(dsm, img_i, img_j, cam_i, cam_j, map_i, map_j,
                             p: int, rng, max_tries: int = 50,
                             theta_j: float = 0.0,
                             source_ids=("", "")) -> PatchPair:
    """Training sample: a random valid DSM point whose windows stay in-bounds
    in both images; out-of-bounds draws are rejected and redrawn."""
    for _ in range(max_tries):
        world = sample_world_points_train(dsm, rng, 1)[0]
        try:
            return extract_patch_pair(img_i, img_j, cam_i, cam_j, map_i, map_j,
                                      world, p, theta_j=theta_j,
                                      source_ids=source_ids)
        except PatchBoundsError:
            continue
    raise PatchBoundsError(f"no in-bounds sample after {max_tries} draws")


def extract_patch_grid_test(dsm, img_i, img_j, cam_i, cam_j, map_i, map_j,
                            p: int, stride: int,
                            source_ids=("", "")) -> list[PatchPair]:
    """Test-time patches on a deterministic world grid; out-of-bounds grid
    points are skipped. Per-pair match sets can be concatenated downstream."""
    pairs = []
    for world in sample_world_points_grid(dsm, stride):
        try:
            pairs.append(extract_patch_pair(img_i, img_j, cam_i, cam_j,
                                            map_i, map_j, world, p,
                                            source_ids=source_ids))
        except PatchBoundsError:
            continue
    return pairs


def save_patch_half(half: PatchHalf, basename, source_id: str = "") -> None:
    """Patch intensity + map triple + JSON provenance sidecar."""
    from .geodesy import GeoTransform, RasterGrid
    from .ingest.rasters import write_grd
    from .maps import write_depth_map

    base = Path(basename)
    gt = GeoTransform(0.0, 0.0, 1.0, 1.0)
    write_grd(RasterGrid(half.image.astype(np.float32), gt), base.parent / f"{base.name}.grd")
    write_depth_map(half.dmap, base)
    sidecar = {
        "source_id": source_id,
        "theta_deg": half.theta_deg,
        "center_row": half.center[0],
        "center_col": half.center[1],
        "bbox_origin": list(half.bbox_origin),
        "camera": {
            "linear": half.camera.linear.tolist(),
            "bias": half.camera.bias.tolist(),
            "anchor": [half.camera.anchor.lat, half.camera.anchor.lon,
                       half.camera.anchor.h],
        },
    }
    (base.parent / f"{base.name}.json").write_text(json.dumps(sidecar, indent=2))
