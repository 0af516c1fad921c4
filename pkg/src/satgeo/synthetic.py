"""Synthetic cameras and box-world scenes for tests, demos and benchmarks.

Real WorldView imagery cannot ship with the toolkit, so every end-to-end path
is exercised on generated scenes: a flat ground plane with rectangular "boxes"
(buildings) viewed by configurable synthetic RPC cameras whose obliquity,
extent and nonlinearity are under test control.
"""

from __future__ import annotations

import numpy as np

from .geodesy import GeoTransform, RasterGrid, meters_per_degree
from .rpc import RpcModel


def random_rpc_model(rng, img_size=(2048, 2048), cubic: float = 0.01,
                     lat0: float | None = None, lon0: float | None = None) -> RpcModel:
    """A well-conditioned random RPC camera.

    The linear terms dominate (rows track latitude, columns longitude, with
    random mixing and an oblique height term); `cubic` scales the higher-order
    coefficients. Denominators stay near 1 over the normalized unit box.
    """
    h_img, w_img = img_size
    lat_off = float(rng.uniform(-60, 60)) if lat0 is None else lat0
    lon_off = float(rng.uniform(-170, 170)) if lon0 is None else lon0

    def higher_order(scale):
        c = rng.normal(scale=scale, size=20)
        c[:4] = 0.0
        return c

    mix = rng.normal(scale=0.15, size=(2, 2))
    line_num = higher_order(cubic)
    line_num[1] = mix[0, 1]
    line_num[2] = -1.0 + mix[0, 0]          # row tracks -latitude
    line_num[3] = rng.uniform(-0.3, 0.3)    # oblique height term
    samp_num = higher_order(cubic)
    samp_num[1] = 1.0 + mix[1, 1]           # col tracks +longitude
    samp_num[2] = mix[1, 0]
    samp_num[3] = rng.uniform(-0.3, 0.3)

    line_den = higher_order(cubic * 0.3)
    line_den[0] = 1.0
    samp_den = higher_order(cubic * 0.3)
    samp_den[0] = 1.0

    return RpcModel(
        line_num=line_num, line_den=line_den,
        samp_num=samp_num, samp_den=samp_den,
        line_off=h_img / 2, line_scale=h_img / 2,
        samp_off=w_img / 2, samp_scale=w_img / 2,
        lat_off=lat_off, lat_scale=float(rng.uniform(0.02, 0.08)),
        lon_off=lon_off, lon_scale=float(rng.uniform(0.02, 0.08)),
        h_off=float(rng.uniform(-50, 300)), h_scale=float(rng.uniform(400, 900)),
    )


def affine_rpc_model(rng, img_size=(2048, 2048)) -> RpcModel:
    """An RPC model whose rational polynomials are exactly affine."""
    return random_rpc_model(rng, img_size=img_size, cubic=0.0)


def grid_camera(gt: GeoTransform, grid_shape, img_size,
                parallax_row_per_m: float = 0.0,
                parallax_col_per_m: float = 0.0,
                h_center: float = 0.0,
                h_scale: float = 50.0,
                cubic: float = 0.0,
                rng=None,
                pixel_window=None) -> RpcModel:
    """A camera that maps a raster's ground footprint onto the image.

    Cell centers land on pixel centers: with pixel_window (r0, r1, c0, c1)
    (default the full image), grid row r maps to image row
    r0 + (r + 0.5) * (r1 - r0) / rows - 0.5 at the reference height.
    parallax_*_per_m set the pixel drift per meter of height (the effective
    off-nadir obliquity); cubic adds small higher-order terms when an exactly
    affine model is not wanted.
    """
    rows, cols = grid_shape
    h_img, w_img = img_size
    r0, r1, c0, c1 = pixel_window or (0, h_img, 0, w_img)
    lat_top, lon_left = gt.origin_lat, gt.origin_lon
    lat_bot = lat_top - rows * gt.pixel_size_lat
    lon_right = lon_left + cols * gt.pixel_size_lon
    lat_off = (lat_top + lat_bot) / 2
    lon_off = (lon_left + lon_right) / 2
    lat_scale = (lat_top - lat_bot) / 2
    lon_scale = (lon_right - lon_left) / 2

    line_off = (r0 + r1 - 1) / 2.0
    line_scale = (r1 - r0) / 2.0
    samp_off = (c0 + c1 - 1) / 2.0
    samp_scale = (c1 - c0) / 2.0

    line_num = np.zeros(20)
    samp_num = np.zeros(20)
    line_den = np.zeros(20)
    samp_den = np.zeros(20)
    line_den[0] = 1.0
    samp_den[0] = 1.0
    line_num[2] = -1.0
    samp_num[1] = 1.0
    line_num[3] = parallax_row_per_m * h_scale / line_scale
    samp_num[3] = parallax_col_per_m * h_scale / samp_scale
    if cubic > 0.0 and rng is not None:
        for c in (line_num, samp_num):
            extra = rng.normal(scale=cubic, size=20)
            extra[:4] = 0.0
            c += extra
    return RpcModel(
        line_num=line_num, line_den=line_den,
        samp_num=samp_num, samp_den=samp_den,
        line_off=line_off, line_scale=line_scale,
        samp_off=samp_off, samp_scale=samp_scale,
        lat_off=lat_off, lat_scale=lat_scale,
        lon_off=lon_off, lon_scale=lon_scale,
        h_off=h_center, h_scale=h_scale,
    )


def box_world(rng, size: int = 64, n_boxes: int = 3, ground: float = 20.0,
              box_height_range=(6.0, 14.0), lat0: float = 32.8, lon0: float = -81.7,
              cell_m: float = 1.0, water_fraction: float = 0.0):
    """Flat ground with rectangular buildings: DSM, DEM and water mask grids."""
    m_lat, m_lon = meters_per_degree(lat0)
    gt = GeoTransform(lon0, lat0, cell_m / m_lon, cell_m / m_lat)
    dem_vals = np.full((size, size), ground, dtype=np.float64)
    dsm_vals = dem_vals.copy()
    for _ in range(n_boxes):
        h = int(rng.integers(4, max(5, size // 4)))
        w = int(rng.integers(4, max(5, size // 4)))
        r0 = int(rng.integers(1, size - h - 1))
        c0 = int(rng.integers(1, size - w - 1))
        dsm_vals[r0 : r0 + h, c0 : c0 + w] = ground + float(rng.uniform(*box_height_range))
    water_vals = np.zeros((size, size), dtype=np.uint16)
    if water_fraction > 0.0:
        n_rows = int(size * water_fraction)
        if n_rows:
            water_vals[-n_rows:, :] = 1
    dsm = RasterGrid(dsm_vals, gt, float("nan"))
    dem = RasterGrid(dem_vals, gt, float("nan"))
    water = RasterGrid(water_vals, gt, 65535)
    return dsm, dem, water


def box_scene(rng, size: int = 64, n_boxes: int = 3, ground: float = 20.0,
              obliquity=(0.0, 0.6), img_size=None, cubic: float = 0.0):
    """A complete two-camera stereo scene over a box world.

    Camera 0 is near-nadir; camera 1 drifts by `obliquity` pixels per meter of
    height in (row, col). Returns (dsm, dem, water, cam_nadir, cam_oblique).
    """
    img_size = img_size or (size, size)
    dsm, dem, water = box_world(rng, size=size, n_boxes=n_boxes, ground=ground)
    h_mid = ground + 5.0
    cam_a = grid_camera(dsm.geotransform, dsm.values.shape, img_size,
                        h_center=h_mid, cubic=cubic, rng=rng)
    cam_b = grid_camera(dsm.geotransform, dsm.values.shape, img_size,
                        parallax_row_per_m=obliquity[0],
                        parallax_col_per_m=obliquity[1],
                        h_center=h_mid, cubic=cubic, rng=rng)
    return dsm, dem, water, cam_a, cam_b


def write_demo_scene(root, seed: int = 0, size: int = 64, img_size=None,
                     n_gcps: int = 3, fmt: str = ".grd") -> dict:
    """Materialize a complete synthetic tile on disk in the standard layout:

        root/
          IMD/<image>.IMD
          aoi_rect_piece_0/
            DSM_Cropped_Images/<image>{fmt,.RPB}
            Depth/                     (left empty; the depthify command fills it)
            gcp/gcps.csv
            gcp/annotations/
            aoi_rect_piece_0_DSM-wgs84_unpadded<fmt>
            aoi_rect_piece_0_DEM<fmt>
            aoi_rect_piece_0_WATER<fmt>

    Returns scene metadata (image ids, dims, paths).
    """
    from pathlib import Path

    from .depthify import depthify_sequential
    from .geodesy import GeoPoint, pixel_to_geo
    from .ingest.rasters import write_raster
    from .ingest.rpb import write_rpb
    from .ingest.tables import GcpRecord, write_gcps

    rng = np.random.default_rng(seed)
    img_size = img_size or (size, size)
    dsm, dem, water = box_world(rng, size=size, n_boxes=3, ground=20.0)
    h_mid = 25.0
    cams = {
        "IMG_A": grid_camera(dsm.geotransform, dsm.values.shape, img_size,
                             h_center=h_mid),
        "IMG_B": grid_camera(dsm.geotransform, dsm.values.shape, img_size,
                             parallax_row_per_m=0.15, parallax_col_per_m=0.45,
                             h_center=h_mid),
    }
    angles = {"IMG_A": (164.2, 81.0), "IMG_B": (295.4, 62.5)}

    root = Path(root)
    tile = root / "aoi_rect_piece_0"
    img_dir = tile / "DSM_Cropped_Images"
    depth_dir = tile / "Depth"
    imd_dir = root / "IMD"
    for d in (img_dir, depth_dir, imd_dir, tile / "gcp" / "annotations"):
        d.mkdir(parents=True, exist_ok=True)

    write_raster(dsm, tile / f"aoi_rect_piece_0_DSM-wgs84_unpadded{fmt}")
    write_raster(dem, tile / f"aoi_rect_piece_0_DEM{fmt}")
    write_raster(water, tile / f"aoi_rect_piece_0_WATER{fmt}")

    for image_id, cam in cams.items():
        img = shaded_image(dsm, img_size, cam, dem)
        write_raster(RasterGrid(img.astype(np.float32), dsm.geotransform),
                     img_dir / f"{image_id}{fmt}")
        write_rpb(cam.to_rpb(), img_dir / f"{image_id}.RPB")
        az, el = angles[image_id]
        (imd_dir / f"{image_id}.IMD").write_text(
            f"meanSatAz = {az};\nmeanSatEl = {el};\n"
            "meanSunAz = 155.3;\nmeanSunEl = 48.2;\n"
            "firstLineTime = 2015-10-05T16:01:09.000000Z;\n"
        )

    gcps = []
    positions = [(size // 4, size // 4), (size // 2, size // 2),
                 (3 * size // 4, size // 3)]
    for k in range(min(n_gcps, len(positions))):
        r, c = positions[k]
        lat, lon = pixel_to_geo(dsm.geotransform, float(r), float(c))
        gcps.append(GcpRecord(f"G{k}", GeoPoint(float(lat), float(lon),
                                                float(dsm.values[r, c]))))
    write_gcps(gcps, tile / "gcp" / "gcps.csv")

    return {
        "tile_dir": str(tile),
        "imd_dir": str(imd_dir),
        "image_ids": sorted(cams.keys()),
        "img_size": img_size,
        "dsm_path": str(tile / f"aoi_rect_piece_0_DSM-wgs84_unpadded{fmt}"),
        "dem_path": str(tile / f"aoi_rect_piece_0_DEM{fmt}"),
        "water_path": str(tile / f"aoi_rect_piece_0_WATER{fmt}"),
        "gcps_path": str(tile / "gcp" / "gcps.csv"),
    }


def shaded_image(dsm: RasterGrid, img_size, cam: RpcModel, dem: RasterGrid,
                 dz: float = 0.5) -> np.ndarray:
    """Render a simple grayscale "satellite image" for a scene: height-shaded
    surface through the camera, so matched patches have real texture."""
    from .depthify import depthify_sequential

    dmap = depthify_sequential(img_size, cam, dsm, dem,
                               water=None, dz=dz)
    vals = dmap.ht.astype(np.float64)
    valid = dmap.valid_mask()
    lo = float(vals[valid].min()) if valid.any() else 0.0
    hi = float(vals[valid].max()) if valid.any() else 1.0
    span = max(hi - lo, 1e-9)
    img = np.zeros(img_size, dtype=np.float64)
    img[valid] = 40.0 + 200.0 * (vals[valid] - lo) / span
    # deterministic speckle so flat areas still carry texture
    noise_rng = np.random.default_rng(1234)
    img += noise_rng.normal(scale=3.0, size=img_size)
    return np.clip(img, 0, 255)
