"""Command-line surface for the pipeline.

Every subcommand is a thin adapter over one library operation. Numeric
defaults are the module constants, shown in --help. Exit codes: 0 success,
1 data/computation error (with a machine-parseable ``error: ...`` line on
stderr), 2 usage error. ``--seed`` makes every randomized command reproducible.
"""

from __future__ import annotations

import json
import logging
import sys
from pathlib import Path

import click
import numpy as np

from . import alignment, correspondence, depthify as depthify_mod, gcp as gcp_mod
from . import metrics as metrics_mod, pairs as pairs_mod
from .geodesy import GeodesyError, GeoPoint, GeoTransform, pixel_to_geo
from .ingest.imd import ImdParseError, read_imd
from .ingest.rasters import RasterFormatError, read_raster, write_raster
from .ingest.rpb import RpbParseError, read_rpb
from .ingest.tables import (
    MatchRecord,
    TableFormatError,
    read_annotations,
    read_biases,
    read_gcps,
    read_matches,
    read_pairs,
    write_biases,
    write_matches,
    write_pairs,
)
from .maps import MapConsistencyError, read_depth_map, write_depth_map
from .rpc import (
    AffineFundamental,
    DegenerateCameraError,
    RpcConvergenceError,
    RpcDomainError,
    RpcModel,
    affine_approx,
)

_DATA_ERRORS = (
    GeodesyError,
    RpbParseError,
    ImdParseError,
    TableFormatError,
    RasterFormatError,
    MapConsistencyError,
    RpcDomainError,
    RpcConvergenceError,
    DegenerateCameraError,
    depthify_mod.DepthifyError,
    alignment.AlignmentError,
    metrics_mod.MetricError,
    pairs_mod.PairError,
    gcp_mod.GcpAssessError,
    correspondence.PatchBoundsError,
    FileNotFoundError,
    ValueError,
)


def _load_config(path: str | None) -> dict:
    """Flat TOML-style config: ``[section]`` headers and ``key = value`` lines
    become click's default map (CLI flags override)."""
    if not path:
        return {}
    out: dict[str, dict] = {}
    section = None
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            out.setdefault(section, {})
            continue
        if "=" not in line:
            raise click.UsageError(f"{path}:{lineno}: expected key = value")
        key, _, value = line.partition("=")
        key = key.strip().replace("-", "_")
        value = value.strip().strip('"')
        for cast in (int, float):
            try:
                value = cast(value)
                break
            except ValueError:
                continue
        else:
            if value in ("true", "false"):
                value = value == "true"
        target = out.setdefault(section, {}) if section else out
        target[key] = value
    return out


class _Cli(click.Group):
    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except click.ClickException:
            raise
        except _DATA_ERRORS as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(1)


@click.group(cls=_Cli)
@click.option("--config", type=click.Path(exists=True), default=None,
              help="TOML-style config file; CLI flags override its values.")
@click.option("--log-level", default="warning", show_default=True,
              type=click.Choice(["debug", "info", "warning", "error"]))
@click.pass_context
def main(ctx, config, log_level):
    """Satellite photogrammetry toolkit."""
    logging.basicConfig(level=getattr(logging, log_level.upper()))
    ctx.default_map = _load_config(config)


def _read_cam(path) -> RpcModel:
    return RpcModel.from_rpb(read_rpb(path))


@main.command("depthify")
@click.option("--rpb", required=True, type=click.Path(exists=True))
@click.option("--dsm", required=True, type=click.Path(exists=True))
@click.option("--dem", required=True, type=click.Path(exists=True))
@click.option("--water", type=click.Path(exists=True), default=None,
              help="Water mask raster; omitted means all land.")
@click.option("--rows", required=True, type=int, help="Output image height.")
@click.option("--cols", required=True, type=int, help="Output image width.")
@click.option("--dz", default=depthify_mod.DEFAULT_DZ, show_default=True, type=float)
@click.option("--mode", default="tiled", show_default=True,
              type=click.Choice(["sequential", "tiled"]))
@click.option("--block", default=depthify_mod.DEFAULT_BLOCK, show_default=True, type=int)
@click.option("--buffer-m", default=depthify_mod.DEFAULT_BUFFER_M, show_default=True,
              type=float)
@click.option("--workers", default=depthify_mod.DEFAULT_WORKERS, show_default=True,
              type=int)
@click.option("--out", required=True, help="Output basename for the map triple.")
def depthify_cmd(rpb, dsm, dem, water, rows, cols, dz, mode, block, buffer_m,
                 workers, out):
    """Generate the per-pixel world map for one satellite image."""
    cam = _read_cam(rpb)
    dsm_g = read_raster(dsm)
    dem_g = read_raster(dem)
    water_g = read_raster(water) if water else None
    if mode == "sequential":
        dmap = depthify_mod.depthify_sequential((rows, cols), cam, dsm_g, dem_g,
                                                water_g, dz=dz)
    else:
        cfg = depthify_mod.DepthifyConfig(dz=dz, block=block, buffer_m=buffer_m,
                                          workers=workers)
        dmap = depthify_mod.depthify_tiled((rows, cols), cam, dsm_g, dem_g,
                                           water_g, cfg)
    write_depth_map(dmap, out, geotransform=dsm_g.geotransform)
    valid = int(dmap.valid_mask().sum())
    click.echo(f"wrote {out}_lat/_lon/_depth ({valid}/{rows * cols} valid pixels)")


@main.command("extract-matches")
@click.option("--map-i", "map_i", required=True, help="Depth-map basename, image i.")
@click.option("--map-j", "map_j", required=True, help="Depth-map basename, image j.")
@click.option("--rpb-j", "rpb_j", required=True, type=click.Path(exists=True))
@click.option("--grid", default=1, show_default=True, type=int,
              help="Pixel stride of the sampling grid.")
@click.option("--delta3d", default=correspondence.DEFAULT_DELTA3D, show_default=True,
              type=float)
@click.option("--out", required=True, type=click.Path())
def extract_matches_cmd(map_i, map_j, rpb_j, grid, delta3d, out):
    """Extract ground-truth correspondences between two images."""
    dmap_i = read_depth_map(map_i)
    dmap_j = read_depth_map(map_j)
    cam_j = _read_cam(rpb_j)
    matches = correspondence.extract_gt_matches(dmap_i, cam_j, dmap_j,
                                                grid=grid, delta3d=delta3d)
    write_matches(
        [MatchRecord(m.row_i, m.col_i, m.row_j, m.col_j) for m in matches], out
    )
    click.echo(f"wrote {len(matches)} matches to {out}")


def _patch_half_from_args(image, map_base, rpb, center_row, center_col, patch, theta):
    img = read_raster(image).values.astype(np.float64)
    dmap = read_depth_map(map_base)
    cam = _read_cam(rpb)
    world = dmap.lookup(center_row, center_col)
    if world is None:
        raise correspondence.PatchBoundsError(
            f"center ({center_row}, {center_col}) has no valid world point")
    acam = affine_approx(cam, world)
    row, col = cam.project(world.lat, world.lon, world.h)
    return correspondence.rotate_augment(img, dmap, acam, row, col, patch, theta)


@main.command("rotate-aug")
@click.option("--image", required=True, type=click.Path(exists=True))
@click.option("--map", "map_base", required=True, help="Depth-map basename.")
@click.option("--rpb", required=True, type=click.Path(exists=True))
@click.option("--center-row", required=True, type=float)
@click.option("--center-col", required=True, type=float)
@click.option("--patch", default=correspondence.DEFAULT_PATCH, show_default=True,
              type=int)
@click.option("--theta", required=True, type=float, help="Rotation angle, degrees.")
@click.option("--out", required=True, help="Output basename.")
def rotate_aug_cmd(image, map_base, rpb, center_row, center_col, patch, theta, out):
    """Crop-rotate-crop augmentation of one patch."""
    half = _patch_half_from_args(image, map_base, rpb, center_row, center_col,
                                 patch, theta)
    correspondence.save_patch_half(half, out, source_id=Path(image).stem)
    click.echo(f"wrote patch {out} (theta {theta} deg)")


@main.command("simulate-rotation")
@click.option("--image", required=True, type=click.Path(exists=True))
@click.option("--map", "map_base", required=True, help="Depth-map basename.")
@click.option("--rpb", required=True, type=click.Path(exists=True))
@click.option("--patch", default=correspondence.DEFAULT_PATCH, show_default=True,
              type=int)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--out", required=True, help="Output basename.")
def simulate_rotation_cmd(image, map_base, rpb, patch, seed, out):
    """Randomly rotate a random patch (test-time rotation simulation)."""
    rng = np.random.default_rng(seed)
    dmap = read_depth_map(map_base)
    valid = np.argwhere(dmap.valid_mask())
    if valid.size == 0:
        raise correspondence.PatchBoundsError("map has no valid pixels")
    theta = float(rng.uniform(0.0, 360.0))
    for _ in range(50):
        r, c = valid[int(rng.integers(0, len(valid)))]
        try:
            half = _patch_half_from_args(image, map_base, rpb, float(r), float(c),
                                         patch, theta)
        except correspondence.PatchBoundsError:
            continue
        correspondence.save_patch_half(half, out, source_id=Path(image).stem)
        click.echo(f"wrote patch {out} (theta {theta:.3f} deg, center {r},{c})")
        return
    raise correspondence.PatchBoundsError("no in-bounds patch after 50 draws")


@main.command("ba")
@click.option("--rpb", "rpbs", required=True, multiple=True,
              type=click.Path(exists=True),
              help="Camera files, in image-index order; repeat per image.")
@click.option("--matches", "match_specs", required=True, multiple=True,
              help="i,j,path triple per image pair; repeat per pair.")
@click.option("--lam", default=alignment.DEFAULT_LAMBDA, show_default=True, type=float)
@click.option("--ransac/--no-ransac", default=True, show_default=True,
              help="Pairwise outlier rejection before adjustment.")
@click.option("--ransac-threshold", default=alignment.DEFAULT_RANSAC_THRESHOLD_PX,
              show_default=True, type=float)
@click.option("--pin-first-bias", is_flag=True, default=False, show_default=True)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--out-biases", required=True, type=click.Path())
def ba_cmd(rpbs, match_specs, lam, ransac, ransac_threshold, pin_first_bias, seed,
           out_biases):
    """Bias-correction bundle adjustment over matched image pairs."""
    cams = [_read_cam(p) for p in rpbs]
    pair_inliers = {}
    for spec in match_specs:
        try:
            i_s, j_s, path = spec.split(",", 2)
            i, j = int(i_s), int(j_s)
        except ValueError as exc:
            raise click.UsageError(f"bad --matches spec {spec!r}: {exc}") from exc
        recs = read_matches(path)
        if ransac and len(recs) >= 4:
            _, idx = alignment.ransac_affine_f(recs, threshold_px=ransac_threshold,
                                               seed=seed)
            recs = [recs[k] for k in idx]
        pair_inliers[(i, j)] = recs
    cfg = alignment.BaConfig(lambda_=lam, pin_first_bias=pin_first_bias)
    biases, tracks = alignment.bundle_adjust(cams, pair_inliers, cfg)
    write_biases(
        {Path(p).stem: (float(b[0]), float(b[1])) for p, b in zip(rpbs, biases)},
        out_biases,
    )
    click.echo(f"adjusted {len(cams)} images over {len(tracks)} tracks; "
               f"biases -> {out_biases}")


@main.command("triangulate")
@click.option("--rpb-i", required=True, type=click.Path(exists=True))
@click.option("--rpb-j", required=True, type=click.Path(exists=True))
@click.option("--matches", required=True, type=click.Path(exists=True))
@click.option("--biases", type=click.Path(exists=True), default=None,
              help="Bias CSV from the ba command (defaults to zero biases).")
@click.option("--out", required=True, type=click.Path())
def triangulate_cmd(rpb_i, rpb_j, matches, biases, out):
    """Triangulate matches of one image pair (bias-frozen, unregularized)."""
    cams = [_read_cam(rpb_i), _read_cam(rpb_j)]
    b = np.zeros((2, 2))
    if biases:
        table = read_biases(biases)
        for k, path in enumerate((rpb_i, rpb_j)):
            stem = Path(path).stem
            if stem in table:
                b[k] = table[stem]
    recs = read_matches(matches)
    points = alignment.triangulate(cams, b, recs, (0, 1))
    with open(out, "w") as f:
        f.write("lat,lon,h,residual_px\n")
        for p, resid in points:
            f.write(f"{p.lat!r},{p.lon!r},{p.h!r},{resid!r}\n")
    click.echo(f"triangulated {len(points)} points -> {out}")


def _read_points_csv(path):
    rows = Path(path).read_text().splitlines()
    if not rows or not rows[0].startswith("lat,lon,h"):
        raise TableFormatError(f"{path}: expected lat,lon,h header")
    out = []
    for line in rows[1:]:
        if not line.strip():
            continue
        parts = line.split(",")
        out.append(GeoPoint(float(parts[0]), float(parts[1]), float(parts[2])))
    return out


@main.command("fuse-dsm")
@click.option("--points", "point_files", required=True, multiple=True,
              type=click.Path(exists=True), help="Triangulated point CSVs.")
@click.option("--gsd", default=0.25, show_default=True, type=float,
              help="Output cell size, meters.")
@click.option("--top-n", default=alignment.DEFAULT_TOP_N, show_default=True, type=int)
@click.option("--out", required=True, type=click.Path())
def fuse_dsm_cmd(point_files, gsd, top_n, out):
    """Fuse point clouds and rasterize the top-N-median surface."""
    clouds = [_read_points_csv(p) for p in point_files]
    grid = alignment.fuse_and_rasterize(clouds, gsd=gsd, top_n=top_n)
    write_raster(grid, out)
    click.echo(f"wrote {grid.height}x{grid.width} surface -> {out}")


@main.command("metrics")
@click.option("--matches", required=True, type=click.Path(exists=True))
@click.option("--gt-f", "gt_f", required=True, type=click.Path(exists=True),
              help="Ground-truth affine fundamental matrix (JSON a,b,c,d,e).")
@click.option("--delta-epi", default=metrics_mod.DEFAULT_DELTA_EPI, show_default=True,
              type=float)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--out", type=click.Path(), default=None, help="Optional report CSV.")
def metrics_cmd(matches, gt_f, delta_epi, seed, out):
    """Precision and pose-error AUC of a match set against ground truth."""
    recs = read_matches(matches)
    payload = json.loads(Path(gt_f).read_text())
    f_gt = AffineFundamental.from_vector(
        [payload[k] for k in ("a", "b", "c", "d", "e")])
    prec = metrics_mod.precision(recs, f_gt, delta_epi=delta_epi)
    f_est, inliers = alignment.ransac_affine_f(recs, threshold_px=delta_epi, seed=seed)
    err = metrics_mod.pose_error(metrics_mod.decompose_affine_f(f_gt),
                                 metrics_mod.decompose_affine_f(f_est))
    aucs = metrics_mod.auc([err])
    table = metrics_mod.report_table(
        [[prec, len(recs), aucs[5.0], aucs[10.0], aucs[20.0]]],
        ["precision", "matches", "auc@5", "auc@10", "auc@20"],
    )
    click.echo(table)
    if out:
        Path(out).write_text(
            "precision,matches,auc5,auc10,auc20\n"
            f"{prec!r},{len(recs)},{aucs[5.0]!r},{aucs[10.0]!r},{aucs[20.0]!r}\n"
        )


@main.command("dsm-compare")
@click.option("--test", "test_path", required=True, type=click.Path(exists=True))
@click.option("--truth", required=True, type=click.Path(exists=True))
def dsm_compare_cmd(test_path, truth):
    """Completeness / RMSE / median-absolute-error between two surfaces."""
    out = metrics_mod.dsm_compare(read_raster(test_path), read_raster(truth))
    click.echo(f"completeness {out.completeness:.2f}%  rmse {out.rmse:.3f} m  "
               f"mae {out.mae:.3f} m  ({out.valid_count} cells)")


@main.command("pairs")
@click.option("--imd", "imd_files", required=True, multiple=True,
              type=click.Path(exists=True))
@click.option("--depth-dir", type=click.Path(exists=True), default=None,
              help="Directory of map triples named <image>_lat/..., enables "
                   "track-angle computation.")
@click.option("--out", required=True, type=click.Path())
def pairs_cmd(imd_files, depth_dir, out):
    """Characterize all image pairs: view angle, track angle, time difference."""
    from .ingest.tables import PairRecord

    metas = [read_imd(p) for p in imd_files]
    maps = {}
    if depth_dir:
        for meta in metas:
            base = Path(depth_dir) / meta.image_id
            if Path(f"{base}_lat.grd").exists() or Path(f"{base}_lat.tif").exists():
                suffix = ".grd" if Path(f"{base}_lat.grd").exists() else ".tif"
                maps[meta.image_id] = read_depth_map(base, suffix=suffix)
    records = []
    for a in range(len(metas)):
        for b in range(a + 1, len(metas)):
            m_a, m_b = metas[a], metas[b]
            alpha_v = pairs_mod.view_angle_diff(m_a, m_b)
            alpha_t = 0.0
            if m_a.image_id in maps and m_b.image_id in maps:
                alpha_t = pairs_mod.track_angle_diff(maps[m_a.image_id],
                                                     maps[m_b.image_id])
            dt = abs((m_a.acquisition_time - m_b.acquisition_time).total_seconds())
            records.append(PairRecord(m_a.image_id, m_b.image_id, alpha_v, alpha_t,
                                      dt / 86400.0))
    write_pairs(records, out)
    click.echo(f"wrote {len(records)} pairs -> {out}")


@main.command("balance")
@click.option("--pairs", "pairs_path", required=True, type=click.Path(exists=True))
@click.option("--bins", default=pairs_mod.DEFAULT_N_BINS, show_default=True, type=int)
@click.option("--target", required=True, type=int, help="Pairs kept per bin.")
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--out", required=True, type=click.Path())
def balance_cmd(pairs_path, bins, target, seed, out):
    """Histogram-balance pairs over view-angle difference."""
    records = read_pairs(pairs_path)
    cfg = pairs_mod.BalanceConfig(n_bins=bins, target_per_bin=target, seed=seed)
    selected = pairs_mod.balance_pairs(records, cfg)
    write_pairs(selected, out)
    click.echo(f"kept {len(selected)}/{len(records)} pairs -> {out}")


@main.command("coverage")
@click.option("--rpb", "rpbs", required=True, multiple=True,
              type=click.Path(exists=True))
@click.option("--rows", required=True, type=int, help="Image height (all cameras).")
@click.option("--cols", required=True, type=int, help="Image width (all cameras).")
@click.option("--grid-origin-lon", required=True, type=float)
@click.option("--grid-origin-lat", required=True, type=float)
@click.option("--grid-psz", required=True, type=float, help="Cell size, degrees.")
@click.option("--grid-rows", required=True, type=int)
@click.option("--grid-cols", required=True, type=int)
@click.option("--h-ref", required=True, type=float,
              help="Reference height for the coverage test, meters.")
@click.option("--n-min", default=1, show_default=True, type=int)
@click.option("--out", required=True, type=click.Path())
def coverage_cmd(rpbs, rows, cols, grid_origin_lon, grid_origin_lat, grid_psz,
                 grid_rows, grid_cols, h_ref, n_min, out):
    """Per-cell camera coverage counts plus the largest well-covered rectangle."""
    cams = [_read_cam(p) for p in rpbs]
    gt = GeoTransform(grid_origin_lon, grid_origin_lat, grid_psz, grid_psz)
    cov = pairs_mod.coverage_heatmap(cams, [(rows, cols)] * len(cams), gt,
                                     (grid_rows, grid_cols), h_ref)
    write_raster(cov, out)
    rect = pairs_mod.largest_covered_rect(cov, n_min)
    if rect is None:
        click.echo(f"wrote {out}; no cell reaches count {n_min}")
    else:
        r0, c0, h, w = rect
        click.echo(f"wrote {out}; best rectangle {h}x{w} at ({r0}, {c0}) "
                   f"with count >= {n_min}")


@main.command("gcp-assess")
@click.option("--tile-dir", required=True, type=click.Path(exists=True),
              help="Tile directory in the standard layout.")
@click.option("--n-sims", default=1000, show_default=True, type=int)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--out-report", required=True, type=click.Path())
@click.option("--out-shift", required=True, type=click.Path())
def gcp_assess_cmd(tile_dir, n_sims, seed, out_report, out_shift):
    """GCP error measures plus the Monte-Carlo shift estimate for one tile."""
    tile = Path(tile_dir)
    gcps = read_gcps(tile / "gcp" / "gcps.csv")
    annotations = []
    for path in sorted((tile / "gcp" / "annotations").glob("GCP_*_annotations.csv")):
        annotations.extend(read_annotations(path))
    cams = {}
    maps = {}
    for rpb_path in sorted((tile / "DSM_Cropped_Images").glob("*.RPB")):
        image_id = rpb_path.stem
        cams[image_id] = _read_cam(rpb_path)
        base = tile / "Depth" / image_id
        for suffix in (".grd", ".tif"):
            if Path(f"{base}_lat{suffix}").exists():
                maps[image_id] = read_depth_map(base, suffix=suffix)
                break
    report = gcp_mod.gcp_errors(gcps, annotations, maps, cams)
    summary = report.summary()
    lines = ["measure,mean,median,std,count"]
    for name, stats in summary.items():
        lines.append(f"{name},{stats['mean']!r},{stats['median']!r},"
                     f"{stats['std']!r},{stats['count']}")
    Path(out_report).write_text("\n".join(lines) + "\n")
    shift_payload: dict = {"n_sims": 0}
    if len({g for g, *_ in report.abs_vectors}) >= 4:
        errs = [(g, e) for g, _, e in report.abs_vectors]
        shift, stats = gcp_mod.monte_carlo_shift(errs, n_sims=n_sims, seed=seed)
        shift_payload = {"dx": shift.dx, "dy": shift.dy, "dz": shift.dz, **stats}
    Path(out_shift).write_text(json.dumps(shift_payload, indent=2))
    click.echo(f"abs3d mean {summary['abs3d']['mean']:.3f} m over "
               f"{summary['abs3d']['count']} observations; report -> {out_report}")


@main.command("apply-shift")
@click.option("--shift", required=True, type=click.Path(exists=True),
              help="Shift JSON with dx, dy, dz (ECEF meters).")
@click.option("--kind", required=True, type=click.Choice(["dsm", "map", "rpb"]))
@click.option("--target", required=True, help="Raster path, map basename, or RPB path.")
@click.option("--out", required=True, help="Output path or basename.")
@click.option("--center-lat", required=True, type=float)
@click.option("--center-lon", required=True, type=float)
@click.option("--center-h", default=0.0, show_default=True, type=float)
def apply_shift_cmd(shift, kind, target, out, center_lat, center_lon, center_h):
    """Subtract an estimated ECEF shift from a DSM, map triple, or camera."""
    payload = json.loads(Path(shift).read_text())
    s = gcp_mod.EcefShift(payload["dx"], payload["dy"], payload["dz"])
    center = GeoPoint(center_lat, center_lon, center_h)
    if kind == "dsm":
        grid = read_raster(target)
        write_raster(gcp_mod.apply_shift_to_raster(grid, s, center), out)
    elif kind == "map":
        dmap = read_depth_map(target)
        write_depth_map(gcp_mod.apply_shift_to_map(dmap, s, center), out)
    else:
        cam = _read_cam(target)
        from .ingest.rpb import write_rpb

        write_rpb(gcp_mod.apply_shift_to_rpc(cam, s, center).to_rpb(), out)
    click.echo(f"applied shift ({s.dx:.3f}, {s.dy:.3f}, {s.dz:.3f}) m -> {out}")


@main.command("serve-annotate")
@click.option("--tile-dir", required=True, type=click.Path(exists=True))
@click.option("--port", default=0, show_default=True, type=int,
              help="0 binds a free port (printed on startup).")
@click.option("--ui-dir", type=click.Path(exists=True), default=None,
              help="Optional static frontend to serve at /.")
def serve_annotate_cmd(tile_dir, port, ui_dir):
    """Serve the annotation backend (and optionally the browser UI)."""
    from .server import serve_forever

    serve_forever(tile_dir, port=port, ui_dir=ui_dir)


@main.command("make-scene")
@click.option("--out", required=True, type=click.Path())
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--size", default=64, show_default=True, type=int)
def make_scene_cmd(out, seed, size):
    """Write the packaged synthetic demo AOI (two cameras over a box world)."""
    from .synthetic import write_demo_scene

    meta = write_demo_scene(out, seed=seed, size=size)
    click.echo(json.dumps(meta, indent=2))


if __name__ == "__main__":
    main()
