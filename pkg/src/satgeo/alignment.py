"""Geometric alignment: affine-F estimation with RANSAC, bias-correction
bundle adjustment, triangulation, connectivity-graph selection, and
top-N-median DSM rasterization.

Bundle adjustment solves the L2-regularized reprojection problem: per-image
pixel-plane biases b_i and per-track world points X_k minimizing
sum ||x_ik - (P_i(X_k) + b_i)||^2 + lambda * sum ||b_i||^2 by
Levenberg-Marquardt on the dense normal equations. Triangulation is the same
objective with biases frozen and lambda = 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geodesy import (
    GeoPoint,
    GeoTransform,
    RasterGrid,
    geo_to_utm,
    utm_to_geo,
    meters_per_degree,
    utm_zone,
)
from .ingest.tables import MatchRecord
from .metrics import symmetric_epipolar_distance
from .rpc import AffineFundamental, RpcConvergenceError, RpcDomainError, RpcModel
from . import rpc as _rpc

DEFAULT_LAMBDA = 0.5
DEFAULT_RANSAC_THRESHOLD_PX = 3.0
DEFAULT_MIN_INLIERS_EDGE = 16
DEFAULT_MIN_COMPONENT_DENSITY = 0.3
DEFAULT_TOP_N = 5
TRACK_MERGE_PX = 0.5
BIAS_WARN_PX = 50.0


class AlignmentError(RuntimeError):
    """Degenerate geometry, divergence, or a disconnected observation graph."""


@dataclass(frozen=True)
class BaConfig:
    lambda_: float = DEFAULT_LAMBDA
    max_iter: int = 100
    tol: float = 1e-12
    ransac_threshold_px: float = DEFAULT_RANSAC_THRESHOLD_PX
    min_inliers_edge: int = DEFAULT_MIN_INLIERS_EDGE
    min_component_density: float = DEFAULT_MIN_COMPONENT_DENSITY
    pin_first_bias: bool = False

    def __post_init__(self):
        if self.lambda_ < 0:
            raise ValueError("lambda must be nonnegative")


@dataclass
class TieTrack:
    """One putative world point and its pixel observations (one per image)."""

    observations: list[tuple[int, float, float]]  # (image index, row, col)
    world: GeoPoint | None = None


@dataclass
class BiasCorrection:
    db_row: float
    db_col: float


@dataclass(frozen=True)
class ConnectivityGraph:
    nodes: tuple[int, ...]
    edges: tuple[tuple[int, int, int], ...]  # (i, j, inlier count)


# ── affine fundamental estimation ───────────────────────────────────────

def estimate_affine_f(matches) -> AffineFundamental:
    """Least-squares affine F over >= 4 matches: center the stacked
    (col_i, row_i, col_j, row_j) data, take the smallest singular direction
    as the line normals, and recover the offset from the centroid."""
    matches = list(matches)
    if len(matches) < 4:
        raise AlignmentError(f"need >= 4 matches, got {len(matches)}")
    data = np.array([[m.col_i, m.row_i, m.col_j, m.row_j] for m in matches])
    centroid = data.mean(axis=0)
    centered = data - centroid
    _, sv, vt = np.linalg.svd(centered, full_matrices=False)
    # a one-dimensional null space requires the other three directions alive
    if sv[2] < 1e-9 * max(sv[0], 1.0):
        raise AlignmentError("degenerate configuration (collinear matches)")
    normal = vt[-1]
    e = -float(normal @ centroid)
    return AffineFundamental.from_vector([*normal, e])


def _epi_distances(f: AffineFundamental, matches) -> np.ndarray:
    rows_i = np.array([m.row_i for m in matches])
    cols_i = np.array([m.col_i for m in matches])
    rows_j = np.array([m.row_j for m in matches])
    cols_j = np.array([m.col_j for m in matches])
    return np.asarray(
        symmetric_epipolar_distance(f, (rows_i, cols_i), (rows_j, cols_j))
    )


def ransac_affine_f(matches, threshold_px: float = DEFAULT_RANSAC_THRESHOLD_PX,
                    seed: int = 0, max_iters: int = 1000,
                    confidence: float = 0.999, min_inliers: int = 8):
    """Adaptive RANSAC with minimal samples of 4 and a final least-squares
    refit on the inlier set. Deterministic under the seed.

    A minimal sample always explains itself exactly, so acceptance demands
    min_inliers of support (default 8); all-outlier inputs then fail instead
    of returning a vacuous 4-point model.
    """
    matches = list(matches)
    if len(matches) < 4:
        raise AlignmentError(f"need >= 4 matches, got {len(matches)}")
    rng = np.random.default_rng(seed)
    best_inliers: np.ndarray | None = None
    best_count = 0
    needed = max_iters
    it = 0
    while it < needed and it < max_iters:
        sample = rng.choice(len(matches), size=4, replace=False)
        try:
            f = estimate_affine_f([matches[k] for k in sample])
        except (AlignmentError, _rpc.DegenerateCameraError):
            it += 1
            continue
        d = _epi_distances(f, matches)
        inliers = d < threshold_px
        count = int(np.count_nonzero(inliers))
        if count > best_count:
            best_count = count
            best_inliers = inliers
            w = count / len(matches)
            if w > 0:
                denom = math.log(max(1.0 - w ** 4, 1e-12))
                needed = min(max_iters, int(math.ceil(math.log(1 - confidence) / denom)))
        it += 1
    if best_inliers is None or best_count < max(min_inliers, 4):
        raise AlignmentError(
            f"RANSAC found no model with >= {max(min_inliers, 4)} inliers"
        )
    inlier_idx = np.flatnonzero(best_inliers)
    f_final = estimate_affine_f([matches[k] for k in inlier_idx])
    return f_final, inlier_idx


# ── track construction ──────────────────────────────────────────────────

class _UnionFind:
    def __init__(self, n):
        self.parent = list(range(n))

    def find(self, a):
        while self.parent[a] != a:
            self.parent[a] = self.parent[self.parent[a]]
            a = self.parent[a]
        return a

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)


def build_tracks(pair_inliers: dict[tuple[int, int], list[MatchRecord]]) -> list[TieTrack]:
    """Merge pairwise matches into multi-image tracks.

    Pixel observations within 0.5 px (Euclidean) in the same image unify.
    Components that end up with two distinct pixels in one image are
    inconsistent and dropped. Representative pixels are means over the merged
    observations, so the result is invariant to match ordering.
    """
    nodes: list[tuple[int, float, float]] = []  # (image, row, col)
    node_links: list[tuple[int, int]] = []
    for (i, j), recs in sorted(pair_inliers.items()):
        for m in recs:
            a = len(nodes)
            nodes.append((i, m.row_i, m.col_i))
            b = len(nodes)
            nodes.append((j, m.row_j, m.col_j))
            node_links.append((a, b))

    uf = _UnionFind(len(nodes))
    # spatial hash per image at the merge radius
    buckets: dict[tuple[int, int, int], list[int]] = {}
    inv = 1.0 / TRACK_MERGE_PX
    for idx, (img, row, col) in enumerate(nodes):
        key = (img, int(math.floor(row * inv)), int(math.floor(col * inv)))
        buckets.setdefault(key, []).append(idx)
    for (img, br, bc), members in buckets.items():
        for dr in (-1, 0, 1):
            for dc in (-1, 0, 1):
                other = buckets.get((img, br + dr, bc + dc))
                if not other:
                    continue
                for a in members:
                    for b in other:
                        if a < b and math.hypot(
                            nodes[a][1] - nodes[b][1], nodes[a][2] - nodes[b][2]
                        ) < TRACK_MERGE_PX:
                            uf.union(a, b)
    for a, b in node_links:
        uf.union(a, b)

    groups: dict[int, list[int]] = {}
    for idx in range(len(nodes)):
        groups.setdefault(uf.find(idx), []).append(idx)

    tracks = []
    for members in groups.values():
        per_image: dict[int, list[tuple[float, float]]] = {}
        for idx in members:
            img, row, col = nodes[idx]
            per_image.setdefault(img, []).append((row, col))
        # distinct pixels in one image mean the component merged two tracks
        consistent = True
        obs = []
        for img, pixels in sorted(per_image.items()):
            rows = [p[0] for p in pixels]
            cols = [p[1] for p in pixels]
            if max(rows) - min(rows) > 2 * TRACK_MERGE_PX or (
                max(cols) - min(cols) > 2 * TRACK_MERGE_PX
            ):
                consistent = False
                break
            obs.append((img, float(np.mean(rows)), float(np.mean(cols))))
        if consistent and len(obs) >= 2:
            tracks.append(TieTrack(observations=obs))
    return tracks


def _images_connected(tracks, n_images: int) -> bool:
    adj: dict[int, set[int]] = {i: set() for i in range(n_images)}
    for t in tracks:
        imgs = [o[0] for o in t.observations]
        for a in imgs:
            for b in imgs:
                if a != b:
                    adj[a].add(b)
    seen = {0}
    stack = [0]
    while stack:
        for nxt in adj[stack.pop()]:
            if nxt not in seen:
                seen.add(nxt)
                stack.append(nxt)
    return len(seen) == n_images


# ── bundle adjustment ───────────────────────────────────────────────────

def _triangulate_point(cams: list[RpcModel], biases: np.ndarray,
                       obs: list[tuple[int, float, float]],
                       max_iter: int = 50, cond_tol: float = 1e-10) -> tuple[GeoPoint, float]:
    """Damped Gauss-Newton for one world point given fixed biases."""
    i0, row0, col0 = obs[0]
    try:
        init = cams[i0].backproject(row0 - biases[i0, 0], col0 - biases[i0, 1],
                                    cams[i0].h_off)
    except (RpcConvergenceError, RpcDomainError) as exc:
        raise AlignmentError(f"triangulation init failed: {exc}") from exc
    x = np.array([init.lat, init.lon, init.h])

    def residual(p):
        res = np.zeros(2 * len(obs))
        for n, (i, row, col) in enumerate(obs):
            r, c = cams[i].project(p[0], p[1], p[2])
            res[2 * n] = row - (r + biases[i, 0])
            res[2 * n + 1] = col - (c + biases[i, 1])
        return res

    def jac(p):
        out = np.zeros((2 * len(obs), 3))
        for n, (i, _, _) in enumerate(obs):
            out[2 * n : 2 * n + 2] = -cams[i].jacobian(p[0], p[1], p[2])
        return out

    res = residual(x)
    cost = res @ res
    for it in range(max_iter):
        j = jac(x)
        _, sv, _ = np.linalg.svd(j, full_matrices=False)
        if sv[-1] < cond_tol * max(sv[0], 1e-300):
            raise AlignmentError("near-parallel rays: triangulation ill-conditioned")
        if math.sqrt(cost / len(obs)) < 1e-12:
            break
        step, *_ = np.linalg.lstsq(j, -res, rcond=None)
        alpha = 1.0
        accepted = False
        for _ in range(25):
            x_t = x + alpha * step
            try:
                res_t = residual(x_t)
            except (RpcDomainError, ValueError):
                alpha *= 0.5
                continue
            cost_t = res_t @ res_t
            if cost_t < cost:
                x, res, cost = x_t, res_t, cost_t
                accepted = True
                break
            alpha *= 0.5
        if not accepted:
            break
        if np.linalg.norm(alpha * step) < 1e-15 * (1 + np.linalg.norm(x)):
            break
    return GeoPoint(float(x[0]), float(x[1]), float(x[2])), math.sqrt(cost / len(obs))


def triangulate(cams: list[RpcModel], biases, matches,
                pair: tuple[int, int]) -> list[tuple[GeoPoint, float]]:
    """Triangulate each match of one image pair with biases frozen.

    Returns (world point, per-point RMS residual in px) per match.
    """
    biases = np.asarray(biases, dtype=float)
    i, j = pair
    out = []
    for m in matches:
        obs = [(i, m.row_i, m.col_i), (j, m.row_j, m.col_j)]
        out.append(_triangulate_point(cams, biases, obs))
    return out


def bundle_adjust(cams: list[RpcModel],
                  pair_inliers: dict[tuple[int, int], list[MatchRecord]],
                  cfg: BaConfig = BaConfig()):
    """Levenberg-Marquardt over per-image biases and per-track world points.

    Returns (biases as an N x 2 array of (d_row, d_col), tracks with solved
    world points). Raises on a disconnected observation graph or divergence.
    """
    n_img = len(cams)
    tracks = build_tracks(pair_inliers)
    if not tracks:
        raise AlignmentError("no usable tracks")
    if not _images_connected(tracks, n_img):
        raise AlignmentError("observation graph is disconnected")

    zero_bias = np.zeros((n_img, 2))
    for t in tracks:
        point, _ = _triangulate_point(cams, zero_bias, t.observations)
        t.world = point

    n_tracks = len(tracks)
    bias_free = list(range(1, n_img)) if cfg.pin_first_bias else list(range(n_img))
    bias_pos = {img: k for k, img in enumerate(bias_free)}
    n_bias_params = 2 * len(bias_free)
    n_params = n_bias_params + 3 * n_tracks

    theta = np.zeros(n_params)
    for k, t in enumerate(tracks):
        base = n_bias_params + 3 * k
        theta[base : base + 3] = [t.world.lat, t.world.lon, t.world.h]

    obs_list = [
        (k, img, row, col)
        for k, t in enumerate(tracks)
        for (img, row, col) in t.observations
    ]
    n_res = 2 * len(obs_list) + (2 * n_img if cfg.lambda_ > 0 else 0)
    sqrt_lam = math.sqrt(cfg.lambda_)

    def biases_of(th):
        b = np.zeros((n_img, 2))
        for img, k in bias_pos.items():
            b[img] = th[2 * k : 2 * k + 2]
        return b

    def residual_jacobian(th, want_jac: bool):
        b = biases_of(th)
        f = np.zeros(n_res)
        jmat = np.zeros((n_res, n_params)) if want_jac else None
        row_at = 0
        for k, img, row, col in obs_list:
            base = n_bias_params + 3 * k
            lat, lon, h = th[base : base + 3]
            try:
                pr, pc = cams[img].project(lat, lon, h)
            except RpcDomainError as exc:
                raise AlignmentError(f"projection left model validity: {exc}") from exc
            f[row_at] = row - (pr + b[img, 0])
            f[row_at + 1] = col - (pc + b[img, 1])
            if want_jac:
                jac = cams[img].jacobian(lat, lon, h)
                jmat[row_at : row_at + 2, base : base + 3] = -jac
                if img in bias_pos:
                    p = 2 * bias_pos[img]
                    jmat[row_at, p] = -1.0
                    jmat[row_at + 1, p + 1] = -1.0
            row_at += 2
        if cfg.lambda_ > 0:
            for img in range(n_img):
                f[row_at] = sqrt_lam * b[img, 0]
                f[row_at + 1] = sqrt_lam * b[img, 1]
                if want_jac and img in bias_pos:
                    p = 2 * bias_pos[img]
                    jmat[row_at, p] = sqrt_lam
                    jmat[row_at + 1, p + 1] = sqrt_lam
                row_at += 2
        return f, jmat

    f, _ = residual_jacobian(theta, want_jac=False)
    cost = float(f @ f)
    mu = 1e-6
    for _ in range(cfg.max_iter):
        f, jmat = residual_jacobian(theta, want_jac=True)
        h_mat = jmat.T @ jmat
        g = jmat.T @ f
        diag = np.diag(h_mat).copy()
        diag[diag <= 0] = max(float(diag.max()), 1e-12) * 1e-12
        accepted = False
        for _ in range(40):
            try:
                step = np.linalg.solve(h_mat + mu * np.diag(diag), -g)
            except np.linalg.LinAlgError:
                mu *= 10
                continue
            theta_t = theta + step
            try:
                f_t, _ = residual_jacobian(theta_t, want_jac=False)
            except (AlignmentError, ValueError):
                mu *= 10
                continue
            cost_t = float(f_t @ f_t)
            if cost_t <= cost:
                improvement = cost - cost_t
                theta = theta_t
                cost = cost_t
                mu = max(mu / 10, 1e-15)
                accepted = True
                break
            mu *= 10
            if mu > 1e14:
                raise AlignmentError("bundle adjustment diverged (damping exploded)")
        if not accepted:
            break
        if improvement < cfg.tol * (1.0 + cost):
            break

    biases = biases_of(theta)
    if np.any(np.hypot(biases[:, 0], biases[:, 1]) > BIAS_WARN_PX):
        import warnings

        warnings.warn("recovered bias exceeds 50 px; alignment inputs look suspect",
                      stacklevel=2)
    for k, t in enumerate(tracks):
        base = n_bias_params + 3 * k
        t.world = GeoPoint(float(theta[base]), float(theta[base + 1]),
                           float(theta[base + 2]))
    return biases, tracks


# ── connectivity graph ──────────────────────────────────────────────────

def largest_aligned_component(graph: ConnectivityGraph,
                              min_inliers_edge: int = DEFAULT_MIN_INLIERS_EDGE,
                              min_component_density: float = DEFAULT_MIN_COMPONENT_DENSITY):
    """Largest connected component over edges with enough inliers; the tile is
    rejected (None) when that component's edge density is below threshold."""
    adj: dict[int, set[int]] = {n: set() for n in graph.nodes}
    kept_edges = set()
    for i, j, count in graph.edges:
        if count >= min_inliers_edge and i != j:
            adj[i].add(j)
            adj[j].add(i)
            kept_edges.add((min(i, j), max(i, j)))
    seen: set[int] = set()
    best: list[int] = []
    for start in graph.nodes:
        if start in seen:
            continue
        comp = [start]
        seen.add(start)
        stack = [start]
        while stack:
            for nxt in adj[stack.pop()]:
                if nxt not in seen:
                    seen.add(nxt)
                    comp.append(nxt)
                    stack.append(nxt)
        if len(comp) > len(best):
            best = comp
    if len(best) <= 1:
        return None
    comp_set = set(best)
    n_edges = sum(1 for (i, j) in kept_edges if i in comp_set and j in comp_set)
    v = len(best)
    density = 2.0 * n_edges / (v * (v - 1))
    if density < min_component_density:
        return None
    return sorted(best)


# ── point cloud fusion and rasterization ────────────────────────────────

def fuse_and_rasterize(clouds, gsd: float, top_n: int = DEFAULT_TOP_N) -> RasterGrid:
    """Bin fused world points into a metric grid; each cell takes the median
    of its top-N heights. The grid is laid out in UTM at gsd meters and
    georeferenced back to a geographic transform anchored at the tile center.
    """
    points = [p for cloud in clouds for p in cloud]
    if not points:
        raise AlignmentError("no points to rasterize")
    lats = np.array([p.lat for p in points])
    lons = np.array([p.lon for p in points])
    hs = np.array([p.h for p in points])
    zone = utm_zone(float(lons[0]))
    utm = geo_to_utm(lats, lons, zone=zone)
    east, north = np.asarray(utm.easting), np.asarray(utm.northing)
    e_min, n_max = float(east.min()), float(north.max())
    cols = np.floor((east - e_min) / gsd).astype(int)
    rows = np.floor((n_max - north) / gsd).astype(int)
    width = int(cols.max()) + 1
    height = int(rows.max()) + 1

    heights: dict[tuple[int, int], list[float]] = {}
    for r, c, h in zip(rows, cols, hs):
        heights.setdefault((int(r), int(c)), []).append(float(h))
    values = np.full((height, width), np.nan)
    for (r, c), cell in heights.items():
        cell.sort(reverse=True)
        top = cell[: min(top_n, len(cell))]
        values[r, c] = float(np.median(top))

    lat0, lon0 = utm_to_geo(e_min, n_max, zone, utm.hemisphere)
    center_lat = float(lats.mean())
    m_lat, m_lon = meters_per_degree(center_lat)
    gt = GeoTransform(lon0, lat0, gsd / m_lon, gsd / m_lat)
    return RasterGrid(values, gt, float("nan"))
