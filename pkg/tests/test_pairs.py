"""Tests for view/track angles, pair balancing, and coverage heatmaps."""

import math
from datetime import datetime, timezone

import numpy as np
import pytest

from satgeo.geodesy import GeoTransform, meters_per_degree, pixel_to_geo
from satgeo.ingest.imd import ImdRecord
from satgeo.ingest.tables import PairRecord
from satgeo.maps import make_depth_map
from satgeo.pairs import (
    BalanceConfig,
    PairError,
    balance_pairs,
    coverage_heatmap,
    largest_covered_rect,
    track_angle_diff,
    view_angle_diff,
    view_vector,
)
from satgeo.synthetic import box_world, grid_camera


def _imd(az, el):
    return ImdRecord(
        image_id="X", sat_azimuth=az, sat_elevation=el,
        sun_azimuth=150.0, sun_elevation=45.0,
        acquisition_time=datetime(2015, 10, 5, tzinfo=timezone.utc),
    )


class TestViewAngles:
    def test_axis_vectors(self):
        v = view_vector(_imd(0.0, 1e-9))
        np.testing.assert_allclose(v, [1, 0, 0], atol=1e-9)
        v = view_vector(_imd(90.0, 1e-9))
        np.testing.assert_allclose(v, [0, 1, 0], atol=1e-9)
        v = view_vector(_imd(123.0, 90.0))
        np.testing.assert_allclose(v, [0, 0, 1], atol=1e-9)

    def test_identical_zero(self):
        assert view_angle_diff(_imd(200.0, 60.0), _imd(200.0, 60.0)) == pytest.approx(0.0)

    def test_orthogonal_ninety(self):
        assert view_angle_diff(_imd(0.0, 1e-9), _imd(90.0, 1e-9)) == pytest.approx(90.0)

    def test_symmetric(self):
        a, b = _imd(10.0, 30.0), _imd(250.0, 70.0)
        assert view_angle_diff(a, b) == pytest.approx(view_angle_diff(b, a))
        assert 0.0 <= view_angle_diff(a, b) <= 180.0


def _line_map(angle_deg, size=32, lat0=32.8, lon0=-81.7):
    """A map whose middle row traces a ground line at the given bearing from
    the UTM east axis."""
    m_lat, m_lon = meters_per_degree(lat0)
    lat = np.full((size, size), np.nan)
    lon = np.full((size, size), np.nan)
    ht = np.full((size, size), -2e30, dtype=np.float32)
    a = math.radians(angle_deg)
    for c in range(size):
        d = 2.0 * c  # meters along the line
        east_m = d * math.cos(a)
        north_m = d * math.sin(a)
        for r in range(size):
            lat[r, c] = lat0 + (north_m - 1.0 * r) / m_lat
            lon[r, c] = lon0 + east_m / m_lon
            ht[r, c] = 10.0
    return make_depth_map(lat, lon, ht)


class TestTrackAngle:
    def test_map_vs_itself_zero(self):
        m = _line_map(20.0)
        # arccos near 1 has a ~1e-6 degree noise floor
        assert track_angle_diff(m, m) == pytest.approx(0.0, abs=1e-5)

    def test_constructed_thirty_degrees(self):
        a = _line_map(10.0)
        b = _line_map(40.0)
        assert track_angle_diff(a, b) == pytest.approx(30.0, abs=0.1)

    def test_symmetric(self):
        a = _line_map(0.0)
        b = _line_map(75.0)
        assert track_angle_diff(a, b) == pytest.approx(track_angle_diff(b, a))

    def test_too_few_valid_pixels(self):
        m = _line_map(0.0)
        empty = make_depth_map(np.full((8, 8), np.nan), np.full((8, 8), np.nan),
                               np.full((8, 8), -2e30, dtype=np.float32))
        with pytest.raises(PairError):
            track_angle_diff(m, empty)


class TestBalancePairs:
    def _pairs(self, alphas):
        return [PairRecord(f"a{k}", f"b{k}", float(a), 0.0, 1.0) for k, a in enumerate(alphas)]

    def test_forced_counts(self):
        # three bins worth of alphas: 100 in [0,10), 5 in [10,20), 50 in [20,30]
        alphas = ([5.0] * 100) + ([15.0] * 5) + ([25.0] * 50)
        pairs = self._pairs(alphas)
        cfg = BalanceConfig(n_bins=3, target_per_bin=20, seed=1)
        out = balance_pairs(pairs, cfg)
        counts = {0: 0, 1: 0, 2: 0}
        for p in out:
            counts[int(p.alpha_v // 10)] += 1
        assert counts == {0: 20, 1: 5, 2: 20}

    def test_target_above_counts_is_identity(self):
        pairs = self._pairs([1.0, 5.0, 12.0, 30.0])
        cfg = BalanceConfig(n_bins=4, target_per_bin=50, seed=3)
        assert balance_pairs(pairs, cfg) == pairs

    def test_deterministic_under_seed(self):
        rng = np.random.default_rng(4)
        pairs = self._pairs(rng.uniform(0, 40, 500))
        cfg = BalanceConfig(n_bins=10, target_per_bin=20, seed=9)
        a = balance_pairs(pairs, cfg)
        b = balance_pairs(pairs, cfg)
        assert a == b

    def test_no_duplicates_and_bounded(self):
        rng = np.random.default_rng(5)
        pairs = self._pairs(rng.uniform(0, 40, 300))
        cfg = BalanceConfig(n_bins=5, target_per_bin=30, seed=2)
        out = balance_pairs(pairs, cfg)
        ids = [(p.image_i, p.image_j) for p in out]
        assert len(ids) == len(set(ids))
        top = max(p.alpha_v for p in pairs)
        edges = np.linspace(0, top, 6)
        for b in range(5):
            n = sum(1 for p in out if edges[b] <= p.alpha_v <= edges[b + 1] + 1e-12
                    and (b == 4 or p.alpha_v < edges[b + 1]))
            assert n <= 30


class TestCoverage:
    def test_single_camera_covers_everything(self):
        rng = np.random.default_rng(6)
        dsm, dem, water = box_world(rng, size=16, n_boxes=0)
        cam = grid_camera(dsm.geotransform, (16, 16), (16, 16), h_center=20.0)
        cov = coverage_heatmap([cam], [(16, 16)], dsm.geotransform, (16, 16), 20.0)
        assert np.all(cov.values == 1)

    def test_disjoint_half_planes(self):
        # binary-exact pixel sizes keep cell centers exactly on/off the
        # half-plane footprint boundary
        psz = 2.0 ** -16
        gt = GeoTransform(-81.7 + 0.0, 32.8, psz, psz)
        # camera A sees only the left half, B only the right
        cam_a = grid_camera(gt, (16, 8), (16, 8), h_center=20.0)
        gt_right = GeoTransform(gt.origin_lon + 8 * psz, gt.origin_lat, psz, psz)
        cam_b = grid_camera(gt_right, (16, 8), (16, 8), h_center=20.0)
        cov = coverage_heatmap([cam_a, cam_b], [(16, 8), (16, 8)], gt, (16, 16), 20.0)
        assert np.all(cov.values[:, :8] == 1)
        assert np.all(cov.values[:, 8:] == 1)
        assert not np.any(cov.values == 2)

    def test_randomized_matches_recount_oracle(self):
        rng = np.random.default_rng(8)
        dsm, dem, water = box_world(rng, size=12, n_boxes=0)
        gt = dsm.geotransform
        cams = []
        dims = []
        for _ in range(4):
            r0 = int(rng.integers(0, 6))
            c0 = int(rng.integers(0, 6))
            h = int(rng.integers(4, 12 - r0))
            w = int(rng.integers(4, 12 - c0))
            sub_gt = GeoTransform(gt.origin_lon + c0 * gt.pixel_size_lon,
                                  gt.origin_lat - r0 * gt.pixel_size_lat,
                                  gt.pixel_size_lon, gt.pixel_size_lat)
            cams.append(grid_camera(sub_gt, (h, w), (h, w), h_center=20.0))
            dims.append((h, w))
        cov = coverage_heatmap(cams, dims, gt, (12, 12), 20.0)
        for r in range(12):
            for c in range(12):
                lat, lon = pixel_to_geo(gt, float(r), float(c))
                n = 0
                for cam, (h_img, w_img) in zip(cams, dims):
                    row, col = cam.project(float(lat), float(lon), 20.0)
                    if 0 <= row < h_img and 0 <= col < w_img:
                        n += 1
                assert cov.values[r, c] == n

    def test_monotone_under_camera_removal(self):
        rng = np.random.default_rng(9)
        dsm, dem, water = box_world(rng, size=10, n_boxes=0)
        gt = dsm.geotransform
        cams = [grid_camera(gt, (10, 10), (10, 10), h_center=20.0) for _ in range(3)]
        dims = [(10, 10)] * 3
        full = coverage_heatmap(cams, dims, gt, (10, 10), 20.0)
        fewer = coverage_heatmap(cams[:2], dims[:2], gt, (10, 10), 20.0)
        assert np.all(fewer.values <= full.values)

    def test_largest_rect(self):
        vals = np.array([
            [0, 2, 2, 0],
            [2, 2, 2, 0],
            [2, 2, 2, 2],
            [0, 2, 0, 0],
        ], dtype=np.uint16)
        cov = type("C", (), {"values": vals})()
        rect = largest_covered_rect(cov, n_min=1)
        r0, c0, h, w = rect
        assert h * w == 6
        assert np.all(vals[r0:r0 + h, c0:c0 + w] >= 1)

    def test_largest_rect_brute_force(self):
        rng = np.random.default_rng(10)
        for _ in range(20):
            vals = rng.integers(0, 3, size=(7, 9)).astype(np.uint16)
            cov = type("C", (), {"values": vals})()
            rect = largest_covered_rect(cov, n_min=2)
            ok = vals >= 2
            best = 0
            for r0 in range(7):
                for c0 in range(9):
                    for r1 in range(r0, 7):
                        for c1 in range(c0, 9):
                            if ok[r0:r1 + 1, c0:c1 + 1].all():
                                best = max(best, (r1 - r0 + 1) * (c1 - c0 + 1))
            got = 0 if rect is None else rect[2] * rect[3]
            assert got == best
