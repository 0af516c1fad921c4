"""Tests for GT correspondence extraction, patches and rotation augmentation."""

import math

import numpy as np
import pytest

from satgeo.correspondence import (
    PatchBoundsError,
    crop_patch,
    extract_gt_matches,
    extract_patch_grid_test,
    extract_patch_pair,
    extract_patch_pair_train,
    rotate_augment,
)
from satgeo.depthify import depthify_sequential
from satgeo.geodesy import GeoPoint, geo_to_ecef, pixel_to_geo
from satgeo.maps import make_depth_map
from satgeo.rpc import affine_approx
from satgeo.synthetic import box_world, grid_camera, shaded_image


def _identity_scene(size=24, ground=20.0):
    """Map whose pixel (r, c) stores exactly its own footprint, plus the
    camera that projects those points back onto integer pixels."""
    rng = np.random.default_rng(0)
    dsm, dem, water = box_world(rng, size=size, n_boxes=0, ground=ground)
    lat = np.empty((size, size))
    lon = np.empty((size, size))
    for r in range(size):
        for c in range(size):
            la, lo = pixel_to_geo(dsm.geotransform, float(r), float(c))
            lat[r, c], lon[r, c] = la, lo
    ht = np.full((size, size), ground, dtype=np.float32)
    dmap = make_depth_map(lat, lon, ht)
    cam = grid_camera(dsm.geotransform, (size, size), (size, size), h_center=ground)
    return dmap, cam, dsm


def _stereo_scene(rng, size=64, obliquity=(0.0, 0.6)):
    from satgeo.synthetic import box_scene

    dsm, dem, water, cam_a, cam_b = box_scene(rng, size=size, n_boxes=3,
                                              ground=20.0, obliquity=obliquity)
    map_a = depthify_sequential((size, size), cam_a, dsm, dem, water, dz=0.5)
    map_b = depthify_sequential((size, size), cam_b, dsm, dem, water, dz=0.5)
    return dsm, dem, water, cam_a, cam_b, map_a, map_b


class TestExtractGtMatches:
    def test_identity_self_match(self):
        dmap, cam, _ = _identity_scene()
        matches = extract_gt_matches(dmap, cam, dmap, grid=1, delta3d=1.0)
        assert len(matches) == dmap.height * dmap.width
        for m in matches:
            assert m.dist3d == 0.0
            assert m.row_i == pytest.approx(m.row_j, abs=1e-9)
            assert m.col_i == pytest.approx(m.col_j, abs=1e-9)

    def test_delta_zero_empty(self):
        dmap, cam, _ = _identity_scene()
        assert extract_gt_matches(dmap, cam, dmap, delta3d=0.0) == []

    def test_stereo_matches_brute_force_decisions(self):
        rng = np.random.default_rng(1)
        _, _, _, cam_a, cam_b, map_a, map_b = _stereo_scene(rng)
        delta = 1.0
        matches = extract_gt_matches(map_a, cam_b, map_b, grid=2, delta3d=delta)
        got = {(m.row_i, m.col_i) for m in matches}

        expected = set()
        for r in range(0, map_a.height, 2):
            for c in range(0, map_a.width, 2):
                p = map_a.lookup(r, c)
                if p is None:
                    continue
                row_j, col_j = cam_b.project(p.lat, p.lon, p.h)
                eps = 1e-6
                if -eps <= row_j < 0:
                    row_j = 0.0
                if -eps <= col_j < 0:
                    col_j = 0.0
                if map_b.height - 1 < row_j <= map_b.height - 1 + eps:
                    row_j = map_b.height - 1.0
                if map_b.width - 1 < col_j <= map_b.width - 1 + eps:
                    col_j = map_b.width - 1.0
                if not (0 <= row_j <= map_b.height - 1 and 0 <= col_j <= map_b.width - 1):
                    continue
                rj = int(math.copysign(math.floor(abs(row_j) + 0.5), row_j))
                cj = int(math.copysign(math.floor(abs(col_j) + 0.5), col_j))
                q = map_b.lookup(rj, cj)
                if q is None:
                    continue
                a = np.array(geo_to_ecef(p.lat, p.lon, p.h))
                b = np.array(geo_to_ecef(q.lat, q.lon, q.h))
                if float(np.linalg.norm(a - b)) < delta:
                    expected.add((float(r), float(c)))
        assert got == expected
        assert expected, "oracle found no matches; scene is too hostile"

    def test_symmetric_acceptance_on_error_free_maps(self):
        dmap, cam, _ = _identity_scene()
        forward = extract_gt_matches(dmap, cam, dmap, delta3d=0.5)
        for m in forward:
            rj = int(round(m.row_j))
            cj = int(round(m.col_j))
            p = dmap.lookup(rj, cj)
            assert p is not None
            row_i, col_i = cam.project(p.lat, p.lon, p.h)
            q = dmap.lookup(round(row_i), round(col_i))
            a = np.array(geo_to_ecef(p.lat, p.lon, p.h))
            b = np.array(geo_to_ecef(q.lat, q.lon, q.h))
            assert float(np.linalg.norm(a - b)) < 0.5


class TestPatchExtraction:
    def test_center_lands_at_half_p(self):
        rng = np.random.default_rng(2)
        _, _, _, cam_a, cam_b, map_a, map_b = _stereo_scene(rng)
        img_a = np.zeros((64, 64))
        img_b = np.zeros((64, 64))
        world = map_a.lookup(32, 30)
        assert world is not None
        p = 16
        pair = extract_patch_pair(img_a, img_b, cam_a, cam_b, map_a, map_b,
                                  world, p)
        for half in (pair.i, pair.j):
            row, col = half.camera.project(world.lat, world.lon, world.h)
            assert row == pytest.approx(p / 2, abs=1e-9)
            assert col == pytest.approx(p / 2, abs=1e-9)

    def test_flat_scene_patch_matches_have_zero_error(self):
        rng = np.random.default_rng(3)
        size = 48
        dsm, dem, water, cam_a, cam_b, map_a, map_b = (*_stereo_scene(
            rng, size=size, obliquity=(0.0, 0.0))[:5], None, None)
        map_a = depthify_sequential((size, size), cam_a, dsm, dem, water, dz=0.5)
        map_b = depthify_sequential((size, size), cam_b, dsm, dem, water, dz=0.5)
        img = np.zeros((size, size))
        world = map_a.lookup(24, 24)
        pair = extract_patch_pair(img, img, cam_a, cam_b, map_a, map_b, world, 16)
        matches = extract_gt_matches(pair.i.dmap, pair.j.camera, pair.j.dmap,
                                     delta3d=0.5)
        assert matches
        assert max(m.dist3d for m in matches) < 1e-6

    def test_train_determinism_under_seed(self):
        rng1 = np.random.default_rng(77)
        rng2 = np.random.default_rng(77)
        r = np.random.default_rng(4)
        dsm, dem, water, cam_a, cam_b, map_a, map_b = _stereo_scene(r)
        img_a = shaded_image(dsm, (64, 64), cam_a, dem)
        img_b = shaded_image(dsm, (64, 64), cam_b, dem)
        p1 = extract_patch_pair_train(dsm, img_a, img_b, cam_a, cam_b,
                                      map_a, map_b, 16, rng1)
        p2 = extract_patch_pair_train(dsm, img_a, img_b, cam_a, cam_b,
                                      map_a, map_b, 16, rng2)
        assert np.array_equal(p1.i.image, p2.i.image)
        assert np.array_equal(p1.j.image, p2.j.image)
        assert np.array_equal(p1.i.camera.linear, p2.i.camera.linear)

    def test_grid_count_matches_counting_oracle(self):
        rng = np.random.default_rng(5)
        size = 64
        dsm, dem, water, cam_a, cam_b, map_a, map_b = _stereo_scene(rng, size=size)
        img = np.zeros((size, size))
        p, stride = 16, 16
        pairs = extract_patch_grid_test(dsm, img, img, cam_a, cam_b,
                                        map_a, map_b, p, stride)
        # oracle: count grid cells whose both windows stay in bounds
        count = 0
        from satgeo.correspondence import sample_world_points_grid

        for world in sample_world_points_grid(dsm, stride):
            ok = True
            for cam in (cam_a, cam_b):
                row, col = cam.project(world.lat, world.lon, world.h)
                # zero rotation: bbox is the window plus the 1 px stencil margin
                if not (p / 2 + 1 <= row <= size - p / 2 - 2
                        and p / 2 + 1 <= col <= size - p / 2 - 2):
                    ok = False
            count += ok
        assert len(pairs) == count
        assert pairs, "grid produced no patches"

    def test_reproducible_no_rng(self):
        rng = np.random.default_rng(6)
        size = 64
        dsm, dem, water, cam_a, cam_b, map_a, map_b = _stereo_scene(rng, size=size)
        img = np.zeros((size, size))
        a = extract_patch_grid_test(dsm, img, img, cam_a, cam_b, map_a, map_b, 16, 20)
        b = extract_patch_grid_test(dsm, img, img, cam_a, cam_b, map_a, map_b, 16, 20)
        assert len(a) == len(b)
        for x, y in zip(a, b):
            assert np.array_equal(x.i.dmap.ht, y.i.dmap.ht)


class TestRotateAugment:
    def _setup(self, size=96, ground=20.0):
        rng = np.random.default_rng(7)
        dsm, dem, water = box_world(rng, size=size, n_boxes=0, ground=ground)
        cam = grid_camera(dsm.geotransform, (size, size), (size, size),
                          h_center=ground)
        dmap = depthify_sequential((size, size), cam, dsm, dem, water, dz=0.5)
        img = shaded_image(dsm, (size, size), cam, dem)
        world = dmap.lookup(size // 2, size // 2)
        acam = affine_approx(cam, world)
        return img, dmap, acam, world

    def test_zero_rotation_is_plain_crop(self):
        img, dmap, acam, world = self._setup()
        center = (48.0, 48.0)
        p = 16
        half = rotate_augment(img, dmap, acam, center[0], center[1], p, 0.0)
        sliced = img[40:56, 40:56]
        np.testing.assert_allclose(half.image, sliced, atol=1e-9)
        assert np.allclose(half.chain.h_rot, np.eye(3))
        m = half.chain.composed()
        assert np.allclose(m[:2, :2], np.eye(2))

    def test_full_turn_equals_plain_crop(self):
        img, dmap, acam, world = self._setup()
        p = 16
        plain = rotate_augment(img, dmap, acam, 48.0, 48.0, p, 0.0)
        turned = rotate_augment(img, dmap, acam, 48.0, 48.0, p, 360.0)
        np.testing.assert_allclose(turned.image, plain.image, atol=1e-6)
        matches = extract_gt_matches(plain.dmap, turned.camera, turned.dmap,
                                     delta3d=2.0)
        assert matches
        gsd = 1.0  # meters per cell in the synthetic scene
        assert float(np.mean([m.dist3d for m in matches])) < 2 * gsd

    @pytest.mark.parametrize("theta", [45.0, 90.0, 135.0, 180.0, 225.0, 270.0, 315.0, 360.0])
    def test_composed_camera_transfer(self, theta):
        img, dmap, acam, world = self._setup()
        p = 24
        half = rotate_augment(img, dmap, acam, 48.0, 48.0, p, theta)
        mask = half.dmap.valid_mask()
        rows, cols = np.nonzero(mask)
        assert rows.size > p * p // 2
        lat = half.dmap.lat[rows, cols]
        lon = half.dmap.lon[rows, cols]
        ht = half.dmap.ht[rows, cols].astype(np.float64)
        pr, pc = half.camera.project(lat, lon, ht)
        err = np.hypot(pr - rows, pc - cols)
        assert float(err.max()) < 1.0
        if theta % 90.0 == 0.0:
            assert float(err.max()) < 0.01

    def test_bbox_out_of_image(self):
        img, dmap, acam, world = self._setup(size=32)
        with pytest.raises(PatchBoundsError):
            rotate_augment(img, dmap, acam, 4.0, 4.0, 16, 45.0)

    def test_odd_patch_rejected(self):
        img, dmap, acam, world = self._setup()
        with pytest.raises(ValueError, match="even"):
            rotate_augment(img, dmap, acam, 48.0, 48.0, 15, 0.0)
