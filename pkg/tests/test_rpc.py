"""Tests for the RPC camera: projection, Jacobian, inversion, affine machinery."""

import math

import numpy as np
import pytest

from satgeo.geodesy import GeoPoint
from satgeo.rpc import (
    AffineCamera,
    AffineFundamental,
    DegenerateCameraError,
    RpcConvergenceError,
    RpcDomainError,
    RpcModel,
    affine_approx,
    affine_fundamental,
)
from satgeo.synthetic import affine_rpc_model, random_rpc_model

# ── independent projection oracle ────────────────────────────────────────
# Straightforward evaluator driven by an exponent table: a deliberately
# different code shape from the production 20-term expansion.

TERM_EXPONENTS = [
    (0, 0, 0),
    (1, 0, 0), (0, 1, 0), (0, 0, 1),
    (1, 1, 0), (1, 0, 1), (0, 1, 1),
    (2, 0, 0), (0, 2, 0), (0, 0, 2),
    (1, 1, 1),
    (3, 0, 0), (1, 2, 0), (1, 0, 2), (2, 1, 0),
    (0, 3, 0), (0, 1, 2), (2, 0, 1), (0, 2, 1), (0, 0, 3),
]  # (lam_exp, phi_exp, h_exp) per coefficient index


def _oracle_poly(coeffs, lam, phi, h):
    total = 0.0
    for c, (el, ep, eh) in zip(coeffs, TERM_EXPONENTS):
        total += c * lam**el * phi**ep * h**eh
    return total


def _oracle_project(cam: RpcModel, lat, lon, h):
    phi = (lat - cam.lat_off) / cam.lat_scale
    lam = (lon - cam.lon_off) / cam.lon_scale
    hn = (h - cam.h_off) / cam.h_scale
    row = _oracle_poly(cam.line_num, lam, phi, hn) / _oracle_poly(cam.line_den, lam, phi, hn)
    col = _oracle_poly(cam.samp_num, lam, phi, hn) / _oracle_poly(cam.samp_den, lam, phi, hn)
    return row * cam.line_scale + cam.line_off, col * cam.samp_scale + cam.samp_off


def _sample_world(rng, cam: RpcModel, margin: float = 0.8):
    lat = cam.lat_off + float(rng.uniform(-margin, margin)) * cam.lat_scale
    lon = cam.lon_off + float(rng.uniform(-margin, margin)) * cam.lon_scale
    h = cam.h_off + float(rng.uniform(-margin, margin)) * cam.h_scale
    return lat, lon, h


def _one_hot_model(index: int, **overrides) -> RpcModel:
    num = np.zeros(20)
    num[index] = 1.0
    den = np.zeros(20)
    den[0] = 1.0
    base = dict(
        line_num=num, line_den=den, samp_num=num.copy(), samp_den=den.copy(),
        line_off=0.0, line_scale=1.0, samp_off=0.0, samp_scale=1.0,
        lat_off=0.0, lat_scale=1.0, lon_off=0.0, lon_scale=1.0,
        h_off=0.0, h_scale=1.0,
    )
    base.update(overrides)
    return RpcModel(**base)


class TestProject:
    def test_offsets_map_to_pixel_offsets(self):
        num = np.zeros(20)
        den = np.zeros(20)
        den[0] = 1.0
        cam = RpcModel(
            line_num=num, line_den=den, samp_num=num.copy(), samp_den=den.copy(),
            line_off=512.0, line_scale=512.0, samp_off=600.0, samp_scale=600.0,
            lat_off=32.7, lat_scale=0.05, lon_off=-81.6, lon_scale=0.05,
            h_off=30.0, h_scale=500.0,
        )
        row, col = cam.project(32.7, -81.6, 30.0)
        assert row == pytest.approx(512.0, abs=1e-12)
        assert col == pytest.approx(600.0, abs=1e-12)

    def test_pure_latitude_model_is_linear(self):
        rng = np.random.default_rng(0)
        num = np.zeros(20)
        num[2] = 1.0  # latitude term only
        den = np.zeros(20)
        den[0] = 1.0
        cam = RpcModel(
            line_num=num, line_den=den, samp_num=num.copy(), samp_den=den.copy(),
            line_off=100.0, line_scale=250.0, samp_off=0.0, samp_scale=1.0,
            lat_off=10.0, lat_scale=0.1, lon_off=20.0, lon_scale=0.1,
            h_off=0.0, h_scale=100.0,
        )
        for _ in range(10):
            lat = 10.0 + float(rng.uniform(-0.1, 0.1))
            row, _ = cam.project(lat, 20.0, 0.0)
            assert row == pytest.approx(250.0 * (lat - 10.0) / 0.1 + 100.0, rel=1e-12)

    def test_each_term_index_pins_its_monomial(self):
        rng = np.random.default_rng(4)
        for index in range(20):
            cam = _one_hot_model(index)
            for _ in range(3):
                lam, phi, h = rng.uniform(-1, 1, 3)
                row, _ = cam.project(phi, lam, h)  # unit scales: world == normalized
                el, ep, eh = TERM_EXPONENTS[index]
                assert row == pytest.approx(lam**el * phi**ep * h**eh, abs=1e-12), (
                    f"term {index} evaluates the wrong monomial"
                )

    def test_matches_independent_evaluator(self):
        rng = np.random.default_rng(7)
        for _ in range(100):
            cam = random_rpc_model(rng, cubic=0.05)
            for _ in range(5):
                lat, lon, h = _sample_world(rng, cam)
                got = cam.project(lat, lon, h)
                want = _oracle_project(cam, lat, lon, h)
                assert got[0] == pytest.approx(want[0], rel=1e-10, abs=1e-9)
                assert got[1] == pytest.approx(want[1], rel=1e-10, abs=1e-9)

    def test_denominator_guard(self):
        num = np.zeros(20)
        num[2] = 1.0
        den = np.zeros(20)
        den[3] = 1.0  # denominator = h_n: zero at h = h_off
        cam = _one_hot_model(2, line_den=den, samp_den=den.copy())
        with pytest.raises(RpcDomainError):
            cam.project(0.5, 0.5, 0.0)

    def test_vectorized_equals_scalar(self):
        rng = np.random.default_rng(13)
        cam = random_rpc_model(rng, cubic=0.03)
        lats = np.array([_sample_world(rng, cam)[0] for _ in range(16)])
        lons = np.array([_sample_world(rng, cam)[1] for _ in range(16)])
        hs = np.array([_sample_world(rng, cam)[2] for _ in range(16)])
        rows, cols = cam.project(lats, lons, hs)
        for k in range(16):
            r, c = cam.project(float(lats[k]), float(lons[k]), float(hs[k]))
            assert rows[k] == r and cols[k] == c


class TestJacobian:
    def test_linear_model_constant_jacobian(self):
        rng = np.random.default_rng(1)
        cam = affine_rpc_model(rng)
        j_ref = cam.jacobian(cam.lat_off, cam.lon_off, cam.h_off)
        for _ in range(5):
            lat, lon, h = _sample_world(rng, cam)
            np.testing.assert_allclose(cam.jacobian(lat, lon, h), j_ref, rtol=1e-9)
        expected = np.array([
            [cam.line_num[2] * cam.line_scale / cam.lat_scale,
             cam.line_num[1] * cam.line_scale / cam.lon_scale,
             cam.line_num[3] * cam.line_scale / cam.h_scale],
            [cam.samp_num[2] * cam.samp_scale / cam.lat_scale,
             cam.samp_num[1] * cam.samp_scale / cam.lon_scale,
             cam.samp_num[3] * cam.samp_scale / cam.h_scale],
        ])
        np.testing.assert_allclose(j_ref, expected, rtol=1e-12)

    def test_against_central_differences(self):
        rng = np.random.default_rng(2)
        worst = 0.0
        for _ in range(1000):
            cam = random_rpc_model(rng, cubic=0.05)
            lat, lon, h = _sample_world(rng, cam)
            jac = cam.jacobian(lat, lon, h)
            steps = (1e-7 * cam.lat_scale, 1e-7 * cam.lon_scale, 1e-7 * cam.h_scale)
            fd = np.zeros((2, 3))
            for k, d in enumerate(steps):
                args_p, args_m = [lat, lon, h], [lat, lon, h]
                args_p[k] += d
                args_m[k] -= d
                rp = np.array(cam.project(*args_p))
                rm = np.array(cam.project(*args_m))
                fd[:, k] = (rp - rm) / (2 * d)
            # floor the denominator at the matrix scale: the FD oracle's own
            # roundoff noise is absolute (~eps/step), so entries far below the
            # dominant one cannot be compared elementwise-relatively
            denom = np.maximum(np.abs(fd), max(1e-3 * float(np.abs(fd).max()), 1e-3))
            worst = max(worst, float(np.max(np.abs(jac - fd) / denom)))
        assert worst < 1e-5

    def test_height_only_model_has_zero_latlon_columns(self):
        cam = _one_hot_model(3)  # pure h term
        jac = cam.jacobian(0.2, 0.3, 0.1)
        assert jac[:, 0] == pytest.approx([0.0, 0.0])
        assert jac[:, 1] == pytest.approx([0.0, 0.0])
        assert jac[0, 2] != 0.0


class TestBackproject:
    def test_round_trip_batch(self):
        rng = np.random.default_rng(3)
        for _ in range(200):
            cam = random_rpc_model(rng, cubic=0.03)
            lat, lon, h = _sample_world(rng, cam, margin=0.6)
            row, col = cam.project(lat, lon, h)
            p = cam.backproject(row, col, h)
            assert p.lat == pytest.approx(lat, abs=1e-9)
            assert p.lon == pytest.approx(lon, abs=1e-9)
            r2, c2 = cam.project(p.lat, p.lon, p.h)
            assert math.hypot(r2 - row, c2 - col) < 1e-6

    def test_affine_model_one_newton_step(self):
        rng = np.random.default_rng(5)
        cam = affine_rpc_model(rng)
        lat, lon, h = _sample_world(rng, cam, margin=0.5)
        row, col = cam.project(lat, lon, h)
        p = cam.backproject(row, col, h, max_iter=2)
        r2, c2 = cam.project(p.lat, p.lon, p.h)
        assert math.hypot(r2 - row, c2 - col) < 1e-10

    def test_singular_subjacobian(self):
        cam = _one_hot_model(3)  # row and col depend only on h
        with pytest.raises(RpcConvergenceError):
            cam.backproject(0.5, 0.5, 0.2)


class TestAffineApprox:
    def test_exact_at_anchor(self):
        rng = np.random.default_rng(6)
        for _ in range(20):
            cam = random_rpc_model(rng, cubic=0.05)
            lat, lon, h = _sample_world(rng, cam, margin=0.5)
            anchor = GeoPoint(lat, lon, h)
            acam = affine_approx(cam, anchor)
            got = acam.project_point(anchor)
            want = cam.project_point(anchor)
            assert math.hypot(got[0] - want[0], got[1] - want[1]) < 1e-12 * max(
                1.0, abs(want[0]), abs(want[1])
            )

    def test_exact_everywhere_for_affine_model(self):
        rng = np.random.default_rng(8)
        cam = affine_rpc_model(rng)
        acam = affine_approx(cam, GeoPoint(cam.lat_off, cam.lon_off, cam.h_off))
        for _ in range(10):
            lat, lon, h = _sample_world(rng, cam)
            got = acam.project(lat, lon, h)
            want = cam.project(lat, lon, h)
            assert got[0] == pytest.approx(want[0], abs=1e-8)
            assert got[1] == pytest.approx(want[1], abs=1e-8)

    def test_quadratic_error_decay(self):
        rng = np.random.default_rng(9)
        for _ in range(10):
            cam = random_rpc_model(rng, cubic=0.02)
            anchor = GeoPoint(cam.lat_off, cam.lon_off, cam.h_off)
            acam = affine_approx(cam, anchor)
            from satgeo.geodesy import meters_per_degree

            m_lat, _ = meters_per_degree(anchor.lat)
            direction = rng.normal(size=2)
            direction /= np.linalg.norm(direction)

            def err_at(d_m):
                lat = anchor.lat + direction[0] * d_m / m_lat
                lon = anchor.lon + direction[1] * d_m / m_lat
                got = acam.project(lat, lon, anchor.h)
                want = cam.project(lat, lon, anchor.h)
                return math.hypot(got[0] - want[0], got[1] - want[1])

            e400, e200, e100 = err_at(400.0), err_at(200.0), err_at(100.0)
            assert e200 <= 0.35 * e400 + 1e-9
            assert e100 <= 0.35 * e200 + 1e-9


class TestAffineProject:
    def test_linearity(self):
        rng = np.random.default_rng(10)
        acam = AffineCamera(rng.normal(size=(2, 3)), rng.normal(size=2),
                            GeoPoint(0.0, 0.0, 0.0))
        x0 = np.array([10.0, 20.0, 30.0])
        delta = np.array([0.1, -0.2, 0.4])
        p0 = np.array(acam.project(*x0))
        p1 = np.array(acam.project(*(x0 + delta)))
        p2 = np.array(acam.project(*(x0 + 2 * delta)))
        np.testing.assert_allclose(p2 - p0, 2 * (p1 - p0), rtol=0, atol=1e-9)

    def test_zero_linear_part_constant(self):
        acam = AffineCamera(np.zeros((2, 3)), np.array([5.0, 7.0]), GeoPoint(0, 0, 0))
        assert acam.project(1.0, 2.0, 3.0) == (5.0, 7.0)


def _random_affine_camera(rng, scale=20.0):
    linear = rng.normal(scale=scale, size=(2, 3))
    bias = rng.normal(scale=100.0, size=2)
    return AffineCamera(linear, bias, GeoPoint(0.0, 0.0, 0.0))


class TestAffineFundamental:
    def test_epipolar_constraint_on_random_points(self):
        rng = np.random.default_rng(11)
        cam_i = _random_affine_camera(rng)
        cam_j = _random_affine_camera(rng)
        f = affine_fundamental(cam_i, cam_j)
        pts = rng.normal(scale=5.0, size=(2000, 3))
        x_i = cam_i.project(pts[:, 0], pts[:, 1], pts[:, 2])
        x_j = cam_j.project(pts[:, 0], pts[:, 1], pts[:, 2])
        res = f.epipolar_residual(x_i, x_j)
        # residual scales with pixel magnitude; normalize it out
        scale = 1.0 + np.abs(x_i[0]) + np.abs(x_i[1]) + np.abs(x_j[0]) + np.abs(x_j[1])
        assert np.max(np.abs(res) / scale) < 1e-9

    def test_swap_transposes(self):
        rng = np.random.default_rng(12)
        cam_i = _random_affine_camera(rng)
        cam_j = _random_affine_camera(rng)
        f_ij = affine_fundamental(cam_i, cam_j)
        f_ji = affine_fundamental(cam_j, cam_i)
        np.testing.assert_allclose(
            np.abs(f_ji.vector()), np.abs(f_ij.transposed().vector()), atol=1e-9
        )

    def test_pure_translation_pair(self):
        rng = np.random.default_rng(14)
        cam_i = _random_affine_camera(rng)
        cam_j = AffineCamera(cam_i.linear, cam_i.bias + np.array([15.0, -7.0]),
                             cam_i.anchor)
        f = affine_fundamental(cam_i, cam_j)
        # translation-only epipolar geometry: (a, b) and (c, d) antiparallel
        n1 = np.array([f.a, f.b])
        n2 = np.array([f.c, f.d])
        cross = n1[0] * n2[1] - n1[1] * n2[0]
        assert abs(cross) < 1e-9
        assert np.dot(n1, n2) < 0
        pts = rng.normal(scale=3.0, size=(200, 3))
        x_i = cam_i.project(pts[:, 0], pts[:, 1], pts[:, 2])
        x_j = cam_j.project(pts[:, 0], pts[:, 1], pts[:, 2])
        assert np.max(np.abs(f.epipolar_residual(x_i, x_j))) < 1e-6

    def test_coincident_cameras_rejected(self):
        rng = np.random.default_rng(15)
        cam = _random_affine_camera(rng)
        with pytest.raises(DegenerateCameraError):
            affine_fundamental(cam, cam)

    def test_normalization_idempotent_and_sign_stable(self):
        rng = np.random.default_rng(16)
        v = rng.normal(size=5)
        f1 = AffineFundamental.from_vector(v)
        f2 = AffineFundamental.from_vector(f1.vector())
        f3 = AffineFundamental.from_vector(-3.7 * f1.vector())
        np.testing.assert_allclose(f1.vector(), f2.vector(), atol=1e-15)
        np.testing.assert_allclose(f1.vector(), f3.vector(), atol=1e-15)
        assert np.linalg.norm(f1.vector()) == pytest.approx(1.0, abs=1e-12)


class TestComposePixelMap:
    def test_translation_compose(self):
        rng = np.random.default_rng(17)
        acam = _random_affine_camera(rng)
        t = np.eye(3)
        t[0, 2] = -40.0  # col shift
        t[1, 2] = -25.0  # row shift
        shifted = acam.compose_pixel_map(t)
        row, col = acam.project(1.0, 2.0, 3.0)
        row2, col2 = shifted.project(1.0, 2.0, 3.0)
        assert row2 == pytest.approx(row - 25.0, abs=1e-12)
        assert col2 == pytest.approx(col - 40.0, abs=1e-12)

    def test_rejects_projective_map(self):
        rng = np.random.default_rng(18)
        acam = _random_affine_camera(rng)
        bad = np.eye(3)
        bad[2, 0] = 1e-3
        with pytest.raises(ValueError):
            acam.compose_pixel_map(bad)

    def test_rpb_round_trip_through_model(self):
        rng = np.random.default_rng(19)
        cam = random_rpc_model(rng, cubic=0.02)
        again = RpcModel.from_rpb(cam.to_rpb())
        assert again == cam
