"""Tests for coordinate frames and raster primitives."""

import math

import numpy as np
import pytest

from satgeo.geodesy import (
    WGS84_A,
    WGS84_B,
    WGS84_E2,
    WGS84_F,
    GeodesyError,
    GeoPoint,
    GeoTransform,
    RasterGrid,
    ecef_jacobian,
    ecef_to_geo,
    geo_to_ecef,
    geo_to_pixel,
    geo_to_utm,
    meters_per_degree,
    pixel_to_geo,
    sample_bilinear,
    sample_nearest,
    utm_to_geo,
    utm_zone,
)


# ── independent UTM oracle: Karney-style Krüger series (6th order in n) ──
# Written from a different derivation than the production Snyder series so the
# two act as independent cross-checks.

def _utm_oracle(lat, lon, lon0):
    n = WGS84_F / (2 - WGS84_F)
    a1 = WGS84_A / (1 + n) * (1 + n**2 / 4 + n**4 / 64 + n**6 / 256)
    alpha = [
        n / 2 - 2 * n**2 / 3 + 5 * n**3 / 16 + 41 * n**4 / 180 - 127 * n**5 / 288
        + 7891 * n**6 / 37800,
        13 * n**2 / 48 - 3 * n**3 / 5 + 557 * n**4 / 1440 + 281 * n**5 / 630
        - 1983433 * n**6 / 1935360,
        61 * n**3 / 240 - 103 * n**4 / 140 + 15061 * n**5 / 26880 + 167603 * n**6 / 181440,
        49561 * n**4 / 161280 - 179 * n**5 / 168 + 6601661 * n**6 / 7257600,
        34729 * n**5 / 80640 - 3418889 * n**6 / 1995840,
        212378941 * n**6 / 319334400,
    ]
    phi = math.radians(lat)
    lam = math.radians(lon - lon0)
    e = math.sqrt(WGS84_E2)
    t = math.sinh(math.atanh(math.sin(phi)) - e * math.atanh(e * math.sin(phi)))
    xi_p = math.atan2(t, math.cos(lam))
    eta_p = math.asinh(math.sin(lam) / math.hypot(t, math.cos(lam)))
    xi = xi_p + sum(a * math.sin(2 * (j + 1) * xi_p) * math.cosh(2 * (j + 1) * eta_p)
                    for j, a in enumerate(alpha))
    eta = eta_p + sum(a * math.cos(2 * (j + 1) * xi_p) * math.sinh(2 * (j + 1) * eta_p)
                      for j, a in enumerate(alpha))
    return 500000 + 0.9996 * a1 * eta, 0.9996 * a1 * xi


class TestGeoToEcef:
    def test_equator_prime_meridian(self):
        x, y, z = geo_to_ecef(0.0, 0.0, 0.0)
        assert x == pytest.approx(WGS84_A, abs=1e-9)
        assert y == pytest.approx(0.0, abs=1e-9)
        assert z == pytest.approx(0.0, abs=1e-9)

    def test_north_pole_is_semi_minor_axis(self):
        x, y, z = geo_to_ecef(90.0, 0.0, 0.0)
        assert z == pytest.approx(WGS84_B, abs=1e-6)
        assert math.hypot(x, y) == pytest.approx(0.0, abs=1e-6)

    def test_lon_90_rotates_onto_y(self):
        x, y, z = geo_to_ecef(0.0, 90.0, 0.0)
        assert y == pytest.approx(WGS84_A, abs=1e-9)
        assert abs(x) < 1e-6 and abs(z) < 1e-9

    def test_norm_between_axes(self):
        rng = np.random.default_rng(7)
        lat = rng.uniform(-90, 90, 500)
        lon = rng.uniform(-180, 180, 500)
        x, y, z = geo_to_ecef(lat, lon, 0.0)
        r = np.sqrt(x * x + y * y + z * z)
        assert np.all(r >= WGS84_B - 1e-6)
        assert np.all(r <= WGS84_A + 1e-6)

    def test_round_trip_through_ecef(self):
        rng = np.random.default_rng(3)
        lat = rng.uniform(-89, 89, 200)
        lon = rng.uniform(-179.9, 179.9, 200)
        h = rng.uniform(-100, 4000, 200)
        back = ecef_to_geo(*geo_to_ecef(lat, lon, h))
        np.testing.assert_allclose(back[0], lat, atol=1e-10)
        np.testing.assert_allclose(back[1], lon, atol=1e-10)
        np.testing.assert_allclose(back[2], h, atol=1e-5)

    def test_jacobian_matches_finite_differences(self):
        p = GeoPoint(32.74, -81.66, 40.0)
        jac = ecef_jacobian(p)
        eps = [1e-7, 1e-7, 1e-3]
        for k, d in enumerate(eps):
            args_p = [p.lat, p.lon, p.h]
            args_m = [p.lat, p.lon, p.h]
            args_p[k] += d
            args_m[k] -= d
            fd = (np.array(geo_to_ecef(*args_p)) - np.array(geo_to_ecef(*args_m))) / (2 * d)
            np.testing.assert_allclose(jac[:, k], fd, rtol=1e-6, atol=1e-6)


class TestGeoToUtm:
    def test_central_meridian_equator(self):
        p = geo_to_utm(0.0, 3.0)
        assert p.easting == pytest.approx(500000.0, abs=1e-6)
        assert p.northing == pytest.approx(0.0, abs=1e-6)
        assert p.zone == 31 and p.hemisphere == "north"

    def test_symmetric_zone(self):
        p = geo_to_utm(0.0, -3.0)
        assert p.easting == pytest.approx(500000.0, abs=1e-6)
        assert p.northing == pytest.approx(0.0, abs=1e-6)
        assert p.zone == 30

    def test_against_independent_series(self):
        # mid-latitude reference points, frozen against the Krüger-series oracle
        for lat, lon in [(32.74, -81.66), (45.5, 9.1), (-34.49, -58.58), (59.9, 10.7)]:
            zone = utm_zone(lon)
            lon0 = (zone - 1) * 6 - 180 + 3
            e_ref, n_ref = _utm_oracle(lat, lon, lon0)
            p = geo_to_utm(lat, lon)
            if lat < 0:
                n_ref += 10000000.0
            assert p.easting == pytest.approx(e_ref, abs=2e-3)
            assert p.northing == pytest.approx(n_ref, abs=2e-3)

    def test_local_isometry_vs_ecef_chord(self):
        rng = np.random.default_rng(11)
        for _ in range(50):
            lat = rng.uniform(-59, 59)
            lon = rng.uniform(-170, 170)
            az = rng.uniform(0, 2 * math.pi)
            m_lat, m_lon = meters_per_degree(lat)
            dlat = 100.0 * math.cos(az) / m_lat
            dlon = 100.0 * math.sin(az) / m_lon
            a = np.array(geo_to_ecef(lat, lon, 0.0))
            b = np.array(geo_to_ecef(lat + dlat, lon + dlon, 0.0))
            chord = np.linalg.norm(a - b)
            zone = utm_zone(lon)
            u1 = geo_to_utm(lat, lon, zone=zone)
            u2 = geo_to_utm(lat + dlat, lon + dlon, zone=zone)
            planar = math.hypot(u1.easting - u2.easting, u1.northing - u2.northing)
            assert planar == pytest.approx(chord, rel=1e-3)

    def test_round_trip_inverse(self):
        rng = np.random.default_rng(5)
        for _ in range(100):
            lat = rng.uniform(-80, 80)
            lon = rng.uniform(-179, 179)
            p = geo_to_utm(lat, lon)
            lat2, lon2 = utm_to_geo(p.easting, p.northing, p.zone, p.hemisphere)
            # both directions are mm-accurate truncated series; 5e-8 deg ~ 5 mm
            assert lat2 == pytest.approx(lat, abs=5e-8)
            assert lon2 == pytest.approx(lon, abs=5e-8)

    def test_polar_latitude_rejected(self):
        with pytest.raises(GeodesyError):
            geo_to_utm(86.0, 10.0)

    def test_southern_hemisphere_false_northing(self):
        p = geo_to_utm(-34.49, -58.58)
        assert p.hemisphere == "south"
        assert p.northing > 6e6


class TestPixelGeo:
    GT = GeoTransform(10.0, 50.0, 0.001, 0.001)

    def test_pixel_center_convention(self):
        lat, lon = pixel_to_geo(self.GT, 0, 0)
        assert lat == pytest.approx(49.9995, abs=1e-12)
        assert lon == pytest.approx(10.0005, abs=1e-12)

    def test_row_nine(self):
        lat, _ = pixel_to_geo(self.GT, 9, 0)
        assert lat == pytest.approx(50.0 - 0.0095, abs=1e-12)

    def test_round_trip_exact(self):
        rng = np.random.default_rng(2)
        rows = rng.uniform(-5, 500, 1000)
        cols = rng.uniform(-5, 500, 1000)
        lat, lon = pixel_to_geo(self.GT, rows, cols)
        r2, c2 = geo_to_pixel(self.GT, lat, lon)
        np.testing.assert_allclose(r2, rows, rtol=1e-12, atol=1e-9)
        np.testing.assert_allclose(c2, cols, rtol=1e-12, atol=1e-9)

    def test_zero_pixel_size_rejected(self):
        with pytest.raises(GeodesyError):
            GeoTransform(0.0, 0.0, 0.0, 0.001)


class TestSampleBilinear:
    def _grid(self, values, nodata=float("nan")):
        return RasterGrid(np.asarray(values, dtype=np.float64),
                          GeoTransform(0, 0, 0.001, 0.001), nodata)

    def test_exact_cell_center(self):
        g = self._grid([[1.0, 2.0], [3.0, 4.0]])
        assert sample_bilinear(g, 0, 1) == pytest.approx(2.0)
        assert sample_bilinear(g, 1, 0) == pytest.approx(3.0)

    def test_constant_field(self):
        g = self._grid(np.full((4, 4), 7.5))
        assert sample_bilinear(g, 1.5, 2.5) == pytest.approx(7.5)

    def test_linear_in_one_axis(self):
        g = self._grid([[0.0, 0.0], [2.0, 2.0]])
        assert sample_bilinear(g, 0.5, 0.5) == pytest.approx(1.0)

    def test_monotone_between_nodes(self):
        g = self._grid([[0.0, 10.0], [0.0, 10.0]])
        samples = [sample_bilinear(g, 0.5, c) for c in np.linspace(0, 1, 11)]
        assert all(b >= a - 1e-12 for a, b in zip(samples, samples[1:]))

    def test_nodata_poisons_contributing_cells(self):
        g = self._grid([[1.0, float("nan")], [1.0, 1.0]])
        assert math.isnan(sample_bilinear(g, 0.5, 0.5))
        # zero-weight corner does not poison an exact node
        assert sample_bilinear(g, 1.0, 1.0) == pytest.approx(1.0)

    def test_out_of_bounds_raises(self):
        g = self._grid([[1.0, 2.0], [3.0, 4.0]])
        with pytest.raises(GeodesyError):
            sample_bilinear(g, -1.0, 0.0)

    def test_nearest_categorical(self):
        g = RasterGrid(np.array([[0, 1], [1, 0]], dtype=np.uint16),
                       GeoTransform(0, 0, 0.001, 0.001), nodata=65535)
        assert sample_nearest(g, 0.4, 0.6) == 1
        with pytest.raises(GeodesyError):
            sample_nearest(g, 2.0, 0.0)


class TestTypes:
    def test_geopoint_validation(self):
        with pytest.raises(GeodesyError):
            GeoPoint(91.0, 0.0, 0.0)
        with pytest.raises(GeodesyError):
            GeoPoint(0.0, 181.0, 0.0)
        with pytest.raises(GeodesyError):
            GeoPoint(0.0, 0.0, float("inf"))

    def test_raster_dtype_checked(self):
        with pytest.raises(GeodesyError):
            RasterGrid(np.zeros((2, 2), dtype=np.int32), GeoTransform(0, 0, 1e-3, 1e-3))
