"""The RPC satellite camera model and its local affine machinery.

Forward projection maps (lat, lon, h) through normalization, a ratio of two
20-term cubic polynomials per image axis, and denormalization. Back-projection
inverts it at a fixed height with damped Gauss-Newton. The local affine
approximation anchors a first-order expansion at a world point; pairs of
affine cameras yield the affine fundamental matrix.

Pixel conventions used throughout: row = line, col = sample; homogeneous pixel
vectors for epipolar algebra are (col, row, 1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geodesy import GeoPoint
from .ingest.rpb import RpbDocument

DEN_EPS = 1e-12


class RpcDomainError(ValueError):
    """Point outside model validity (denominator polynomial near zero)."""


class RpcConvergenceError(RuntimeError):
    """Back-projection failed to converge or hit a singular sub-Jacobian."""


class DegenerateCameraError(ValueError):
    """Camera pair admits no fundamental matrix (coincident or rank-deficient)."""


def _poly(c, lam, phi, h):
    """20-term cubic in normalized (lon, lat, height), canonical term order."""
    return (
        c[0]
        + c[1] * lam + c[2] * phi + c[3] * h
        + c[4] * lam * phi + c[5] * lam * h + c[6] * phi * h
        + c[7] * lam * lam + c[8] * phi * phi + c[9] * h * h
        + c[10] * phi * lam * h
        + c[11] * lam * lam * lam
        + c[12] * lam * phi * phi + c[13] * lam * h * h + c[14] * lam * lam * phi
        + c[15] * phi * phi * phi
        + c[16] * phi * h * h + c[17] * lam * lam * h + c[18] * phi * phi * h
        + c[19] * h * h * h
    )


def _poly_dlam(c, lam, phi, h):
    return (
        c[1]
        + c[4] * phi + c[5] * h
        + 2 * c[7] * lam
        + c[10] * phi * h
        + 3 * c[11] * lam * lam
        + c[12] * phi * phi + c[13] * h * h + 2 * c[14] * lam * phi
        + 2 * c[17] * lam * h
    )


def _poly_dphi(c, lam, phi, h):
    return (
        c[2]
        + c[4] * lam + c[6] * h
        + 2 * c[8] * phi
        + c[10] * lam * h
        + 2 * c[12] * lam * phi + c[14] * lam * lam
        + 3 * c[15] * phi * phi
        + c[16] * h * h + 2 * c[18] * phi * h
    )


def _poly_dh(c, lam, phi, h):
    return (
        c[3]
        + c[5] * lam + c[6] * phi
        + 2 * c[9] * h
        + c[10] * phi * lam
        + 2 * c[13] * lam * h
        + 2 * c[16] * phi * h
        + c[17] * lam * lam + c[18] * phi * phi
        + 3 * c[19] * h * h
    )


@dataclass(frozen=True, eq=False)
class RpcModel:
    """90-parameter RPC00B camera: 4x20 coefficients plus 5 scales and 5 offsets."""

    line_num: np.ndarray
    line_den: np.ndarray
    samp_num: np.ndarray
    samp_den: np.ndarray
    line_off: float
    line_scale: float
    samp_off: float
    samp_scale: float
    lat_off: float
    lat_scale: float
    lon_off: float
    lon_scale: float
    h_off: float
    h_scale: float

    def __post_init__(self):
        for name in ("line_num", "line_den", "samp_num", "samp_den"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            if arr.shape != (20,):
                raise ValueError(f"{name} must have exactly 20 coefficients")
            object.__setattr__(self, name, arr)
        for name in ("line_scale", "samp_scale", "lat_scale", "lon_scale", "h_scale"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive")
        if not np.any(self.line_den) or not np.any(self.samp_den):
            raise ValueError("denominator polynomials must not be identically zero")

    def __eq__(self, other):
        if not isinstance(other, RpcModel):
            return NotImplemented
        for name in ("line_num", "line_den", "samp_num", "samp_den"):
            if not np.array_equal(getattr(self, name), getattr(other, name)):
                return False
        return all(
            getattr(self, name) == getattr(other, name)
            for name in (
                "line_off", "line_scale", "samp_off", "samp_scale",
                "lat_off", "lat_scale", "lon_off", "lon_scale", "h_off", "h_scale",
            )
        )

    @classmethod
    def from_rpb(cls, doc: RpbDocument) -> "RpcModel":
        s = doc.scalars
        return cls(
            line_num=np.array(doc.coeffs["LINE_NUM_COEFF"]),
            line_den=np.array(doc.coeffs["LINE_DEN_COEFF"]),
            samp_num=np.array(doc.coeffs["SAMP_NUM_COEFF"]),
            samp_den=np.array(doc.coeffs["SAMP_DEN_COEFF"]),
            line_off=s["LINE_OFF"],
            line_scale=s["LINE_SCALE"],
            samp_off=s["SAMP_OFF"],
            samp_scale=s["SAMP_SCALE"],
            lat_off=s["LAT_OFF"],
            lat_scale=s["LAT_SCALE"],
            lon_off=s["LONG_OFF"],
            lon_scale=s["LONG_SCALE"],
            h_off=s["HEIGHT_OFF"],
            h_scale=s["HEIGHT_SCALE"],
        )

    def to_rpb(self) -> RpbDocument:
        scalars = {
            "LINE_OFF": self.line_off,
            "SAMP_OFF": self.samp_off,
            "LAT_OFF": self.lat_off,
            "LONG_OFF": self.lon_off,
            "HEIGHT_OFF": self.h_off,
            "LINE_SCALE": self.line_scale,
            "SAMP_SCALE": self.samp_scale,
            "LAT_SCALE": self.lat_scale,
            "LONG_SCALE": self.lon_scale,
            "HEIGHT_SCALE": self.h_scale,
        }
        coeffs = {
            "LINE_NUM_COEFF": [float(v) for v in self.line_num],
            "LINE_DEN_COEFF": [float(v) for v in self.line_den],
            "SAMP_NUM_COEFF": [float(v) for v in self.samp_num],
            "SAMP_DEN_COEFF": [float(v) for v in self.samp_den],
        }
        return RpbDocument({k: float(v) for k, v in scalars.items()}, coeffs)

    def normalize(self, lat, lon, h):
        phi = (np.asarray(lat, dtype=float) - self.lat_off) / self.lat_scale
        lam = (np.asarray(lon, dtype=float) - self.lon_off) / self.lon_scale
        hn = (np.asarray(h, dtype=float) - self.h_off) / self.h_scale
        return phi, lam, hn

    def project(self, lat, lon, h):
        """Forward projection to (row, col) pixels. Accepts scalars or arrays.

        Raises RpcDomainError when a denominator magnitude drops below 1e-12
        (the point is outside the model's validity); no silent clamping.
        """
        row, col, bad = self._project_masked(lat, lon, h)
        if np.any(bad):
            raise RpcDomainError("denominator near zero: point outside model validity")
        if row.ndim == 0:
            return float(row), float(col)
        return row, col

    def _project_masked(self, lat, lon, h):
        """Projection plus a mask of domain failures (for bulk pipelines that
        must count failures rather than abort on the first)."""
        phi, lam, hn = self.normalize(lat, lon, h)
        num_r = _poly(self.line_num, lam, phi, hn)
        den_r = _poly(self.line_den, lam, phi, hn)
        num_c = _poly(self.samp_num, lam, phi, hn)
        den_c = _poly(self.samp_den, lam, phi, hn)
        bad = (np.abs(den_r) <= DEN_EPS) | (np.abs(den_c) <= DEN_EPS)
        safe_r = np.where(bad, 1.0, den_r)
        safe_c = np.where(bad, 1.0, den_c)
        row = (num_r / safe_r) * self.line_scale + self.line_off
        col = (num_c / safe_c) * self.samp_scale + self.samp_off
        return np.asarray(row), np.asarray(col), bad

    def project_point(self, p: GeoPoint):
        return self.project(p.lat, p.lon, p.h)

    def jacobian(self, lat, lon, h) -> np.ndarray:
        """Analytic 2x3 Jacobian d(row, col)/d(lat, lon, h) at a point."""
        phi, lam, hn = self.normalize(lat, lon, h)
        rows = []
        for num, den, out_scale in (
            (self.line_num, self.line_den, self.line_scale),
            (self.samp_num, self.samp_den, self.samp_scale),
        ):
            n = _poly(num, lam, phi, hn)
            d = _poly(den, lam, phi, hn)
            if abs(d) <= DEN_EPS:
                raise RpcDomainError("denominator near zero in jacobian")
            # quotient rule per normalized coordinate, then chain rule
            # through the world scale factors
            dn = np.array([
                _poly_dphi(num, lam, phi, hn),
                _poly_dlam(num, lam, phi, hn),
                _poly_dh(num, lam, phi, hn),
            ])
            dd = np.array([
                _poly_dphi(den, lam, phi, hn),
                _poly_dlam(den, lam, phi, hn),
                _poly_dh(den, lam, phi, hn),
            ])
            g = (dn * d - n * dd) / (d * d)
            world_scales = np.array([self.lat_scale, self.lon_scale, self.h_scale])
            rows.append(g * out_scale / world_scales)
        return np.vstack(rows)

    def backproject(self, row, col, h, tol_px: float = 1e-8, max_iter: int = 50) -> GeoPoint:
        """Invert the projection at a fixed height via damped Gauss-Newton.

        Starts at the model offsets, iterates on (lat, lon) with the 2x2
        lat/lon sub-Jacobian and a halving line search. Converged when the
        pixel residual norm falls below tol_px.
        """
        target = np.array([row, col], dtype=float)
        lat, lon = self.lat_off, self.lon_off

        def residual(la, lo):
            r, c = self.project(la, lo, h)
            return target - np.array([r, c])

        res = residual(lat, lon)
        cost = res @ res
        for _ in range(max_iter):
            if math.sqrt(cost) < tol_px:
                return GeoPoint(lat, lon, float(h))
            jac = self.jacobian(lat, lon, h)[:, :2]
            det = jac[0, 0] * jac[1, 1] - jac[0, 1] * jac[1, 0]
            if abs(det) < 1e-18:
                raise RpcConvergenceError("singular lat/lon sub-Jacobian")
            step = np.linalg.solve(jac, res)
            alpha = 1.0
            for _ in range(30):
                lat_t, lon_t = lat + alpha * step[0], lon + alpha * step[1]
                try:
                    res_t = residual(lat_t, lon_t)
                except RpcDomainError:
                    alpha *= 0.5
                    continue
                cost_t = res_t @ res_t
                if cost_t < cost:
                    lat, lon, res, cost = lat_t, lon_t, res_t, cost_t
                    break
                alpha *= 0.5
            else:
                raise RpcConvergenceError("line search failed to reduce residual")
        if math.sqrt(cost) < tol_px:
            return GeoPoint(lat, lon, float(h))
        raise RpcConvergenceError(
            f"no convergence after {max_iter} iterations (residual {math.sqrt(cost):.3e} px)"
        )


@dataclass(frozen=True)
class AffineCamera:
    """First-order expansion of an RPC camera about an anchor world point.

    linear rows are d(row, col)/d(lat, lon, h); bias is the projection of the
    world origin under the expansion. Note this bias is unrelated to the
    per-image alignment bias estimated by bundle adjustment.
    """

    linear: np.ndarray   # 2x3
    bias: np.ndarray     # 2
    anchor: GeoPoint

    def __post_init__(self):
        object.__setattr__(self, "linear", np.asarray(self.linear, dtype=float))
        object.__setattr__(self, "bias", np.asarray(self.bias, dtype=float))
        if self.linear.shape != (2, 3) or self.bias.shape != (2,):
            raise ValueError("linear must be 2x3 and bias a 2-vector")

    def project(self, lat, lon, h):
        """Pure affine action; returns (row, col), scalars or arrays."""
        x = np.stack([np.asarray(lat, dtype=float),
                      np.asarray(lon, dtype=float),
                      np.asarray(h, dtype=float)])
        out = np.tensordot(self.linear, x, axes=1) + self.bias.reshape(2, *([1] * (x.ndim - 1)))
        row, col = out[0], out[1]
        if row.ndim == 0:
            return float(row), float(col)
        return row, col

    def project_point(self, p: GeoPoint):
        return self.project(p.lat, p.lon, p.h)

    def homogeneous(self) -> np.ndarray:
        """3x4 camera matrix in (col, row, 1) homogeneous pixel convention."""
        m = np.zeros((3, 4))
        m[0, :3] = self.linear[1]
        m[0, 3] = self.bias[1]
        m[1, :3] = self.linear[0]
        m[1, 3] = self.bias[0]
        m[2, 3] = 1.0
        return m

    def compose_pixel_map(self, hom: np.ndarray) -> "AffineCamera":
        """Pre-multiply by a planar homography acting on (col, row, 1) pixels.

        The homography must be affine (last row 0, 0, 1); rigid motions from
        the crop-rotate-crop chain all qualify. The anchor is unchanged.
        """
        hom = np.asarray(hom, dtype=float)
        if hom.shape != (3, 3) or not np.allclose(hom[2], [0.0, 0.0, 1.0]):
            raise ValueError("pixel map must be an affine homography")
        lin_cr = np.vstack([self.linear[1], self.linear[0]])   # (col, row) rows
        bias_cr = np.array([self.bias[1], self.bias[0]])
        new_lin_cr = hom[:2, :2] @ lin_cr
        new_bias_cr = hom[:2, :2] @ bias_cr + hom[:2, 2]
        return AffineCamera(
            linear=np.vstack([new_lin_cr[1], new_lin_cr[0]]),
            bias=np.array([new_bias_cr[1], new_bias_cr[0]]),
            anchor=self.anchor,
        )


def affine_approx(cam: RpcModel, x0: GeoPoint) -> AffineCamera:
    """Local affine camera anchored at x0: exact there, first-order nearby."""
    r0, c0 = cam.project(x0.lat, x0.lon, x0.h)
    jac = cam.jacobian(x0.lat, x0.lon, x0.h)
    x0_vec = np.array([x0.lat, x0.lon, x0.h])
    bias = np.array([r0, c0]) - jac @ x0_vec
    return AffineCamera(linear=jac, bias=bias, anchor=x0)


@dataclass(frozen=True)
class AffineFundamental:
    """Affine epipolar matrix [[0,0,a],[0,0,b],[c,d,e]] in the convention
    x_i^T F x_j with x_j from the second image and pixels as (col, row, 1).

    Stored normalized: ||(a,b,c,d,e)|| = 1 with the first nonzero entry
    positive.
    """

    a: float
    b: float
    c: float
    d: float
    e: float

    def __post_init__(self):
        if self.a == 0 and self.b == 0:
            raise DegenerateCameraError("(a, b) must be nonzero")
        if self.c == 0 and self.d == 0:
            raise DegenerateCameraError("(c, d) must be nonzero")

    @classmethod
    def from_vector(cls, v) -> "AffineFundamental":
        v = np.asarray(v, dtype=float)
        norm = np.linalg.norm(v)
        if norm == 0 or not np.all(np.isfinite(v)):
            raise DegenerateCameraError("fundamental vector is zero or non-finite")
        v = v / norm
        for x in v:
            if x != 0.0:
                if x < 0.0:
                    v = -v
                break
        return cls(*[float(x) for x in v])

    def vector(self) -> np.ndarray:
        return np.array([self.a, self.b, self.c, self.d, self.e])

    def matrix(self) -> np.ndarray:
        return np.array([
            [0.0, 0.0, self.a],
            [0.0, 0.0, self.b],
            [self.c, self.d, self.e],
        ])

    def epipolar_residual(self, x_i, x_j) -> np.ndarray:
        """x_i^T F x_j for pixel pairs given as (row, col) tuples or arrays."""
        r_i, c_i = np.asarray(x_i[0], dtype=float), np.asarray(x_i[1], dtype=float)
        r_j, c_j = np.asarray(x_j[0], dtype=float), np.asarray(x_j[1], dtype=float)
        return self.a * c_i + self.b * r_i + self.c * c_j + self.d * r_j + self.e

    def transposed(self) -> "AffineFundamental":
        """The matrix for the swapped image order."""
        return AffineFundamental.from_vector([self.c, self.d, self.a, self.b, self.e])


def affine_fundamental(cam_i: AffineCamera, cam_j: AffineCamera) -> AffineFundamental:
    """Fundamental matrix of two affine cameras.

    Primary route is the epipole/pseudo-inverse construction
    F = [e_i]_x P_i P_j^+ with e_i the image of camera j's center. Pairs whose
    viewing directions coincide (in-plane rigid relation) make that epipole
    vanish while a valid one-parameter family of matrices still exists; those
    fall back to the null-space construction, which picks the family member
    given by the smallest singular direction. Truly coincident cameras are an
    error.
    """
    p_i = cam_i.homogeneous()
    p_j = cam_j.homogeneous()
    if np.allclose(p_i, p_j, rtol=0, atol=1e-12 * max(1.0, float(np.max(np.abs(p_i))))):
        raise DegenerateCameraError("cameras are coincident; fundamental undefined")
    _, sv, vt = np.linalg.svd(p_j)
    if sv[2] < 1e-12 * sv[0]:
        raise DegenerateCameraError("camera j is rank-deficient")
    center_j = vt[-1]
    e_i = p_i @ center_j
    lin_scale = max(float(np.max(np.abs(p_i))), float(np.max(np.abs(p_j))))
    if np.linalg.norm(e_i) > 1e-9 * lin_scale:
        cross = np.array([
            [0.0, -e_i[2], e_i[1]],
            [e_i[2], 0.0, -e_i[0]],
            [-e_i[1], e_i[0], 0.0],
        ])
        f = cross @ p_i @ np.linalg.pinv(p_j)
        scale = np.max(np.abs(f))
        if scale > 0 and np.isfinite(scale) and np.max(np.abs(f[:2, :2])) <= 1e-6 * scale:
            return AffineFundamental.from_vector(
                [f[0, 2], f[1, 2], f[2, 0], f[2, 1], f[2, 2]]
            )
    return _affine_fundamental_nullspace(p_i, p_j)


def _affine_fundamental_nullspace(p_i: np.ndarray, p_j: np.ndarray) -> AffineFundamental:
    """Solve a*u_i + b*v_i + c*u_j + d*v_j + e = 0 over all world points:
    (a,b,c,d) spans the null space of the stacked linear parts, e follows from
    the biases."""
    g = np.hstack([p_i[:2, :3].T, p_j[:2, :3].T])  # 3x4, columns (a,b,c,d)
    _, sv, vt = np.linalg.svd(g)
    null = vt[-1]
    residual = np.linalg.norm(g @ null)
    if residual > 1e-9 * max(1.0, sv[0]):
        raise DegenerateCameraError("no affine fundamental satisfies the camera pair")
    e = -(null[0] * p_i[0, 3] + null[1] * p_i[1, 3]
          + null[2] * p_j[0, 3] + null[3] * p_j[1, 3])
    return AffineFundamental.from_vector([null[0], null[1], null[2], null[3], e])
