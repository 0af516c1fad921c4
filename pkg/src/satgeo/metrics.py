"""Evaluation metrics: symmetric epipolar distance, match precision, affine
pose decomposition with error AUC, and DSM-vs-reference comparison.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geodesy import RasterGrid
from .rpc import AffineFundamental

DEFAULT_DELTA_EPI = 3.0
AUC_THRESHOLDS = (5.0, 10.0, 20.0)


class MetricError(ValueError):
    """Empty input or degenerate matrix where a metric is undefined."""


@dataclass(frozen=True)
class PoseParams:
    """Relative affine camera motion decomposed from a fundamental matrix:
    cyclotorsion theta, out-of-plane rotation phi (radians), scale s."""

    theta: float
    phi: float
    s: float

    def __post_init__(self):
        if not -math.pi / 2 < self.theta <= math.pi / 2:
            raise MetricError(f"theta {self.theta} outside (-pi/2, pi/2]")
        if not 0.0 <= self.phi <= math.pi / 2:
            raise MetricError(f"phi {self.phi} outside [0, pi/2]")
        if not self.s > 0:
            raise MetricError(f"scale {self.s} must be positive")


@dataclass(frozen=True)
class DsmComparison:
    completeness: float  # percent of jointly valid cells with |dh| < 1 m
    rmse: float          # meters
    mae: float           # median absolute height error, meters
    valid_count: int


def symmetric_epipolar_distance(f: AffineFundamental, x_i, x_j):
    """Squared-distance form of the symmetric epipolar distance.

    x_i, x_j are (row, col) pixel pairs (scalars or arrays). The two epipolar
    line normals of an affine matrix are (a, b) in image i and (c, d) in
    image j, so the value is
    0.5 * (x_i^T F x_j)^2 * (1/(a^2+b^2) + 1/(c^2+d^2)).
    """
    n_i = f.a * f.a + f.b * f.b
    n_j = f.c * f.c + f.d * f.d
    if n_i == 0.0 or n_j == 0.0:
        raise MetricError("degenerate line normals in fundamental matrix")
    con = f.epipolar_residual(x_i, x_j)
    return 0.5 * con * con * (1.0 / n_i + 1.0 / n_j)


def precision(matches, f_gt: AffineFundamental, delta_epi: float = DEFAULT_DELTA_EPI) -> float:
    """Percentage of matches with symmetric epipolar distance below delta_epi.

    matches: iterable of MatchRecord (row_i, col_i, row_j, col_j).
    """
    matches = list(matches)
    if not matches:
        raise MetricError("precision of an empty match list is undefined")
    rows_i = np.array([m.row_i for m in matches])
    cols_i = np.array([m.col_i for m in matches])
    rows_j = np.array([m.row_j for m in matches])
    cols_j = np.array([m.col_j for m in matches])
    d = symmetric_epipolar_distance(f_gt, (rows_i, cols_i), (rows_j, cols_j))
    return 100.0 * float(np.count_nonzero(d < delta_epi)) / len(matches)


def decompose_affine_f(f: AffineFundamental) -> PoseParams:
    """Extract (theta, phi, s) from an affine fundamental matrix.

    theta is the relative in-plane rotation between the two epipolar-line
    normal directions, folded modulo pi into (-pi/2, pi/2]. s is the line
    normal magnitude ratio ||(c,d)|| / ||(a,b)||. phi follows the
    weak-perspective foreshortening convention phi = arccos(min(s, 1/s)),
    which is scale-invariant and symmetric under camera swap.
    """
    n_i = math.hypot(f.a, f.b)
    n_j = math.hypot(f.c, f.d)
    if n_i == 0.0 or n_j == 0.0:
        raise MetricError("degenerate (a,b) or (c,d) in fundamental matrix")
    theta = math.atan2(f.b, f.a) - math.atan2(f.d, f.c)
    theta = math.fmod(theta, math.pi)
    if theta > math.pi / 2:
        theta -= math.pi
    elif theta <= -math.pi / 2:
        theta += math.pi
    s = n_j / n_i
    phi = math.acos(min(s, 1.0 / s))
    return PoseParams(theta=theta, phi=phi, s=s)


def pose_error(gt: PoseParams, est: PoseParams) -> float:
    """max(|d_theta|, |d_phi|) in degrees, with d_theta folded modulo pi."""
    d_theta = math.fmod(abs(gt.theta - est.theta), math.pi)
    if d_theta > math.pi / 2:
        d_theta = math.pi - d_theta
    d_phi = abs(gt.phi - est.phi)
    return math.degrees(max(d_theta, d_phi))


def auc(errors, thresholds=AUC_THRESHOLDS) -> dict[float, float]:
    """Area under the cumulative error curve, percent, per threshold.

    Standard pose-AUC construction: recall as a function of error over the
    sorted list, integrated by trapezoid up to each threshold and normalized
    by it.
    """
    errors = sorted(float(e) for e in errors)
    if not errors:
        raise MetricError("AUC of an empty error list is undefined")
    xs = np.array([0.0] + errors)
    recall = np.linspace(0, 1, len(errors) + 1)
    out = {}
    for t in thresholds:
        last = int(np.searchsorted(xs, t))
        x = np.append(xs[:last], t)
        y = np.append(recall[:last], recall[last - 1])
        out[float(t)] = 100.0 * float(np.trapezoid(y, x)) / t
    return out


def dsm_compare(test: RasterGrid, truth: RasterGrid) -> DsmComparison:
    """Completeness / RMSE / median-absolute-error over jointly valid cells."""
    if test.values.shape != truth.values.shape:
        raise MetricError(
            f"grids must be co-registered: {test.values.shape} vs {truth.values.shape}"
        )
    both = test.valid_mask() & truth.valid_mask()
    n = int(np.count_nonzero(both))
    if n == 0:
        raise MetricError("no jointly valid cells")
    dh = test.values.astype(np.float64)[both] - truth.values.astype(np.float64)[both]
    completeness = 100.0 * float(np.count_nonzero(np.abs(dh) < 1.0)) / n
    rmse = float(np.sqrt(np.mean(dh * dh)))
    mae = float(np.median(np.abs(dh)))
    return DsmComparison(completeness=completeness, rmse=rmse, mae=mae, valid_count=n)


def report_table(rows, headers) -> str:
    """Plain fixed-width table for evaluation summaries."""
    cells = [[str(h) for h in headers]] + [
        [f"{v:.2f}" if isinstance(v, float) else str(v) for v in row] for row in rows
    ]
    widths = [max(len(r[k]) for r in cells) for k in range(len(headers))]
    lines = []
    for i, row in enumerate(cells):
        lines.append("  ".join(c.rjust(w) for c, w in zip(row, widths)))
        if i == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines)
