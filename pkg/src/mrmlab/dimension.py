"""Measure-relative Hausdorff dimension estimation and the KPZ relation.

The continuum content inf{sum nu(B_n)^(s/2)} over covers is replaced by a
dyadic surrogate: cover the set by the dyadic boxes it meets, sum the box
masses to the power s/2, and locate the exponent s at which the content is
scale neutral (zero log-log slope), by bisection.  The estimator must pass
the Lebesgue calibration suite (segment, square, Cantor set) before any
random-measure estimate is trusted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fields import sample_field
from .measures import DiscreteMeasure
from .params import ModelParams, zeta


@dataclass(frozen=True)
class DimensionEstimate:
    s_hat: float
    scales: np.ndarray
    residual: float
    method: str                  # "lebesgue" | "measure"

    def __post_init__(self):
        if not np.isfinite(self.s_hat):
            raise ValueError("dimension estimate must be finite")
        if len(self.scales) < 3:
            raise ValueError("at least 3 scales are required")


def _check_scales(scales, R: float) -> np.ndarray:
    scales = np.sort(np.asarray(list(scales), dtype=np.float64))[::-1]
    if scales.size < 3:
        raise ValueError("need at least 3 dyadic scales")
    for s in scales:
        j = math.log2(2.0 * R / s)
        if abs(j - round(j)) > 1e-9:
            raise ValueError(f"scale {s} is not dyadic in the domain [-R, R]")
    return scales


def _box_masses(points: np.ndarray, nu: DiscreteMeasure | None,
                scales: np.ndarray, R: float, m: int) -> list:
    """Masses of the dyadic boxes met by `points`, one array per scale.

    nu=None means Lebesgue (every box fully inside the domain has mass
    side^m).  Zero-mass boxes are dropped, mirroring the continuum cover
    constraint nu(B) > 0.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    out = []
    for delta in scales:
        nside = int(round(2.0 * R / delta))
        idx = np.clip(((pts + R) / delta).astype(np.int64), 0, nside - 1)
        flat = idx[:, 0] if m == 1 else idx[:, 0] * nside + idx[:, 1]
        occupied = np.unique(flat)
        if nu is None:
            out.append(np.full(occupied.size, delta ** m))
            continue
        aidx = np.clip(((nu.atoms + R) / delta).astype(np.int64), 0, nside - 1)
        aflat = aidx[:, 0] if m == 1 else aidx[:, 0] * nside + aidx[:, 1]
        masses = np.zeros(nside ** m)
        np.add.at(masses, aflat, nu.weights)
        box_mass = masses[occupied]
        box_mass = box_mass[box_mass > 0]
        if box_mass.size == 0:
            raise ValueError("the measure vanishes on every covering box")
        out.append(box_mass)
    return out


def _mean_log_content(mass_lists, s: float) -> np.ndarray:
    """log sum nu(B)^(s/2) per scale, averaged over replicas.

    mass_lists is [replica][scale] -> array of box masses.
    """
    n_scales = len(mass_lists[0])
    acc = np.zeros(n_scales)
    for rep in mass_lists:
        for j, masses in enumerate(rep):
            acc[j] += math.log(float(np.sum(masses ** (0.5 * s))))
    return acc / len(mass_lists)


def _slope_and_residual(x: np.ndarray, y: np.ndarray):
    xc = x - x.mean()
    slope = float((xc @ (y - y.mean())) / (xc @ xc))
    resid = y - y.mean() - slope * xc
    return slope, float(np.sqrt((resid ** 2).mean()))


def _bisect_root(mass_lists, scales: np.ndarray, m: int):
    """Exponent where the averaged log content is scale neutral."""
    logd = np.log(scales)

    def slope(s):
        return _slope_and_residual(logd, _mean_log_content(mass_lists, s))[0]

    lo, hi = 0.0, 2.0 * m
    s_lo, s_hi = slope(lo), slope(hi)
    if s_lo >= 0.0:
        root = lo
    elif s_hi <= 0.0:
        root = hi
    else:
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            if slope(mid) < 0.0:
                lo = mid
            else:
                hi = mid
        root = 0.5 * (lo + hi)
    _, resid = _slope_and_residual(logd, _mean_log_content(mass_lists, root))
    return root, resid


def hausdorff_estimate(points, nu: DiscreteMeasure | None, scales,
                       R: float, m: int = 2) -> DimensionEstimate:
    """Dimension of the point set `points` as seen by the measure nu
    (nu=None: Lebesgue), from dyadic covers at the given box sides."""
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    if pts.size == 0:
        raise ValueError("empty point set")
    scales = _check_scales(scales, R)
    mass_lists = [_box_masses(pts, nu, scales, R, m)]
    s_hat, resid = _bisect_root(mass_lists, scales, m)
    return DimensionEstimate(s_hat=s_hat, scales=scales, residual=resid,
                             method="lebesgue" if nu is None else "measure")


def kpz_transform(params: ModelParams, s: float) -> float:
    """KPZ map of a measure-relative dimension: zeta(s/2)."""
    if not (0.0 <= s <= 2.0):
        raise ValueError(f"measure dimension must lie in [0, 2], got {s}")
    return zeta(params, 0.5 * s)


def kpz_inverse(params: ModelParams, d: float) -> float:
    """Lower root s of zeta(s/2) = d (the branch below the parabola's
    argmax, where the transform is increasing); round-trips with
    kpz_transform to 1e-12."""
    g2 = params.gamma2
    if g2 == 0.0:
        return 2.0 * d / params.m
    a = 0.5 * g2
    b = params.m + 0.5 * g2
    disc = b * b - 4.0 * a * d
    if disc < 0:
        raise ValueError(f"dimension {d} exceeds the maximum of the KPZ parabola")
    u = (b - math.sqrt(disc)) / (2.0 * a)
    return 2.0 * u


@dataclass(frozen=True)
class KpzReport:
    s_hat: float
    xi_of_half: float            # zeta(s_hat / 2)
    target_dim: float            # known Euclidean dimension of E
    spread: float                # jackknife standard error of xi(s_hat/2)
    replicas: int
    scales: np.ndarray
    log_contents: np.ndarray     # replica-mean log content at s_hat, per scale


def kpz_check(params: ModelParams, points, target_dim: float, replicas: int,
              grid_n: int = 512, scales=None) -> KpzReport:
    """Monte Carlo check of the KPZ relation for the set `points` with known
    Euclidean dimension: estimates dim wrt M over replicas (averaging log
    contents) and reports zeta(s_hat/2) against the target."""
    if params.gamma2 >= 2 * params.m:
        raise ValueError("KPZ check requires non-degenerate parameters")
    if scales is None:
        scales = [2.0 * params.R / 2 ** j for j in (3, 4, 5, 6)]
    scales = _check_scales(scales, params.R)
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))

    cell = (2.0 * params.R / grid_n) ** params.m
    mass_lists = []
    for rep in range(replicas):
        fs = sample_field(params, grid_n, replica_index=rep)
        nu = DiscreteMeasure(
            _grid_atoms_cached(params, grid_n),
            np.exp(fs.values.ravel()) * cell)
        mass_lists.append(_box_masses(pts, nu, scales, params.R, params.m))

    s_hat, _ = _bisect_root(mass_lists, scales, params.m)
    xi = kpz_transform(params, min(s_hat, 2.0))

    # jackknife over replicas
    if replicas > 1:
        xis = []
        for drop in range(replicas):
            sub = mass_lists[:drop] + mass_lists[drop + 1:]
            s_d, _ = _bisect_root(sub, scales, params.m)
            xis.append(kpz_transform(params, min(s_d, 2.0)))
        xis = np.asarray(xis)
        spread = math.sqrt((replicas - 1) / replicas
                           * float(((xis - xis.mean()) ** 2).sum()))
    else:
        spread = math.nan
    return KpzReport(s_hat=s_hat, xi_of_half=xi, target_dim=target_dim,
                     spread=spread, replicas=replicas, scales=scales,
                     log_contents=_mean_log_content(mass_lists, s_hat))


_GRID_CACHE: dict = {}


def _grid_atoms_cached(params: ModelParams, grid_n: int) -> np.ndarray:
    key = (params.m, grid_n, params.R)
    if key not in _GRID_CACHE:
        from .measures import grid_atoms
        _GRID_CACHE[key] = grid_atoms(params, grid_n)
    return _GRID_CACHE[key]


@dataclass(frozen=True)
class GeodesicDimensionReport:
    estimates: np.ndarray
    mean: float
    conjectured: float           # 1 + gamma2 / 8
    scales: np.ndarray


def geodesic_dimension_experiment(chart, pairs, scales,
                                  samples: int = 4096) -> GeodesicDimensionReport:
    """Euclidean box-counting dimension of geodesic polylines, reported
    beside the conjectured value 1 + gamma2/8.  Report only: no pass/fail."""
    from .geometry import geodesic_polyline

    params = chart.params
    scales = _check_scales(scales, params.R)
    estimates = []
    for x, y in pairs:
        if np.allclose(np.asarray(x, float), np.asarray(y, float)):
            raise ValueError("degenerate polyline: identical endpoints")
        poly = geodesic_polyline(chart, x, y, samples)
        if np.all(np.all(poly.points == poly.points[0], axis=1)):
            raise ValueError("degenerate polyline: all points equal")
        est = hausdorff_estimate(poly.points, None, scales, params.R,
                                 m=params.m)
        estimates.append(est.s_hat)
    estimates = np.asarray(estimates)
    return GeodesicDimensionReport(
        estimates=estimates, mean=float(estimates.mean()),
        conjectured=1.0 + params.gamma2 / 8.0, scales=scales)


# ---------------------------------------------------------------------------
# reference point sets for calibration and experiments
# ---------------------------------------------------------------------------


def segment_points(R: float, n: int = 4096, y: float = 0.0) -> np.ndarray:
    """Horizontal segment through the domain at height y."""
    x = np.linspace(-R, R, n)
    return np.column_stack([x, np.full(n, y)])


def square_points(R: float, n_side: int = 256) -> np.ndarray:
    ax = np.linspace(-R, R, n_side)
    xx, yy = np.meshgrid(ax, ax, indexing="ij")
    return np.column_stack([xx.ravel(), yy.ravel()])


def cantor_points(R: float, depth: int = 9) -> np.ndarray:
    """Endpoints of the level-`depth` middle-thirds construction, scaled to
    [-R, R] x {0}; they meet every box the true Cantor set meets once the
    box side exceeds the level length."""
    intervals = [(0.0, 1.0)]
    for _ in range(depth):
        intervals = [piece
                     for (a, b) in intervals
                     for piece in ((a, a + (b - a) / 3.0),
                                   (b - (b - a) / 3.0, b))]
    ends = sorted({e for ab in intervals for e in ab})
    x = np.asarray(ends) * 2.0 * R - R
    return np.column_stack([x, np.zeros(x.size)])
