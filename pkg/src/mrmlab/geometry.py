"""Pullback metric, distances and geodesics of the flat random chart.

The composed transport map phi sends the measure's support atoms onto the
uniform ball cells; the pullback of the conformally flat metric has the
single factor (M(B_R)/C_R)^2, so distances are Euclidean distances between
images and geodesics are straight segments in image space, mapped back by
the nearest-image inverse.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from . import kernels
from .params import ModelParams
from .transport import ChainedMap, InverseMap, invert_map


@dataclass(frozen=True)
class PullbackChart:
    """Composed map phi, its nearest-image inverse chi, and the conformal
    data: mass_B_R = M(B_R) and C_R = Lebesgue volume of the discretized
    ball (so the degenerate measure gives factor exactly 1)."""

    params: ModelParams
    chained: ChainedMap
    inverse: InverseMap
    mass_B_R: float
    C_R: float

    def __post_init__(self):
        if self.mass_B_R <= 0:
            raise ValueError("chart requires positive ball mass")
        if self.C_R <= 0:
            raise ValueError("chart requires positive ball volume")

    @property
    def support(self) -> np.ndarray:
        return self.chained.source_atoms

    def phi(self, index) -> np.ndarray:
        return self.chained.images[index]


def build_chart(chained: ChainedMap, params: ModelParams,
                grid_n: int | None = None) -> PullbackChart:
    mass = float(chained.source_weights.sum())
    # every step targets the ball cells; their count times the cell volume
    # is the Lebesgue measure of the discretized ball
    n_cells = chained.source_atoms.shape[0]
    if grid_n is None:
        grid_n = _infer_grid_n(chained, params)
    spacing = 2.0 * params.R / grid_n
    return PullbackChart(params=params, chained=chained,
                         inverse=invert_map(chained), mass_B_R=mass,
                         C_R=n_cells * spacing ** params.m)


def _infer_grid_n(chained: ChainedMap, params: ModelParams) -> int:
    # source atoms sit on grid cell centers -R + h(i + 1/2); the smallest
    # positive coordinate gap is the spacing
    coords = np.unique(chained.source_atoms[:, 0])
    if coords.size < 2:
        raise ValueError("cannot infer grid spacing from a single atom")
    h = float(np.diff(coords).min())
    return int(round(2.0 * params.R / h))


def metric_factor(chart: PullbackChart) -> float:
    """Conformal factor d = (M(B_R)/C_R)^2 of the pullback metric."""
    return (chart.mass_B_R / chart.C_R) ** 2


def _support_index(chart: PullbackChart, point, snap: bool) -> int:
    """Index of the support atom at `point` (nearest atom, lowest index on
    ties); off-support points error unless snap=True, which warns."""
    pts = np.atleast_2d(np.asarray(point, dtype=np.float64))
    idx = int(kernels.nearest_index(pts, chart.support)[0])
    gap = float(np.linalg.norm(chart.support[idx] - pts[0]))
    if gap > 1e-9 * max(1.0, chart.params.R):
        if not snap:
            raise ValueError(f"point {pts[0]} is not a support atom")
        warnings.warn(f"off-support query snapped to nearest atom "
                      f"(distance {gap:.3e})", RuntimeWarning, stacklevel=3)
    return idx


def dist(chart: PullbackChart, x, y, snap: bool = False) -> float:
    """Pullback distance (M(B_R)/C_R) * |phi(x) - phi(y)| between support
    atoms; off-support points are rejected unless snap=True."""
    i = _support_index(chart, x, snap)
    j = _support_index(chart, y, snap)
    scale = chart.mass_B_R / chart.C_R
    return float(scale * np.linalg.norm(chart.phi(i) - chart.phi(j)))


def geodesic(chart: PullbackChart, x, y, t: float, snap: bool = False):
    """Point chi(t*phi(x) + (1-t)*phi(y)); t=1 returns x, t=0 returns y."""
    if not (0.0 <= t <= 1.0):
        raise ValueError(f"geodesic parameter t must be in [0, 1], got {t}")
    i = _support_index(chart, x, snap)
    j = _support_index(chart, y, snap)
    p = t * chart.phi(i) + (1.0 - t) * chart.phi(j)
    return chart.inverse(p)


@dataclass(frozen=True)
class GeodesicPolyline:
    ts: np.ndarray
    points: np.ndarray           # chart points chi(...)
    image_points: np.ndarray     # straight segment samples before snapping
    repeated: np.ndarray         # True where a sample repeats its predecessor


def geodesic_polyline(chart: PullbackChart, x, y, samples: int,
                      snap: bool = False) -> GeodesicPolyline:
    """Geodesic sampled at a uniform t grid from t=0 (y) to t=1 (x);
    consecutive duplicates are flagged, not removed."""
    if samples < 2:
        raise ValueError("need at least 2 samples")
    i = _support_index(chart, x, snap)
    j = _support_index(chart, y, snap)
    ts = np.linspace(0.0, 1.0, samples)
    seg = ts[:, None] * chart.phi(i)[None, :] + (1 - ts)[:, None] * chart.phi(j)[None, :]
    idx = chart.inverse.atom_index(seg)
    pts = chart.chained.source_atoms[idx]
    repeated = np.zeros(samples, dtype=bool)
    repeated[1:] = np.all(pts[1:] == pts[:-1], axis=1)
    return GeodesicPolyline(ts=ts, points=pts, image_points=seg,
                            repeated=repeated)
