"""Multifractal random changes of time.

1D: Brownian motion run at the measure clock t -> B_{M([0,t])}.
mD: the corner-set white-noise field B(x) = W(Gamma(B intersect C(x))),
realized atom-wise: each transported atom carries an independent standard
Gaussian scaled by the square root of its image Lebesgue mass, so that the
conditional covariance of two evaluations is exactly the shared-atom mass.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .measures import DiscreteMeasure
from .rng import stream


@dataclass(frozen=True)
class TimeChangedPath:
    times: np.ndarray            # evaluation grid on [0, t_max]
    clock: np.ndarray            # cumulative measure mass at the times
    values: np.ndarray           # Brownian motion at the clock
    increments_var: np.ndarray   # per-interval variances (= clock increments)

    def __post_init__(self):
        if np.any(self.increments_var < 0):
            raise ValueError("negative clock increment")


def time_change_1d(measure: DiscreteMeasure, bm_resolution: int,
                   seed: int, t_max: float | None = None) -> TimeChangedPath:
    """Sample t -> B_{M([0,t])} on a uniform grid of bm_resolution intervals.

    The Brownian increments are drawn with variances equal to the clock
    increments, so the variance ledger telescopes to the final clock value
    by construction.
    """
    if measure.dim != 1:
        raise ValueError("the 1D time change needs a one-dimensional measure")
    if bm_resolution < 1:
        raise ValueError("bm_resolution must be at least 1")
    pos = measure.atoms[:, 0]
    if np.any(pos < 0):
        raise ValueError("measure must live on [0, t_max]; shift it first")
    if t_max is None:
        t_max = float(pos.max())
    times = np.linspace(0.0, t_max, bm_resolution + 1)
    # mass per interval (t_{j-1}, t_j]; atoms at 0 belong to the first one
    bins = np.clip(np.searchsorted(times, pos, side="left") - 1, 0,
                   bm_resolution - 1)
    inc = np.zeros(bm_resolution)
    np.add.at(inc, bins, measure.weights)
    clock = np.concatenate(([0.0], np.cumsum(inc)))
    rng = stream(seed, "bm")
    steps = rng.standard_normal(bm_resolution) * np.sqrt(inc)
    values = np.concatenate(([0.0], np.cumsum(steps)))
    return TimeChangedPath(times=times, clock=clock, values=values,
                           increments_var=inc)


@dataclass(frozen=True)
class CornerField:
    eval_points: np.ndarray
    values: np.ndarray
    gaussians: np.ndarray        # the frozen per-atom standard normals
    image_masses: np.ndarray     # v_i = (C_R / M(B_R)) * w_i per atom
    total_variance: float        # sum v_i = C_R exactly

    def __post_init__(self):
        if np.any(self.image_masses < 0):
            raise ValueError("image masses must be nonnegative")


def _corner_mask(atoms: np.ndarray, x: np.ndarray) -> np.ndarray:
    lo = np.minimum(0.0, x)
    hi = np.maximum(0.0, x)
    return np.all((atoms >= lo) & (atoms <= hi), axis=1)


def corner_variance(chart, x) -> float:
    """Conditional variance of B(x): the image Lebesgue mass of the source
    atoms inside the corner cube C(x)."""
    atoms = chart.chained.source_atoms
    v = (chart.C_R / chart.mass_B_R) * chart.chained.source_weights
    x = np.asarray(x, dtype=np.float64).ravel()
    return float(v[_corner_mask(atoms, x)].sum())


def corner_field(chart, eval_points, seed: int) -> CornerField:
    """White-noise field B(x) = sum over atoms in C(x) of g_i sqrt(v_i).

    Membership in the corner cube is decided on the source atoms (the
    composed map is injective there), and v_i = (C_R / M(B_R)) w_i is the
    Lebesgue mass of atom i's image cell, so the conditional covariance of
    B(x), B(y) is exactly the shared-atom image mass.
    """
    params = chart.params
    pts = np.atleast_2d(np.asarray(eval_points, dtype=np.float64))
    if pts.shape[1] != params.m:
        raise ValueError("evaluation points have the wrong dimension")
    if np.any(np.abs(pts) > params.R):
        raise ValueError("evaluation points must lie in [-R, R]^m")
    atoms = chart.chained.source_atoms
    weights = chart.chained.source_weights
    v = (chart.C_R / chart.mass_B_R) * weights
    g = stream(seed, "corner").standard_normal(atoms.shape[0])
    amp = g * np.sqrt(v)
    values = np.array([amp[_corner_mask(atoms, x)].sum() for x in pts])
    return CornerField(eval_points=pts, values=values, gaussians=g,
                       image_masses=v, total_variance=float(v.sum()))
