"""Sampling of the cutoff log-correlated Gaussian field on a regular grid.

The field omega_l has covariance gamma2 * K_l(x - y), where K_l is the
rotation average of the radial profile rho_l:

    rho_l(y) = ln(T/|y|)            for l <= |y| <= T
             = ln(T/l) + 1 - |y|/l  for |y| <= l
             = 0                    for |y| > T

In one dimension K_l(x) = rho_l(|x|).  In two dimensions
K_l(x) = (1/2pi) int rho_l(|x| |cos t|) dt; the integral has a closed form
in terms of int_0^phi ln cos, which we evaluate through the log-sine series
(machine precision, no quadrature).  A trapezoid quadrature of the same
integral is kept as an independent cross-check.

Sampling is by circulant embedding: the grid is periodized to a torus of
physical side 2*(2R) + 2T, the covariance row is Fourier-diagonalized and
a complex white noise is colored by the root spectrum.  The spectrum is
nonnegative for this kernel at that padding; tiny negative eigenvalues
(round-off) are clamped when their relative mass is below 1e-6, otherwise
a dense Cholesky fallback is used for grids of at most 4096 cells.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import zeta as _riemann_zeta

from .params import ModelParams
from .rng import stream

CLAMP_TOLERANCE = 1e-6
DENSE_FALLBACK_MAX_ATOMS = 4096
QUADRATURE_FLOOR = 64


class EmbeddingError(RuntimeError):
    """Circulant embedding produced too much negative spectral mass."""


# ---------------------------------------------------------------------------
# radial profile and its rotation average
# ---------------------------------------------------------------------------


def rho(r, l: float, T: float):
    """Radial covariance profile rho_l; log branch on [l, T], linear ramp
    below l, zero beyond T.  Continuous in r."""
    _check_cutoff(l, T)
    r = np.abs(np.asarray(r, dtype=np.float64))
    safe = np.where((r > l) & (r <= T), r, T)
    out = np.where(
        r <= l,
        math.log(T / l) + 1.0 - r / l,
        np.where(r <= T, np.log(T / safe), 0.0),
    )
    if out.ndim == 0:
        return float(out)
    return out


def _check_cutoff(l: float, T: float) -> None:
    if not (0.0 < l <= T):
        raise ValueError(f"cutoff must satisfy 0 < l <= T, got l={l}, T={T}")


# log-sine series: S(a) = int_0^a ln(sin s / s) ds, analytic on [0, pi/2]
_LOGSINE_J = np.arange(1, 81)
_LOGSINE_COEF = _riemann_zeta(2 * _LOGSINE_J) / (
    _LOGSINE_J * (2 * _LOGSINE_J + 1) * np.pi ** (2 * _LOGSINE_J)
)


def _log_cos_integral(phi: np.ndarray) -> np.ndarray:
    """int_0^phi ln cos t dt for phi in [0, pi/2], elementwise."""
    phi = np.asarray(phi, dtype=np.float64)
    a = np.clip(np.pi / 2.0 - phi, 0.0, np.pi / 2.0)
    powers = a[..., None] ** (2 * _LOGSINE_J + 1)
    S = -(powers * _LOGSINE_COEF).sum(axis=-1)
    a_log_a = np.where(a > 0, a * np.log(np.where(a > 0, a, 1.0)), 0.0)
    return -(np.pi / 2.0) * math.log(2.0) - (a_log_a - a + S)


def kernel(r, l: float, T: float, m: int):
    """Rotation-averaged covariance kernel K_l at radius |x| = r.

    m=1: identical to rho.  m=2: closed form of the Haar average
    (1/2pi) int rho_l(r |cos t|) dt.  Symmetric, radially nonincreasing.
    """
    _check_cutoff(l, T)
    if m == 1:
        return rho(r, l, T)
    if m != 2:
        raise ValueError(f"kernel supports m in (1, 2), got {m}")
    r = np.abs(np.asarray(r, dtype=np.float64))
    scalar = r.ndim == 0
    r = np.atleast_1d(r)
    out = np.empty_like(r)

    ramp_all = r <= l
    out[ramp_all] = math.log(T / l) + 1.0 - (2.0 / np.pi) * (r[ramp_all] / l)

    rr = r[~ramp_all]
    if rr.size:
        theta_T = np.arccos(np.minimum(T / rr, 1.0))
        theta_l = np.arccos(np.minimum(l / rr, 1.0))
        log_part = (theta_l - theta_T) * np.log(T / rr) - (
            _log_cos_integral(theta_l) - _log_cos_integral(theta_T)
        )
        ramp_part = (np.pi / 2.0 - theta_l) * (math.log(T / l) + 1.0) - (
            rr / l
        ) * (1.0 - np.sin(theta_l))
        out[~ramp_all] = (2.0 / np.pi) * (log_part + ramp_part)
    return float(out[0]) if scalar else out


def kernel_quadrature(r, l: float, T: float, m: int, n_theta: int = 4096):
    """Trapezoid Haar average over a quarter period; independent of the
    closed form, used for resolution-doubling consistency checks."""
    _check_cutoff(l, T)
    if n_theta < QUADRATURE_FLOOR:
        raise ValueError(
            f"quadrature resolution {n_theta} below floor {QUADRATURE_FLOOR}"
        )
    if m == 1:
        return rho(r, l, T)
    if m != 2:
        raise ValueError(f"kernel supports m in (1, 2), got {m}")
    r = np.abs(np.asarray(r, dtype=np.float64))
    scalar = r.ndim == 0
    r = np.atleast_1d(r)
    theta = np.linspace(0.0, np.pi / 2.0, n_theta + 1)
    vals = rho(r[:, None] * np.cos(theta)[None, :], l, T)
    out = np.trapezoid(vals, theta, axis=1) * (2.0 / np.pi)
    return float(out[0]) if scalar else out


# ---------------------------------------------------------------------------
# circulant embedding
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SpectralFactors:
    """Root spectrum of the periodized covariance plus the clamp report."""

    factors: np.ndarray          # sqrt of clamped eigenvalues, padded shape
    clamp_mass_rel: float        # |negative eigenvalue mass| / total |mass|
    pad_n: int                   # cells per side of the embedding torus


def spectral_factorization(cov_row: np.ndarray) -> SpectralFactors:
    """Fourier factorization of a stationary covariance row on the torus.

    Negative eigenvalues with relative mass <= 1e-6 are clamped to zero and
    reported; above that the embedding is rejected.
    """
    cov_row = np.asarray(cov_row, dtype=np.float64)
    eigs = np.fft.fftn(cov_row).real
    neg = -eigs[eigs < 0].sum()
    total = np.abs(eigs).sum()
    rel = float(neg / total) if total > 0 else 0.0
    if rel > CLAMP_TOLERANCE:
        raise EmbeddingError(
            f"negative spectral mass {rel:.3e} exceeds {CLAMP_TOLERANCE:.0e}"
        )
    factors = np.sqrt(np.maximum(eigs, 0.0))
    factors.setflags(write=False)
    return SpectralFactors(factors=factors, clamp_mass_rel=rel,
                           pad_n=cov_row.shape[0])


def _pad_cells(grid_n: int, R: float, T: float) -> int:
    spacing = 2.0 * R / grid_n
    return int(math.ceil((2.0 * (2.0 * R) + 2.0 * T) / spacing))


@lru_cache(maxsize=8)
def _unit_factors(m: int, grid_n: int, R: float, T: float,
                  l: float) -> SpectralFactors:
    """Spectral factors of K_l itself (gamma2 = 1); gamma2 scales linearly."""
    spacing = 2.0 * R / grid_n
    pad_n = _pad_cells(grid_n, R, T)
    idx = np.arange(pad_n)
    wrap = np.minimum(idx, pad_n - idx) * spacing
    if m == 1:
        row = kernel(wrap, l, T, 1)
    else:
        radii = np.hypot(wrap[:, None], wrap[None, :])
        row = kernel(radii.ravel(), l, T, 2).reshape(pad_n, pad_n)
    return spectral_factorization(row)


@lru_cache(maxsize=4)
def _dense_cholesky(m: int, grid_n: int, R: float, T: float,
                    l: float) -> np.ndarray:
    centers = grid_axes(grid_n, R)
    if m == 1:
        pts = centers[0][:, None]
    else:
        xx, yy = np.meshgrid(centers[0], centers[1], indexing="ij")
        pts = np.column_stack([xx.ravel(), yy.ravel()])
    d = np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=-1)
    cov = kernel(d.ravel(), l, T, m).reshape(d.shape)
    jitter = 1e-12 * cov[0, 0]
    for _ in range(6):
        try:
            L = np.linalg.cholesky(cov + jitter * np.eye(cov.shape[0]))
            L.setflags(write=False)
            return L
        except np.linalg.LinAlgError:
            jitter *= 100.0
    raise EmbeddingError("dense covariance factorization failed")


def grid_axes(grid_n: int, R: float) -> tuple:
    """Cell-center coordinates of the simulation square [-R, R]."""
    spacing = 2.0 * R / grid_n
    ax = -R + spacing * (np.arange(grid_n) + 0.5)
    return (ax, ax)


@dataclass(frozen=True)
class FieldSlice:
    """One realization of the cutoff field omega_l on the grid.

    values are already shifted by -var0/2 so that E[exp(values)] = 1;
    var0 = gamma2 * (ln(T/l) + 1) is the pointwise variance.
    """

    params: ModelParams
    grid_n: int
    cutoff_l: float
    values: np.ndarray
    var0: float
    replica_index: int = 0
    layer_index: int = 0

    @property
    def spacing(self) -> float:
        return 2.0 * self.params.R / self.grid_n

    def axes(self) -> tuple:
        return grid_axes(self.grid_n, self.params.R)


def sample_field(params: ModelParams, grid_n: int, l: float | None = None,
                 replica_index: int = 0, layer_index: int = 0,
                 gamma2: float | None = None) -> FieldSlice:
    """Draw one stationary Gaussian grid with covariance gamma2 * K_l.

    Identical (seed, replica_index, layer_index, grid_n, l) give bit-identical
    output.  gamma2 overrides params.gamma2 for per-layer variance splitting.
    """
    spacing = 2.0 * params.R / grid_n
    if l is None:
        l = spacing
    if l < spacing * (1.0 - 1e-12):
        raise ValueError(f"cutoff l={l} below grid spacing {spacing}")
    _check_cutoff(l, params.T)
    g2 = params.gamma2 if gamma2 is None else float(gamma2)
    shape = (grid_n,) * params.m
    var0 = g2 * (math.log(params.T / l) + 1.0)

    if g2 == 0.0:
        values = np.zeros(shape)
        return FieldSlice(params, grid_n, l, values, 0.0,
                          replica_index, layer_index)

    rng = stream(params.seed, "field", replica_index, layer_index)
    try:
        fac = _unit_factors(params.m, grid_n, params.R, params.T, l)
    except EmbeddingError:
        if grid_n ** params.m > DENSE_FALLBACK_MAX_ATOMS:
            raise
        L = _dense_cholesky(params.m, grid_n, params.R, params.T, l)
        z = rng.standard_normal(L.shape[0])
        values = math.sqrt(g2) * (L @ z)
        values = values.reshape(shape) - 0.5 * var0
        return FieldSlice(params, grid_n, l, values, var0,
                          replica_index, layer_index)

    pad_shape = (fac.pad_n,) * params.m
    noise = rng.standard_normal((2,) + pad_shape)
    eta = noise[0] + 1j * noise[1]
    colored = np.fft.ifftn(fac.factors * eta) * math.sqrt(eta.size)
    crop = tuple(slice(0, grid_n) for _ in range(params.m))
    values = math.sqrt(g2) * colored.real[crop] - 0.5 * var0
    return FieldSlice(params, grid_n, l, np.ascontiguousarray(values), var0,
                      replica_index, layer_index)
