"""Discrete multifractal measures: construction, chaos composition, scaling
exponent estimation and energy integrals."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .fields import FieldSlice, grid_axes, sample_field
from .params import ModelParams, zeta


@dataclass(frozen=True)
class MeasureMeta:
    params: ModelParams | None = None
    cutoff_l: float | None = None
    layer_count: int = 1
    replica_index: int = 0
    kind: str = "measure"
    grid_n: int | None = None     # set when atoms form the full simulation grid


@dataclass(frozen=True)
class DiscreteMeasure:
    """Atoms (points of [-R, R]^m) with nonnegative weights."""

    atoms: np.ndarray            # (n, m)
    weights: np.ndarray          # (n,)
    meta: MeasureMeta = field(default_factory=MeasureMeta)

    def __post_init__(self):
        atoms = np.atleast_2d(np.asarray(self.atoms, dtype=np.float64))
        weights = np.asarray(self.weights, dtype=np.float64).ravel()
        if atoms.shape[0] != weights.shape[0]:
            raise ValueError("atom/weight count mismatch")
        if not np.all(np.isfinite(weights)) or np.any(weights < 0):
            raise ValueError("weights must be finite and nonnegative")
        if not np.all(np.isfinite(atoms)):
            raise ValueError("atom coordinates must be finite")
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "weights", weights)

    @property
    def dim(self) -> int:
        return self.atoms.shape[1]

    @property
    def total_mass(self) -> float:
        return float(self.weights.sum())

    def validate_distinct(self) -> None:
        if np.unique(self.atoms, axis=0).shape[0] != self.atoms.shape[0]:
            raise ValueError("atoms are not distinct")

    def ball_mass(self, radius: float, center=None) -> float:
        """Mass of the Euclidean ball (atom centers inside, boundary included)."""
        c = np.zeros(self.dim) if center is None else np.asarray(center, float)
        d = np.linalg.norm(self.atoms - c[None, :], axis=1)
        return float(self.weights[d <= radius].sum())

    def corner_mass(self, x) -> float:
        """Mass of the corner cube [0, x_1] x ... x [0, x_m] (closed; the
        interval is [x_k, 0] for negative coordinates)."""
        x = np.asarray(x, dtype=np.float64).ravel()
        lo = np.minimum(0.0, x)
        hi = np.maximum(0.0, x)
        inside = np.all((self.atoms >= lo) & (self.atoms <= hi), axis=1)
        return float(self.weights[inside].sum())

    def restrict(self, mask: np.ndarray, **meta_updates) -> "DiscreteMeasure":
        meta = MeasureMeta(**{**self.meta.__dict__, **meta_updates})
        return DiscreteMeasure(self.atoms[mask], self.weights[mask], meta)

    def as_grid(self) -> np.ndarray:
        """Weights reshaped to the full simulation grid (grid-backed only)."""
        n = self.meta.grid_n
        if n is None:
            raise ValueError("measure is not grid-backed")
        return self.weights.reshape((n,) * self.dim)


def grid_atoms(params: ModelParams, grid_n: int) -> np.ndarray:
    axes = grid_axes(grid_n, params.R)
    if params.m == 1:
        return axes[0][:, None].copy()
    xx, yy = np.meshgrid(axes[0], axes[1], indexing="ij")
    return np.column_stack([xx.ravel(), yy.ravel()])


def build_measure(field_slice: FieldSlice) -> DiscreteMeasure:
    """Discretized chaos measure: weight_i = exp(omega_l(x_i)) * spacing^m.

    The -var0/2 shift inside the field makes the mean total mass (2R)^m.
    """
    params = field_slice.params
    cell = field_slice.spacing ** params.m
    weights = np.exp(field_slice.values.ravel()) * cell
    meta = MeasureMeta(params=params, cutoff_l=field_slice.cutoff_l,
                       layer_count=1, replica_index=field_slice.replica_index,
                       grid_n=field_slice.grid_n)
    return DiscreteMeasure(grid_atoms(params, field_slice.grid_n), weights, meta)


def uniform_measure(params: ModelParams, grid_n: int) -> DiscreteMeasure:
    cell = (2.0 * params.R / grid_n) ** params.m
    atoms = grid_atoms(params, grid_n)
    meta = MeasureMeta(params=params, cutoff_l=None, layer_count=0,
                       grid_n=grid_n)
    return DiscreteMeasure(atoms, np.full(atoms.shape[0], cell), meta)


def compose_chaos(params: ModelParams, n: int, grid_n: int,
                  replica_index: int = 0,
                  l: float | None = None) -> list[DiscreteMeasure]:
    """Iterated chaos M^(0)..M^(n): layer k multiplies the weights by
    exp(omega^(k)) at per-layer intermittency gamma2/n.

    Layer streams are keyed (seed, replica, layer) so n=1 reproduces
    build_measure(sample_field(...)) bit for bit, and the conditional mean
    of each layer's total mass equals the previous layer's.
    """
    if n < 1:
        raise ValueError(f"need at least one chaos layer, got n={n}")
    out = [uniform_measure(params, grid_n)]
    weights = out[0].weights.copy()
    cutoff = l
    for k in range(1, n + 1):
        fs = sample_field(params, grid_n, l=l, replica_index=replica_index,
                          layer_index=k - 1, gamma2=params.gamma2 / n)
        cutoff = fs.cutoff_l
        weights = weights * np.exp(fs.values.ravel())
        meta = MeasureMeta(params=params, cutoff_l=cutoff, layer_count=k,
                           replica_index=replica_index, grid_n=grid_n)
        out.append(DiscreteMeasure(out[0].atoms, weights.copy(), meta))
    return out


# ---------------------------------------------------------------------------
# scaling exponents
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ScalingReport:
    qs: np.ndarray
    radii: np.ndarray
    zeta_hat: np.ndarray
    stderr: np.ndarray
    replicas: int
    log_moments: np.ndarray      # (len(qs), len(radii)) regression ordinates

    def __post_init__(self):
        radii = np.asarray(self.radii, dtype=np.float64)
        if np.any(np.diff(radii) <= 0):
            raise ValueError("radii must be strictly increasing")
        if not np.all(np.isfinite(np.asarray(self.zeta_hat))):
            raise ValueError("estimated exponents must be finite")


def _slope(x: np.ndarray, y: np.ndarray) -> float:
    xc = x - x.mean()
    return float((xc @ y) / (xc @ xc))


def estimate_zeta(params: ModelParams, qs, radii, replicas: int,
                  grid_n: int = 256) -> ScalingReport:
    """Log-log regression of the empirical moments E[M(B(0,r))^q] on r.

    Balls are centered at the domain center only; the estimator averages
    moments over independent replicas and jackknifes the slope for a
    standard error.
    """
    qs = np.asarray(list(qs), dtype=np.float64)
    radii = np.asarray(list(radii), dtype=np.float64)
    if radii.size < 3:
        raise ValueError("need at least 3 radii for a slope")
    if replicas < 2:
        raise ValueError("need at least 2 replicas")
    if np.any(radii > params.T):
        raise ValueError("radii beyond the correlation length T are outside "
                         "the exact-scaling regime")
    for q in qs:
        if q > 1 and not zeta(params, q) > params.m:
            warnings.warn(
                f"moment q={q} may not exist (zeta(q) <= m); the estimate "
                "will be tail-dominated", RuntimeWarning, stacklevel=2)

    atoms = grid_atoms(params, grid_n)
    dist = np.linalg.norm(atoms, axis=1)
    masks = [dist <= r for r in radii]
    cell = (2.0 * params.R / grid_n) ** params.m

    masses = np.empty((replicas, radii.size))
    for rep in range(replicas):
        fs = sample_field(params, grid_n, replica_index=rep)
        w = np.exp(fs.values.ravel()) * cell
        for j, mask in enumerate(masks):
            masses[rep, j] = w[mask].sum()

    logr = np.log(radii)
    zeta_hat = np.empty(qs.size)
    stderr = np.empty(qs.size)
    log_moments = np.empty((qs.size, radii.size))
    for i, q in enumerate(qs):
        mq = masses ** q
        mean = mq.mean(axis=0)
        log_moments[i] = np.log(mean)
        zeta_hat[i] = _slope(logr, log_moments[i])
        # jackknife over replicas (ball masses at different radii correlate)
        loo = (mean[None, :] * replicas - mq) / (replicas - 1)
        loo_slopes = np.array([_slope(logr, np.log(row)) for row in loo])
        stderr[i] = np.sqrt((replicas - 1) / replicas
                            * ((loo_slopes - loo_slopes.mean()) ** 2).sum())
    return ScalingReport(qs=qs, radii=radii, zeta_hat=zeta_hat, stderr=stderr,
                         replicas=replicas, log_moments=log_moments)


def analytic_second_moment_ball(params: ModelParams, grid_n: int,
                                radii) -> np.ndarray:
    """Exact E[M_l(B(0,r))^2] of the discretized chaos at cutoff l = spacing.

    Gaussian moments give E[w_i w_j] = cell^2 exp(gamma2 K_l(x_i - x_j));
    summing over ball-cell pairs via FFT autocorrelation of the indicator.
    Used as a deterministic oracle for the scale-invariance of second
    moments.
    """
    from .fields import kernel

    radii = np.asarray(list(radii), dtype=np.float64)
    h = 2.0 * params.R / grid_n
    atoms = grid_atoms(params, grid_n)
    dist = np.linalg.norm(atoms, axis=1).reshape((grid_n,) * params.m)
    npad = 2 * grid_n
    idx = np.arange(npad)
    wrap = np.minimum(idx, npad - idx) * h
    if params.m == 1:
        lag = wrap
    else:
        lag = np.hypot(wrap[:, None], wrap[None, :])
    F = np.exp(params.gamma2 * np.asarray(
        kernel(lag.ravel(), h, params.T, params.m)).reshape(lag.shape))
    out = np.empty(radii.size)
    for j, r in enumerate(radii):
        ind = np.zeros((npad,) * params.m)
        ind[(slice(0, grid_n),) * params.m] = dist <= r
        spec = np.abs(np.fft.fftn(ind)) ** 2
        pair_count = np.fft.ifftn(spec).real
        out[j] = float((F * pair_count).sum()) * h ** (2 * params.m)
    return out


# ---------------------------------------------------------------------------
# energy integrals
# ---------------------------------------------------------------------------


def energy(measure: DiscreteMeasure, distance_fn=None, alpha: float = 1.0,
           chunk: int = 512) -> float:
    """Interaction energy sum_{i != j} w_i w_j d(x_i, x_j)^-alpha.

    The diagonal is excluded (the continuum double integral has no atom on
    it).  distance_fn=None means Euclidean distance and takes the fast
    kernel; a callable must map two point blocks to a distance matrix.
    """
    if alpha < 0:
        raise ValueError("alpha must be >= 0")
    pts, w = measure.atoms, measure.weights
    if distance_fn is None:
        total, min_d2 = kernels.energy_pairs(pts, w, alpha)
        if alpha > 0 and min_d2 <= 0.0:
            raise ValueError("coincident atoms give an infinite energy for alpha > 0")
        return float(total)

    n = pts.shape[0]
    total = 0.0
    for start in range(0, n, chunk):
        stop = min(start + chunk, n)
        d = np.asarray(distance_fn(pts[start:stop], pts), dtype=np.float64)
        rows = np.arange(start, stop)
        d[rows - start, rows] = np.inf
        if alpha > 0 and d.min() <= 0.0:
            raise ValueError("coincident atoms give an infinite energy for alpha > 0")
        contrib = (w[start:stop, None] * w[None, :]) * d ** (-alpha)
        contrib[rows - start, rows] = 0.0
        total += contrib.sum()
    return float(total)
