"""Discrete quadratic-cost optimal transport and the multistep composition
pushing the chaos measure onto the uniform measure of the inscribed ball.

Each step k of the chain solves plain Euclidean quadratic transport between
the current image cloud nu_k = phi^(k-1)#Mbar^(k) and the uniform measure on
the ball cells; the composed map phi^(k) = S^(k) o phi^(k-1) then minimizes
the relocation cost from phi^(k-1), which is the image-space form of the
stepwise problem.  Two solvers are available:

* "sinkhorn": log-domain entropic iterations with an epsilon-annealing
  schedule (3 halvings) and barycentric projection of the final plan;
  handles arbitrary nonnegative weights, any number of steps.
* "exact": systematic resampling of the transported measure into
  equal-weight particles followed by an optimal assignment; reserved for
  single-step chains and moderate sizes, serves as the verification route.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from . import kernels
from .measures import DiscreteMeasure, MeasureMeta
from .rng import stream

EXACT_MAX_ATOMS = 4096


class SolverError(RuntimeError):
    def __init__(self, message, step=None):
        super().__init__(message if step is None
                         else f"step {step}: {message}")
        self.step = step


@dataclass(frozen=True)
class SolverInfo:
    method: str
    epsilon: float = 0.0
    epsilon_schedule: tuple = ()
    tol: float = 0.0
    iterations: int = 0
    marginal_error: float = 0.0
    converged: bool = True


@dataclass(frozen=True)
class TransportPlan:
    source_atoms: np.ndarray
    source_weights: np.ndarray   # normalized to total 1
    target_atoms: np.ndarray
    target_weights: np.ndarray   # normalized to total 1
    coupling: np.ndarray         # (n_source, n_target), nonnegative
    cost_value: float
    info: SolverInfo

    def marginal_errors(self) -> tuple:
        row = np.abs(self.coupling.sum(axis=1) - self.source_weights).max()
        col = np.abs(self.coupling.sum(axis=0) - self.target_weights).max()
        return float(row), float(col)

    def validate(self, tol: float | None = None) -> None:
        if self.coupling.min() < 0:
            raise ValueError("coupling has negative entries")
        row, col = self.marginal_errors()
        bound = self.info.tol if tol is None else tol
        if max(row, col) > max(bound, 1e-12):
            raise ValueError(
                f"marginals violated: row {row:.2e}, col {col:.2e} > {bound:.2e}")


@dataclass(frozen=True)
class TransportMap:
    """One image point per source atom; exact-assignment images are target
    atoms, barycentric images live in the targets' convex hull."""

    source_atoms: np.ndarray
    images: np.ndarray
    kind: str                       # "exact-assignment" | "barycentric"
    target_index: np.ndarray | None = None
    cost_value: float = math.nan
    info: SolverInfo = field(default_factory=lambda: SolverInfo("none"))

    def __post_init__(self):
        if self.source_atoms.shape != self.images.shape:
            raise ValueError("one image per source atom is required")


@dataclass(frozen=True)
class ChainedMap:
    """Ordered composition S^(k) o ... o S^(1) acting on the source atoms."""

    source_atoms: np.ndarray        # atoms of the transported measure
    source_weights: np.ndarray      # unnormalized masses carried by the atoms
    steps: tuple                    # TransportMap per step, in application order
    solver: str
    particle_parent: np.ndarray | None = None  # exact route: atom index per particle

    @property
    def images(self) -> np.ndarray:
        return self.steps[-1].images

    @property
    def n_steps(self) -> int:
        return len(self.steps)

    def injective(self) -> bool:
        return (np.unique(self.images, axis=0).shape[0]
                == self.images.shape[0])

    def validate(self) -> None:
        if not self.steps:
            raise ValueError("empty chain")
        prev = self.source_atoms
        for j, step in enumerate(self.steps):
            if not np.allclose(step.source_atoms, prev, atol=1e-12):
                raise ValueError(f"step {j + 1} source does not match the "
                                 "image of the previous steps")
            prev = step.images


# ---------------------------------------------------------------------------
# entropic solver
# ---------------------------------------------------------------------------


def _cost_matrix(src: np.ndarray, tgt: np.ndarray, cost_fn) -> np.ndarray:
    if cost_fn is not None:
        return np.asarray(cost_fn(src, tgt), dtype=np.float64)
    diff = src[:, None, :] - tgt[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def _normalized(measure: DiscreteMeasure):
    total = measure.total_mass
    if total <= 0:
        raise SolverError("zero-mass measure")
    return measure.atoms, measure.weights / total


def sinkhorn(mu: DiscreteMeasure, nu: DiscreteMeasure, cost_fn=None,
             epsilon: float = 0.01, tol: float = 1e-6, max_iter: int = 5000,
             anneal: int = 3) -> TransportPlan:
    """Entropically regularized transport plan from mu to nu.

    Log-domain scaling iterations, warm-started along the schedule
    epsilon * 2^anneal, ..., epsilon * 2, epsilon.  Masses are normalized
    to 1 internally.  Non-convergence is flagged, not raised.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    src, a = _normalized(mu)
    tgt, b = _normalized(nu)
    C = _cost_matrix(src, tgt, cost_fn)

    log_a = np.where(a > 0, np.log(np.where(a > 0, a, 1.0)), -np.inf)
    log_b = np.where(b > 0, np.log(np.where(b > 0, b, 1.0)), -np.inf)
    f = np.zeros_like(a)
    g = np.zeros_like(b)
    schedule = tuple(epsilon * 2.0 ** k for k in range(anneal, -1, -1))
    iterations = 0
    for eps in schedule:
        stage_tol = tol if eps == epsilon else max(tol, 1e-3)
        inv_eps = 1.0 / eps
        for _ in range(max_iter):
            iterations += 1
            lse_rows = kernels.lse_scaled(C, g, inv_eps, axis=1)
            # row-marginal violation of the current (f, g) pair, reusing
            # the logsumexp of the f-update about to be applied
            err = np.abs(np.exp(f * inv_eps + lse_rows) - a).max()
            f = eps * (log_a - lse_rows)
            g = eps * (log_b - kernels.lse_scaled(C, f, inv_eps, axis=0))
            if err <= stage_tol:
                break

    plan = np.exp((f[:, None] + g[None, :] - C) / epsilon)
    cost = float((plan * C).sum())
    err = float(np.abs(plan.sum(axis=1) - a).max())
    info = SolverInfo(method="sinkhorn", epsilon=epsilon,
                      epsilon_schedule=schedule, tol=tol,
                      iterations=iterations, marginal_error=err,
                      converged=bool(err <= tol))
    return TransportPlan(src, a, tgt, b, plan, cost, info)


def barycentric_map(plan: TransportPlan) -> TransportMap:
    """Deterministic reduction of a coupling: each source atom moves to the
    conditional mean of its target column, T(x_i) = sum_j pi_ij y_j / mu_i."""
    rows = plan.coupling.sum(axis=1)
    if np.any(rows <= 0):
        raise SolverError("zero-weight source atom has no barycentric image")
    images = (plan.coupling @ plan.target_atoms) / rows[:, None]
    return TransportMap(source_atoms=plan.source_atoms, images=images,
                        kind="barycentric", cost_value=plan.cost_value,
                        info=plan.info)


# ---------------------------------------------------------------------------
# exact solver
# ---------------------------------------------------------------------------


def exact_assignment(mu: DiscreteMeasure, nu: DiscreteMeasure,
                     cost_fn=None) -> TransportMap:
    """Globally optimal permutation between equal-count uniform-weight
    measures (Birkhoff: the optimal coupling is then a permutation)."""
    if mu.atoms.shape[0] != nu.atoms.shape[0]:
        raise SolverError("exact assignment needs equal atom counts")
    for m in (mu, nu):
        w = m.weights
        if w.size and not np.allclose(w, w[0], rtol=1e-9, atol=0.0):
            raise SolverError("exact assignment needs uniform weights")
    n = mu.atoms.shape[0]
    if n > EXACT_MAX_ATOMS:
        raise SolverError(f"exact assignment limited to {EXACT_MAX_ATOMS} atoms")
    C = _cost_matrix(mu.atoms, nu.atoms, cost_fn)
    rows, cols = linear_sum_assignment(C)
    perm = np.empty(n, dtype=np.int64)
    perm[rows] = cols
    cost = float(C[np.arange(n), perm].mean())
    info = SolverInfo(method="exact", converged=True)
    return TransportMap(source_atoms=mu.atoms, images=nu.atoms[perm],
                        kind="exact-assignment", target_index=perm,
                        cost_value=cost, info=info)


def systematic_resample(weights: np.ndarray, count: int) -> np.ndarray:
    """Deterministic systematic resampling: index of the parent atom for
    each of `count` equal-weight particles (offset fixed at 1/2)."""
    w = np.asarray(weights, dtype=np.float64)
    total = w.sum()
    if total <= 0:
        raise SolverError("zero-mass measure")
    cum = np.cumsum(w / total)
    cum[-1] = 1.0
    u = (np.arange(count) + 0.5) / count
    return np.searchsorted(cum, u, side="left")


# ---------------------------------------------------------------------------
# multistep chain
# ---------------------------------------------------------------------------


def ball_mask(atoms: np.ndarray, R: float) -> np.ndarray:
    """Cells strictly inside the inscribed ball B_R (boundary excluded)."""
    return np.linalg.norm(atoms, axis=1) < R


def lebesgue_ball(measure_like: DiscreteMeasure) -> DiscreteMeasure:
    """Uniform measure on the grid cells strictly inside B_R."""
    params = measure_like.meta.params
    mask = ball_mask(measure_like.atoms, params.R)
    atoms = measure_like.atoms[mask]
    cell = (2.0 * params.R / measure_like.meta.grid_n) ** params.m
    meta = MeasureMeta(params=params, kind="lebesgue_ball",
                       grid_n=None)
    return DiscreteMeasure(atoms, np.full(atoms.shape[0], cell), meta)


def multi_step(layers, solver: str = "sinkhorn", epsilon_rel: float = 0.01,
               tol: float = 1e-6, max_iter: int = 5000,
               anneal: int = 3) -> ChainedMap:
    """Compose the stepwise transports pushing the final chaos layer onto
    the uniform ball measure.

    `layers` is the compose_chaos output M^(0)..M^(n) on a common grid.
    Step k transports the image cloud of layer k's (normalized, ball-
    restricted) weights to the uniform ball cells and composes.
    """
    if len(layers) < 2:
        raise SolverError("need at least the uniform layer and one chaos layer")
    base = layers[0]
    params = base.meta.params
    n_steps = len(layers) - 1
    mask = ball_mask(base.atoms, params.R)
    if not mask.any():
        raise SolverError("no grid cells inside the ball")
    targets = base.atoms[mask]
    n_cells = targets.shape[0]
    lam = DiscreteMeasure(targets, np.full(n_cells, 1.0 / n_cells))

    if solver == "exact":
        if n_steps != 1:
            raise SolverError(
                "the exact route resamples to uniform particles and only "
                "supports single-step chains; use sinkhorn for n > 1")
        w = layers[1].weights[mask]
        parent = systematic_resample(w, n_cells)
        particles = targets[parent]
        mu = DiscreteMeasure(particles, np.full(n_cells, 1.0 / n_cells))
        tmap = exact_assignment(mu, lam)
        # particles sharing a source cell admit cost-equal permutations of
        # their images; order them by target index (lowest-index tie-break)
        perm = tmap.target_index.copy()
        run_starts = np.flatnonzero(np.r_[True, parent[1:] != parent[:-1]])
        for a, b in zip(run_starts, np.r_[run_starts[1:], parent.size]):
            perm[a:b] = np.sort(perm[a:b])
        tmap = TransportMap(source_atoms=particles, images=lam.atoms[perm],
                            kind="exact-assignment", target_index=perm,
                            cost_value=tmap.cost_value, info=tmap.info)
        mass = float(w.sum())
        return ChainedMap(source_atoms=particles,
                          source_weights=np.full(n_cells, mass / n_cells),
                          steps=(tmap,), solver="exact",
                          particle_parent=parent)

    if solver != "sinkhorn":
        raise SolverError(f"unknown solver {solver!r}")

    images = targets.copy()
    steps = []
    for k in range(1, n_steps + 1):
        w = layers[k].weights[mask]
        nu_k = DiscreteMeasure(images, w)
        mean_cost = _cost_matrix(images, targets, None).mean()
        eps = epsilon_rel * mean_cost
        try:
            plan = sinkhorn(nu_k, lam, epsilon=eps, tol=tol,
                            max_iter=max_iter, anneal=anneal)
            tmap = barycentric_map(plan)
        except SolverError as exc:
            raise SolverError(str(exc), step=k) from exc
        steps.append(tmap)
        images = tmap.images
    final_w = layers[-1].weights[mask]
    return ChainedMap(source_atoms=targets, source_weights=final_w,
                      steps=tuple(steps), solver="sinkhorn")


# ---------------------------------------------------------------------------
# inversion and pushforward
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class InverseMap:
    """Nearest-image inverse: chi(y) = source atom whose image is nearest
    to y, ties to the lowest atom index; chi(phi(x_i)) = x_i on the support."""

    source_atoms: np.ndarray
    images: np.ndarray

    def atom_index(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        return kernels.nearest_index(pts, self.images)

    def __call__(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=np.float64)
        idx = self.atom_index(pts)
        out = self.source_atoms[idx]
        return out[0] if pts.ndim == 1 else out


def invert_map(chained: ChainedMap) -> InverseMap:
    if not chained.steps or chained.source_atoms.shape[0] == 0:
        raise ValueError("cannot invert an empty map")
    return InverseMap(source_atoms=chained.source_atoms,
                      images=chained.images)


def pushforward(tmap, measure: DiscreteMeasure | None = None,
                bin_to: DiscreteMeasure | None = None) -> DiscreteMeasure:
    """Image measure: the map's image points carry the source weights.

    `measure` defaults to the chain's own transported masses.  With
    `bin_to`, image mass is accumulated on the nearest atoms of the given
    target measure (e.g. the uniform ball cells).
    """
    images = tmap.images
    if measure is not None:
        if measure.atoms.shape[0] != images.shape[0]:
            raise ValueError("measure does not match the map's source atoms")
        weights = measure.weights
    elif isinstance(tmap, ChainedMap):
        weights = tmap.source_weights
    else:
        raise ValueError("a measure is required for a bare transport map")

    if bin_to is None:
        return DiscreteMeasure(images.copy(), weights.copy())
    idx = kernels.nearest_index(images, bin_to.atoms)
    binned = np.zeros(bin_to.atoms.shape[0])
    np.add.at(binned, idx, weights)
    return DiscreteMeasure(bin_to.atoms.copy(), binned)


# ---------------------------------------------------------------------------
# optimality diagnostics
# ---------------------------------------------------------------------------


def monotonicity_violations(tmap: TransportMap, n_pairs: int = 10000,
                            seed: int = 0) -> int:
    """Count sampled pairs with <S(x)-S(y), x-y> < 0 (gradient-of-convex
    maps have none)."""
    n = tmap.source_atoms.shape[0]
    rng = stream(seed, "monotone-pairs")
    i = rng.integers(0, n, size=n_pairs)
    j = rng.integers(0, n, size=n_pairs)
    ds = tmap.source_atoms[i] - tmap.source_atoms[j]
    di = tmap.images[i] - tmap.images[j]
    inner = np.einsum("ij,ij->i", ds, di)
    return int((inner < 0).sum())


def cycle_violations(tmap: TransportMap, n_cycles: int = 10000,
                     seed: int = 0, rel_tol: float = 1e-12) -> int:
    """Count sampled 3-cycles whose reassignment strictly lowers the
    quadratic cost (cyclical monotonicity of optimal assignments)."""
    n = tmap.source_atoms.shape[0]
    rng = stream(seed, "cycle-triples")
    idx = rng.integers(0, n, size=(n_cycles, 3))
    src = tmap.source_atoms[idx]                     # (c, 3, m)
    img = tmap.images[idx]
    stay = ((src - img) ** 2).sum(axis=(1, 2))
    rolled = img[:, [1, 2, 0], :]
    move = ((src - rolled) ** 2).sum(axis=(1, 2))
    scale = np.maximum(stay, 1.0)
    return int((move - stay < -rel_tol * scale).sum())
