"""Command-line front end: simulate, transport, geodesic, kpz, timechange,
scaling.

All randomness flows from --seed through fixed role tags; flags may be
preloaded from a key=value config file (flags override the file).  Data goes
to the output files, warnings go to stderr, and the exit code is nonzero
whenever a hard invariant fails.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from dataclasses import dataclass, fields as dc_fields

import numpy as np

from . import gridio, kernels
from .dimension import (cantor_points, kpz_check, kpz_inverse, segment_points,
                        square_points)
from .fields import sample_field
from .geometry import build_chart, geodesic_polyline
from .measures import DiscreteMeasure, build_measure, compose_chaos, estimate_zeta
from .params import ModelParams, min_steps
from .timechange import corner_field, time_change_1d
from .transport import multi_step

log = logging.getLogger("mrmlab")

HEAVY_TAIL_FRACTION = 0.10


@dataclass
class RunConfig:
    subcommand: str = ""
    m: int = 2
    gamma2: float = 1.0
    T: float = 0.5
    R: float = 0.5
    seed: int = 0
    grid: int = 64
    replicas: int = 1
    steps: str = "auto"
    solver: str = "sinkhorn"
    epsilon_rel: float = 0.01
    tol: float = 1e-6
    max_iter: int = 5000
    exact_threshold: int = 4096
    threads: int = 0
    out: str = "out"

    def params(self) -> ModelParams:
        return ModelParams(m=self.m, gamma2=self.gamma2, T=self.T, R=self.R,
                           seed=self.seed)

    def emit(self) -> str:
        items = {f.name: getattr(self, f.name) for f in dc_fields(self)}
        return gridio.emit_header(items)

    @classmethod
    def parse(cls, line: str) -> "RunConfig":
        items = gridio.parse_header(line)
        defaults = cls()
        kwargs = {}
        for f in dc_fields(cls):
            if f.name in items:
                kwargs[f.name] = type(getattr(defaults, f.name))(items[f.name])
        return cls(**kwargs)


def _param_header(config: RunConfig) -> dict:
    return config.params().header_items()


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_simulate(config: RunConfig) -> int:
    params = config.params()
    stem = config.out
    cell = (2.0 * params.R / config.grid) ** params.m
    for rep in range(config.replicas):
        fs = sample_field(params, config.grid, replica_index=rep)
        weights = np.exp(fs.values) * cell
        total = float(weights.sum())
        peak = float(weights.max())
        header = dict(_param_header(config))
        header.update(grid_n=config.grid, cutoff_l=fs.cutoff_l, replica=rep,
                      kind="measure")
        path = f"{stem}_r{rep:04d}.grid" if config.replicas > 1 else f"{stem}.grid"
        gridio.write_grid(path, weights.ravel(), header)
        print(f"replica {rep}: total mass {total:.6g} -> {path}")
        if peak > HEAVY_TAIL_FRACTION * total:
            log.warning("replica %d: heaviest cell carries %.1f%% of the "
                        "mass (logarithmic intensity recommended)",
                        rep, 100.0 * peak / total)
    return 0


def _resolve_steps(config: RunConfig, force: bool) -> int:
    params = config.params()
    needed = min_steps(params)
    if config.steps == "auto":
        return needed
    n = int(config.steps)
    if n < needed and not force:
        raise SystemExit(
            f"--steps {n} is below the required minimum {needed} for "
            f"gamma2={params.gamma2}; pass --force to override")
    return n


def cmd_transport(config: RunConfig, force: bool = False) -> int:
    params = config.params()
    n = _resolve_steps(config, force)
    layers = compose_chaos(params, n, config.grid)
    if config.solver == "exact":
        inside = int((np.linalg.norm(layers[0].atoms, axis=1) < params.R).sum())
        if inside > config.exact_threshold:
            raise SystemExit(
                f"exact solver limited to {config.exact_threshold} atoms, "
                f"the ball holds {inside}; use --solver sinkhorn")
    chained = multi_step(layers, solver=config.solver,
                         epsilon_rel=config.epsilon_rel, tol=config.tol,
                         max_iter=config.max_iter)
    path = config.out if config.out.endswith(".tmap") else config.out + ".tmap"
    extra = dict(_param_header(config))
    extra.update(grid_n=config.grid,
                 mass=float(chained.source_weights.sum()))
    gridio.write_tmap(path, chained, epsilon=config.epsilon_rel,
                      tol=config.tol, extra=extra)
    print(f"steps {n} -> {path}")
    for j, step in enumerate(chained.steps, start=1):
        info = step.info
        print(f"  step {j}: cost {step.cost_value:.6g} "
              f"marginal_err {info.marginal_error:.3e} "
              f"iterations {info.iterations} converged {info.converged}")
        if not info.converged and info.method == "sinkhorn":
            log.warning("step %d did not reach tol %.1e", j, config.tol)
    return 0


def _load_chart(tmap_path: str):
    header, chained = gridio.read_tmap(tmap_path)
    params = ModelParams.from_header_items(header)
    if "mass" in header:
        scaled = np.full(chained.source_atoms.shape[0],
                         float(header["mass"]) / chained.source_atoms.shape[0])
        object.__setattr__(chained, "source_weights", scaled)
    return build_chart(chained, params, grid_n=int(header["grid_n"])), header


def cmd_geodesic(config: RunConfig, tmap: str, src: str, dst: str,
                 samples: int) -> int:
    import warnings

    chart, _ = _load_chart(tmap)
    p = np.array([float(c) for c in src.split(",")])
    q = np.array([float(c) for c in dst.split(",")])
    path = config.out if config.out.endswith(".csv") else config.out + ".csv"
    # user coordinates need not hit support atoms; snap quietly
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        if np.allclose(p, q):
            log.warning("identical endpoints: writing a single-point polyline")
            from .geometry import geodesic

            pt = geodesic(chart, p, q, 0.0, snap=True)
            cols = ["t"] + (["x", "y"] if chart.params.m == 2 else ["x"])
            gridio.write_csv(path, cols, [(0.0, *map(float, np.atleast_1d(pt)))])
            return 0
        poly = geodesic_polyline(chart, p, q, samples, snap=True)
    gridio.polyline_csv(path, poly)
    print(f"geodesic with {samples} samples -> {path}")
    return 0


_KPZ_SETS = {
    "segment": (segment_points, 1.0),
    "square": (square_points, 2.0),
    "cantor": (cantor_points, math.log(2.0) / math.log(3.0)),
}


def cmd_kpz(config: RunConfig, set_name: str) -> int:
    params = config.params()
    maker, target = _KPZ_SETS[set_name]
    if maker is segment_points:
        pts = maker(params.R, n=8 * config.grid)
    elif maker is square_points:
        pts = maker(params.R, n_side=min(config.grid, 256))
    else:
        pts = maker(params.R)
    report = kpz_check(params, pts, target_dim=target,
                       replicas=config.replicas, grid_n=config.grid)
    path = config.out if config.out.endswith(".csv") else config.out + ".csv"
    rows = [(float(s), float(np.exp(c)), report.s_hat, target)
            for s, c in zip(report.scales, report.log_contents)]
    gridio.write_csv(path, ["scale", "content_at_s_hat", "s_hat", "target"], rows)
    gridio.jsonl_write(path + ".jsonl", {
        "experiment": f"kpz-{set_name}",
        "s_hat": report.s_hat,
        "xi_of_half": report.xi_of_half,
        "target_dim": report.target_dim,
        "spread": report.spread,
        "replicas": report.replicas,
        "expected_s": kpz_inverse(params, target) if params.gamma2 > 0 else target,
        **_param_header(config),
    })
    print(f"kpz {set_name}: s_hat {report.s_hat:.5f} "
          f"xi(s_hat/2) {report.xi_of_half:.5f} target {target:.5f} "
          f"spread {report.spread:.3g} -> {path}")
    return 0


def cmd_timechange(config: RunConfig, mode: str, tmap: str | None,
                   bm_resolution: int, eval_grid: int) -> int:
    params = config.params()
    path = config.out if config.out.endswith(".csv") else config.out + ".csv"
    if mode == "path":
        if params.m != 1:
            raise SystemExit("the 1D time change needs --m 1")
        fs = sample_field(params, config.grid, replica_index=0)
        measure = build_measure(fs)
        shifted = DiscreteMeasure(measure.atoms + params.R, measure.weights)
        tc = time_change_1d(shifted, bm_resolution, seed=params.seed,
                            t_max=2.0 * params.R)
        gridio.timechange_csv(path, tc)
        print(f"time change on [0, {2 * params.R}] -> {path}")
        return 0
    if tmap is None:
        raise SystemExit("--mode field needs --tmap from a transport run")
    chart, _ = _load_chart(tmap)
    ax = np.linspace(-params.R, params.R, eval_grid)
    if params.m == 1:
        pts = ax[:, None]
    else:
        xx, yy = np.meshgrid(ax, ax, indexing="ij")
        pts = np.column_stack([xx.ravel(), yy.ravel()])
    cf = corner_field(chart, pts, seed=params.seed)
    gridio.corner_field_csv(path, cf)
    print(f"corner field on {pts.shape[0]} points "
          f"(total variance {cf.total_variance:.6g}) -> {path}")
    return 0


def cmd_scaling(config: RunConfig, qs: str, radii: str) -> int:
    params = config.params()
    q_list = [float(q) for q in qs.split(",")]
    if radii == "auto":
        r_list = [params.T / 16, params.T / 8, params.T / 4, params.T / 2]
    else:
        r_list = [float(r) for r in radii.split(",")]
    report = estimate_zeta(params, q_list, r_list, config.replicas,
                           grid_n=config.grid)
    path = config.out if config.out.endswith(".csv") else config.out + ".csv"
    gridio.scaling_report_csv(path, report)
    gridio.jsonl_write(path + ".jsonl", {
        "experiment": "scaling",
        "qs": [float(q) for q in report.qs],
        "radii": [float(r) for r in report.radii],
        "grid_n": config.grid,
        "replicas": config.replicas,
        **_param_header(config),
    })
    for q, z, se in zip(report.qs, report.zeta_hat, report.stderr):
        print(f"q={q:g}: zeta_hat {z:.4f} +- {se:.4f}")
    print(f"-> {path}")
    return 0


# ---------------------------------------------------------------------------
# argument plumbing
# ---------------------------------------------------------------------------


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", default=None, help="key=value config file")
    p.add_argument("--m", type=int, default=None)
    p.add_argument("--gamma2", type=float, default=None)
    p.add_argument("--T", type=float, default=None)
    p.add_argument("--R", type=float, default=None)
    p.add_argument("--grid", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--replicas", type=int, default=None)
    p.add_argument("--out", default=None)
    p.add_argument("--threads", type=int, default=None)


def _merge_config(args: argparse.Namespace) -> RunConfig:
    config = RunConfig(subcommand=args.subcommand)
    if getattr(args, "config", None):
        with open(args.config) as fh:
            text = " ".join(line.split("#", 1)[0].strip()
                            for line in fh if line.split("#", 1)[0].strip())
        items = gridio.parse_header(text)
        for f in dc_fields(RunConfig):
            if f.name in items:
                setattr(config, f.name,
                        type(getattr(config, f.name))(items[f.name]))
    for f in dc_fields(RunConfig):
        v = getattr(args, f.name, None)
        if v is not None:
            setattr(config, f.name, type(getattr(config, f.name))(v))
    return config


def build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(prog="mrmlab")
    sub = top.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("simulate", help="sample measure density grids")
    _add_common(p)

    p = sub.add_parser("transport", help="build the multistep transport map")
    _add_common(p)
    p.add_argument("--steps", default=None, help='"auto" or an integer')
    p.add_argument("--solver", choices=("sinkhorn", "exact"), default=None)
    p.add_argument("--epsilon-rel", dest="epsilon_rel", type=float, default=None)
    p.add_argument("--tol", type=float, default=None)
    p.add_argument("--max-iter", dest="max_iter", type=int, default=None)
    p.add_argument("--exact-threshold", dest="exact_threshold", type=int,
                   default=None)
    p.add_argument("--force", action="store_true")

    p = sub.add_parser("geodesic", help="sample a pullback geodesic")
    _add_common(p)
    p.add_argument("--tmap", required=True)
    p.add_argument("--from", dest="src", required=True, help="x[,y]")
    p.add_argument("--to", dest="dst", required=True, help="x[,y]")
    p.add_argument("--samples", type=int, default=256)

    p = sub.add_parser("kpz", help="KPZ relation experiment")
    _add_common(p)
    p.add_argument("--set", dest="set_name", choices=sorted(_KPZ_SETS),
                   default="segment")

    p = sub.add_parser("timechange", help="multifractal time changes")
    _add_common(p)
    p.add_argument("--mode", choices=("path", "field"), default="path")
    p.add_argument("--tmap", default=None)
    p.add_argument("--bm-resolution", dest="bm_resolution", type=int,
                   default=1024)
    p.add_argument("--eval-grid", dest="eval_grid", type=int, default=16)

    p = sub.add_parser("scaling", help="estimate structure exponents")
    _add_common(p)
    p.add_argument("--qs", default="0.5,1,2")
    p.add_argument("--radii", default="auto")
    return top


def main(argv=None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO,
                        format="mrmlab %(levelname)s: %(message)s")
    args = build_parser().parse_args(argv)
    config = _merge_config(args)
    if config.threads:
        kernels.set_threads(config.threads)
    try:
        if args.subcommand == "simulate":
            return cmd_simulate(config)
        if args.subcommand == "transport":
            return cmd_transport(config, force=args.force)
        if args.subcommand == "geodesic":
            return cmd_geodesic(config, args.tmap, args.src, args.dst,
                                args.samples)
        if args.subcommand == "kpz":
            return cmd_kpz(config, args.set_name)
        if args.subcommand == "timechange":
            return cmd_timechange(config, args.mode, args.tmap,
                                  args.bm_resolution, args.eval_grid)
        if args.subcommand == "scaling":
            return cmd_scaling(config, args.qs, args.radii)
        raise SystemExit(f"unknown subcommand {args.subcommand}")
    except (ValueError, RuntimeError, OSError) as exc:
        log.error("%s", exc)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
