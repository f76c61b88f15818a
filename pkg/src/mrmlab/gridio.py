"""File formats: ".grid" binary grids, ".tmap" transport chains, CSV reports.

A .grid file is one ASCII header line of key=value pairs
(m, grid_n, R, T, gamma2, cutoff_l, seed, replica, kind) followed by
grid_n^m little-endian float64 values, row-major.  CSV exports mirror the
same data as x[,y],value rows under a single header row.
"""

from __future__ import annotations

import csv

import numpy as np

GRID_KINDS = ("field", "measure")
GRID_HEADER_KEYS = ("m", "grid_n", "R", "T", "gamma2", "cutoff_l", "seed",
                    "replica", "kind")
TMAP_HEADER_KEYS = ("steps", "atom_count", "solver", "epsilon", "tol")


def format_value(v) -> str:
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def parse_value(s: str):
    try:
        return int(s)
    except ValueError:
        pass
    try:
        return float(s)
    except ValueError:
        return s


def emit_header(items: dict, keys=None) -> str:
    keys = list(items.keys()) if keys is None else list(keys)
    return " ".join(f"{k}={format_value(items[k])}" for k in keys)


def parse_header(line: str) -> dict:
    items = {}
    for token in line.strip().split():
        if "=" not in token:
            raise ValueError(f"malformed header token {token!r}")
        k, v = token.split("=", 1)
        items[k] = parse_value(v)
    return items


# ---------------------------------------------------------------------------
# .grid
# ---------------------------------------------------------------------------


def write_grid(path, values: np.ndarray, header: dict) -> None:
    header = dict(header)
    if header.get("kind") not in GRID_KINDS:
        raise ValueError(f"grid kind must be one of {GRID_KINDS}")
    missing = [k for k in GRID_HEADER_KEYS if k not in header]
    if missing:
        raise ValueError(f"grid header missing keys: {missing}")
    m = int(header["m"])
    n = int(header["grid_n"])
    values = np.asarray(values, dtype=np.float64)
    if values.size != n ** m:
        raise ValueError(f"expected {n ** m} values, got {values.size}")
    with open(path, "wb") as fh:
        fh.write(emit_header(header, GRID_HEADER_KEYS).encode("ascii"))
        fh.write(b"\n")
        fh.write(values.astype("<f8").tobytes(order="C"))


def read_grid(path):
    with open(path, "rb") as fh:
        header = parse_header(fh.readline().decode("ascii"))
        payload = fh.read()
    m = int(header["m"])
    n = int(header["grid_n"])
    values = np.frombuffer(payload, dtype="<f8", count=n ** m)
    return header, values.reshape((n,) * m).copy()


def grid_csv(path, values: np.ndarray, header: dict) -> None:
    """CSV mirror of a grid: x[,y],value with cell-center coordinates."""
    m = int(header["m"])
    n = int(header["grid_n"])
    R = float(header["R"])
    h = 2.0 * R / n
    ax = -R + h * (np.arange(n) + 0.5)
    values = np.asarray(values, dtype=np.float64).reshape((n,) * m)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        if m == 1:
            w.writerow(["x", "value"])
            for i in range(n):
                w.writerow([f"{ax[i]:.17g}", f"{values[i]:.17g}"])
        else:
            w.writerow(["x", "y", "value"])
            for i in range(n):
                for j in range(n):
                    w.writerow([f"{ax[i]:.17g}", f"{ax[j]:.17g}",
                                f"{values[i, j]:.17g}"])


# ---------------------------------------------------------------------------
# .tmap
# ---------------------------------------------------------------------------


def write_tmap(path, chained, epsilon: float = 0.0, tol: float = 0.0,
               extra: dict | None = None) -> None:
    from .transport import ChainedMap  # local import to avoid a cycle

    assert isinstance(chained, ChainedMap)
    m = chained.source_atoms.shape[1]
    header = {
        "steps": chained.n_steps,
        "atom_count": chained.source_atoms.shape[0],
        "solver": chained.solver,
        "epsilon": epsilon,
        "tol": tol,
    }
    keys = list(TMAP_HEADER_KEYS)
    if extra:
        # model parameters ride along in every output header
        for k, v in extra.items():
            if k not in header:
                header[k] = v
                keys.append(k)
    with open(path, "w", newline="") as fh:
        fh.write(emit_header(header, keys) + "\n")
        w = csv.writer(fh)
        if m == 1:
            w.writerow(["step", "atom", "src_x", "img_x"])
        else:
            w.writerow(["step", "atom", "src_x", "src_y", "img_x", "img_y"])
        for s, step in enumerate(chained.steps, start=1):
            for i in range(step.source_atoms.shape[0]):
                row = [s, i]
                row += [f"{c:.17g}" for c in step.source_atoms[i]]
                row += [f"{c:.17g}" for c in step.images[i]]
                w.writerow(row)


def read_tmap(path):
    from .transport import ChainedMap, SolverInfo, TransportMap

    with open(path, "r", newline="") as fh:
        header = parse_header(fh.readline())
        reader = csv.reader(fh)
        next(reader)  # column header
        rows = list(reader)
    n_steps = int(header["steps"])
    count = int(header["atom_count"])
    ncoord = (len(rows[0]) - 2) // 2
    kind = "exact-assignment" if header["solver"] == "exact" else "barycentric"
    steps = []
    for s in range(1, n_steps + 1):
        src = np.empty((count, ncoord))
        img = np.empty((count, ncoord))
        for row in rows[(s - 1) * count: s * count]:
            i = int(row[1])
            src[i] = [float(c) for c in row[2:2 + ncoord]]
            img[i] = [float(c) for c in row[2 + ncoord:2 + 2 * ncoord]]
        steps.append(TransportMap(source_atoms=src, images=img, kind=kind,
                                  info=SolverInfo(method=header["solver"])))
    chained = ChainedMap(source_atoms=steps[0].source_atoms,
                         source_weights=np.full(count, 1.0 / count),
                         steps=tuple(steps), solver=str(header["solver"]))
    return header, chained


# ---------------------------------------------------------------------------
# CSV reports
# ---------------------------------------------------------------------------


def write_csv(path, columns: list, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(columns)
        for row in rows:
            w.writerow([f"{c:.17g}" if isinstance(c, (float, np.floating))
                        else c for c in row])


def scaling_report_csv(path, report) -> None:
    rows = [(float(q), float(z), float(se), report.replicas)
            for q, z, se in zip(report.qs, report.zeta_hat, report.stderr)]
    write_csv(path, ["q", "zeta_hat", "stderr", "n_replicas"], rows)


def polyline_csv(path, poly) -> None:
    m = poly.points.shape[1]
    if m == 1:
        cols = ["t", "x", "image_x"]
        rows = [(float(t), float(p[0]), float(q[0]))
                for t, p, q in zip(poly.ts, poly.points, poly.image_points)]
    else:
        cols = ["t", "x", "y", "image_x", "image_y"]
        rows = [(float(t), float(p[0]), float(p[1]), float(q[0]), float(q[1]))
                for t, p, q in zip(poly.ts, poly.points, poly.image_points)]
    write_csv(path, cols, rows)


def timechange_csv(path, tc_path) -> None:
    rows = list(zip(map(float, tc_path.times), map(float, tc_path.clock),
                    map(float, tc_path.values)))
    write_csv(path, ["t", "clock", "B"], rows)


def corner_field_csv(path, field) -> None:
    m = field.eval_points.shape[1]
    cols = (["x", "B"] if m == 1 else ["x", "y", "B"])
    rows = [tuple(map(float, p)) + (float(b),)
            for p, b in zip(field.eval_points, field.values)]
    write_csv(path, cols, rows)


def jsonl_append(path, record: dict) -> None:
    import json

    with open(path, "a") as fh:
        fh.write(json.dumps(record, sort_keys=True) + "\n")


def jsonl_write(path, record: dict) -> None:
    """Single-record summary; truncates so reruns stay byte-identical."""
    import json

    with open(path, "w") as fh:
        fh.write(json.dumps(record, sort_keys=True) + "\n")
