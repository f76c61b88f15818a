"""Readers for the documented mrmlab file formats.

The coupling between the figure scripts and the simulation package is these
files alone: a .grid is one key=value header line followed by grid_n^m
little-endian float64 values (row-major); reports and polylines are CSV with
a single header row, optionally with a JSON-lines summary next to them.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np


def parse_header(line: str) -> dict:
    items = {}
    for token in line.strip().split():
        if "=" not in token:
            raise ValueError(f"malformed header token {token!r}")
        key, value = token.split("=", 1)
        try:
            items[key] = int(value)
        except ValueError:
            try:
                items[key] = float(value)
            except ValueError:
                items[key] = value
    return items


def read_grid(path):
    """(header dict, value array of shape (grid_n,)*m)."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"grid file not found: {path}")
    with open(path, "rb") as fh:
        header = parse_header(fh.readline().decode("ascii"))
        payload = fh.read()
    m = int(header["m"])
    n = int(header["grid_n"])
    values = np.frombuffer(payload, dtype="<f8", count=n ** m)
    return header, values.reshape((n,) * m)


def read_csv_columns(path) -> dict:
    """Columns of a single-header-row CSV as float arrays (strings kept)."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"csv file not found: {path}")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            names = next(reader)
        except StopIteration:
            raise ValueError(f"empty csv: {path}")
        rows = list(reader)
    if not rows or not names:
        raise ValueError(f"csv has no data rows: {path}")
    cols = {}
    for j, name in enumerate(names):
        raw = [row[j] for row in rows]
        try:
            cols[name] = np.asarray(raw, dtype=np.float64)
        except ValueError:
            cols[name] = np.asarray(raw)
    return cols


def read_jsonl_summary(path) -> dict | None:
    path = Path(path)
    if not path.exists():
        return None
    line = path.read_text().strip().splitlines()
    return json.loads(line[0]) if line else None


def grid_extent(header) -> tuple:
    R = float(header["R"])
    return (-R, R, -R, R)
