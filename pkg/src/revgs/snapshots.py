"""Plain-text state snapshots.

Layout::

    # revgs-snapshot v1
    # cells: 128
    # extent: 1.0
    # t: 2.5000000000000000e+00
    # species: u1 u2 u3 u4
    <one row per cell in C order, one column per species>
"""
from __future__ import annotations

from pathlib import Path

import numpy as np

from .domain import Grid, State

MAGIC = "# revgs-snapshot v1"


def write_snapshot(path, grid: Grid, t: float, u: np.ndarray, species=("u1", "u2", "u3", "u4")) -> None:
    header = [
        MAGIC[2:],
        "cells: " + " ".join(str(c) for c in grid.cells),
        "extent: " + " ".join(repr(e) for e in grid.extent),
        f"t: {t:.17e}",
        "species: " + " ".join(species),
    ]
    data = np.asarray(u, dtype=float).reshape(len(species), -1).T
    np.savetxt(path, data, fmt="%.17e", header="\n".join(header), comments="# ")


def read_snapshot(path) -> tuple[Grid, float, np.ndarray, tuple[str, ...]]:
    meta = {}
    with open(path) as fh:
        first = fh.readline().rstrip("\n")
        if first != MAGIC:
            raise ValueError(f"{path}: not a snapshot file (bad first line {first!r})")
        for line in fh:
            if not line.startswith("#"):
                break
            key, _, value = line[1:].strip().partition(":")
            meta[key.strip()] = value.strip()
    try:
        cells = tuple(int(c) for c in meta["cells"].split())
        extent = tuple(float(e) for e in meta["extent"].split())
        t = float(meta["t"])
        species = tuple(meta["species"].split())
    except KeyError as exc:
        raise ValueError(f"{path}: missing header key {exc.args[0]!r}") from None
    grid = Grid(extent, cells)
    data = np.loadtxt(path, ndmin=2)
    if data.shape != (grid.size, len(species)):
        raise ValueError(f"{path}: expected {grid.size} rows x {len(species)} columns, got {data.shape}")
    return grid, t, data.T.reshape((len(species),) + grid.shape), species


def load_state(path) -> State:
    grid, t, u, species = read_snapshot(path)
    if len(species) != 4:
        raise ValueError(f"{path}: expected four species, found {species}")
    return State(grid, u, t)


def load_trajectory(directory) -> list[State]:
    files = sorted(Path(directory).glob("snap_*.txt"))
    if not files:
        raise FileNotFoundError(f"no snapshot files (snap_*.txt) in {directory}")
    return [load_state(f) for f in files]
