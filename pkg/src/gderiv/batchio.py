"""Path-batch export: CSV rows and a compact binary dump.

Binary layout (all little-endian):

    magic   5 bytes  b"GDRV1"
    flags   u64      bit 0: Wiener increments present, bit 1: weights present
    n_paths u64
    n_nodes u64
    grid    f64[n_nodes]
    values  f64[n_paths * n_nodes]        row-major
    w       f64[n_paths * (n_nodes - 1)]  only if bit 0
    eta     f64[n_paths]                  only if bit 1
"""
from __future__ import annotations

import struct
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import ContractError
from .simulate import PathBatch

MAGIC = b"GDRV1"


def write_csv(batch: PathBatch, path, eta: Optional[np.ndarray] = None) -> None:
    """One row per (path, node): path_id, t, W (optional), B, Z, eta (optional).

    W is the cumulative driving process reconstructed from the stored
    increments; B is the centered process and Z the shifted one (equal when
    the batch carries no drift). Floats are written with repr precision so
    identical batches serialise to identical bytes.
    """
    path = Path(path)
    has_w = batch.w_increments is not None
    has_eta = eta is not None
    header = ["path_id", "t"] + (["W"] if has_w else []) + ["B", "Z"] + \
        (["eta"] if has_eta else [])
    wcum = None
    if has_w:
        wcum = np.concatenate(
            [np.zeros((batch.n_paths, 1)), np.cumsum(batch.w_increments, axis=1)],
            axis=1)
    shift = batch.meta.get("shift")
    centered = batch.values if shift is None else batch.values - shift[None, :]
    with path.open("w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for p in range(batch.n_paths):
            for i, t in enumerate(batch.grid):
                row = [str(p), repr(float(t))]
                if has_w:
                    row.append(repr(float(wcum[p, i])))
                row.append(repr(float(centered[p, i])))
                row.append(repr(float(batch.values[p, i])))
                if has_eta:
                    row.append(repr(float(eta[p])))
                fh.write(",".join(row) + "\n")


def write_binary(batch: PathBatch, path, eta: Optional[np.ndarray] = None) -> None:
    path = Path(path)
    flags = (1 if batch.w_increments is not None else 0) | \
            (2 if eta is not None else 0)
    with path.open("wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<QQQ", flags, batch.n_paths, batch.grid.size))
        fh.write(np.asarray(batch.grid, "<f8").tobytes())
        fh.write(np.asarray(batch.values, "<f8").tobytes())
        if batch.w_increments is not None:
            fh.write(np.asarray(batch.w_increments, "<f8").tobytes())
        if eta is not None:
            fh.write(np.asarray(eta, "<f8").tobytes())


def read_binary(path):
    """Inverse of write_binary; returns (PathBatch, eta-or-None)."""
    raw = Path(path).read_bytes()
    if raw[:5] != MAGIC:
        raise ContractError("not a GDRV1 dump")
    flags, n_paths, n_nodes = struct.unpack("<QQQ", raw[5:29])
    off = 29
    grid = np.frombuffer(raw, "<f8", n_nodes, off).copy()
    off += 8 * n_nodes
    values = np.frombuffer(raw, "<f8", n_paths * n_nodes, off)
    values = values.reshape(n_paths, n_nodes).copy()
    off += 8 * n_paths * n_nodes
    w = None
    if flags & 1:
        w = np.frombuffer(raw, "<f8", n_paths * (n_nodes - 1), off)
        w = w.reshape(n_paths, n_nodes - 1).copy()
        off += 8 * n_paths * (n_nodes - 1)
    eta = None
    if flags & 2:
        eta = np.frombuffer(raw, "<f8", n_paths, off).copy()
    return PathBatch(grid, values, w), eta
