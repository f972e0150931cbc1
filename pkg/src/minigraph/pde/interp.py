"""Multilinear interpolation of node values on a raster."""

from __future__ import annotations

import itertools

import numpy as np
from scipy.spatial import cKDTree

from ..raster import EXTERIOR, RasterizedDomain


def interpolate(raster: RasterizedDomain, u: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Values of ``u`` at ``points`` given in grid coordinates.

    Multilinear interpolation over the surrounding lattice cell (second order
    where all corners are non-exterior).  Corners at exterior nodes are
    dropped and the remaining weights renormalized; when no corner carries a
    value the nearest non-exterior node is used.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    n = raster.n
    rel = (pts - raster.origin) / raster.h
    base = np.floor(rel).astype(np.int64)
    frac = rel - base
    dims = np.array(raster.dims)
    base = np.clip(base, 0, dims - 2)
    frac = np.clip(rel - base, 0.0, 1.0)
    valid = raster.node_class != EXTERIOR
    total = np.zeros(len(pts))
    wsum = np.zeros(len(pts))
    for corner in itertools.product((0, 1), repeat=n):
        idx = base + np.array(corner)
        w = np.ones(len(pts))
        for i, c in enumerate(corner):
            w = w * (frac[:, i] if c else 1.0 - frac[:, i])
        key = tuple(idx.T)
        ok = valid[key]
        val = np.where(ok, u[key], 0.0)
        w = np.where(ok, w, 0.0)
        total += w * val
        wsum += w
    out = np.full(len(pts), np.nan)
    good = wsum > 1e-12
    out[good] = total[good] / wsum[good]
    if not good.all():
        act = np.argwhere(valid)
        tree = cKDTree(raster.origin + raster.h * act)
        _, j = tree.query(pts[~good])
        out[~good] = u[tuple(act[j].T)]
    return out
