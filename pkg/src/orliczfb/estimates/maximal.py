"""Discrete Hardy-Littlewood maximal function over dyadic radii."""
import numpy as np
from scipy.signal import fftconvolve

from ..grid import Grid

__all__ = ["maximal_function"]


def _disk_kernel(grid, radius):
    """Kernel over cell offsets m: 1 where the centre of cell i+m is within ``radius`` of node i."""
    h = np.array(grid.h)
    M = np.floor(radius / h).astype(int)
    axes = [(np.arange(-m - 1, m + 1) + 0.5) * hh for m, hh in zip(M, h)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return (sum(a * a for a in mesh) <= radius * radius * (1 + 1e-12)).astype(float), M


def maximal_function(f, grid, radii=None, r_max=None):
    """Nodal max over radii of the mean of |f| on the cells with centre in B_rho(x).

    ``f`` is a cell array. Radii default to 2h, 4h, ... up to ``r_max`` (the box
    diameter by default). Balls are clipped to the grid box.
    """
    if not isinstance(grid, Grid):
        raise TypeError("grid must be a Grid")
    f = np.abs(np.asarray(f, dtype=float))
    if f.shape != grid.cell_shape:
        raise ValueError("f must be a cell array of the grid")
    if radii is None:
        diam = float(np.sqrt(np.sum((np.array(grid.hi) - np.array(grid.lo)) ** 2)))
        r_max = diam if r_max is None else r_max
        radii = [2.0 * grid.hmax]
        while radii[-1] * 2 <= r_max * (1 + 1e-12):
            radii.append(radii[-1] * 2)
    ones = np.ones_like(f)
    best = np.zeros(grid.shape)
    for rho in radii:
        K, M = _disk_kernel(grid, rho)
        pad = [(m + 1, m + 1) for m in M]
        num = fftconvolve(np.pad(f, pad), np.flip(K), mode="valid")
        cnt = np.rint(fftconvolve(np.pad(ones, pad), np.flip(K),
                                  mode="valid"))
        with np.errstate(invalid="ignore", divide="ignore"):
            avg = np.where(cnt > 0, np.maximum(num, 0.0) / cnt, 0.0)
        best = np.maximum(best, avg)
    return best
