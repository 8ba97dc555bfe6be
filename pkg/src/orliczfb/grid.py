"""Uniform tensor grids on boxes in 1D/2D: fields, per-cell gradients, quadrature, balls.

Nodal arrays use ``indexing='ij'`` (axis 0 is ``x1``). A cell is indexed by its
lower corner; its gradient uses forward differences from that corner, so the
discrete energy is a sum of per-cell convex terms of the node values.
"""
import struct
from dataclasses import dataclass, field as dc_field
from math import gamma, pi

import numpy as np

from .exceptions import DegenerateBallError, DomainError
from .expr import expr_parse

__all__ = [
    "Grid", "Field", "Ball", "gradient", "grad_norm", "integrate", "ball_average",
    "restrict", "embed", "boundary_trace", "cells_touching", "ball_measure",
    "save_field_binary", "load_field_binary", "save_field_csv", "load_field_csv",
]


@dataclass(frozen=True)
class Grid:
    lo: tuple
    hi: tuple
    n: tuple

    def __post_init__(self):
        lo = tuple(float(v) for v in np.atleast_1d(self.lo))
        hi = tuple(float(v) for v in np.atleast_1d(self.hi))
        n = tuple(int(v) for v in np.atleast_1d(self.n))
        if len(n) == 1 and len(lo) > 1:
            n = n * len(lo)
        if not (len(lo) == len(hi) == len(n)) or len(n) not in (1, 2):
            raise ValueError("grid must be 1D or 2D with matching lo/hi/n")
        if any(k < 3 for k in n):
            raise ValueError("need at least 3 nodes per axis")
        if any(b <= a for a, b in zip(lo, hi)):
            raise ValueError("box must satisfy lo < hi")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        object.__setattr__(self, "n", n)

    @classmethod
    def unit(cls, d, cells):
        """Unit box [0,1]^d with ``cells`` cells per axis."""
        return cls((0.0,) * d, (1.0,) * d, (cells + 1,) * d)

    @property
    def d(self):
        return len(self.n)

    @property
    def h(self):
        return tuple((b - a) / (k - 1) for a, b, k in zip(self.lo, self.hi, self.n))

    @property
    def hmax(self):
        return max(self.h)

    @property
    def shape(self):
        return self.n

    @property
    def cell_shape(self):
        return tuple(k - 1 for k in self.n)

    @property
    def cell_volume(self):
        return float(np.prod(self.h))

    def axes(self):
        return [np.linspace(a, b, k) for a, b, k in zip(self.lo, self.hi, self.n)]

    def nodes(self):
        """Node coordinates, shape ``(*shape, d)``."""
        return np.stack(np.meshgrid(*self.axes(), indexing="ij"), axis=-1)

    def cell_centers(self):
        mids = [0.5 * (ax[1:] + ax[:-1]) for ax in self.axes()]
        return np.stack(np.meshgrid(*mids, indexing="ij"), axis=-1)

    def boundary_mask(self):
        mask = np.zeros(self.shape, dtype=bool)
        for axis in range(self.d):
            idx = [slice(None)] * self.d
            idx[axis] = 0
            mask[tuple(idx)] = True
            idx[axis] = -1
            mask[tuple(idx)] = True
        return mask

    def contains(self, x, tol=1e-12):
        x = np.asarray(x, dtype=float)
        lo, hi = np.array(self.lo), np.array(self.hi)
        span = hi - lo
        return np.all((x >= lo - tol * span) & (x <= hi + tol * span), axis=-1)

    def coarsen(self):
        if any((k - 1) % 2 for k in self.n):
            raise ValueError("cannot coarsen a grid with an odd number of cells")
        return Grid(self.lo, self.hi, tuple((k - 1) // 2 + 1 for k in self.n))

    def refine(self):
        return Grid(self.lo, self.hi, tuple(2 * (k - 1) + 1 for k in self.n))

    def sample(self, expression):
        """Evaluate a mini-grammar expression (or callable) at all nodes."""
        if callable(expression) and not isinstance(expression, str):
            return np.asarray(expression(self.nodes()), dtype=float)
        return expr_parse(expression)(self.nodes())


@dataclass
class Field:
    """Nodal values on a grid plus a mask of nodes that solvers must not touch."""

    grid: Grid
    values: np.ndarray
    boundary_mask: np.ndarray = dc_field(default=None)

    def __post_init__(self):
        self.values = np.array(self.values, dtype=float)
        if self.values.shape != self.grid.shape:
            raise ValueError(f"values shape {self.values.shape} != grid shape {self.grid.shape}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field values must be finite")
        if self.boundary_mask is None:
            self.boundary_mask = self.grid.boundary_mask()
        self.boundary_mask = np.array(self.boundary_mask, dtype=bool)

    @classmethod
    def from_expression(cls, grid, expression):
        return cls(grid, grid.sample(expression))

    @classmethod
    def zeros(cls, grid):
        return cls(grid, np.zeros(grid.shape))

    def copy(self, values=None):
        return Field(self.grid, self.values if values is None else values, self.boundary_mask)

    @property
    def sup(self):
        return float(np.max(np.abs(self.values)))


@dataclass(frozen=True)
class Ball:
    center: tuple
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in np.atleast_1d(self.center)))
        if not self.radius > 0:
            raise ValueError("ball radius must be positive")
        object.__setattr__(self, "radius", float(self.radius))

    def scaled(self, factor):
        return Ball(self.center, self.radius * factor)

    def _dist(self, points):
        c = np.asarray(self.center)
        if points.shape[-1] != c.size:
            raise ValueError(f"ball of dimension {c.size} used on {points.shape[-1]}D grid")
        return np.sqrt(np.sum((points - c) ** 2, axis=-1))

    def node_mask(self, grid, closed=False):
        dist = self._dist(grid.nodes())
        tol = 1e-12 * self.radius
        return dist <= self.radius + tol if closed else dist < self.radius - tol

    def cell_mask(self, grid):
        return self._dist(grid.cell_centers()) < self.radius

    def ring_mask(self, grid):
        """Nodes outside the ball that neighbour (including diagonally) a ball node."""
        inside = self.node_mask(grid)
        grown = inside.copy()
        for shift in _neighbour_shifts(grid.d):
            grown |= _shift(inside, shift)
        return grown & ~inside

    def inside_domain(self, grid):
        c = np.asarray(self.center)
        return bool(np.all(c - self.radius >= np.array(grid.lo) - 1e-12)
                    and np.all(c + self.radius <= np.array(grid.hi) + 1e-12))


def ball_measure(radius, d):
    """Lebesgue measure of a d-dimensional ball."""
    return pi ** (d / 2) / gamma(d / 2 + 1) * radius ** d


def _neighbour_shifts(d):
    if d == 1:
        return [(-1,), (1,)]
    return [(a, b) for a in (-1, 0, 1) for b in (-1, 0, 1) if (a, b) != (0, 0)]


def _shift(mask, shift):
    out = np.zeros_like(mask)
    src, dst = [], []
    for s, k in zip(shift, mask.shape):
        if s >= 0:
            src.append(slice(0, k - s))
            dst.append(slice(s, k))
        else:
            src.append(slice(-s, k))
            dst.append(slice(0, k + s))
    out[tuple(dst)] = mask[tuple(src)]
    return out


def gradient(field_or_values, grid=None):
    """Per-cell forward-difference gradient, shape ``(*cell_shape, d)``."""
    if isinstance(field_or_values, Field):
        grid, u = field_or_values.grid, field_or_values.values
    else:
        u = np.asarray(field_or_values, dtype=float)
    h = grid.h
    if grid.d == 1:
        return (np.diff(u) / h[0])[:, None]
    g1 = (u[1:, :-1] - u[:-1, :-1]) / h[0]
    g2 = (u[:-1, 1:] - u[:-1, :-1]) / h[1]
    return np.stack([g1, g2], axis=-1)


def grad_norm(field_or_values, grid=None):
    g = gradient(field_or_values, grid)
    return np.sqrt(np.sum(g * g, axis=-1))


def cell_corner_max(values, d):
    """Max over the corners of each cell."""
    if d == 1:
        return np.maximum(values[1:], values[:-1])
    return np.maximum(np.maximum(values[1:, 1:], values[:-1, 1:]),
                      np.maximum(values[1:, :-1], values[:-1, :-1]))


def cells_touching(node_mask):
    """Cells with at least one corner in ``node_mask``."""
    return cell_corner_max(node_mask.astype(np.int8), node_mask.ndim).astype(bool)


def integrate(cell_values, grid, mask=None):
    """Cell-midpoint quadrature: sum of values times the cell volume."""
    vals = np.asarray(cell_values, dtype=float)
    if mask is not None:
        vals = vals[mask]
    # numpy's contiguous sum is pairwise, hence order-deterministic
    return float(np.sum(vals, dtype=float) * grid.cell_volume)


def ball_average(values, grid, ball):
    """Discrete mean over a ball; nodal or cell arrays are detected by shape."""
    values = np.asarray(values, dtype=float)
    if values.shape[:grid.d] == grid.shape:
        mask = ball.node_mask(grid)
    elif values.shape[:grid.d] == grid.cell_shape:
        mask = ball.cell_mask(grid)
    else:
        raise ValueError("array shape matches neither nodes nor cells of the grid")
    if not mask.any():
        raise DegenerateBallError(f"no grid point inside {ball}")
    return float(np.mean(values[mask], axis=0)) if values.ndim == grid.d else np.mean(values[mask], axis=0)


def _window(grid, mask):
    idx = np.nonzero(mask)
    return tuple(slice(int(i.min()), int(i.max()) + 1) for i in idx)


def restrict(field, ball):
    """Sub-field on the index window around ``ball``; only ball nodes stay free.

    Nodes of the window outside the open ball (the discrete boundary ring and
    corners) are marked as boundary, as are nodes on the original boundary.
    """
    grid = field.grid
    inside = ball.node_mask(grid)
    if not inside.any():
        raise DegenerateBallError(f"no grid node inside {ball}")
    ring = ball.ring_mask(grid)
    win = _window(grid, inside | ring)
    axes = grid.axes()
    sub_grid = Grid(tuple(ax[s][0] for ax, s in zip(axes, win)),
                    tuple(ax[s][-1] for ax, s in zip(axes, win)),
                    tuple(s.stop - s.start for s in win))
    fixed = ~inside[win] | field.boundary_mask[win]
    return Field(sub_grid, field.values[win], fixed)


def embed(sub_field, field, ball):
    """Write the free nodes of a restricted sub-field back into ``field`` (copy)."""
    grid = field.grid
    inside = ball.node_mask(grid)
    win = _window(grid, inside | ball.ring_mask(grid))
    out = field.values.copy()
    block = out[win]
    free = ~sub_field.boundary_mask
    block[free] = sub_field.values[free]
    out[win] = block
    return field.copy(out)


def boundary_trace(field, ball):
    """Discrete Dirichlet data on ``ball``: ring node coordinates and values."""
    ring = ball.ring_mask(field.grid)
    return field.grid.nodes()[ring], field.values[ring]


# ---------------------------------------------------------------------------
# persistence

_MAGIC = b"OFBF"
_VERSION = 1


def save_field_binary(field, path):
    """Little-endian layout: magic, version, d, n[d], lo[d], hi[d], values, mask."""
    g = field.grid
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<II", _VERSION, g.d))
        fh.write(struct.pack(f"<{g.d}I", *g.n))
        fh.write(struct.pack(f"<{g.d}d", *g.lo))
        fh.write(struct.pack(f"<{g.d}d", *g.hi))
        fh.write(np.ascontiguousarray(field.values, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(field.boundary_mask, dtype="u1").tobytes())


def load_field_binary(path):
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] != _MAGIC:
        raise ValueError(f"{path}: not a field file")
    version, d = struct.unpack_from("<II", data, 4)
    if version != _VERSION:
        raise ValueError(f"{path}: unsupported version {version}")
    off = 12
    n = struct.unpack_from(f"<{d}I", data, off)
    off += 4 * d
    lo = struct.unpack_from(f"<{d}d", data, off)
    off += 8 * d
    hi = struct.unpack_from(f"<{d}d", data, off)
    off += 8 * d
    size = int(np.prod(n))
    values = np.frombuffer(data, dtype="<f8", count=size, offset=off).reshape(n)
    off += 8 * size
    mask = np.frombuffer(data, dtype="u1", count=size, offset=off).reshape(n).astype(bool)
    return Field(Grid(lo, hi, n), values.astype(float), mask)


def save_field_csv(field, path):
    """One row per node: coordinates, value, boundary flag."""
    g = field.grid
    pts = g.nodes().reshape(-1, g.d)
    cols = [f"x{i + 1}" for i in range(g.d)]
    with open(path, "w", newline="") as fh:
        fh.write(",".join(cols + ["value", "boundary"]) + "\n")
        for p, v, b in zip(pts, field.values.ravel(), field.boundary_mask.ravel()):
            fh.write(",".join(repr(float(c)) for c in p) + f",{float(v)!r},{int(b)}\n")


def load_field_csv(path, grid):
    raw = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    d = grid.d
    if not np.allclose(raw[:, :d], grid.nodes().reshape(-1, d)):
        raise DomainError(f"{path}: coordinates do not match the grid")
    return Field(grid, raw[:, d].reshape(grid.shape), raw[:, d + 1].reshape(grid.shape) > 0)
