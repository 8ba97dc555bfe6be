"""Input validation helpers shared by solvers and estimates."""
import numbers

import numpy as np

from .exceptions import DegenerateBallError, DomainError, PreconditionError
from .grid import Ball, Field


def check_positive(value, name, strict=True):
    if not isinstance(value, numbers.Real) or not np.isfinite(value):
        raise ValueError(f"{name} must be a finite real number, got {value!r}")
    if value < 0 or (strict and value == 0):
        raise ValueError(f"{name} must be {'positive' if strict else 'nonnegative'}, got {value}")
    return float(value)


def check_field(field, nonnegative=False):
    if not isinstance(field, Field):
        raise TypeError(f"expected a Field, got {type(field).__name__}")
    if nonnegative and np.any(field.values < 0):
        raise PreconditionError("field must be nonnegative")
    return field


def check_ball(ball, grid, inside=False, min_nodes=1):
    if not isinstance(ball, Ball):
        raise TypeError(f"expected a Ball, got {type(ball).__name__}")
    if len(ball.center) != grid.d:
        raise DomainError(f"ball of dimension {len(ball.center)} on a {grid.d}D grid")
    if inside and not ball.inside_domain(grid):
        raise DomainError(f"{ball} is not contained in the grid box")
    if int(ball.node_mask(grid).sum()) < min_nodes:
        raise DegenerateBallError(f"{ball} contains fewer than {min_nodes} grid node(s)")
    return ball


def check_radii(radii, minimum=1):
    radii = np.asarray(radii, dtype=float)
    if radii.ndim != 1 or radii.size < minimum:
        raise ValueError(f"need at least {minimum} radii")
    if np.any(radii <= 0):
        raise ValueError("radii must be positive")
    return np.sort(radii)
