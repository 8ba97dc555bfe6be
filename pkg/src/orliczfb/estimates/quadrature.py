"""Cell-based ball averages of phi(x, |grad u|) and related densities."""
import numpy as np

from ..exceptions import DegenerateBallError, DomainError
from ..grid import gradient
from ..validation import check_ball, check_field

__all__ = ["cell_values", "BallData", "ball_data"]


def cell_values(u):
    """Mean of the corner values of each cell."""
    v = u.values
    if u.grid.d == 1:
        return 0.5 * (v[1:] + v[:-1])
    return 0.25 * (v[1:, 1:] + v[:-1, 1:] + v[1:, :-1] + v[:-1, :-1])


class BallData:
    """Cells of ``u`` whose centres lie in ``ball``."""

    def __init__(self, u, ball):
        grid = u.grid
        self.ball = ball
        self.mask = ball.cell_mask(grid)
        if not self.mask.any():
            raise DegenerateBallError(f"no cell centre inside {ball}")
        self.x = grid.cell_centers()[self.mask]
        self.grad = gradient(u)[self.mask]
        self.norm = np.sqrt(np.sum(self.grad ** 2, axis=-1))
        self.u = cell_values(u)[self.mask]
        self.volume = float(self.mask.sum()) * grid.cell_volume

    def phi_of(self, phi, t):
        return phi.at(self.x).value(np.asarray(t, dtype=float))

    def mean(self, values):
        return float(np.mean(values))


def ball_data(u, ball, doubled=True, max_radius=None):
    """Validated data on ``ball`` and, optionally, on the doubled ball."""
    check_field(u)
    outer = ball.scaled(2.0) if doubled else ball
    check_ball(outer, u.grid, inside=True)
    if max_radius is not None and outer.radius > max_radius + 1e-12:
        raise DomainError(f"radius {outer.radius} exceeds {max_radius}")
    inner = BallData(u, ball)
    return (inner, BallData(u, outer)) if doubled else inner
