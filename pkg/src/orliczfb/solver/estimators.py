"""scikit-learn style wrappers around the solvers."""
import numpy as np
from scipy.interpolate import RegularGridInterpolator
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ..validation import check_field, check_positive
from .functional import Functional
from .minimize import SolveOptions, minimize
from .replacement import harmonic_replacement

__all__ = ["AltCaffarelliMinimizer", "HarmonicReplacement"]


class AltCaffarelliMinimizer(BaseEstimator):
    """Fit = minimize the free-boundary energy for the boundary data in a Field.

    Parameters mirror :class:`SolveOptions`; ``options`` overrides them all.
    """

    def __init__(self, phi=None, lam=1.0, options=None):
        self.phi = phi
        self.lam = lam
        self.options = options

    def fit(self, X, y=None):
        check_field(X, nonnegative=True)
        if self.phi is None:
            raise ValueError("phi must be set before fitting")
        check_positive(self.lam, "lam")
        opts = self.options if self.options is not None else SolveOptions()
        result = minimize(Functional(self.phi, self.lam, X.grid), X, opts)
        self.field_ = result.field
        self.energy_ = result.energy
        self.converged_ = result.converged
        self.log_ = result.log
        return self

    def predict(self, points):
        """Multilinear interpolation of the fitted field at ``points`` (shape (m, d))."""
        check_is_fitted(self, "field_")
        interp = RegularGridInterpolator(self.field_.grid.axes(), self.field_.values)
        return interp(np.atleast_2d(points))

    def score(self, X, y=None):
        """Negative energy of the fitted field (larger is better)."""
        check_is_fitted(self, "field_")
        return -self.energy_


class HarmonicReplacement(TransformerMixin, BaseEstimator):
    """Transform a Field by replacing it on ``ball`` with the minimizer of the ``phi`` energy."""

    def __init__(self, phi=None, ball=None, gtol=1e-8, max_iter=200):
        self.phi = phi
        self.ball = ball
        self.gtol = gtol
        self.max_iter = max_iter

    def fit(self, X=None, y=None):
        if self.phi is None or self.ball is None:
            raise ValueError("phi and ball must be set")
        check_positive(self.gtol, "gtol")
        self.n_features_in_ = 1
        return self

    def transform(self, X):
        check_is_fitted(self, "n_features_in_")
        info = harmonic_replacement(self.phi, X, self.ball, self.gtol, self.max_iter,
                                    return_info=True)
        self.residual_ = info.residual
        self.converged_ = info.converged
        return info.field
