"""scikit-learn style wrappers around the solvers.

Estimators take domains (or lists of domains) as ``X``; there are no
targets.  Hyperparameters live in ``__init__`` so ``get_params`` /
``set_params`` and ``clone`` work as usual.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from . import geom, magfem, radial, rearr
from .validation import check_asymmetry_kind, check_field


def _domains(X):
    if isinstance(X, geom.PlanarDomain):
        return [X]
    return [geom.PlanarDomain(np.asarray(x)) if not isinstance(x, geom.PlanarDomain) else x
            for x in X]


class MagneticEigensolver(BaseEstimator):
    """Extrapolated principal eigenvalue lambda(B, Omega) of one domain."""

    def __init__(self, B=1.0, n_rings=12, levels=3, tol=1e-10, seed=0):
        self.B = B
        self.n_rings = n_rings
        self.levels = levels
        self.tol = tol
        self.seed = seed

    def fit(self, X, y=None):
        (dom,) = _domains(X)
        check_field(self.B)
        self.result_ = magfem.solve_levels(dom, self.B, levels=self.levels, tol=self.tol,
                                           seed=self.seed, n_rings=self.n_rings)
        self.eigenvalue_ = self.result_.value
        self.error_ = self.result_.error
        return self

    def predict(self, X=None):
        check_is_fitted(self, "eigenvalue_")
        return self.eigenvalue_


class AsymmetryEstimator(BaseEstimator, TransformerMixin):
    """Maps domains to their Fraenkel or interior asymmetry."""

    def __init__(self, kind="fraenkel"):
        self.kind = kind

    def fit(self, X=None, y=None):
        check_asymmetry_kind(self.kind)
        self.fitted_ = True
        return self

    def transform(self, X):
        check_is_fitted(self, "fitted_")
        return np.array([geom.asymmetry(d, self.kind) for d in _domains(X)])


class RadialDiskSolver(BaseEstimator):
    """Disk energy e(a) for sampled potentials on [0, R]."""

    def __init__(self, R=1.0, N=2048):
        self.R = R
        self.N = N

    def fit(self, X, y=None):
        grid = radial.RadialGrid(self.R, self.N)
        prof = X if isinstance(X, radial.PotentialProfile) else radial.PotentialProfile(
            self.R, np.asarray(X, dtype=float))
        self.state_ = radial.disk_energy(prof, grid)
        self.energy_ = self.state_.energy
        return self

    def predict(self, X=None):
        check_is_fitted(self, "energy_")
        return self.energy_


class Rearrangement(BaseEstimator, TransformerMixin):
    """Transforms an eigen-solution into its rearranged profile."""

    def __init__(self, n_levels=256, asymmetry_kind="fraenkel"):
        self.n_levels = n_levels
        self.asymmetry_kind = asymmetry_kind

    def fit(self, X=None, y=None):
        check_asymmetry_kind(self.asymmetry_kind)
        self.fitted_ = True
        return self

    def transform(self, X):
        check_is_fitted(self, "fitted_")
        result = X.finest if isinstance(X, magfem.ConvergedEigenvalue) else X
        return rearr.build_profile(result, self.n_levels, self.asymmetry_kind)
