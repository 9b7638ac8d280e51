"""Estimator-style wrappers (fit / predict / get_params) around the solver, inversion and continuation."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .fields import FarFieldPattern, far_field_values
from .geom import SurfaceSpec, discretize, make_sphere
from .inverse import InversionConfig, forward_pattern, reconstruct_shape, relative_misfit
from .mathfn import fit_expansion
from .solver import BIESolver, BoundaryCondition, PlaneWave, unit


def _directions(X) -> np.ndarray:
    X = check_array(X, dtype=float)
    if X.shape[1] != 3:
        raise ValueError(f"expected directions with 3 columns, got {X.shape[1]}")
    n = np.linalg.norm(X, axis=1)
    if np.any(np.abs(n - 1.0) > 1e-8):
        raise ValueError("directions must be unit vectors")
    return X


def _complex_target(y, n: int) -> np.ndarray:
    y = np.asarray(y, dtype=complex).ravel()
    if y.shape[0] != n:
        raise ValueError("X and y have inconsistent lengths")
    if not np.all(np.isfinite(y)):
        raise ValueError("y contains non-finite values")
    return y


def _bc(kind: str, h: complex) -> BoundaryCondition:
    return BoundaryCondition.impedance(h) if kind == "impedance" else BoundaryCondition(kind)


class HelmholtzScatterer(BaseEstimator):
    """Forward scattering model.

    ``fit`` discretizes the surface, factorizes the boundary integral system
    and solves for the plane wave with direction ``alpha``; ``predict`` maps
    observation directions to complex scattering amplitudes.
    """

    def __init__(self, surface: SurfaceSpec | None = None, bc: str = "dirichlet", h: complex = 0j, k: float = 1.0,
                 alpha=(0.0, 0.0, 1.0), n_theta: int = 24, n_phi: int = 48):
        self.surface = surface
        self.bc = bc
        self.h = h
        self.k = k
        self.alpha = alpha
        self.n_theta = n_theta
        self.n_phi = n_phi

    def fit(self, X=None, y=None):
        spec = self.surface if self.surface is not None else make_sphere(1.0)
        self.solver_ = BIESolver(discretize(spec, self.n_theta, self.n_phi), _bc(self.bc, self.h), self.k)
        self.solution_ = self.solver_.solve(PlaneWave(unit(self.alpha)))
        self.condition_ = self.solver_.condition
        return self

    def predict(self, X) -> np.ndarray:
        check_is_fitted(self, "solution_")
        return far_field_values(self.solution_, _directions(X))


class ObstacleReconstructor(BaseEstimator):
    """Recover radius coefficients from far-field samples at one incident direction.

    ``fit(X, y)`` takes observation directions ``X`` (n, 3) and complex
    amplitudes ``y``; ``sample_weight`` are quadrature weights on S^2.
    """

    def __init__(self, k: float = 1.0, alpha=(0.0, 0.0, 1.0), degree: int = 2, bc: str = "dirichlet", h: complex = 0j,
                 lam: float = 1e-6, max_iter: int = 30, tol: float = 1e-6, n_theta: int = 12, n_phi: int = 24,
                 initial_radius: float = 1.0):
        self.k = k
        self.alpha = alpha
        self.degree = degree
        self.bc = bc
        self.h = h
        self.lam = lam
        self.max_iter = max_iter
        self.tol = tol
        self.n_theta = n_theta
        self.n_phi = n_phi
        self.initial_radius = initial_radius

    def _bc_setting(self):
        return "auto" if self.bc == "auto" else _bc(self.bc, self.h)

    def fit(self, X, y, sample_weight=None):
        X = _directions(X)
        y = _complex_target(y, X.shape[0])
        w = None if sample_weight is None else np.asarray(sample_weight, float)
        data = FarFieldPattern(self.k, X, y, unit(self.alpha), w)
        cfg = InversionConfig(k=self.k, alpha=self.alpha, data=data, degree=self.degree, lam=self.lam,
                              max_iter=self.max_iter, tol=self.tol, grid=(self.n_theta, self.n_phi),
                              bc=self._bc_setting())
        self.result_ = reconstruct_shape(cfg, make_sphere(self.initial_radius))
        self.spec_ = self.result_.spec
        self.bc_ = self.result_.bc
        self.coef_ = self.spec_.radius_coeffs[: (self.degree + 1) ** 2].copy()
        self.n_iter_ = self.result_.iterations
        return self

    def predict(self, X) -> np.ndarray:
        check_is_fitted(self, "spec_")
        return forward_pattern(self.spec_, self.bc_, self.k, unit(self.alpha), _directions(X),
                               (self.n_theta, self.n_phi))

    def score(self, X, y, sample_weight=None) -> float:
        """Negative relative L2 misfit (higher is better)."""
        X = _directions(X)
        y = _complex_target(y, X.shape[0])
        w = None if sample_weight is None else np.asarray(sample_weight, float)
        return -relative_misfit(self.predict(X), FarFieldPattern(self.k, X, y, None, w))


class CapContinuation(BaseEstimator):
    """Least-squares spherical-harmonic extension of data given on part of S^2."""

    def __init__(self, degree: int = 8, rcond: float = 1e-13):
        self.degree = degree
        self.rcond = rcond

    def fit(self, X, y, sample_weight=None):
        X = _directions(X)
        y = _complex_target(y, X.shape[0])
        self.expansion_ = fit_expansion(X, y, self.degree, weights=sample_weight, rcond=self.rcond)
        self.coef_ = self.expansion_.coeffs
        self.condition_ = self.expansion_.condition
        return self

    def predict(self, X) -> np.ndarray:
        check_is_fitted(self, "expansion_")
        return self.expansion_(_directions(X))
