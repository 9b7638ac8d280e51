"""Exterior Helmholtz obstacle scattering with boundary integral equations.

Forward solves, far-field patterns and obstacle Green's functions for
star-shaped obstacles under Dirichlet, Neumann and impedance conditions,
a partial-wave oracle for spheres, identity checks, and fixed-direction
shape recovery.
"""

__version__ = "0.1.0"

from .geom import SurfaceSpec, QuadSurface, discretize, make_sphere, make_spheroid, perturbed_sphere
from .solver import BIESolver, BoundaryCondition, BoundarySolution, PlaneWave, PointSource, solve_scattering
from .fields import FarFieldPattern, eval_scattered, eval_total, far_field, greens_function
from .oracle import mie_far_field, mie_total_field, sphere_greens
from .verify import IdentityReport, run_suite
from .inverse import (
    InversionConfig,
    InversionResult,
    classify_boundary_condition,
    reconstruct_shape,
    synthetic_pattern,
)
from .estimators import CapContinuation, HelmholtzScatterer, ObstacleReconstructor

__all__ = [
    "SurfaceSpec", "QuadSurface", "discretize", "make_sphere", "make_spheroid", "perturbed_sphere",
    "BIESolver", "BoundaryCondition", "BoundarySolution", "PlaneWave", "PointSource", "solve_scattering",
    "FarFieldPattern", "eval_scattered", "eval_total", "far_field", "greens_function",
    "mie_far_field", "mie_total_field", "sphere_greens",
    "IdentityReport", "run_suite",
    "InversionConfig", "InversionResult", "classify_boundary_condition", "reconstruct_shape", "synthetic_pattern",
    "CapContinuation", "HelmholtzScatterer", "ObstacleReconstructor",
]
