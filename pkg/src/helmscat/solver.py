"""Nystrom boundary integral solver for exterior Helmholtz scattering.

Direct second-kind formulations (N is the normal pointing out of the obstacle):

* Dirichlet:  (I/2 + K') u_N = d(u_inc)/dN
* Neumann:    (I/2 - K) u = u_inc
* Impedance:  (I/2 - K - h S) u = u_inc      (u_N = -h u)

with S, K, K' the single-layer, double-layer and adjoint double-layer
operators.  Weakly singular integrals are computed in polar coordinates about
each collocation node: the parameter sphere is rotated so that the node sits
at the north pole, a Gauss-Legendre rule in the polar angle absorbs the 1/R
singularity, and the density is carried to the rotated nodes by
spherical-harmonic interpolation.  Rotations about the z axis act on harmonics
by a phase, so one interpolation matrix serves a whole latitude ring.
"""

from __future__ import annotations

import logging
import os
import warnings
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np
import scipy.linalg

from .geom import QuadSurface, SurfaceSpec, discretize, surface_geometry, surface_geometry_ring
from .kernels import kernel_g, kernel_grad_x, layer_kernels, plane_wave, plane_wave_grad
from .mathfn import angles_to_directions, direction_angles, sh_degrees_orders, sph_harm_all, sph_jn_all

logger = logging.getLogger(__name__)

MAX_NODES = int(os.environ.get("HELMSCAT_MAX_NODES", 6000))
DEFAULT_TOL = 1e-10
DEFAULT_COND_LIMIT = 1e6
_CHUNK_POINTS = 24000


class ResonanceWarning(UserWarning):
    """Wavenumber near a spurious interior resonance of the integral equation."""


class NearSurfaceWarning(UserWarning):
    """Field evaluated closer than one panel diameter to the surface."""


class IllConditionedError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# Scenario types
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class BoundaryCondition:
    kind: str = "dirichlet"
    h: complex = 0j

    def __post_init__(self):
        kind = self.kind.lower()
        if kind not in ("dirichlet", "neumann", "impedance"):
            raise ValueError(f"unknown boundary condition {self.kind!r}")
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "h", complex(self.h))
        if kind == "impedance" and self.h.imag < 0:
            raise ValueError("impedance requires Im h >= 0")
        if kind != "impedance" and self.h != 0:
            raise ValueError("h is only meaningful for the impedance condition")

    @classmethod
    def dirichlet(cls):
        return cls("dirichlet")

    @classmethod
    def neumann(cls):
        return cls("neumann")

    @classmethod
    def impedance(cls, h):
        return cls("impedance", complex(h))

    def to_dict(self) -> dict:
        return {"kind": self.kind, "h_re": self.h.real, "h_im": self.h.imag}

    @classmethod
    def from_dict(cls, d: dict) -> "BoundaryCondition":
        kind = d.get("kind", "dirichlet")
        h = complex(d.get("h_re", 0.0), d.get("h_im", 0.0)) if kind == "impedance" else 0j
        return cls(kind, h)


@dataclass(frozen=True)
class PlaneWave:
    """Incident plane wave exp(ik alpha.x)."""

    direction: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.direction, float).reshape(3)
        n = np.linalg.norm(a)
        if not np.isclose(n, 1.0, atol=1e-12):
            raise ValueError(f"incident direction must be a unit vector (|alpha| = {n})")
        object.__setattr__(self, "direction", a)

    def value(self, x, k):
        return plane_wave(x, self.direction, k)

    def gradient(self, x, k):
        return plane_wave_grad(x, self.direction, k)

    def to_dict(self):
        return {"type": "plane", "alpha": [float(v) for v in self.direction]}


@dataclass(frozen=True)
class PointSource:
    """Incident field g(x, y0) of a point source at ``position``."""

    position: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "position", np.asarray(self.position, float).reshape(3))

    def value(self, x, k):
        return kernel_g(x, self.position, k)

    def gradient(self, x, k):
        return kernel_grad_x(x, self.position, k)

    def to_dict(self):
        return {"type": "point", "position": [float(v) for v in self.position]}


Incidence = Union[PlaneWave, PointSource]


def incidence_from_dict(d: dict) -> Incidence:
    if d.get("type", "plane") == "plane":
        return PlaneWave(np.asarray(d["alpha"], float))
    return PointSource(np.asarray(d["position"], float))


def unit(v) -> np.ndarray:
    v = np.asarray(v, float)
    return v / np.linalg.norm(v)


@dataclass(frozen=True)
class BoundarySolution:
    """Solved boundary density.

    ``density`` is u_N for Dirichlet and the trace of u for Neumann/impedance.
    """

    surface: QuadSurface
    bc: BoundaryCondition
    incidence: Incidence
    k: float
    density: np.ndarray
    residual: float

    @property
    def u_trace(self) -> np.ndarray:
        if self.bc.kind == "dirichlet":
            return np.zeros_like(self.density)
        return self.density

    @property
    def un_trace(self) -> np.ndarray:
        if self.bc.kind == "dirichlet":
            return self.density
        if self.bc.kind == "neumann":
            return np.zeros_like(self.density)
        return -self.bc.h * self.density


# ---------------------------------------------------------------------------
# Assembly
# ---------------------------------------------------------------------------
def interpolation_degree(grid_dims: tuple[int, int]) -> int:
    nt, nph = grid_dims
    return min(nt - 1, (nph - 1) // 2)


def _rotated_rule(n_theta: int, n_phi: int):
    """Polar rule about the north pole: GL in theta on [0, pi] (with sin theta), trapezoid in phi."""
    t, w = np.polynomial.legendre.leggauss(n_theta)
    th = 0.5 * np.pi * (t + 1.0)
    wt = 0.5 * np.pi * w * np.sin(th)
    ph = 2.0 * np.pi * np.arange(n_phi) / n_phi
    dirs = angles_to_directions(np.repeat(th, n_phi), np.tile(ph, n_theta))
    weights = np.repeat(wt, n_phi) * (2.0 * np.pi / n_phi)
    return dirs, weights


def _rot_y(angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


@dataclass
class LayerOperators:
    """Dense Nystrom matrices of the boundary layer operators (acting on nodal values)."""

    surface: QuadSurface
    k: float
    S: np.ndarray | None = None
    K: np.ndarray | None = None
    Kp: np.ndarray | None = None

    def matrix(self, bc: BoundaryCondition) -> np.ndarray:
        n = self.surface.size
        half = 0.5 * np.eye(n)
        if bc.kind == "dirichlet":
            return half + self.Kp
        if bc.kind == "neumann":
            return half - self.K
        return half - self.K - bc.h * self.S


def required_operators(bc: BoundaryCondition) -> tuple[str, ...]:
    return {"dirichlet": ("Kp",), "neumann": ("K",), "impedance": ("S", "K")}[bc.kind]


def assemble_layer_operators(surface: QuadSurface, k: float, which: Sequence[str] = ("S", "K", "Kp"),
                             rotated_dims: tuple[int, int] | None = None,
                             max_nodes: int | None = None) -> LayerOperators:
    """Assemble the requested operators among ``S``, ``K`` (double layer), ``Kp`` (adjoint)."""
    n = surface.size
    cap = MAX_NODES if max_nodes is None else max_nodes
    if n > cap:
        raise MemoryError(f"{n} nodes exceeds the configured cap of {cap}")
    which = tuple(which)
    for w in which:
        if w not in ("S", "K", "Kp"):
            raise ValueError(f"unknown operator {w!r}")
    spec = surface.spec
    nt, nph = surface.grid_dims
    L = interpolation_degree(surface.grid_dims)
    rdims = rotated_dims or (nt, nph)
    qdirs, qw = _rotated_rule(*rdims)
    nq = qw.size
    _, ms = sh_degrees_orders(L)
    # analysis: nodal values -> SH coefficients (exact for degree <= L)
    Ybase = sph_harm_all(L, np.repeat(surface.theta, nph), np.tile(surface.phi, nt))
    P = np.conj(Ybase) * surface.param_weights
    B = {w: np.empty((n, ms.size), dtype=complex) for w in which}
    phase_all = np.exp(1j * np.outer(surface.phi, ms))
    chunk = max(1, _CHUNK_POINTS // nq)
    for i, th_i in enumerate(surface.theta):
        d0 = qdirs @ _rot_y(th_i).T
        Th, Ph0 = direction_angles(d0)
        Yring_T = sph_harm_all(L, Th, Ph0).T  # (nq, nL)
        for j0 in range(0, nph, chunk):
            js = np.arange(j0, min(nph, j0 + chunk))
            pts, nrm, jac = surface_geometry_ring(spec, Th, Ph0, surface.phi[js])
            rows = i * nph + js
            x = surface.nodes[rows][:, None, :]
            nx = surface.normals[rows][:, None, :]
            g, dny, dnx = layer_kernels(x, nx, pts, nrm, k)
            wt = qw[None, :] * jac
            kern = {"S": g, "K": dny, "Kp": dnx}
            for w in which:
                B[w][rows] = ((kern[w] * wt) @ Yring_T) * phase_all[js]
    ops = LayerOperators(surface=surface, k=k)
    for w in which:
        setattr(ops, w, B[w] @ P)
    return ops


def representation_trace(sol: "BoundarySolution", theta, phi, rotated_dims: tuple[int, int] | None = None):
    """Total-field trace at arbitrary surface parameters rebuilt from the representation.

    On the surface ``u/2 = u_inc + K[u] - S[u_N]``; the densities are carried
    to the rotated quadrature by the same harmonic interpolation used in
    assembly.  Returns ``(u_rep, u_interp)``: the reconstructed trace and the
    interpolated stored trace at the requested points.  For Dirichlet
    obstacles ``u_rep`` should vanish; for the other conditions the two agree.
    """
    surface = sol.surface
    spec = surface.spec
    nt, nph = surface.grid_dims
    L = interpolation_degree(surface.grid_dims)
    qdirs, qw = _rotated_rule(*(rotated_dims or (nt, nph)))
    Ybase = sph_harm_all(L, np.repeat(surface.theta, nph), np.tile(surface.phi, nt))
    P = np.conj(Ybase) * surface.param_weights
    cu = P @ sol.u_trace
    cn = P @ sol.un_trace
    theta = np.atleast_1d(np.asarray(theta, float))
    phi = np.atleast_1d(np.asarray(phi, float))
    x, nx, _ = surface_geometry(spec, theta, phi)
    u_rep = np.empty(theta.size, dtype=complex)
    u_int = np.empty(theta.size, dtype=complex)
    for i, (th, ph) in enumerate(zip(theta, phi)):
        Th, Ph = direction_angles(qdirs @ _rot_y(th).T)
        Ph = Ph + ph
        pts, nrm, jac = surface_geometry(spec, Th, Ph)
        Y = sph_harm_all(L, Th, Ph)
        g, dny, _ = layer_kernels(x[i], nx[i], pts, nrm, sol.k)
        wt = qw * jac
        Ku = np.sum(wt * dny * (cu @ Y))
        Sn = np.sum(wt * g * (cn @ Y))
        u_rep[i] = 2.0 * (sol.incidence.value(x[i][None], sol.k)[0] + Ku - Sn)
        u_int[i] = cu @ sph_harm_all(L, np.array([th]), np.array([ph]))[:, 0]
    return u_rep, u_int


def assemble_matrix(surface: QuadSurface, bc: BoundaryCondition, k: float, **kwargs) -> np.ndarray:
    """Dense system matrix for the boundary condition ``bc``."""
    ops = assemble_layer_operators(surface, k, required_operators(bc), **kwargs)
    return ops.matrix(bc)


def rhs_for(surface: QuadSurface, bc: BoundaryCondition, incidence: Incidence, k: float) -> np.ndarray:
    if bc.kind == "dirichlet":
        return (incidence.gradient(surface.nodes, k) * surface.normals).sum(axis=-1)
    return incidence.value(surface.nodes, k)


# ---------------------------------------------------------------------------
# Resonance guard
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class ResonanceAdvisory:
    warn: bool
    reason: str
    nearest: float | None = None
    condition: float | None = None


def _bessel_zeros(lmax: int, xmax: float, derivative: bool) -> np.ndarray:
    """Positive zeros of j_l (or j_l') for l <= lmax below xmax, by sign changes + bisection."""
    from scipy.optimize import brentq
    from scipy.special import spherical_jn

    xs = np.linspace(1e-3, xmax, int(200 * xmax) + 200)
    zeros = []
    for l in range(lmax + 1):
        f = lambda t, l=l: spherical_jn(l, t, derivative=derivative)
        v = f(xs)
        idx = np.nonzero(np.sign(v[:-1]) * np.sign(v[1:]) < 0)[0]
        for a in idx:
            z = brentq(f, xs[a], xs[a + 1], xtol=1e-14)
            if not (derivative and l == 0 and z < 1e-2):
                zeros.append(z)
    return np.array(sorted(zeros))


def _sphere_radius(spec: SurfaceSpec) -> float | None:
    c = spec.radius_coeffs
    if np.all(np.abs(c[1:]) <= 1e-14 * abs(c[0])):
        return float(c[0] / np.sqrt(4.0 * np.pi))
    return None


def interior_resonance_guard(spec: SurfaceSpec, k: float, bc: BoundaryCondition | None = None,
                             band: float = 0.05, condition: float | None = None,
                             cond_limit: float = DEFAULT_COND_LIMIT) -> ResonanceAdvisory:
    """Advisory check for spurious interior resonances.

    For spheres, ``k * radius`` is compared with zeros of j_l (interior Dirichlet
    eigenvalues, which affect the Neumann/impedance equations) and j_l' (interior
    Neumann eigenvalues, which affect the Dirichlet equation).  With ``bc=None``
    both tables are used.  For other shapes a supplied condition estimate is
    compared with ``cond_limit``.
    """
    a = _sphere_radius(spec)
    if a is not None:
        ka = k * a
        tables = []
        if bc is None or bc.kind != "dirichlet":
            tables.append(_bessel_zeros(int(ka) + 3, ka + 1.0, derivative=False))
        if bc is None or bc.kind == "dirichlet":
            tables.append(_bessel_zeros(int(ka) + 3, ka + 1.0, derivative=True))
        zeros = np.concatenate(tables) if tables else np.array([])
        if zeros.size:
            nearest = float(zeros[np.argmin(np.abs(zeros - ka))])
            if abs(nearest - ka) < band:
                return ResonanceAdvisory(True, f"k*radius={ka:.6g} within {band} of interior eigenvalue {nearest:.6g}", nearest, condition)
            return ResonanceAdvisory(False, "clear of tabulated interior eigenvalues", nearest, condition)
        return ResonanceAdvisory(False, "below first interior eigenvalue", None, condition)
    if condition is None:
        return ResonanceAdvisory(False, "no condition estimate supplied", None, None)
    if condition > cond_limit:
        return ResonanceAdvisory(True, f"condition estimate {condition:.3g} exceeds {cond_limit:.3g}", None, condition)
    return ResonanceAdvisory(False, f"condition estimate {condition:.3g}", None, condition)


# ---------------------------------------------------------------------------
# Solver
# ---------------------------------------------------------------------------
class BIESolver:
    """Factorized boundary integral system for one surface, boundary condition and wavenumber.

    The LU factorization is reused for any number of incident fields.
    """

    def __init__(self, surface: QuadSurface, bc: BoundaryCondition, k: float, *, tol: float = DEFAULT_TOL,
                 operators: LayerOperators | None = None, rotated_dims=None, cond_limit: float = DEFAULT_COND_LIMIT,
                 check_resonance: bool = True):
        if not k > 0:
            raise ValueError("wavenumber must be positive")
        self.surface = surface
        self.bc = bc
        self.k = float(k)
        self.tol = tol
        if operators is None:
            operators = assemble_layer_operators(surface, k, required_operators(bc), rotated_dims=rotated_dims)
        self.operators = operators
        self.matrix = operators.matrix(bc)
        self._lu = scipy.linalg.lu_factor(self.matrix, check_finite=False)
        anorm = np.linalg.norm(self.matrix, 1)
        rcond, info = scipy.linalg.lapack.zgecon(self._lu[0], anorm, norm="1")
        self.condition = float(1.0 / rcond) if rcond > 0 else np.inf
        self.advisory = None
        if check_resonance:
            self.advisory = interior_resonance_guard(surface.spec, k, bc, condition=self.condition,
                                                     cond_limit=cond_limit)
            if self.advisory.warn:
                warnings.warn(self.advisory.reason, ResonanceWarning, stacklevel=2)
        if not np.isfinite(self.condition):
            raise IllConditionedError("singular boundary integral system")

    def solve_rhs(self, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        b = np.asarray(b, dtype=complex)
        x = scipy.linalg.lu_solve(self._lu, b, check_finite=False)
        r = b - self.matrix @ x
        x = x + scipy.linalg.lu_solve(self._lu, r, check_finite=False)
        r = b - self.matrix @ x
        bn = np.linalg.norm(b, axis=0)
        res = np.linalg.norm(r, axis=0) / np.where(bn > 0, bn, 1.0)
        return x, res

    def solve(self, incidence: Incidence) -> BoundarySolution:
        return self.solve_many([incidence])[0]

    def solve_many(self, incidences: Sequence[Incidence]) -> list[BoundarySolution]:
        for inc in incidences:
            if isinstance(inc, PointSource):
                check_source_clearance(self.surface, inc.position)
        B = np.stack([rhs_for(self.surface, self.bc, inc, self.k) for inc in incidences], axis=1)
        X, res = self.solve_rhs(B)
        if np.any(res > self.tol):
            logger.warning("linear residual %.3g above tolerance %.3g", float(res.max()), self.tol)
        return [
            BoundarySolution(self.surface, self.bc, inc, self.k, X[:, i].copy(), float(res[i]))
            for i, inc in enumerate(incidences)
        ]


def check_source_clearance(surface: QuadSurface, y, clearance: float | None = None) -> None:
    """Reject point sources inside the obstacle or closer than one panel diameter to it."""
    y = np.asarray(y, float)
    if surface.spec.contains(y[None])[0]:
        raise ValueError(f"point source {y} lies inside the obstacle")
    h = surface.panel_diameter() if clearance is None else clearance
    if surface.distance_to(y[None])[0] < h:
        raise ValueError(f"point source {y} closer than {h:.3g} to the surface")


def solve_scattering(surface: QuadSurface, bc: BoundaryCondition, incidence: Incidence, k: float,
                     **kwargs) -> BoundarySolution:
    """Solve one scattering problem (assembles and factorizes from scratch)."""
    return BIESolver(surface, bc, k, **kwargs).solve(incidence)
