"""Fields, far-field patterns and obstacle Green's functions from boundary densities.

Green's representation for x outside the obstacle::

    v(x) = int_S [ u(s) dg(x,s)/dN_s - g(x,s) u_N(s) ] ds
    A(beta) = (1/4 pi) int_S [ u(s) d/dN_s e^{-ik beta.s} - u_N(s) e^{-ik beta.s} ] ds

so that ``v = A exp(ikr)/r + O(1/r^2)``.
"""

from __future__ import annotations

import json
import logging
import warnings
from dataclasses import dataclass, field

import numpy as np

from .geom import QuadSurface, SurfaceSpec, discretize
from .kernels import FOUR_PI, kernel_g
from .mathfn import SphereGrid, direction_angles, sh_degrees_orders, sph_h1_all, sph_harm_all, sphere_grid
from .solver import (
    BIESolver,
    BoundaryCondition,
    BoundarySolution,
    NearSurfaceWarning,
    PlaneWave,
    PointSource,
    unit,
)

logger = logging.getLogger(__name__)

_EVAL_CHUNK = 2000


@dataclass(frozen=True)
class FarFieldPattern:
    """Sampled scattering amplitude A(beta) with optional quadrature weights on S^2."""

    k: float
    directions: np.ndarray
    values: np.ndarray
    alpha: np.ndarray | None = None
    weights: np.ndarray | None = None
    grid_dims: tuple[int, int] | None = None

    def __post_init__(self):
        object.__setattr__(self, "directions", np.atleast_2d(np.asarray(self.directions, float)))
        object.__setattr__(self, "values", np.asarray(self.values, complex).ravel())
        if self.directions.shape[0] != self.values.size:
            raise ValueError("directions and values differ in length")

    @property
    def size(self) -> int:
        return self.values.size

    def total_power(self) -> float:
        """int_{S^2} |A|^2 d beta (requires quadrature weights)."""
        if self.weights is None:
            raise ValueError("pattern has no quadrature weights")
        return float(np.sum(self.weights * np.abs(self.values) ** 2))

    def subset(self, mask) -> "FarFieldPattern":
        mask = np.asarray(mask)
        return FarFieldPattern(self.k, self.directions[mask], self.values[mask], self.alpha,
                               None if self.weights is None else self.weights[mask], None)


@dataclass(frozen=True)
class GreensSample:
    x: np.ndarray
    y: np.ndarray
    value: complex


def _near_surface_check(sol: BoundarySolution, x: np.ndarray, warn: bool = True) -> None:
    spec = sol.surface.spec
    if np.any(spec.contains(x)):
        raise ValueError("evaluation point inside the obstacle")
    if warn:
        h = sol.surface.panel_diameter()
        d = sol.surface.distance_to(x)
        if np.any(d < h):
            warnings.warn(f"field evaluated {float(d.min()):.3g} from the surface (panel diameter {h:.3g})",
                          NearSurfaceWarning, stacklevel=3)


def _scattered_and_grad(sol: BoundarySolution, x: np.ndarray, gradient: bool):
    surf = sol.surface
    k = sol.k
    wu = surf.weights * sol.u_trace
    wun = surf.weights * sol.un_trace
    has_u = np.any(wu != 0)
    v = np.empty(x.shape[0], dtype=complex)
    gv = np.empty((x.shape[0], 3), dtype=complex) if gradient else None
    for a in range(0, x.shape[0], _EVAL_CHUNK):
        xs = x[a:a + _EVAL_CHUNK]
        d = xs[:, None, :] - surf.nodes[None, :, :]
        R = np.sqrt((d * d).sum(-1))
        e = np.exp(1j * k * R)
        g = e / (FOUR_PI * R)
        F = (1j * k * R - 1.0) * g / (R * R)  # grad_x g = F d
        val = -(g @ wun)
        if has_u:
            dn = (d * surf.normals[None]).sum(-1)
            val = val - (F * dn) @ wu
        v[a:a + _EVAL_CHUNK] = val
        if gradient:
            gr = -np.einsum("pn,pnc->pc", F * wun[None, :], d)
            if has_u:
                # grad_x of dg/dN_s = -(F' /R) d (d.n) - F n
                Fp = e * (3.0 - 3j * k * R - (k * R) ** 2) / (FOUR_PI * R**5)
                coef = -(Fp * dn) * wu[None, :]
                gr = gr + np.einsum("pn,pnc->pc", coef, d) - (F * wu[None, :]) @ surf.normals
            gv[a:a + _EVAL_CHUNK] = gr
    return v, gv


def eval_scattered(sol: BoundarySolution, x, warn: bool = True) -> np.ndarray:
    """Scattered field v at exterior points ``x`` (shape (n, 3) or (3,))."""
    x = np.asarray(x, float)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    _near_surface_check(sol, x, warn)
    v, _ = _scattered_and_grad(sol, x, False)
    return v[0] if single else v


def eval_total(sol: BoundarySolution, x, warn: bool = True) -> np.ndarray:
    """Total field incident + v."""
    x = np.asarray(x, float)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    u = eval_scattered(sol, x, warn) + sol.incidence.value(x, sol.k)
    return u[0] if single else u


def eval_scattered_gradient(sol: BoundarySolution, x, warn: bool = True):
    """Scattered field and its gradient at exterior points."""
    x = np.atleast_2d(np.asarray(x, float))
    _near_surface_check(sol, x, warn)
    return _scattered_and_grad(sol, x, True)


def eval_total_with_gradient(sol: BoundarySolution, x, warn: bool = True):
    x = np.atleast_2d(np.asarray(x, float))
    v, gv = eval_scattered_gradient(sol, x, warn)
    return v + sol.incidence.value(x, sol.k), gv + sol.incidence.gradient(x, sol.k)


def far_field_values(sol: BoundarySolution, directions) -> np.ndarray:
    surf = sol.surface
    k = sol.k
    b = np.atleast_2d(np.asarray(directions, float))
    E = np.exp(-1j * k * (b @ surf.nodes.T))  # (nb, N)
    vals = -(E @ (surf.weights * sol.un_trace))
    u = sol.u_trace
    if np.any(u != 0):
        bn = b @ surf.normals.T
        vals = vals + ((-1j * k * bn) * E) @ (surf.weights * u)
    return vals / FOUR_PI


def far_field(sol: BoundarySolution, directions=None, grid: tuple[int, int] | None = None) -> FarFieldPattern:
    """Scattering amplitude at ``directions`` or on a product quadrature ``grid`` of S^2."""
    alpha = sol.incidence.direction if isinstance(sol.incidence, PlaneWave) else None
    if directions is None:
        g = sphere_grid(*(grid or (24, 48)))
        return FarFieldPattern(sol.k, g.directions, far_field_values(sol, g.directions), alpha, g.weights, g.dims)
    return FarFieldPattern(sol.k, directions, far_field_values(sol, directions), alpha)


def multipole_continuation(pattern: FarFieldPattern, x, degree: int = 20, center=(0.0, 0.0, 0.0),
                           noise: float = 1e-12) -> np.ndarray:
    """Scattered field from its outgoing multipole expansion about ``center``.

    ``A_c(beta) = A(beta) exp(ik beta.c)`` is projected onto Y_lm up to
    ``degree`` and ``v(x) = k sum_lm i^{l+1} a_lm h_l(k|x-c|) Y_lm``.  The
    series converges outside the smallest sphere about ``center`` beyond
    which v continues analytically, which for a sphere reaches inside the
    obstacle down to its centre; this is how the scattered field is
    continued into an obstacle.

    Degrees whose coefficient block falls below ``noise`` times the largest
    block are dropped, since h_l amplifies their quadrature noise.  On a
    product grid the degree is also capped at the band limit the grid
    resolves, beyond which the projection aliases.
    """
    if pattern.weights is None:
        raise ValueError("pattern has no quadrature weights")
    if pattern.grid_dims is not None:
        nt, nph = pattern.grid_dims
        degree = min(degree, nt - 1, (nph - 1) // 2)
    k = pattern.k
    c = np.asarray(center, float)
    th, ph = direction_angles(pattern.directions)
    Y = sph_harm_all(degree, th, ph)  # (nL, n)
    Ac = pattern.values * np.exp(1j * k * (pattern.directions @ c))
    a = np.conj(Y) @ (pattern.weights * Ac)
    ls, _ = sh_degrees_orders(degree)
    block = np.sqrt(np.bincount(ls, weights=np.abs(a) ** 2))
    keep = np.nonzero(block > noise * block.max())[0]
    degree = int(keep.max()) if keep.size else 0
    ls = ls[: (degree + 1) ** 2]
    a = a[: (degree + 1) ** 2]
    Y = Y[: (degree + 1) ** 2]
    b = k * (1j ** (ls + 1)) * a
    d = np.atleast_2d(np.asarray(x, float)) - c
    r = np.linalg.norm(d, axis=1)
    if np.any(r == 0):
        raise ValueError("multipole expansion is singular at its centre")
    tx, px = direction_angles(d / r[:, None])
    Yx = sph_harm_all(degree, tx, px)
    H = np.stack([sph_h1_all(degree, k * ri) for ri in r], axis=1)  # (degree+1, n)
    return np.sum(b[:, None] * H[ls] * Yx, axis=0)


# ---------------------------------------------------------------------------
# Obstacle Green's function
# ---------------------------------------------------------------------------
def greens_function(spec: SurfaceSpec | BIESolver, bc: BoundaryCondition | None = None, k: float | None = None,
                    x=None, y=None, n_theta: int = 24, n_phi: int = 48) -> GreensSample:
    """G(x, y) = g(x, y) + scattered field of a point source at y, evaluated at x.

    ``spec`` may be an already factorized :class:`BIESolver`, in which case
    ``bc`` and ``k`` are taken from it.
    """
    solver = _as_solver(spec, bc, k, n_theta, n_phi)
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    if np.allclose(x, y):
        raise ValueError("Green's function requested at coincident points")
    if solver.surface.spec.contains(np.stack([x, y])).any():
        raise ValueError("Green's function arguments must be exterior")
    sol = solver.solve(PointSource(y))
    return GreensSample(x, y, complex(eval_total(sol, x)))


def _as_solver(spec, bc, k, n_theta, n_phi) -> BIESolver:
    if isinstance(spec, BIESolver):
        return spec
    return BIESolver(discretize(spec, n_theta, n_phi), bc, k)


def scattering_solution_from_source_limit(spec, bc=None, k=None, alpha0=(0, 0, 1), taus=(20, 40, 80), eta=(0, 0, 0),
                                          probes=None, n_theta: int = 24, n_phi: int = 48):
    """Renormalized point-source fields G(x, y)/g(|y|) with y = -tau alpha0 + eta.

    Returns a list of ``(tau, |y|, values)`` with values at the probe points; as
    tau grows they approach the plane-wave scattering solution u(x, alpha0).
    """
    solver = _as_solver(spec, bc, k, n_theta, n_phi)
    k = solver.k
    alpha0 = unit(alpha0)
    eta = np.asarray(eta, float)
    if abs(eta @ alpha0) > 1e-12:
        raise ValueError("eta must be orthogonal to alpha0")
    probes = np.atleast_2d(np.asarray(probes, float))
    taus = np.asarray(taus, float)
    if np.any(np.diff(taus) <= 0):
        raise ValueError("tau values must be increasing")
    pr = np.max(np.linalg.norm(probes, axis=1))
    ys = [-t * alpha0 + eta for t in taus]
    if min(np.linalg.norm(y) for y in ys) <= pr:
        raise ValueError("source inside the bounding sphere of the probes")
    sols = solver.solve_many([PointSource(y) for y in ys])
    out = []
    for t, y, sol in zip(taus, ys, sols):
        ry = float(np.linalg.norm(y))
        gy = np.exp(1j * k * ry) / (FOUR_PI * ry)
        out.append((float(t), ry, eval_total(sol, probes) / gy))
    return out


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------
def pattern_to_csv(pattern: FarFieldPattern, path) -> None:
    """Write ``# {json header}`` then ``theta,phi,re_A,im_A`` rows with 17 significant digits."""
    theta, phi = direction_angles(pattern.directions)
    header = {
        "k": pattern.k,
        "alpha": None if pattern.alpha is None else [float(v) for v in pattern.alpha],
        "grid_dims": None if pattern.grid_dims is None else list(pattern.grid_dims),
    }
    lines = ["# " + json.dumps(header), "theta,phi,re_A,im_A"]
    for t, p, a in zip(theta, phi, pattern.values):
        lines.append(f"{t:.17g},{p:.17g},{a.real:.17g},{a.imag:.17g}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def pattern_from_csv(path) -> FarFieldPattern:
    from .mathfn import angles_to_directions

    with open(path) as fh:
        first = fh.readline()
        if not first.startswith("#"):
            raise ValueError("pattern file lacks the JSON header line")
        header = json.loads(first[1:])
        cols = fh.readline().strip().split(",")
        if cols != ["theta", "phi", "re_A", "im_A"]:
            raise ValueError(f"unexpected pattern columns {cols}")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    dirs = angles_to_directions(data[:, 0], data[:, 1])
    grid_dims = tuple(header["grid_dims"]) if header.get("grid_dims") else None
    weights = None
    if grid_dims is not None and grid_dims[0] * grid_dims[1] == data.shape[0]:
        weights = sphere_grid(*grid_dims).weights
    alpha = np.asarray(header["alpha"], float) if header.get("alpha") is not None else None
    return FarFieldPattern(float(header["k"]), dirs, data[:, 2] + 1j * data[:, 3], alpha, weights, grid_dims)


def density_to_csv(sol: BoundarySolution, path) -> None:
    lines = ["x,y,z,re_density,im_density"]
    for p, d in zip(sol.surface.nodes, sol.density):
        lines.append(f"{p[0]:.17g},{p[1]:.17g},{p[2]:.17g},{d.real:.17g},{d.imag:.17g}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
