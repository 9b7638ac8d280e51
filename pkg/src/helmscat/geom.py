"""Star-shaped surfaces described by a spherical-harmonic radius function.

A surface is ``x(d) = center + r(d) d`` for unit directions ``d``, with
``r = sum c_lm Y^R_lm`` in the real orthonormal basis of
:func:`helmscat.mathfn.real_sph_harm_all`.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .mathfn import (
    angles_to_directions,
    direction_angles,
    legendre_normalized,
    legendre_normalized_dtheta,
    real_sph_harm_all,
    sh_count,
    sh_index,
    sphere_grid,
)

DEFAULT_DEGREE = 8
_POLE_EPS = 1e-12


class StarShapeError(ValueError):
    """The radius function is not positive everywhere it was evaluated."""


def _degree_from_count(n: int) -> int:
    L = int(round(np.sqrt(n))) - 1
    if (L + 1) ** 2 != n:
        raise ValueError(f"coefficient count {n} is not a perfect square")
    return L


@dataclass(frozen=True)
class SurfaceSpec:
    """Closed star-shaped surface: real SH radius coefficients plus a translation."""

    radius_coeffs: np.ndarray
    center: np.ndarray = field(default_factory=lambda: np.zeros(3))
    label: str = "surface"

    def __post_init__(self):
        c = np.array(self.radius_coeffs, dtype=float).ravel()
        _degree_from_count(c.size)
        if c[0] <= 0:
            raise StarShapeError("c_00 must be positive")
        c.setflags(write=False)
        ctr = np.array(self.center, dtype=float).reshape(3)
        ctr.setflags(write=False)
        object.__setattr__(self, "radius_coeffs", c)
        object.__setattr__(self, "center", ctr)

    @property
    def degree(self) -> int:
        return _degree_from_count(self.radius_coeffs.size)

    def coeff(self, l: int, m: int) -> float:
        if l > self.degree:
            return 0.0
        return float(self.radius_coeffs[sh_index(l, m)])

    def translated(self, d) -> "SurfaceSpec":
        return SurfaceSpec(self.radius_coeffs, self.center + np.asarray(d, float), self.label)

    def with_coeffs(self, coeffs, label: str | None = None) -> "SurfaceSpec":
        return SurfaceSpec(np.asarray(coeffs, float), self.center, label or self.label)

    def with_degree(self, L: int) -> "SurfaceSpec":
        """Zero-pad or truncate the coefficient vector to degree ``L``."""
        c = np.zeros(sh_count(L))
        n = min(c.size, self.radius_coeffs.size)
        c[:n] = self.radius_coeffs[:n]
        return SurfaceSpec(c, self.center, self.label)

    def radius(self, theta, phi) -> np.ndarray:
        Y = real_sph_harm_all(self.degree, theta, phi)
        return np.tensordot(self.radius_coeffs, Y, axes=1)

    def radius_along(self, directions) -> np.ndarray:
        theta, phi = direction_angles(directions)
        return self.radius(theta, phi)

    def contains(self, points) -> np.ndarray:
        """True for points strictly inside the surface."""
        p = np.atleast_2d(np.asarray(points, float)) - self.center
        rho = np.linalg.norm(p, axis=-1)
        out = np.zeros(rho.shape, dtype=bool)
        nz = rho > 0
        out[~nz] = True
        out[nz] = rho[nz] < self.radius_along(p[nz] / rho[nz, None])
        return out

    def bounding_radius(self, n: int = 32) -> float:
        g = sphere_grid(n, 2 * n)
        return float(np.max(self.radius(g.theta_flat, g.phi_flat)))

    # serialization ------------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "center": [float(v) for v in self.center],
            "L_geo": self.degree,
            "coeffs": [float(v) for v in self.radius_coeffs],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SurfaceSpec":
        coeffs = np.asarray(d["coeffs"], dtype=float)
        if "L_geo" in d and coeffs.size != sh_count(int(d["L_geo"])):
            raise ValueError("coeffs length does not match L_geo")
        return cls(coeffs, np.asarray(d.get("center", [0, 0, 0]), float), d.get("label", "surface"))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "SurfaceSpec":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class QuadSurface:
    """Nystrom discretization of a surface on a product parameter grid.

    Arrays are ordered ring by ring (theta-major).  ``param_weights`` are the
    weights on the parameter sphere; ``weights`` include the surface Jacobian.
    """

    spec: SurfaceSpec
    nodes: np.ndarray
    normals: np.ndarray
    weights: np.ndarray
    jacobian: np.ndarray
    param_weights: np.ndarray
    theta: np.ndarray
    phi: np.ndarray
    grid_dims: tuple[int, int]

    @property
    def size(self) -> int:
        return self.nodes.shape[0]

    @property
    def area(self) -> float:
        return float(self.weights.sum())

    @property
    def centroid(self) -> np.ndarray:
        return (self.weights[:, None] * self.nodes).sum(axis=0) / self.area

    @property
    def directions(self) -> np.ndarray:
        return angles_to_directions(np.repeat(self.theta, len(self.phi)), np.tile(self.phi, len(self.theta)))

    def panel_diameter(self) -> float:
        """Largest distance between grid-neighbouring nodes."""
        nt, nph = self.grid_dims
        x = self.nodes.reshape(nt, nph, 3)
        d_phi = np.linalg.norm(np.roll(x, -1, axis=1) - x, axis=-1).max()
        d_theta = np.linalg.norm(x[1:] - x[:-1], axis=-1).max() if nt > 1 else 0.0
        return float(max(d_phi, d_theta))

    def distance_to(self, points) -> np.ndarray:
        """Distance from each point to the nearest node (a proxy for surface distance)."""
        p = np.atleast_2d(np.asarray(points, float))
        d2 = ((p[:, None, :] - self.nodes[None, :, :]) ** 2).sum(-1)
        return np.sqrt(d2.min(axis=1))


def make_sphere(radius: float, center=(0.0, 0.0, 0.0), degree: int = 0, label: str = "sphere") -> SurfaceSpec:
    """Sphere of the given radius: only c_00 = radius * sqrt(4 pi) is nonzero."""
    if not radius > 0:
        raise ValueError("radius must be positive")
    c = np.zeros(sh_count(degree))
    c[0] = radius * np.sqrt(4.0 * np.pi)
    return SurfaceSpec(c, np.asarray(center, float), label)


def project_radius(fn, degree: int = DEFAULT_DEGREE, center=(0.0, 0.0, 0.0), label: str = "surface",
                   n_quad: int | None = None) -> SurfaceSpec:
    """Best degree-``degree`` SH approximation of a radius function ``fn(theta, phi)``."""
    n = n_quad or (2 * degree + 8)
    g = sphere_grid(n, 2 * n)
    th, ph = g.theta_flat, g.phi_flat
    Y = real_sph_harm_all(degree, th, ph)
    coeffs = Y @ (g.weights * fn(th, ph))
    return SurfaceSpec(coeffs, np.asarray(center, float), label)


def make_spheroid(a: float, c: float, center=(0.0, 0.0, 0.0), degree: int = 16, label: str = "spheroid") -> SurfaceSpec:
    """Spheroid with equatorial semi-axis ``a`` and polar (z) semi-axis ``c``, SH-projected."""
    if a <= 0 or c <= 0:
        raise ValueError("semi-axes must be positive")

    def r(th, ph):
        return 1.0 / np.sqrt(np.sin(th) ** 2 / a**2 + np.cos(th) ** 2 / c**2)

    return project_radius(r, degree, center, label, n_quad=4 * degree + 16)


def spheroid_area(a: float, c: float) -> float:
    """Closed-form area of a spheroid with semi-axes (a, a, c)."""
    if np.isclose(a, c):
        return 4.0 * np.pi * a * a
    if c > a:
        e = np.sqrt(1.0 - a * a / (c * c))
        return 2.0 * np.pi * a * a * (1.0 + c / (a * e) * np.arcsin(e))
    e = np.sqrt(1.0 - c * c / (a * a))
    return 2.0 * np.pi * a * a * (1.0 + (1.0 - e * e) / e * np.arctanh(e))


def perturbed_sphere(base_radius: float, perturbations: dict, degree: int = DEFAULT_DEGREE,
                     center=(0.0, 0.0, 0.0), label: str = "perturbed") -> SurfaceSpec:
    """``r = base_radius + sum eps_lm Y^R_lm`` for ``perturbations = {(l, m): eps}``."""
    L = max([degree] + [l for (l, _) in perturbations])
    c = np.zeros(sh_count(L))
    c[0] = base_radius * np.sqrt(4.0 * np.pi)
    for (l, m), eps in perturbations.items():
        c[sh_index(l, m)] += eps
    return SurfaceSpec(c, np.asarray(center, float), label)


def _assemble_geometry(spec, theta, phi, r, r_t, r_p):
    if np.any(r <= 0):
        raise StarShapeError(f"radius function non-positive (min {float(np.min(r)):.3g}) for {spec.label!r}")
    st, ct = np.sin(theta), np.cos(theta)
    sp, cp = np.sin(phi), np.cos(phi)
    e_r = np.stack([st * cp, st * sp, ct * np.ones_like(cp)], axis=-1)
    e_t = np.stack([ct * cp, ct * sp, -st * np.ones_like(cp)], axis=-1)
    e_p = np.stack([-sp, cp, np.zeros_like(cp)], axis=-1)
    points = spec.center + r[..., None] * e_r
    nvec = r[..., None] * e_r - r_t[..., None] * e_t - r_p[..., None] * e_p
    norm = np.linalg.norm(nvec, axis=-1)
    return points, nvec / norm[..., None], r * norm


def surface_geometry(spec: SurfaceSpec, theta, phi):
    """Points, unit outward normals and Jacobians (area per unit solid angle).

    The Jacobian is ``r sqrt(r^2 + |grad_S r|^2)`` and the normal is
    proportional to ``r e_r - grad_S r``.
    """
    theta = np.clip(np.asarray(theta, float), _POLE_EPS, np.pi - _POLE_EPS)
    phi = np.asarray(phi, float)
    Y, Yt, Yp = real_sph_harm_all(spec.degree, theta, phi, derivatives=True)
    c = spec.radius_coeffs
    r = np.tensordot(c, Y, axes=1)
    r_t = np.tensordot(c, Yt, axes=1)
    r_p = np.tensordot(c, Yp, axes=1)
    theta, phi = np.broadcast_arrays(theta, phi)
    return _assemble_geometry(spec, theta, phi, r, r_t, r_p)


def surface_geometry_ring(spec: SurfaceSpec, theta, phi0, shifts):
    """Geometry at ``(theta, phi0 + shift)`` for every shift; arrays have shape (n_shift, n_pts, ...).

    The Legendre factors depend on theta only and are computed once.
    """
    L = spec.degree
    theta = np.clip(np.asarray(theta, float), _POLE_EPS, np.pi - _POLE_EPS)
    P = legendre_normalized(L, theta)
    dP = legendre_normalized_dtheta(L, theta, P)
    c = spec.radius_coeffs
    a = np.zeros((L + 1, theta.size))
    b = np.zeros_like(a)
    at = np.zeros_like(a)
    bt = np.zeros_like(a)
    for m in range(L + 1):
        f = 1.0 if m == 0 else np.sqrt(2.0) * (-1.0) ** m
        for l in range(m, L + 1):
            a[m] += f * c[sh_index(l, m)] * P[l, m]
            at[m] += f * c[sh_index(l, m)] * dP[l, m]
            if m > 0:
                b[m] += f * c[sh_index(l, -m)] * P[l, m]
                bt[m] += f * c[sh_index(l, -m)] * dP[l, m]
    phi = np.asarray(phi0, float)[None, :] + np.asarray(shifts, float)[:, None]
    ms = np.arange(L + 1)[:, None, None]
    cm = np.cos(ms * phi[None])
    sm = np.sin(ms * phi[None])
    r = np.einsum("mp,msp->sp", a, cm) + np.einsum("mp,msp->sp", b, sm)
    r_t = np.einsum("mp,msp->sp", at, cm) + np.einsum("mp,msp->sp", bt, sm)
    r_p = (np.einsum("mp,msp->sp", -ms[:, :, 0] * a, sm) + np.einsum("mp,msp->sp", ms[:, :, 0] * b, cm)) / np.sin(theta)
    th = np.broadcast_to(theta, phi.shape)
    return _assemble_geometry(spec, th, phi, r, r_t, r_p)


def evaluate_surface(spec: SurfaceSpec, theta: float, phi: float):
    """Point, unit outward normal and Jacobian at one parameter location."""
    if not (0.0 <= theta <= np.pi):
        raise ValueError("theta must lie in [0, pi]")
    p, n, j = surface_geometry(spec, np.asarray([theta]), np.asarray([phi]))
    return p[0], n[0], float(j[0])


def discretize(spec: SurfaceSpec, n_theta: int, n_phi: int) -> QuadSurface:
    """Gauss-Legendre x trapezoid grid pushed forward through the radius map."""
    if n_theta < 4 or n_phi < 8:
        raise ValueError("need n_theta >= 4 and n_phi >= 8")
    g = sphere_grid(n_theta, n_phi)
    pts, nrm, jac = surface_geometry(spec, g.theta_flat, g.phi_flat)
    return QuadSurface(
        spec=spec,
        nodes=pts,
        normals=nrm,
        weights=g.weights * jac,
        jacobian=jac,
        param_weights=g.weights,
        theta=g.theta,
        phi=g.phi,
        grid_dims=(n_theta, n_phi),
    )
