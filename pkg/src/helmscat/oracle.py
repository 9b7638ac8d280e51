"""Partial-wave series solutions for a sphere centred at the origin.

With c_l the reflection coefficients the scattered field is
``v = sum_l i^l (2l+1) c_l h_l(kr) P_l(cos gamma)`` and
``A(beta, alpha) = (1/ik) sum_l (2l+1) c_l P_l(beta.alpha)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import legval

from .mathfn import derivative_from_sequence, sph_jn_all, sph_yn_all
from .solver import BoundaryCondition, unit

MAX_KA = 40.0


@dataclass(frozen=True)
class PartialWaveCoeffs:
    ka: float
    bc: BoundaryCondition
    L_max: int
    coeffs: np.ndarray


def truncation_degree(ka: float) -> int:
    return int(np.ceil(ka + 15 + 3.0 * ka ** (1.0 / 3.0)))


def _check(radius, k, bc):
    if not radius > 0 or not k > 0:
        raise ValueError("radius and k must be positive")
    if k * radius > MAX_KA:
        raise ValueError(f"ka={k * radius:.3g} exceeds the supported {MAX_KA}")
    if bc.kind == "impedance" and bc.h.imag < 0:
        raise ValueError("Im h must be non-negative")


def partial_wave_coeffs(radius: float, bc: BoundaryCondition, k: float, L_max: int | None = None) -> PartialWaveCoeffs:
    _check(radius, k, bc)
    ka = k * radius
    L = truncation_degree(ka) if L_max is None else L_max
    j = sph_jn_all(L + 1, ka)
    y = sph_yn_all(L + 1, ka)
    h = j + 1j * y
    jd = derivative_from_sequence(j, ka)
    hd = derivative_from_sequence(h, ka)
    j, h = j[: L + 1], h[: L + 1]
    if bc.kind == "dirichlet":
        c = -j / h
    elif bc.kind == "neumann":
        c = -jd / hd
    else:
        c = -(k * jd + bc.h * j) / (k * hd + bc.h * h)
    return PartialWaveCoeffs(ka, bc, L, c)


def mie_far_field(radius: float, bc: BoundaryCondition, k: float, alpha, directions) -> np.ndarray:
    """Series scattering amplitude A(beta, alpha) of a sphere at the origin."""
    pw = partial_wave_coeffs(radius, bc, k)
    cosg = np.atleast_2d(np.asarray(directions, float)) @ unit(alpha)
    l = np.arange(pw.L_max + 1)
    return legval(np.clip(cosg, -1, 1), (2 * l + 1) * pw.coeffs) / (1j * k)


def _radial_series_degree(ka: float, kr: float) -> int:
    return truncation_degree(max(ka, kr)) + 10


def mie_scattered_field(radius: float, bc: BoundaryCondition, k: float, alpha, x) -> np.ndarray:
    x = np.atleast_2d(np.asarray(x, float))
    r = np.linalg.norm(x, axis=1)
    if np.any(r < radius * (1 - 1e-12)):
        raise ValueError("evaluation point inside the sphere")
    L = _radial_series_degree(k * radius, float(np.max(k * r)))
    pw = partial_wave_coeffs(radius, bc, k, L_max=L)
    h = sph_jn_all(L, k * r) + 1j * sph_yn_all(L, k * r)
    cosg = np.clip(x @ unit(alpha) / r, -1, 1)
    l = np.arange(L + 1)
    Pl = np.array([legval(cosg, np.eye(L + 1)[i]) for i in range(L + 1)])
    terms = ((1j ** l) * (2 * l + 1) * pw.coeffs)[:, None] * h * Pl
    return terms.sum(axis=0)


def mie_total_field(radius: float, bc: BoundaryCondition, k: float, alpha, x) -> np.ndarray:
    """Total field u = exp(ik alpha.x) + v at exterior points."""
    x = np.atleast_2d(np.asarray(x, float))
    return np.exp(1j * k * (x @ unit(alpha))) + mie_scattered_field(radius, bc, k, alpha, x)


def mie_total_radial_derivative(radius: float, bc: BoundaryCondition, k: float, alpha, x) -> np.ndarray:
    """du/dr of the total field from the series (incident part included)."""
    x = np.atleast_2d(np.asarray(x, float))
    r = np.linalg.norm(x, axis=1)
    L = _radial_series_degree(k * radius, float(np.max(k * r)))
    pw = partial_wave_coeffs(radius, bc, k, L_max=L)
    j = sph_jn_all(L + 1, k * r)
    h = j + 1j * sph_yn_all(L + 1, k * r)
    jd = derivative_from_sequence(j, k * r)
    hd = derivative_from_sequence(h, k * r)
    cosg = np.clip(x @ unit(alpha) / r, -1, 1)
    l = np.arange(L + 1)
    Pl = np.array([legval(cosg, np.eye(L + 1)[i]) for i in range(L + 1)])
    terms = ((1j ** l) * (2 * l + 1))[:, None] * k * (jd + pw.coeffs[:, None] * hd) * Pl
    return terms.sum(axis=0)


def sphere_greens(radius: float, k: float, x, y) -> complex:
    """Dirichlet Green's function of the exterior of a sphere at the origin (series form).

    G = g(x, y) - (ik/4pi) sum (2l+1) j_l(ka)/h_l(ka) h_l(kr<) h_l(kr>) P_l(cos gamma).

    The free-space part is taken in closed form; the reflected series
    converges like (a^2 / (r< r>))^l.
    """
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    rx, ry = np.linalg.norm(x), np.linalg.norm(y)
    if rx < radius * (1 - 1e-12) or ry < radius * (1 - 1e-12):
        raise ValueError("Green's function arguments must lie outside the sphere")
    rs, rb = min(rx, ry), max(rx, ry)
    ratio = radius * radius / (rs * rb)
    L = _radial_series_degree(k * radius, k * rb)
    if ratio < 1:
        L = max(L, int(np.ceil(np.log(1e-17) / np.log(ratio))) + 10)
    ka = k * radius
    while True:
        try:
            ya = sph_yn_all(L, ka)
            hs = sph_jn_all(L, k * rs) + 1j * sph_yn_all(L, k * rs)
            break
        except OverflowError:
            L = int(0.8 * L)
    ja = sph_jn_all(L, ka)
    refl = ja / (ja + 1j * ya)
    hb = sph_jn_all(L, k * rb) + 1j * sph_yn_all(L, k * rb)
    cosg = np.clip(x @ y / (rx * ry), -1, 1)
    l = np.arange(L + 1)
    if np.allclose(x, y):
        raise ValueError("Green's function requested at coincident points")
    g = np.exp(1j * k * np.linalg.norm(x - y)) / (4 * np.pi * np.linalg.norm(x - y))
    return complex(g - 1j * k / (4 * np.pi) * legval(cosg, (2 * l + 1) * refl * hs * hb))
