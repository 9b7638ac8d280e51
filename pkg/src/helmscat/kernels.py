"""Free-space Helmholtz kernel g(x, y) = exp(ik|x-y|) / (4 pi |x-y|) and relatives.

All functions broadcast over leading dimensions of the point arrays; the last
axis holds Cartesian components.  ``k = 0`` gives the Laplace kernel.
"""

from __future__ import annotations

import numpy as np

FOUR_PI = 4.0 * np.pi


class CoincidentPointsError(ValueError):
    pass


def check_wavenumber(k: float) -> float:
    k = float(k)
    if not k > 0:
        raise ValueError(f"wavenumber must be positive, got {k}")
    return k


def _separation(x, y):
    d = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
    R = np.sqrt((d * d).sum(axis=-1))
    if np.any(R == 0):
        raise CoincidentPointsError("kernel evaluated at coincident points")
    return d, R


def kernel_g(x, y, k: float):
    """g(x, y) = exp(ik|x-y|) / (4 pi |x-y|)."""
    _, R = _separation(x, y)
    return np.exp(1j * k * R) / (FOUR_PI * R)


def kernel_grad_x(x, y, k: float):
    """Gradient of g with respect to x, shape (..., 3)."""
    d, R = _separation(x, y)
    f = (1j * k * R - 1.0) * np.exp(1j * k * R) / (FOUR_PI * R**3)
    return f[..., None] * d


def kernel_g_normal(x, s, normal_s, k: float):
    """Normal derivative of g(x, s) with respect to the source point s along ``normal_s``."""
    d, R = _separation(x, s)
    f = (1j * k * R - 1.0) * np.exp(1j * k * R) / (FOUR_PI * R**3)
    return -f * (d * np.asarray(normal_s, float)).sum(axis=-1)


def farfield_kernel(beta, s, k: float):
    """Plane-wave factor exp(-ik beta.s) of g at infinity (times 4 pi |x| e^{-ik|x|})."""
    return np.exp(-1j * k * (np.asarray(beta, float) * np.asarray(s, float)).sum(axis=-1))


def plane_wave(x, alpha, k: float):
    return np.exp(1j * k * (np.asarray(x, float) @ np.asarray(alpha, float)))


def plane_wave_grad(x, alpha, k: float):
    alpha = np.asarray(alpha, float)
    return (1j * k * plane_wave(x, alpha, k))[..., None] * alpha


def layer_kernels(x, nx, y, ny, k: float):
    """Single-layer, double-layer and adjoint double-layer kernels in one pass.

    Returns ``(g, dg/dn_y, dg/dn_x)`` at separated point pairs.
    """
    d = x - y
    R = np.sqrt((d * d).sum(axis=-1))
    e = np.exp(1j * k * R)
    g = e / (FOUR_PI * R)
    f = (1j * k * R - 1.0) * g / (R * R)
    dny = -f * (d * ny).sum(axis=-1)
    dnx = f * (d * nx).sum(axis=-1)
    return g, dny, dnx
