"""Special functions: spherical Bessel/Hankel functions and spherical harmonics.

Spherical harmonics use the Condon-Shortley phase and are orthonormal on the
unit sphere.  Flat coefficient arrays are indexed by ``l*l + l + m``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

logger = logging.getLogger(__name__)

_RESCALE = 1e250


def sh_index(l: int, m: int) -> int:
    """Flat index of the ``(l, m)`` harmonic."""
    return l * l + l + m


def sh_count(L: int) -> int:
    return (L + 1) ** 2


def sh_degrees_orders(L: int) -> tuple[np.ndarray, np.ndarray]:
    """Arrays ``(l, m)`` for every flat index up to degree ``L``."""
    ls = np.concatenate([np.full(2 * l + 1, l) for l in range(L + 1)])
    ms = np.concatenate([np.arange(-l, l + 1) for l in range(L + 1)])
    return ls, ms


# ---------------------------------------------------------------------------
# Spherical Bessel functions
# ---------------------------------------------------------------------------
def sph_jn_all(lmax: int, x) -> np.ndarray:
    """j_0..j_lmax at positive ``x`` by normalized downward (Miller) recurrence.

    Returns an array of shape ``(lmax + 1,) + x.shape``.
    """
    x = np.asarray(x, dtype=float)
    if lmax < 0:
        raise ValueError("lmax must be non-negative")
    if np.any(x <= 0):
        raise ValueError("spherical Bessel functions require x > 0")
    xmax = float(np.max(x)) if x.size else 0.0
    top = max(lmax, int(xmax)) + 20 + int(2.0 * np.sqrt(max(lmax, xmax)))
    out = np.zeros((lmax + 1,) + x.shape)
    f_next = np.zeros_like(x)
    f_cur = np.full_like(x, 1e-280)
    for n in range(top, 0, -1):
        f_prev = (2 * n + 1) / x * f_cur - f_next
        f_next, f_cur = f_cur, f_prev
        if n - 1 <= lmax:
            out[n - 1] = f_cur
        big = np.abs(f_cur) > _RESCALE
        if np.any(big):
            scale = np.where(big, 1.0 / _RESCALE, 1.0)
            f_cur = f_cur * scale
            f_next = f_next * scale
            out[n - 1:] *= scale
    # f_cur is j_0 up to scale, f_next is j_1 up to scale
    j0 = np.sin(x) / x
    j1 = np.sin(x) / x**2 - np.cos(x) / x
    use0 = np.abs(j0) >= np.abs(j1)
    scale = np.where(use0, j0 / np.where(use0, f_cur, 1.0), j1 / np.where(use0, 1.0, f_next))
    return out * scale


def sph_yn_all(lmax: int, x) -> np.ndarray:
    """y_0..y_lmax by upward recurrence (stable for the second kind)."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise ValueError("spherical Bessel functions require x > 0")
    out = np.empty((lmax + 1,) + x.shape)
    out[0] = -np.cos(x) / x
    if lmax >= 1:
        out[1] = -np.cos(x) / x**2 - np.sin(x) / x
    with np.errstate(over="ignore", invalid="ignore"):
        for n in range(1, lmax):
            out[n + 1] = (2 * n + 1) / x * out[n] - out[n - 1]
    if not np.all(np.isfinite(out)):
        raise OverflowError(
            f"y_l overflow for lmax={lmax} at min x={float(np.min(x)):.3g}; order too large for argument"
        )
    return out


def sph_h1_all(lmax: int, x) -> np.ndarray:
    """Spherical Hankel functions h_l^(1) = j_l + i y_l, l = 0..lmax."""
    return sph_jn_all(lmax, x) + 1j * sph_yn_all(lmax, x)


def derivative_from_sequence(f: np.ndarray, x) -> np.ndarray:
    """Derivatives f_l' from a sequence f_0..f_{lmax+1} of spherical Bessel-type values.

    Uses f_l' = f_{l-1} - (l+1)/x f_l and f_0' = -f_1.  The returned array has
    one order fewer than ``f``.
    """
    x = np.asarray(x)
    lmax = f.shape[0] - 2
    d = np.empty((lmax + 1,) + f.shape[1:], dtype=f.dtype)
    d[0] = -f[1]
    for l in range(1, lmax + 1):
        d[l] = f[l - 1] - (l + 1) / x * f[l]
    return d


def sph_bessel_j(l: int, x: float) -> float:
    """j_l(x) for a single order."""
    if l < 0:
        raise ValueError("order must be non-negative")
    return float(sph_jn_all(l, np.asarray(float(x)))[l])


def sph_bessel_y(l: int, x: float) -> float:
    if l < 0:
        raise ValueError("order must be non-negative")
    return float(sph_yn_all(l, np.asarray(float(x)))[l])


def sph_hankel1(l: int, x: float) -> complex:
    """h_l^(1)(x) for a single order."""
    if x <= 0:
        raise ValueError("sph_hankel1 requires x > 0")
    return complex(sph_bessel_j(l, x) + 1j * sph_bessel_y(l, x))


# ---------------------------------------------------------------------------
# Associated Legendre functions and spherical harmonics
# ---------------------------------------------------------------------------
def legendre_normalized(L: int, theta) -> np.ndarray:
    """Normalized associated Legendre values for m >= 0.

    Returns ``P`` with shape ``(L+1, L+1) + theta.shape`` such that
    ``Y_lm(theta, phi) = P[l, m] * exp(i m phi)`` (Condon-Shortley phase).
    Entries with m > l are zero.
    """
    theta = np.asarray(theta, dtype=float)
    c = np.cos(theta)
    s = np.sin(theta)
    P = np.zeros((L + 1, L + 1) + theta.shape)
    P[0, 0] = 1.0 / np.sqrt(4.0 * np.pi)
    for m in range(1, L + 1):
        P[m, m] = -np.sqrt((2 * m + 1) / (2.0 * m)) * s * P[m - 1, m - 1]
    for m in range(0, L):
        P[m + 1, m] = np.sqrt(2.0 * m + 3) * c * P[m, m]
        for l in range(m + 2, L + 1):
            a = np.sqrt((4.0 * l * l - 1) / (l * l - m * m))
            b = np.sqrt(((l - 1.0) ** 2 - m * m) / (4.0 * (l - 1) ** 2 - 1))
            P[l, m] = a * (c * P[l - 1, m] - b * P[l - 2, m])
    return P


def legendre_normalized_dtheta(L: int, theta, P: np.ndarray | None = None) -> np.ndarray:
    """theta-derivatives of :func:`legendre_normalized` (theta away from the poles)."""
    theta = np.asarray(theta, dtype=float)
    if P is None:
        P = legendre_normalized(L, theta)
    c = np.cos(theta)
    s = np.sin(theta)
    dP = np.zeros_like(P)
    for l in range(1, L + 1):
        for m in range(0, l + 1):
            term = l * c * P[l, m]
            if m < l:
                term = term - np.sqrt((2.0 * l + 1) / (2 * l - 1) * (l - m) * (l + m)) * P[l - 1, m]
            dP[l, m] = term / s
    return dP


def sph_harm_all(L: int, theta, phi) -> np.ndarray:
    """All complex harmonics up to degree ``L``; shape ``((L+1)**2,) + theta.shape``."""
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    P = legendre_normalized(L, theta)
    Y = np.empty((sh_count(L),) + np.broadcast(theta, phi).shape, dtype=complex)
    for m in range(0, L + 1):
        e = np.exp(1j * m * phi)
        sign = (-1.0) ** m
        for l in range(m, L + 1):
            val = P[l, m] * e
            Y[sh_index(l, m)] = val
            if m > 0:
                Y[sh_index(l, -m)] = sign * np.conj(val)
    return Y


def sph_harmonic(l: int, m: int, theta, phi):
    """Orthonormal complex spherical harmonic Y_lm at polar angle theta, azimuth phi."""
    if l < 0 or abs(m) > l:
        raise ValueError(f"invalid harmonic indices l={l}, m={m}")
    theta = np.asarray(theta, dtype=float)
    P = legendre_normalized(l, theta)[l, abs(m)]
    val = P * np.exp(1j * abs(m) * np.asarray(phi, dtype=float))
    if m < 0:
        val = (-1.0) ** m * np.conj(val)
    return val


def real_sph_harm_all(L: int, theta, phi, derivatives: bool = False):
    """Real orthonormal harmonics (and optionally surface-gradient components).

    Convention: ``Y^R_{l,m} = sqrt(2) (-1)^m Re Y_lm`` for m > 0,
    ``sqrt(2) (-1)^m Im Y_l|m|`` for m < 0, ``Y_l0`` for m = 0.

    With ``derivatives=True`` also returns ``dY/dtheta`` and
    ``(1/sin theta) dY/dphi``.
    """
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    P = legendre_normalized(L, theta)
    shape = (sh_count(L),) + np.broadcast(theta, phi).shape
    Y = np.empty(shape)
    if derivatives:
        dP = legendre_normalized_dtheta(L, theta, P)
        s = np.sin(theta)
        Yt = np.empty(shape)
        Yp = np.empty(shape)
    for m in range(0, L + 1):
        if m == 0:
            for l in range(L + 1):
                Y[sh_index(l, 0)] = P[l, 0]
                if derivatives:
                    Yt[sh_index(l, 0)] = dP[l, 0]
                    Yp[sh_index(l, 0)] = 0.0
            continue
        cm = np.cos(m * phi)
        sm = np.sin(m * phi)
        f = np.sqrt(2.0) * (-1.0) ** m
        for l in range(m, L + 1):
            Y[sh_index(l, m)] = f * P[l, m] * cm
            Y[sh_index(l, -m)] = f * P[l, m] * sm
            if derivatives:
                Yt[sh_index(l, m)] = f * dP[l, m] * cm
                Yt[sh_index(l, -m)] = f * dP[l, m] * sm
                Yp[sh_index(l, m)] = -f * m * P[l, m] / s * sm
                Yp[sh_index(l, -m)] = f * m * P[l, m] / s * cm
    if derivatives:
        return Y, Yt, Yp
    return Y


def direction_angles(directions) -> tuple[np.ndarray, np.ndarray]:
    """Polar angle and azimuth (in [0, 2pi)) of unit vectors with shape (..., 3)."""
    d = np.asarray(directions, dtype=float)
    theta = np.arccos(np.clip(d[..., 2] / np.linalg.norm(d, axis=-1), -1.0, 1.0))
    phi = np.mod(np.arctan2(d[..., 1], d[..., 0]), 2.0 * np.pi)
    return theta, phi


def angles_to_directions(theta, phi) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    st = np.sin(theta)
    return np.stack([st * np.cos(phi), st * np.sin(phi), np.cos(theta) * np.ones_like(phi)], axis=-1)


# ---------------------------------------------------------------------------
# Sphere quadrature
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class SphereGrid:
    """Gauss-Legendre (in cos theta) x trapezoid (in phi) grid on the unit sphere."""

    theta: np.ndarray  # (n_theta,)
    phi: np.ndarray  # (n_phi,)
    weights: np.ndarray  # (n_theta * n_phi,), sum 4 pi
    directions: np.ndarray  # (n_theta * n_phi, 3)

    @property
    def dims(self) -> tuple[int, int]:
        return len(self.theta), len(self.phi)

    @property
    def theta_flat(self) -> np.ndarray:
        return np.repeat(self.theta, len(self.phi))

    @property
    def phi_flat(self) -> np.ndarray:
        return np.tile(self.phi, len(self.theta))


def sphere_grid(n_theta: int, n_phi: int) -> SphereGrid:
    """Product quadrature on S^2, ordered theta-major (ring by ring)."""
    if n_theta < 1 or n_phi < 1:
        raise ValueError("grid dimensions must be positive")
    t, w = np.polynomial.legendre.leggauss(n_theta)
    theta = np.arccos(t[::-1])  # ascending theta, north to south
    w = w[::-1]
    phi = 2.0 * np.pi * np.arange(n_phi) / n_phi
    weights = np.repeat(w, n_phi) * (2.0 * np.pi / n_phi)
    dirs = angles_to_directions(np.repeat(theta, n_phi), np.tile(phi, n_theta))
    return SphereGrid(theta=theta, phi=phi, weights=weights, directions=dirs)


# ---------------------------------------------------------------------------
# Least-squares spherical-harmonic fitting
# ---------------------------------------------------------------------------
class RankDeficientFitError(ValueError):
    """The sampling design cannot determine all requested coefficients."""


@dataclass(frozen=True)
class SHExpansion:
    """Complex spherical-harmonic expansion with fit diagnostics."""

    degree: int
    coeffs: np.ndarray
    residual: float = 0.0
    condition: float = 1.0

    def __post_init__(self):
        if self.coeffs.shape != (sh_count(self.degree),):
            raise ValueError("coefficient count must equal (L+1)^2")

    def coeff(self, l: int, m: int) -> complex:
        return complex(self.coeffs[sh_index(l, m)])

    def __call__(self, directions) -> np.ndarray:
        theta, phi = direction_angles(directions)
        return np.tensordot(self.coeffs, sph_harm_all(self.degree, theta, phi), axes=1)


def fit_expansion(directions, values, L: int, weights=None, rcond: float = 1e-13) -> SHExpansion:
    """Least-squares fit of complex samples by harmonics up to degree ``L``.

    Raises :class:`RankDeficientFitError` if fewer samples than unknowns are
    given or the design matrix is numerically rank deficient.
    """
    directions = np.atleast_2d(np.asarray(directions, dtype=float))
    values = np.asarray(values, dtype=complex).ravel()
    n = sh_count(L)
    if directions.shape[0] != values.size:
        raise ValueError("directions and values differ in length")
    if values.size < n:
        raise RankDeficientFitError(f"{values.size} samples cannot determine {n} coefficients (L={L})")
    theta, phi = direction_angles(directions)
    A = sph_harm_all(L, theta, phi).T
    b = values
    if weights is not None:
        sw = np.sqrt(np.asarray(weights, dtype=float)).ravel()
        A = A * sw[:, None]
        b = b * sw
    sv = np.linalg.svd(A, compute_uv=False)
    cond = float(sv[0] / sv[-1]) if sv[-1] > 0 else np.inf
    if not np.isfinite(cond) or sv[-1] <= rcond * sv[0]:
        raise RankDeficientFitError(f"sampling design is rank deficient for L={L} (condition {cond:.3g})")
    coeffs, *_ = np.linalg.lstsq(A, b, rcond=None)
    residual = float(np.linalg.norm(A @ coeffs - b))
    return SHExpansion(degree=L, coeffs=coeffs, residual=residual, condition=cond)
