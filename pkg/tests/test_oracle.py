import numpy as np
import pytest

from helmscat.mathfn import sphere_grid
from helmscat.oracle import (
    mie_far_field,
    mie_total_field,
    mie_total_radial_derivative,
    partial_wave_coeffs,
    sphere_greens,
    truncation_degree,
)
from helmscat.solver import BoundaryCondition

ALPHA = np.array([0.0, 0.0, 1.0])
D, N = BoundaryCondition.dirichlet(), BoundaryCondition.neumann()
IMP = BoundaryCondition.impedance(0.3 + 0.2j)

# unit sphere, k = 1: series summed at 40 digits
A_FWD_D = -1.1687530668115678269 + 0.8456094624052967664j
A_BACK_D = 0.087265621481081747861 + 0.57349764302999478747j
A_FWD_N = 0.17485416099071449591 + 0.080407214772544576338j
A_FWD_I = 0.49186409863209511964 + 0.37801014732428283986j


@pytest.mark.parametrize("bc,ref", [(D, A_FWD_D), (N, A_FWD_N), (IMP, A_FWD_I)])
def test_forward_amplitude(bc, ref):
    assert mie_far_field(1.0, bc, 1.0, ALPHA, ALPHA[None])[0] == pytest.approx(ref, rel=1e-12)


def test_backward_amplitude():
    assert mie_far_field(1.0, D, 1.0, ALPHA, -ALPHA[None])[0] == pytest.approx(A_BACK_D, rel=1e-12)


def test_small_ka_limit():
    g = sphere_grid(6, 12)
    for a in (1.0, 2.0):
        # the relative deviation is about ka
        A = mie_far_field(a, D, 0.005 / a, ALPHA, g.directions)
        np.testing.assert_allclose(A, -a, rtol=1e-2)
    # the deviation from -a shrinks linearly with ka
    dev = [np.max(np.abs(mie_far_field(1.0, D, k, ALPHA, g.directions) + 1.0)) for k in (0.04, 0.02, 0.01)]
    assert dev[0] / dev[1] == pytest.approx(2.0, rel=0.05)
    assert dev[1] / dev[2] == pytest.approx(2.0, rel=0.05)


def test_impedance_zero_is_neumann():
    g = sphere_grid(6, 12)
    a = mie_far_field(1.3, BoundaryCondition.impedance(0.0), 0.8, ALPHA, g.directions)
    b = mie_far_field(1.3, N, 0.8, ALPHA, g.directions)
    np.testing.assert_allclose(a, b, rtol=1e-13)


def test_rotation_invariance():
    rng = np.random.default_rng(5)
    q, _ = np.linalg.qr(rng.standard_normal((3, 3)))
    alpha = np.array([0.6, 0.0, 0.8])
    b = sphere_grid(4, 8).directions
    a1 = mie_far_field(1.0, IMP, 1.7, alpha, b)
    a2 = mie_far_field(1.0, IMP, 1.7, q @ alpha, b @ q.T)
    np.testing.assert_allclose(a1, a2, rtol=1e-12)


def test_coefficient_invariants():
    for bc in (D, N, BoundaryCondition.impedance(0.9)):
        pw = partial_wave_coeffs(1.0, bc, 5.0)
        assert np.all(np.abs(pw.coeffs) <= 1 + 1e-14)
        assert abs(pw.coeffs[-1]) < 1e-14
        assert pw.L_max == truncation_degree(5.0)


def test_errors():
    with pytest.raises(ValueError):
        mie_far_field(1.0, D, 41.0, ALPHA, ALPHA[None])
    with pytest.raises(ValueError):
        mie_total_field(1.0, D, 1.0, ALPHA, np.array([0.0, 0.2, 0.1]))
    with pytest.raises(ValueError):
        sphere_greens(1.0, 1.0, np.array([0.0, 0.0, 0.5]), np.array([0.0, 0.0, 2.0]))


def test_dirichlet_total_field_vanishes_on_surface():
    x = sphere_grid(6, 12).directions
    assert np.max(np.abs(mie_total_field(1.0, D, 2.0, ALPHA, x))) < 1e-10


def test_neumann_radial_derivative_vanishes():
    x = sphere_grid(6, 12).directions
    assert np.max(np.abs(mie_total_radial_derivative(1.0, N, 2.0, ALPHA, x))) < 1e-9


def test_impedance_condition_on_surface():
    x = sphere_grid(6, 12).directions
    u = mie_total_field(1.0, IMP, 1.0, ALPHA, x)
    un = mie_total_radial_derivative(1.0, IMP, 1.0, ALPHA, x)
    assert np.max(np.abs(un + IMP.h * u)) < 1e-10


def test_far_evaluation_consistency():
    b = sphere_grid(3, 6).directions
    A = mie_far_field(1.0, D, 1.0, ALPHA, b)
    errs = []
    for r in (50.0, 100.0):
        v = mie_total_field(1.0, D, 1.0, ALPHA, r * b) - np.exp(1j * r * (b @ ALPHA))
        errs.append(np.max(np.abs(v - A * np.exp(1j * r) / r)))
    assert errs[1] < 0.3 * errs[0]
    assert errs[1] < 5.0 / 100.0**2


def test_greens_symmetry_and_boundary():
    x, y = np.array([1.2, 0.3, -0.5]), np.array([-2.0, 0.1, 0.4])
    assert sphere_greens(1.0, 1.5, x, y) == sphere_greens(1.0, 1.5, y, x)
    t = np.array([0.0, 0.6, 0.8])
    assert abs(sphere_greens(1.0, 1.5, x, t)) < 1e-14


@pytest.mark.parametrize("bc", [D, N, BoundaryCondition.impedance(0.7)])
def test_optical_theorem(bc):
    g = sphere_grid(24, 48)
    A = mie_far_field(1.0, bc, 1.0, ALPHA, g.directions)
    fwd = mie_far_field(1.0, bc, 1.0, ALPHA, ALPHA[None])[0]
    power = np.sum(g.weights * np.abs(A) ** 2) / (4 * np.pi)
    assert abs(fwd.imag - power) / abs(fwd.imag) < 1e-10


def test_absorbing_optical_inequality():
    g = sphere_grid(24, 48)
    bc = BoundaryCondition.impedance(0.3 + 0.5j)
    A = mie_far_field(1.0, bc, 1.0, ALPHA, g.directions)
    fwd = mie_far_field(1.0, bc, 1.0, ALPHA, ALPHA[None])[0]
    assert fwd.imag > np.sum(g.weights * np.abs(A) ** 2) / (4 * np.pi)


def test_reciprocity_exact():
    rng = np.random.default_rng(9)
    v = rng.standard_normal((10, 3))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    for a, b in zip(v[:5], v[5:]):
        x = mie_far_field(1.0, IMP, 1.2, -a, -b[None])[0]
        y = mie_far_field(1.0, IMP, 1.2, b, a[None])[0]
        assert abs(x - y) < 1e-12 * abs(y)
