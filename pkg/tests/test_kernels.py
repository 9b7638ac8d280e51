import numpy as np
import pytest

from helmscat.kernels import (
    CoincidentPointsError,
    farfield_kernel,
    kernel_g,
    kernel_g_normal,
    kernel_grad_x,
)


def test_g_closed_form():
    v = kernel_g(np.zeros(3), np.array([1.0, 0, 0]), 1.0)
    assert v == pytest.approx((np.cos(1) + 1j * np.sin(1)) / (4 * np.pi), rel=1e-15)
    assert v == pytest.approx(0.04300 + 0.06697j, abs=1e-5)


def test_static_limit():
    assert kernel_g(np.zeros(3), np.array([0, 2.0, 0]), 0.0) == pytest.approx(1 / (8 * np.pi))


def test_symmetry():
    rng = np.random.default_rng(1)
    x, y = rng.standard_normal((2, 10, 3))
    np.testing.assert_array_equal(kernel_g(x, y, 1.7), kernel_g(y, x, 1.7))


def test_coincident_points():
    with pytest.raises(CoincidentPointsError):
        kernel_g(np.ones(3), np.ones(3), 1.0)
    with pytest.raises(CoincidentPointsError):
        kernel_g_normal(np.ones(3), np.ones(3), np.array([0, 0, 1.0]), 1.0)


def test_normal_derivative_finite_difference():
    x = np.array([0.3, -0.2, 1.1])
    s = np.array([0.1, 0.5, 0.2])
    n = np.array([1.0, 2.0, -0.5])
    n /= np.linalg.norm(n)
    h = 1e-5
    fd = (kernel_g(x, s + h * n, 2.0) - kernel_g(x, s - h * n, 2.0)) / (2 * h)
    assert kernel_g_normal(x, s, n, 2.0) == pytest.approx(fd, rel=1e-7)


def test_static_double_layer():
    x = np.zeros(3)
    s = np.array([0.0, 0.0, 2.0])
    n = np.array([0.0, 0.6, 0.8])
    # d/dN_s of 1/(4 pi |x - s|) = -cos(angle between s - x and N)/(4 pi r^2)
    assert kernel_g_normal(x, s, n, 0.0) == pytest.approx(-0.8 / (4 * np.pi * 4.0), rel=1e-14)


def test_normal_flip_negates():
    x, s, n = np.zeros(3), np.array([1.0, 1, 0]), np.array([0.0, 0, 1])
    n = np.array([0.6, 0.0, 0.8])
    assert kernel_g_normal(x, s, -n, 1.3) == -kernel_g_normal(x, s, n, 1.3)


def test_farfield_kernel():
    assert farfield_kernel(np.array([1.0, 0, 0]), np.array([0, 2.0, 0]), 3.0) == 1
    assert farfield_kernel(np.array([0, 0, 1.0]), np.array([0, 0, np.pi / 2]), 2.0) == pytest.approx(-1, abs=1e-15)
    rng = np.random.default_rng(2)
    s = rng.standard_normal((20, 3))
    np.testing.assert_allclose(np.abs(farfield_kernel(np.array([0.6, 0, 0.8]), s, 1.4)), 1.0, rtol=1e-15)


def test_helmholtz_residual():
    k, h = 1.5, 1e-2
    y = np.zeros(3)
    x = np.array([0.8, 0.9, 0.7])
    c = np.array([-1 / 60, 3 / 20, -3 / 4, 0, 3 / 4, -3 / 20, 1 / 60])
    c2 = np.array([1 / 90, -3 / 20, 3 / 2, -49 / 18, 3 / 2, -3 / 20, 1 / 90])
    lap = 0
    for ax in range(3):
        e = np.zeros(3)
        e[ax] = h
        vals = np.array([kernel_g(x + j * e, y, k) for j in range(-3, 4)])
        lap += (c2 @ vals) / h**2
    g = kernel_g(x, y, k)
    assert abs(lap + k * k * g) < 1e-6 * abs(g)


def test_radiation_decay_of_kernel():
    k = 1.0
    rs = np.array([10.0, 20.0, 40.0])
    d = np.array([0.0, 0.6, 0.8])
    vals = []
    for r in rs:
        x = r * d
        gr = (kernel_grad_x(x, np.zeros(3), k) @ d)
        vals.append(abs(gr - 1j * k * kernel_g(x, np.zeros(3), k)))
    slope = np.polyfit(np.log(rs), np.log(vals), 1)[0]
    assert slope == pytest.approx(-2.0, abs=0.05)
