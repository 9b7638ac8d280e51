import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from helmscat.estimators import CapContinuation, HelmholtzScatterer, ObstacleReconstructor
from helmscat.geom import perturbed_sphere
from helmscat.mathfn import sphere_grid
from helmscat.oracle import mie_far_field
from helmscat.solver import BoundaryCondition
from helmscat.verify import cap_grid

ALPHA = np.array([0.0, 0.0, 1.0])


def test_scatterer_matches_oracle():
    g = sphere_grid(6, 12)
    est = HelmholtzScatterer(n_theta=16, n_phi=32).fit()
    ref = mie_far_field(1.0, BoundaryCondition.dirichlet(), 1.0, ALPHA, g.directions)
    assert np.max(np.abs(est.predict(g.directions) - ref)) < 1e-8 * np.max(np.abs(ref))


def test_scatterer_not_fitted_and_bad_input():
    est = HelmholtzScatterer()
    with pytest.raises(NotFittedError):
        est.predict(ALPHA[None])
    est.set_params(n_theta=8, n_phi=16).fit()
    with pytest.raises(ValueError):
        est.predict(np.array([[1.0, 1.0]]))
    with pytest.raises(ValueError):
        est.predict(np.array([[1.0, 1.0, 0.0]]))


def test_params_roundtrip():
    est = ObstacleReconstructor(degree=3, lam=1e-4)
    c = clone(est)
    assert c.get_params() == est.get_params()


def test_reconstructor_recovers_y20():
    truth = perturbed_sphere(1.0, {(2, 0): 0.2})
    g = sphere_grid(8, 16)
    data = HelmholtzScatterer(surface=truth, n_theta=12, n_phi=24).fit().predict(g.directions)
    est = ObstacleReconstructor(bc="dirichlet").fit(g.directions, data, sample_weight=g.weights)
    assert est.score(g.directions, data, sample_weight=g.weights) > -1e-4
    d = sphere_grid(10, 20).directions
    err = np.abs(est.spec_.radius_along(d) - truth.radius_along(d)) / truth.radius_along(d)
    assert err.max() < 0.02
    assert est.coef_.shape == (9,)
    with pytest.raises(ValueError):
        est.fit(g.directions, data[:-1])


def test_cap_continuation():
    dirs, w = cap_grid(np.pi / 3, 16, 32)
    g = sphere_grid(12, 24)
    bc = BoundaryCondition.dirichlet()
    cap = mie_far_field(1.0, bc, 1.0, ALPHA, dirs)
    est = CapContinuation(degree=8).fit(dirs, cap, sample_weight=w)
    ref = mie_far_field(1.0, bc, 1.0, ALPHA, g.directions)
    assert np.max(np.abs(est.predict(g.directions) - ref)) < 1e-4 * np.max(np.abs(ref))
    assert est.condition_ < 1e10
