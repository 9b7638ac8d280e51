import json

import jsonschema
import numpy as np
import pytest

from helmscat.scenario import ScenarioConfig, load_schema, surface_from_dict
from helmscat.solver import PointSource


def test_minimal_defaults():
    sc = ScenarioConfig.from_dict({"surface": {"kind": "sphere", "radius": 2.0}, "k": 1.5})
    assert sc.bc.kind == "dirichlet"
    assert (sc.n_theta, sc.n_phi, sc.far_field_grid) == (24, 48, (24, 48))
    assert sc.surface.radius_along(np.array([[1.0, 0.0, 0.0]]))[0] == pytest.approx(2.0)


@pytest.mark.parametrize("bad", [
    {"surface": {"kind": "sphere", "radius": 1.0}},
    {"surface": {"kind": "sphere", "radius": 1.0}, "k": -1.0},
    {"surface": {"kind": "sphere", "radius": 1.0}, "k": 1.0, "bc": {"kind": "impedance", "h_re": 1, "h_im": -1}},
    {"surface": {"kind": "sphere", "radius": 1.0}, "k": 1.0, "extra": 1},
    {"surface": {"kind": "cube", "radius": 1.0}, "k": 1.0},
    {"surface": {"kind": "sphere", "radius": 1.0}, "k": 1.0, "incidence": {"type": "plane"}},
])
def test_schema_rejects(bad):
    with pytest.raises(jsonschema.ValidationError):
        ScenarioConfig.from_dict(bad)


def test_roundtrip(tmp_path):
    d = {"surface": {"kind": "perturbed", "radius": 1.0, "perturbations": [[2, 0, 0.2], [1, 1, 0.05]]},
         "k": 2.0, "bc": {"kind": "impedance", "h_re": 0.3, "h_im": 0.2},
         "incidence": {"type": "point", "position": [0.0, 0.0, 3.0]}, "n_theta": 12, "n_phi": 24,
         "tolerances": {"solve": 1e-10, "condition": 1e8}}
    sc = ScenarioConfig.from_dict(d)
    assert isinstance(sc.incidence, PointSource)
    assert sc.bc.h == 0.3 + 0.2j
    path = tmp_path / "s.json"
    path.write_text(json.dumps(sc.to_dict()))
    sc2 = ScenarioConfig.load(path)
    np.testing.assert_array_equal(sc2.surface.radius_coeffs, sc.surface.radius_coeffs)
    assert sc2.to_dict() == sc.to_dict()


def test_spheroid_shorthand():
    s = surface_from_dict({"kind": "spheroid", "a": 1.0, "c": 1.5})
    assert s.radius_along(np.array([[0.0, 0.0, 1.0]]))[0] == pytest.approx(1.5, rel=1e-6)
    assert load_schema()["required"] == ["surface", "k"]
