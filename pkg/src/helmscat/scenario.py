"""Scenario files: obstacle, boundary condition, incidence, wavenumber and grid in one JSON record."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import jsonschema

from .geom import DEFAULT_DEGREE, SurfaceSpec, make_sphere, make_spheroid, perturbed_sphere
from .solver import DEFAULT_COND_LIMIT, DEFAULT_TOL, BoundaryCondition, Incidence, PlaneWave, incidence_from_dict


def load_schema() -> dict:
    return json.loads(resources.files("helmscat").joinpath("data/scenario.schema.json").read_text())


def surface_from_dict(d: dict) -> SurfaceSpec:
    """Full coefficient record or one of the shorthands ``sphere``, ``spheroid``, ``perturbed``."""
    kind = d.get("kind")
    center = d.get("center", (0.0, 0.0, 0.0))
    if kind is None:
        return SurfaceSpec.from_dict(d)
    if kind == "sphere":
        return make_sphere(d["radius"], center)
    if kind == "spheroid":
        return make_spheroid(d["a"], d["c"], center, degree=d.get("degree", 16))
    if kind == "perturbed":
        pert = {(int(l), int(m)): float(e) for l, m, e in d["perturbations"]}
        return perturbed_sphere(d["radius"], pert, degree=d.get("degree", DEFAULT_DEGREE), center=center)
    raise ValueError(f"unknown surface kind {kind!r}")


@dataclass
class ScenarioConfig:
    surface: SurfaceSpec
    k: float
    bc: BoundaryCondition = field(default_factory=BoundaryCondition.dirichlet)
    incidence: Incidence = field(default_factory=lambda: PlaneWave((0.0, 0.0, 1.0)))
    n_theta: int = 24
    n_phi: int = 48
    far_field_grid: tuple[int, int] = (24, 48)
    solve_tol: float = DEFAULT_TOL
    cond_limit: float = DEFAULT_COND_LIMIT
    sweep: dict | None = None

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioConfig":
        jsonschema.validate(d, load_schema())
        tol = d.get("tolerances", {})
        return cls(
            surface=surface_from_dict(d["surface"]),
            k=float(d["k"]),
            bc=BoundaryCondition.from_dict(d.get("bc", {"kind": "dirichlet"})),
            incidence=incidence_from_dict(d.get("incidence", {"type": "plane", "alpha": [0, 0, 1]})),
            n_theta=int(d.get("n_theta", 24)),
            n_phi=int(d.get("n_phi", 48)),
            far_field_grid=tuple(d.get("far_field_grid", (24, 48))),
            solve_tol=float(tol.get("solve", DEFAULT_TOL)),
            cond_limit=float(tol.get("condition", DEFAULT_COND_LIMIT)),
            sweep=d.get("sweep"),
        )

    @classmethod
    def load(cls, path) -> "ScenarioConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def to_dict(self) -> dict:
        out = {
            "surface": self.surface.to_dict(),
            "k": self.k,
            "bc": self.bc.to_dict(),
            "incidence": self.incidence.to_dict(),
            "n_theta": self.n_theta,
            "n_phi": self.n_phi,
            "far_field_grid": list(self.far_field_grid),
            "tolerances": {"solve": self.solve_tol, "condition": self.cond_limit},
        }
        if self.sweep is not None:
            out["sweep"] = self.sweep
        return out
