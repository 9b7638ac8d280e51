"""Command-line interface: ``helmscat <subcommand> [options]``.

Exit status 0 on success, 1 when a verification check fails, 2 on usage or
configuration errors.  Every run writes ``run_manifest.json`` to ``--out``
listing the resolved configuration, emitted files and timings.
"""

from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import logging
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__
from .fields import FarFieldPattern, density_to_csv, far_field, greens_function, pattern_from_csv, pattern_to_csv
from .geom import discretize, make_sphere
from .inverse import InversionConfig, reconstruct_shape
from .mathfn import sphere_grid
from .oracle import mie_far_field
from .scenario import ScenarioConfig, surface_from_dict
from .solver import MAX_NODES, BIESolver, BoundaryCondition, PlaneWave, unit
from .verify import SUITE, format_table, load_profiles, run_suite

logger = logging.getLogger(__name__)

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
DEFAULT_SWEEP_BUDGET = 5e11  # flop-count estimate, cells x N^3


class UsageError(Exception):
    pass


@dataclass
class RunManifest:
    subcommand: str
    config: dict
    outputs: list[str] = field(default_factory=list)
    timings: dict = field(default_factory=dict)
    profiles_version: str = __version__
    dry_run: bool = False

    def write(self, out_dir: Path) -> Path:
        path = out_dir / "run_manifest.json"
        self.outputs = sorted(set(self.outputs))
        path.write_text(json.dumps(asdict(self), indent=2, default=_json_default) + "\n")
        return path


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, complex):
        return [o.real, o.imag]
    raise TypeError(f"not serializable: {type(o)}")


def fmt(x: float) -> str:
    return "%.17g" % x


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------
def _vec3(text: str) -> np.ndarray:
    parts = [float(p) for p in text.replace(",", " ").split()]
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("expected three comma-separated numbers")
    return np.array(parts)


def _grid(text: str) -> tuple[int, int]:
    parts = [int(p) for p in text.lower().replace("x", ",").split(",") if p]
    if len(parts) != 2:
        raise argparse.ArgumentTypeError("expected a grid as NTHETA,NPHI")
    return parts[0], parts[1]


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", type=Path, default=Path("."), help="output directory")
    p.add_argument("--dry-run", action="store_true", help="print the plan without solving")
    p.add_argument("-v", "--verbose", action="store_true")


def _add_scenario(p: argparse.ArgumentParser) -> None:
    p.add_argument("--scenario", type=Path, help="scenario JSON file (overrides the flags below)")
    p.add_argument("--radius", type=float, default=1.0, help="sphere radius when no scenario is given")
    p.add_argument("--center", type=_vec3, default=np.zeros(3))
    p.add_argument("--k", type=float, default=1.0)
    p.add_argument("--bc", choices=["dirichlet", "neumann", "impedance"], default="dirichlet")
    p.add_argument("--h", type=complex, default=0j, help="impedance, e.g. 0.3+0.2j")
    p.add_argument("--alpha", type=_vec3, default=np.array([0.0, 0.0, 1.0]))
    p.add_argument("--grid", type=_grid, default=(24, 48), help="surface grid NTHETA,NPHI")
    p.add_argument("--ff-grid", type=_grid, default=(24, 48), help="far-field grid NTHETA,NPHI")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="helmscat", description="Exterior Helmholtz obstacle scattering toolkit")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", metavar="subcommand")

    p = sub.add_parser("forward", help="solve one scattering problem, write far field and density")
    _add_scenario(p)
    _add_common(p)

    p = sub.add_parser("greens", help="obstacle Green's function G(x, y)")
    _add_scenario(p)
    p.add_argument("--x", type=_vec3, required=True)
    p.add_argument("--y", type=_vec3, required=True)
    _add_common(p)

    p = sub.add_parser("oracle", help="partial-wave series far field of a sphere")
    p.add_argument("--radius", type=float, default=1.0)
    p.add_argument("--k", type=float, default=1.0)
    p.add_argument("--bc", choices=["dirichlet", "neumann", "impedance"], default="dirichlet")
    p.add_argument("--h", type=complex, default=0j)
    p.add_argument("--alpha", type=_vec3, default=np.array([0.0, 0.0, 1.0]))
    p.add_argument("--ff-grid", type=_grid, default=(24, 48))
    _add_common(p)

    p = sub.add_parser("verify", help="run the identity verification suite")
    p.add_argument("--suite", default="fast")
    p.add_argument("--identity", action="append", default=None, help="run only this identity (repeatable)")
    p.add_argument("--config", type=Path, help="JSON overrides for the tolerance profile")
    p.add_argument("--threads", type=int, default=None)
    _add_common(p)

    p = sub.add_parser("invert", help="recover shape and boundary condition from a far-field pattern")
    p.add_argument("--data", type=Path, required=True, help="pattern CSV")
    p.add_argument("--k", type=float, default=None, help="defaults to the value in the pattern header")
    p.add_argument("--alpha", type=_vec3, default=None)
    p.add_argument("--degree", type=int, default=2)
    p.add_argument("--bc", choices=["auto", "dirichlet", "neumann", "impedance"], default="auto")
    p.add_argument("--h", type=complex, default=0j)
    p.add_argument("--lambda", dest="lam", type=float, default=1e-6)
    p.add_argument("--max-iter", type=int, default=30)
    p.add_argument("--grid", type=_grid, default=(12, 24))
    p.add_argument("--initial-radius", type=float, default=1.0)
    _add_common(p)

    p = sub.add_parser("sweep", help="cartesian sweep over wavenumbers, grids and shapes")
    p.add_argument("--config", type=Path, help="scenario JSON with a 'sweep' block")
    p.add_argument("--k", type=float, nargs="*", default=None)
    p.add_argument("--grids", type=_grid, nargs="*", default=None)
    p.add_argument("--radius", type=float, default=1.0)
    p.add_argument("--bc", choices=["dirichlet", "neumann", "impedance"], default="dirichlet")
    p.add_argument("--h", type=complex, default=0j)
    p.add_argument("--budget", type=float, default=DEFAULT_SWEEP_BUDGET, help="cap on cells x N^3")
    _add_common(p)

    p = sub.add_parser("mesh-dump", help="write quadrature nodes, normals and weights as CSV")
    _add_scenario(p)
    _add_common(p)
    return parser


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------
def _bc_from(args) -> BoundaryCondition:
    if args.bc == "impedance":
        return BoundaryCondition.impedance(args.h)
    return BoundaryCondition(args.bc)


def _scenario_from(args) -> ScenarioConfig:
    if getattr(args, "scenario", None):
        try:
            return ScenarioConfig.load(args.scenario)
        except (OSError, json.JSONDecodeError, jsonschema.ValidationError) as e:
            raise UsageError(f"cannot read scenario: {getattr(e, 'message', e)}") from e
    return ScenarioConfig(surface=make_sphere(args.radius, args.center), k=args.k, bc=_bc_from(args),
                          incidence=PlaneWave(unit(args.alpha)), n_theta=args.grid[0], n_phi=args.grid[1],
                          far_field_grid=tuple(args.ff_grid))


def cmd_forward(args, man: RunManifest) -> int:
    sc = _scenario_from(args)
    man.config = sc.to_dict()
    if args.dry_run:
        return EXIT_OK
    t0 = time.perf_counter()
    solver = BIESolver(discretize(sc.surface, sc.n_theta, sc.n_phi), sc.bc, sc.k, tol=sc.solve_tol,
                       cond_limit=sc.cond_limit)
    sol = solver.solve(sc.incidence)
    man.timings["solve"] = time.perf_counter() - t0
    pat = far_field(sol, grid=sc.far_field_grid)
    out = args.out
    pattern_to_csv(pat, out / "far_field.csv")
    density_to_csv(sol, out / "density.csv")
    man.outputs += [str(out / "far_field.csv"), str(out / "density.csv")]
    print(f"nodes {solver.surface.size}  condition {solver.condition:.3e}  residual {sol.residual:.2e}")
    print(f"far-field power {pat.total_power():.10g}")
    return EXIT_OK


def cmd_greens(args, man: RunManifest) -> int:
    sc = _scenario_from(args)
    man.config = {**sc.to_dict(), "x": args.x.tolist(), "y": args.y.tolist()}
    if args.dry_run:
        return EXIT_OK
    solver = BIESolver(discretize(sc.surface, sc.n_theta, sc.n_phi), sc.bc, sc.k)
    try:
        g = greens_function(solver, x=args.x, y=args.y)
    except ValueError as e:
        raise UsageError(str(e)) from e
    path = args.out / "greens.json"
    path.write_text(json.dumps({"x": g.x.tolist(), "y": g.y.tolist(), "re_G": g.value.real, "im_G": g.value.imag},
                               indent=2) + "\n")
    man.outputs.append(str(path))
    print(f"G = {fmt(g.value.real)} {'+' if g.value.imag >= 0 else '-'} {fmt(abs(g.value.imag))}i")
    return EXIT_OK


def cmd_oracle(args, man: RunManifest) -> int:
    bc = _bc_from(args)
    man.config = {"radius": args.radius, "k": args.k, "bc": bc.to_dict(), "alpha": unit(args.alpha).tolist(),
                  "ff_grid": list(args.ff_grid)}
    if args.dry_run:
        return EXIT_OK
    g = sphere_grid(*args.ff_grid)
    alpha = unit(args.alpha)
    values = mie_far_field(args.radius, bc, args.k, alpha, g.directions)
    pat = FarFieldPattern(args.k, g.directions, values, alpha, g.weights, g.dims)
    path = args.out / "oracle_far_field.csv"
    pattern_to_csv(pat, path)
    man.outputs.append(str(path))
    print(f"wrote {path}")
    return EXIT_OK


def cmd_verify(args, man: RunManifest) -> int:
    overrides = None
    if args.config:
        try:
            overrides = json.loads(args.config.read_text())
        except (OSError, json.JSONDecodeError) as e:
            raise UsageError(f"cannot read config: {e}") from e
    profiles = load_profiles()
    if args.suite not in profiles:
        raise UsageError(f"unknown suite {args.suite!r}; choose from {sorted(profiles)}")
    man.config = {"suite": args.suite, "identities": args.identity, "overrides": overrides}
    if args.dry_run:
        for name in args.identity or SUITE:
            print(name)
        return EXIT_OK
    try:
        reports = run_suite(args.suite, args.identity, overrides, threads=args.threads)
    except KeyError as e:
        raise UsageError(str(e)) from e
    path = args.out / f"verify_{args.suite}.json"
    path.write_text(json.dumps([r.to_dict() for r in reports], indent=2) + "\n")
    man.outputs.append(str(path))
    man.timings["checks"] = {r.name: r.metadata.get("seconds") for r in reports}
    print(format_table(reports))
    return EXIT_OK if all(r.passed for r in reports) else EXIT_FAIL


def cmd_invert(args, man: RunManifest) -> int:
    try:
        data = pattern_from_csv(args.data)
    except (OSError, ValueError) as e:
        raise UsageError(f"cannot read pattern: {e}") from e
    k = args.k if args.k is not None else data.k
    alpha = args.alpha if args.alpha is not None else data.alpha
    if alpha is None:
        raise UsageError("incident direction missing: pass --alpha")
    bc = "auto" if args.bc == "auto" else _bc_from(args)
    man.config = {"data": str(args.data), "k": k, "alpha": unit(alpha).tolist(), "degree": args.degree,
                  "bc": bc if isinstance(bc, str) else bc.to_dict(), "lambda": args.lam, "max_iter": args.max_iter,
                  "grid": list(args.grid), "initial_radius": args.initial_radius}
    if args.dry_run:
        return EXIT_OK
    try:
        cfg = InversionConfig(k=k, alpha=alpha, data=data, degree=args.degree, lam=args.lam, max_iter=args.max_iter,
                              grid=tuple(args.grid), bc=bc)
    except ValueError as e:
        raise UsageError(str(e)) from e
    res = reconstruct_shape(cfg, make_sphere(args.initial_radius))
    rp = args.out / "inversion.json"
    sp = args.out / "recovered_surface.json"
    rp.write_text(json.dumps(res.to_dict(), indent=2) + "\n")
    sp.write_text(res.spec.to_json() + "\n")
    man.outputs += [str(rp), str(sp)]
    print(f"iterations {res.iterations}  misfit {res.misfit:.3e}  stop {res.stop_reason}  bc {res.bc.kind}")
    return EXIT_OK


def _sweep_axes(args):
    ks, grids, surfaces = args.k, args.grids, None
    bc = _bc_from(args)
    if args.config:
        try:
            sc = ScenarioConfig.load(args.config)
        except (OSError, json.JSONDecodeError, jsonschema.ValidationError) as e:
            raise UsageError(f"cannot read config: {getattr(e, 'message', e)}") from e
        sw = sc.sweep or {}
        ks = sw.get("k", [sc.k])
        grids = [tuple(g) for g in sw.get("grids", [(sc.n_theta, sc.n_phi)])]
        surfaces = [surface_from_dict(s) for s in sw["surfaces"]] if "surfaces" in sw else [sc.surface]
        bc = sc.bc
    if surfaces is None:
        surfaces = [make_sphere(args.radius)]
    if not ks or not grids or not surfaces:
        raise UsageError("sweep axes must be non-empty (give --k and --grids, or a config with a sweep block)")
    return list(ks), [tuple(g) for g in grids], surfaces, bc


def cmd_sweep(args, man: RunManifest) -> int:
    ks, grids, surfaces, bc = _sweep_axes(args)
    cells = list(itertools.product(range(len(surfaces)), ks, grids))
    cost = float(sum((g[0] * g[1]) ** 3 for _, _, g in cells))
    man.config = {"k": ks, "grids": [list(g) for g in grids], "surfaces": [s.to_dict() for s in surfaces],
                  "bc": bc.to_dict(), "cells": len(cells), "cost_estimate": cost, "budget": args.budget}
    print(f"{len(cells)} cells, cost estimate {cost:.3e} (budget {args.budget:.3e})")
    if cost > args.budget or any(g[0] * g[1] > MAX_NODES for g in grids):
        print("refusing sweep: resource cap exceeded", file=sys.stderr)
        return EXIT_USAGE
    if args.dry_run:
        return EXIT_OK
    alpha = np.array([0.0, 0.0, 1.0])
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["surface", "k", "n_theta", "n_phi", "nodes", "condition", "power", "oracle_rel_l2"])
    for si, k, g in cells:
        spec = surfaces[si]
        solver = BIESolver(discretize(spec, *g), bc, k)
        pat = far_field(solver.solve(PlaneWave(alpha)))
        err = float("nan")
        if spec.degree == 0 and not np.any(spec.center):
            ref = mie_far_field(spec.radius_coeffs[0] / np.sqrt(4 * np.pi), bc, k, alpha, pat.directions)
            err = float(np.sqrt(np.sum(pat.weights * np.abs(pat.values - ref) ** 2)
                                / np.sum(pat.weights * np.abs(ref) ** 2)))
        w.writerow([spec.label, fmt(k), g[0], g[1], solver.surface.size, "%.6e" % solver.condition,
                    fmt(pat.total_power()), fmt(err)])
    path = args.out / "sweep.csv"
    path.write_text(buf.getvalue())
    man.outputs.append(str(path))
    print(buf.getvalue(), end="")
    return EXIT_OK


def cmd_mesh_dump(args, man: RunManifest) -> int:
    sc = _scenario_from(args)
    man.config = sc.to_dict()
    if args.dry_run:
        return EXIT_OK
    q = discretize(sc.surface, sc.n_theta, sc.n_phi)
    path = args.out / "mesh.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "y", "z", "nx", "ny", "nz", "weight"])
        for p, n, wt in zip(q.nodes, q.normals, q.weights):
            w.writerow([fmt(v) for v in (*p, *n, wt)])
    man.outputs.append(str(path))
    print(f"wrote {q.size} nodes to {path}")
    return EXIT_OK


COMMANDS = {
    "forward": cmd_forward,
    "greens": cmd_greens,
    "oracle": cmd_oracle,
    "verify": cmd_verify,
    "invert": cmd_invert,
    "sweep": cmd_sweep,
    "mesh-dump": cmd_mesh_dump,
}


def run(argv=None) -> tuple[int, RunManifest | None]:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0), None
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE, None
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    man = RunManifest(subcommand=args.command, config={}, dry_run=args.dry_run)
    try:
        args.out.mkdir(parents=True, exist_ok=True)
        probe = args.out / ".write_test"
        probe.write_text("")
        probe.unlink()
    except OSError as e:
        print(f"error: output directory {args.out} is not writable ({e})", file=sys.stderr)
        return EXIT_USAGE, None
    t0 = time.perf_counter()
    try:
        code = COMMANDS[args.command](args, man)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE, None
    except (ValueError, MemoryError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE, None
    man.timings["total"] = time.perf_counter() - t0
    path = man.write(args.out)
    if args.dry_run:
        print(json.dumps(asdict(man), indent=2, default=_json_default))
    logger.info("manifest written to %s", path)
    return code, man


def main(argv=None) -> int:
    code, _ = run(argv)
    return code
