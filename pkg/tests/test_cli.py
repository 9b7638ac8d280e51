import csv
import json
from pathlib import Path

import pytest

from helmscat.cli import EXIT_FAIL, EXIT_OK, EXIT_USAGE, main, run

GOLDEN = Path(__file__).parent / "data" / "oracle_unit_sphere_k1_dirichlet.csv"


def test_no_arguments_is_usage_error(capsys):
    assert main([]) == EXIT_USAGE
    assert "usage" in capsys.readouterr().err


def test_unknown_option_is_usage_error():
    assert main(["forward", "--nonsense"]) == EXIT_USAGE


def test_oracle_matches_golden_file(tmp_path):
    assert main(["oracle", "--radius", "1", "--k", "1", "--bc", "dirichlet", "--out", str(tmp_path)]) == EXIT_OK
    assert (tmp_path / "oracle_far_field.csv").read_bytes() == GOLDEN.read_bytes()


def test_forward_writes_outputs_and_manifest(tmp_path):
    code, man = run(["forward", "--grid", "8,16", "--ff-grid", "6,12", "--out", str(tmp_path)])
    assert code == EXIT_OK
    for name in ("far_field.csv", "density.csv", "run_manifest.json"):
        assert (tmp_path / name).exists()
    m = json.loads((tmp_path / "run_manifest.json").read_text())
    assert m["subcommand"] == "forward" and m["config"]["n_theta"] == 8
    assert sorted(m["outputs"]) == m["outputs"]


def test_forward_scenario_file(tmp_path):
    sc = tmp_path / "s.json"
    sc.write_text(json.dumps({"surface": {"kind": "spheroid", "a": 1.0, "c": 1.5}, "k": 1.0,
                              "n_theta": 8, "n_phi": 16, "far_field_grid": [4, 8]}))
    assert main(["forward", "--scenario", str(sc), "--out", str(tmp_path)]) == EXIT_OK
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"surface": {"kind": "sphere", "radius": 1.0}, "k": 0}))
    assert main(["forward", "--scenario", str(bad), "--out", str(tmp_path)]) == EXIT_USAGE


def test_dry_run_solves_nothing(tmp_path, capsys):
    code, man = run(["forward", "--dry-run", "--out", str(tmp_path)])
    assert code == EXIT_OK and man.dry_run
    assert not (tmp_path / "far_field.csv").exists()
    assert json.loads((tmp_path / "run_manifest.json").read_text())["dry_run"] is True


def test_greens(tmp_path):
    assert main(["greens", "--x", "2,0,0", "--y", "0,0,3", "--grid", "12,24", "--out", str(tmp_path)]) == EXIT_OK
    g = json.loads((tmp_path / "greens.json").read_text())
    assert set(g) == {"x", "y", "re_G", "im_G"}
    assert main(["greens", "--x", "0.2,0,0", "--y", "0,0,3", "--out", str(tmp_path)]) == EXIT_USAGE


def test_verify_single_identity(tmp_path):
    assert main(["verify", "--identity", "optical_theorem_oracle", "--out", str(tmp_path)]) == EXIT_OK
    rep = json.loads((tmp_path / "verify_fast.json").read_text())
    assert [r["name"] for r in rep] == ["optical_theorem_oracle"] and rep[0]["passed"]


def test_verify_failure_exit_code(tmp_path):
    cfg = tmp_path / "tight.json"
    cfg.write_text(json.dumps({"tolerances": {"optical_theorem_oracle": 0.0}, "grid": [4, 8]}))
    assert main(["verify", "--identity", "optical_theorem_oracle", "--config", str(cfg),
                 "--out", str(tmp_path)]) == EXIT_FAIL


def test_verify_usage_errors(tmp_path):
    assert main(["verify", "--suite", "medium", "--out", str(tmp_path)]) == EXIT_USAGE
    assert main(["verify", "--identity", "nope", "--out", str(tmp_path)]) == EXIT_USAGE


def _rows(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_sweep_rows_and_determinism(tmp_path):
    args = ["sweep", "--k", "0.5", "1", "--grids", "8,16", "12,24"]
    assert main(args + ["--out", str(tmp_path / "a")]) == EXIT_OK
    assert main(args + ["--out", str(tmp_path / "b")]) == EXIT_OK
    a = (tmp_path / "a" / "sweep.csv").read_bytes()
    assert a == (tmp_path / "b" / "sweep.csv").read_bytes()
    rows = _rows(tmp_path / "a" / "sweep.csv")
    assert len(rows) == 4
    assert all(float(r["oracle_rel_l2"]) < 1e-4 for r in rows)


def test_sweep_refusals(tmp_path):
    assert main(["sweep", "--k", "--grids", "8,16", "--out", str(tmp_path)]) == EXIT_USAGE
    assert main(["sweep", "--k", "1", "--grids", "64,128", "--out", str(tmp_path)]) == EXIT_USAGE
    assert not (tmp_path / "sweep.csv").exists()


def test_mesh_dump(tmp_path):
    assert main(["mesh-dump", "--grid", "4,8", "--out", str(tmp_path)]) == EXIT_OK
    rows = _rows(tmp_path / "mesh.csv")
    assert len(rows) == 32
    assert sum(float(r["weight"]) for r in rows) == pytest.approx(4 * 3.141592653589793, rel=1e-3)


def test_invert_roundtrip(tmp_path):
    assert main(["oracle", "--radius", "1.1", "--ff-grid", "8,16", "--out", str(tmp_path)]) == EXIT_OK
    code = main(["invert", "--data", str(tmp_path / "oracle_far_field.csv"), "--degree", "0", "--bc", "dirichlet",
                 "--out", str(tmp_path)])
    assert code == EXIT_OK
    res = json.loads((tmp_path / "inversion.json").read_text())
    r0 = res["surface"]["coeffs"][0] / (4 * 3.141592653589793) ** 0.5
    assert r0 == pytest.approx(1.1, rel=1e-3)
    assert main(["invert", "--data", str(tmp_path / "missing.csv"), "--out", str(tmp_path)]) == EXIT_USAGE


def test_unwritable_output(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert main(["oracle", "--out", str(blocker / "sub")]) == EXIT_USAGE


def test_verify_fast_suite_all_pass(tmp_path):
    code = main(["verify", "--suite", "fast", "--out", str(tmp_path)])
    rep = json.loads((tmp_path / "verify_fast.json").read_text())
    failing = [r["name"] for r in rep if not r["passed"]]
    assert len(rep) == 22
    assert code == EXIT_OK, f"failing identities: {failing}"
