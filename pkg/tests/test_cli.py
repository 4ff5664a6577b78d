import csv
import json

import pytest

from stokes_corners.cli import main


def run(argv, capsys):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_exponents(tmp_path, capsys):
    out = tmp_path / "z.csv"
    code, text, _ = run(["exponents", "--theta", 0.5, "--corner-terms", 4, "--out", out], capsys)
    assert code == 0
    rows = list(csv.DictReader(open(out)))
    assert len(rows) == 2 * (2 * 4 - 1)
    assert {r["parity"] for r in rows} == {"tone", "teno"}
    code, _, _ = run(["exponents", "--theta", 1.0, "--parity", "teno", "--out", out], capsys)
    assert code == 0 and all(float(r["Im z"]) == 0 for r in csv.DictReader(open(out)))


def test_bmatrix_and_scan(tmp_path, capsys):
    out = tmp_path / "b.csv"
    code, text, _ = run(["bmatrix", "--theta", 0.5, "--corner-terms", 3, "--out", out], capsys)
    assert code == 0 and "det=" in text and "cond=" in text
    code, _, _ = run(["bmatrix", "--scan", 0.4, 0.6, 0.1, "--corner-terms", 3, "--out", out], capsys)
    rows = list(csv.DictReader(open(out)))
    assert code == 0 and [r["theta"] for r in rows] == ["0.4", "0.5", "0.6"]
    assert run(["bmatrix", "--out", out], capsys)[0] == 1


def test_wedge_residual(tmp_path, capsys):
    out = tmp_path / "r.csv"
    code, text, _ = run(["wedge-residual", "--theta", 0.5, "--corner-terms", 2, "--points", 5,
                         "--dps", 30, "--out", out, "--strict"], capsys)
    assert code == 0 and "slope" in text
    assert len(list(csv.DictReader(open(out)))) == 5


def test_solve_and_report(tmp_path, capsys):
    out = tmp_path / "rep.json"
    code, text, _ = run(["solve", "--geom", "square", "--corner-terms", 6, "--out", out, "--seed", 2], capsys)
    assert code == 0
    rep = json.loads(out.read_text())
    assert rep["E"] < 1e-11 and rep["seed"] == 2 and rep["flags"] == []
    code, _, _ = run(["solve", "--geom", "equilateral", "--rigid", "rotation", "--corner-terms", 6,
                      "--out", out], capsys)
    assert code == 0 and json.loads(out.read_text())["data"] == "rotation"


def test_solve_with_sources_file(tmp_path, capsys):
    src = tmp_path / "src.json"
    src.write_text(json.dumps({"sources": [{"location": [2, 2], "strength": [1, -1]}],
                               "targets": [[0.5, 0.5], [0.2, 0.7]]}))
    out = tmp_path / "rep.json"
    code, _, _ = run(["solve", "--geom", "square", "--sources", src, "--corner-terms", 6, "--out", out], capsys)
    assert code == 0 and json.loads(out.read_text())["E"] < 1e-11
    src.write_text(json.dumps({"sources": [{"location": [0.5, 0.5], "strength": [1, 0]}]}))
    assert run(["solve", "--geom", "square", "--sources", src, "--out", out], capsys)[0] == 1


def test_validate_geometry(tmp_path, capsys):
    g = tmp_path / "g.json"
    g.write_text(json.dumps({"vertices": [[0, 0], [1, 0], [0, 1]]}))
    code, text, _ = run(["validate-geometry", "--geom", g], capsys)
    assert code == 0 and "0.500000 pi" in text
    g.write_text(json.dumps({"vertices": [[0, 0], [0, 1], [1, 0]]}))  # clockwise
    assert run(["validate-geometry", "--geom", g], capsys)[0] == 1


@pytest.mark.parametrize("argv", [
    ["exponents", "--theta", "2.5", "--out", "x.csv"],
    ["exponents", "--theta", "0.5", "--corner-terms", "1", "--out", "x.csv"],
    ["exponents", "--theta", "0.5", "--out", "/nonexistent/dir/x.csv"],
    ["exponents", "--theta", "abc", "--out", "x.csv"],
    ["nosuch"],
])
def test_usage_errors(argv, tmp_path, monkeypatch, capsys):
    monkeypatch.chdir(tmp_path)
    with pytest.raises(SystemExit) as exc:
        code = main(argv)
        raise SystemExit(code)
    assert exc.value.code == 1


def test_numerical_failure_exit_code(tmp_path, capsys):
    from stokes_corners.exponent_solver import family_branch_points

    b = family_branch_points(2, 1, "tone")[1]
    code, _, err = run(["exponents", "--theta", repr(b), "--parity", "tone", "--out", tmp_path / "z.csv"], capsys)
    assert code == 2 and "numerical failure" in err


def test_strict_flag(tmp_path, capsys):
    out = tmp_path / "r.csv"
    # one point above 0.1 leaves nothing to fit; strict mode must refuse
    code, _, err = run(["wedge-residual", "--theta", 0.5, "--corner-terms", 2, "--points", 1,
                        "--dps", 30, "--out", out, "--strict"], capsys)
    assert code == 3 and "strict" in err
