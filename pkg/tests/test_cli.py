import json
import re
import subprocess
import sys

import numpy as np
import pytest

from kspectral import io as kio
from kspectral.cli import main

from conftest import J2


def _matrix_file(path, a):
    path.write_text(json.dumps(kio.matrix_to_json(np.asarray(a, dtype=complex))))
    return str(path)


@pytest.fixture
def j2(tmp_path):
    return _matrix_file(tmp_path / "j2.json", J2)


def _points(svg):
    pts = re.search(r'points="([^"]*)"', svg).group(1).split()
    return np.array([complex(*map(float, p.split(","))) for p in pts])


# numrange


def test_numrange_j2(tmp_path, j2):
    out = tmp_path / "out"
    assert main(["numrange", "--matrix", j2, "--m", "360", "--out", str(out)]) == 0
    doc = json.loads((out / "region.json").read_text())
    assert np.allclose(doc["support"], 0.5, atol=1e-12)
    pts = _points((out / "region.svg").read_text())
    assert pts[0] == pts[-1]  # closed
    assert np.allclose(np.abs(pts), 0.5, atol=1e-9)  # circle of radius 1/2 (y flipped)


def test_numrange_segment(tmp_path):
    m = _matrix_file(tmp_path / "d.json", np.diag([0, 1]))
    out = tmp_path / "out"
    assert main(["numrange", "--matrix", m, "--m", "64", "--format", "svg,csv", "--out", str(out)]) == 0
    pts = _points((out / "region.svg").read_text())
    assert np.abs(pts.imag).max() <= 1e-12
    assert set(np.round(pts.real, 12)) <= {0.0, 1.0}
    assert (out / "region.csv").read_text().startswith("theta,support")
    assert not (out / "region.json").exists()


def test_malformed_json_writes_nothing(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    out = tmp_path / "out"
    assert main(["numrange", "--matrix", str(bad), "--out", str(out)]) == 2
    assert not out.exists() or not any(out.iterdir())
    bad.write_text(json.dumps({"dim": 2, "entries": [[0, 0]] * 4, "extra": 1}))
    assert main(["numrange", "--matrix", str(bad), "--out", str(out)]) == 2


def test_no_overwrite_without_force(tmp_path, j2):
    out = str(tmp_path / "out")
    args = ["numrange", "--matrix", j2, "--m", "64", "--out", out]
    assert main(args) == 0
    assert main(args) == 2
    assert main(args + ["--force"]) == 0


def test_argument_errors_exit_2(j2, tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main(["numrange", "--matrix", j2, "--out", str(tmp_path), "--format", "png"])
    assert exc.value.code == 2


# decompose


def _contours(path, items):
    path.write_text(json.dumps(items))
    return str(path)


def test_decompose_example(tmp_path):
    m = _matrix_file(tmp_path / "t.json", [[0, 1], [0, 5]])
    c = _contours(tmp_path / "c.json", [{"center": [0, 0], "radius": 1}, {"center": [5, 0], "radius": 1}])
    out = tmp_path / "out"
    assert main(["decompose", "--matrix", m, "--contours", c, "--out", str(out)]) == 0
    blocks = [kio.matrix_from_json(b) for b in json.loads((out / "blocks.json").read_text())]
    assert [b.shape for b in blocks] == [(1, 1), (1, 1)]
    assert abs(blocks[0][0, 0]) <= 1e-8 and abs(blocks[1][0, 0] - 5) <= 1e-8
    rep = json.loads((out / "system.json").read_text())
    assert rep["off_block_residual"] <= 1e-8
    assert max(rep["orthogonal_residuals"].values()) <= 1e-8
    assert (out / "similarity.json").exists() and (out / "hull.json").exists()


def test_decompose_block_diagonal_reports_identity(tmp_path):
    a = np.zeros((3, 3), dtype=complex)
    a[:2, :2] = J2
    a[2, 2] = 5
    m = _matrix_file(tmp_path / "t.json", a)
    c = _contours(tmp_path / "c.json", [{"center": [0, 0], "radius": 1}, {"center": [5, 0], "radius": 1}])
    out = tmp_path / "out"
    assert main(["decompose", "--matrix", m, "--contours", c, "--out", str(out)]) == 0
    assert json.loads((out / "system.json").read_text())["S_minus_I"] <= 1e-9


def test_decompose_contour_through_eigenvalue(tmp_path, capsys):
    m = _matrix_file(tmp_path / "t.json", [[0, 1], [0, 5]])
    c = _contours(tmp_path / "c.json", [{"center": [0, 0], "radius": 5, "M": 64}])
    assert main(["decompose", "--matrix", m, "--contours", c, "--out", str(tmp_path / "out")]) == 3
    assert "ContourThroughSpectrum" in capsys.readouterr().err


# other commands


def test_kbound_and_seed_override(tmp_path, j2, monkeypatch):
    out = tmp_path / "out"
    assert main(["kbound", "--matrix", j2, "--m", "180", "--out", str(out)]) == 0
    doc = json.loads((out / "kbound.json").read_text())
    assert 1 <= doc["K"] <= 1 + np.sqrt(2)
    monkeypatch.setenv("SDL_SEED", "77")
    out2 = tmp_path / "out2"
    assert main(["kbound", "--matrix", j2, "--m", "180", "--out", str(out2)]) == 0
    assert json.loads((out2 / "kbound.json").read_text())["config"]["seed"] == 77
    monkeypatch.setenv("SDL_SEED", "abc")
    assert main(["kbound", "--matrix", j2, "--out", str(tmp_path / "out3")]) == 2


def test_dilation(tmp_path):
    m = _matrix_file(tmp_path / "t.json", 0.5 * J2)
    out = tmp_path / "out"
    assert main(["dilation", "--matrix", m, "--M", "256", "--out", str(out)]) == 0
    doc = json.loads((out / "dilation.json").read_text())
    assert max(doc["residuals"]) <= 1e-10
    assert doc["min_eigenvalue"] >= 0
    assert (out / "grid.csv").read_text().count("\n") == 257


def test_gleason_command(tmp_path):
    out = tmp_path / "out"
    args = ["gleason", "--domain", "disc", "--x1", "0,0", "--x2", "0.5,0", "--degree", "4", "--out", str(out)]
    assert main(args) == 0
    doc = json.loads((out / "gleason.json").read_text())
    assert 0.5 <= doc["d_hat"] <= 0.5359 + 1e-9
    assert main(["gleason", "--domain", "blob", "--x1", "0,0", "--x2", "0,0", "--out", str(tmp_path / "o")]) == 2


# scenarios


def test_scenario_file(tmp_path, capsys):
    f = tmp_path / "s.json"
    f.write_text(json.dumps({"schema": "kspectral.scenario/1", "kind": "hull_identity", "seed": 3, "trials": 4,
                             "params": {"m": 90}}))
    out = tmp_path / "out"
    assert main(["scenario", str(f), "--out", str(out)]) == 0
    assert "AC1 max_hausdorff" in capsys.readouterr().out
    assert json.loads((out / "report.json").read_text())["pass"] is True


def test_bundled_hull_identity_exits_0(tmp_path):
    assert main(["scenario", "--bundled", "hull_identity", "--out", str(tmp_path)]) == 0


def test_impossible_margin_exits_4(tmp_path, capsys):
    assert main(["scenario", "--bundled", "impossible_margin", "--out", str(tmp_path)]) == 4
    assert "RegionViolation" in capsys.readouterr().out
    doc = json.loads((tmp_path / "report.json").read_text())
    assert {e["error"] for e in doc["errors"]} == {"RegionViolation"}


def test_scenario_schema_error_exits_2(tmp_path):
    f = tmp_path / "s.json"
    f.write_text(json.dumps({"kind": "hull_identity", "seed": 3}))
    assert main(["scenario", str(f), "--out", str(tmp_path / "out")]) == 2
    assert not (tmp_path / "out").exists()


def test_console_entry_point(tmp_path, j2):
    proc = subprocess.run(
        [sys.executable, "-m", "kspectral.cli", "numrange", "--matrix", j2, "--m", "64", "--out", str(tmp_path)],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "region.svg").exists()
