import csv
import json
import math
import xml.etree.ElementTree as ET

import pytest

from nullcone.cli import figure1_svg, orbit_tables, run_cli
from nullcone.lorentz import CSV_HEADER

SVG_NS = "{http://www.w3.org/2000/svg}"


def read_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], [[float(v) for v in r] for r in rows[1:]]


def test_verify_hopf_json_sorted(capsys):
    assert run_cli(["verify", "hopf", "--seed", "3", "--samples", "50"]) == 0
    reports = json.loads(capsys.readouterr().out)
    names = [r["check"] for r in reports]
    assert names == sorted(names)
    assert {"hopf_fiber", "phi_two_to_one", "lens_equivariance[c=6]"} <= set(names)
    for r in reports:
        assert set(r) == {"check", "samples", "max_residual", "threshold", "pass", "worst_point"}
        assert r["pass"] is True


def test_verify_deterministic(capsys, tmp_path):
    out = tmp_path / "r.json"
    run_cli(["verify", "lens", "--seed", "5", "--samples", "20", "--out", str(out)])
    first = capsys.readouterr().out
    run_cli(["verify", "lens", "--seed", "5", "--samples", "20"])
    assert capsys.readouterr().out == first == out.read_text()


def test_threshold_zero_flips_exit_code(capsys):
    assert run_cli(["verify", "contact", "--samples", "5"]) == 0
    assert run_cli(["verify", "contact", "--samples", "5", "--threshold", "0"]) == 1
    capsys.readouterr()


def test_unknown_suite_is_usage_error(capsys):
    assert run_cli(["verify", "bogus"]) == 2
    assert "invalid choice" in capsys.readouterr().err


def test_geodesic_closes(tmp_path):
    out = tmp_path / "t.csv"
    argv = ["geodesic", "--metric", "s2s1:c=2", "--theta", str(math.pi / 2), "--T", repr(2 * math.pi), "--out", str(out)]
    assert run_cli(argv) == 0
    header, rows = read_csv(out)
    assert tuple(header) == CSV_HEADER
    first, last = rows[0], rows[-1]
    assert last[0] == pytest.approx(2 * math.pi, abs=1e-12)
    for i in (1, 2, 3):
        d = abs(last[i] - first[i]) % (2 * math.pi)
        assert min(d, 2 * math.pi - d) <= 1e-6
    assert max(r[5] for r in rows) < 1e-8


def test_geodesic_toward_pole_truncates(tmp_path, capsys):
    out = tmp_path / "t.csv"
    assert run_cli(["geodesic", "--metric", "s2s1:c=2", "--theta", "0", "--T", "6.2832", "--out", str(out)]) == 0
    _, rows = read_csv(out)
    assert rows[-1][0] < 6.2832
    assert "truncated" in capsys.readouterr().err


def test_geodesic_json_and_inline_metric(capsys):
    metric = json.dumps({"g11": "1", "g22": "1", "g33": "-1", "domain": [[-10, 10], [-10, 10], [-10, 10]]})
    assert run_cli(["geodesic", "--metric", metric, "--start", "0,0,0", "--T", "1", "--step", "0.25", "--format", "json"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["curve"] == "geodesic" and not doc["truncated"]
    assert len(doc["rows"]) == 5
    assert doc["rows"][-1][1:4] == pytest.approx([1.0, 0.0, 1.0])


def test_kernelflow_minkowski(tmp_path):
    out = tmp_path / "k.csv"
    assert run_cli(["kernelflow", "--theta", "0.5", "--T", "1", "--step", "0.1", "--out", str(out)]) == 0
    _, rows = read_csv(out)
    last = rows[-1]
    assert last[1:4] == pytest.approx([math.cos(0.5), math.sin(0.5), 1.0], abs=1e-13)
    assert all(r[4] == pytest.approx(0.5) for r in rows)


@pytest.mark.parametrize(
    "argv",
    [
        ["geodesic", "--metric", "nope"],
        ["geodesic", "--start", "1,2"],
        ["geodesic", "--start", "a,b,c"],
        ["geodesic", "--metric", "s2s1:c=1", "--start", "0,0,0"],
        ["geodesic", "--step", "0"],
        ["geodesic", "--metric", '{"g11": "x4", "g22": "1", "g33": "-1", "domain": [[0,1],[0,1],[0,1]]}'],
        ["kernelflow", "--metric", "/no/such/file.json"],
        ["orbit", "--c", "0"],
        ["plot", "figure2"],
    ],
)
def test_input_errors_exit_2(argv, capsys):
    assert run_cli(argv) == 2
    err = capsys.readouterr().err
    assert err.strip()


def test_orbit_text_and_json(capsys):
    assert run_cli(["orbit", "--c", "3", "--seed", "1"]) == 0
    text = capsys.readouterr().out
    assert text.count("  j=") == 3 and text.count("  k=") == 6
    tables = orbit_tables(3, 1)
    # q and -q (k and k + c) give the same point of ST S^2
    for row in tables["z2c_orbit"]:
        assert row["image_index"] == row["k"] % 3
    assert run_cli(["orbit", "--c", "2", "--format", "json"]) == 0
    assert len(json.loads(capsys.readouterr().out)["z2c_orbit"]) == 4


@pytest.mark.parametrize("c", [1, 2, 4, 6])
def test_figure1_slice_markers(c):
    root = ET.fromstring(figure1_svg(c, seed=2))
    assert root.tag == SVG_NS + "svg"
    markers = [e for e in root.iter(SVG_NS + "circle") if e.get("class") == "slice-point"]
    assert len(markers) == c
    assert len([e for e in root.iter(SVG_NS + "polyline") if e.get("class") == "geodesic"]) == c
    grid = [e for e in root.iter(SVG_NS + "circle") if e.get("class") == "grid"]
    inner = float(grid[0].get("r"))
    centre = float(grid[0].get("cx"))
    for m in markers:
        r = math.hypot(float(m.get("cx")) - centre, float(m.get("cy")) - centre)
        assert r == pytest.approx(inner, abs=0.02)


def test_plot_writes_file(tmp_path):
    out = tmp_path / "fig.svg"
    assert run_cli(["plot", "figure1", "--c", "4", "--out", str(out)]) == 0
    assert out.read_text() == figure1_svg(4, seed=0)
