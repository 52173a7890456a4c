import csv
import json
import subprocess
import sys

import pytest

from spraylab.cli import dumps, main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_list_includes_catalog(capsys):
    code, out, _ = run(capsys, "list")
    assert code == 0
    for name in ("flat", "hyperbolic_ball", "semicircle", "circles", "ball_arcs"):
        assert name in out


def test_list_json_and_filter(capsys):
    code, out, _ = run(capsys, "list", "--json")
    data = json.loads(out)
    assert data["strategies"] == ["ln-left", "ln-right", "ln-two-sided", "tan-two-sided"]
    code, out, _ = run(capsys, "list", "sprays", "--json")
    assert json.loads(out) == sorted(json.loads(out)) and "funk_log" in json.loads(out)


def test_eval_json(capsys):
    code, out, _ = run(capsys, "eval", "--spray", "hyperbolic_ball", "--x", "0.5,0", "--y", "0,1", "--json")
    assert code == 0
    assert json.loads(out)["G"] == pytest.approx([-2 / 3, 0.0], abs=1e-15)


def test_negative_vector_arguments(capsys):
    code, out, _ = run(capsys, "eval", "--spray", "semicircle", "--x", "-1,1", "--y", "-1,0", "--json")
    assert code == 0
    assert json.loads(out)["G"] == pytest.approx([0.0, 0.5])


def test_geodesic_csv_rows(tmp_path, capsys):
    code, out, _ = run(capsys, "geodesic", "--spray", "flat", "--x", "0,0", "--y", "1,0", "--t-end", "0.5", "--out", str(tmp_path))
    assert code == 0
    with open(tmp_path / "trajectory.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert rows[-1]["t"] == "0.5"
    assert all(float(r["x1"]) == pytest.approx(float(r["t"]), abs=1e-12) for r in rows)
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["max_residual"] <= 1e-12


def test_geodesic_semicircle_summary(capsys):
    code, out, _ = run(capsys, "geodesic", "--spray", "semicircle", "--x", "0,1", "--y", "1,0", "--json")
    assert json.loads(out)["max_residual"] <= 1e-8


def test_geodesic_funk_quarter_forward_is_finite(capsys):
    code, out, _ = run(
        capsys, "geodesic", "--spray", "funk_scaled", "--param", "c=0.25", "--x", "0.1,0", "--y", "1,0", "--json"
    )
    assert json.loads(out)["right_status"] in ("blowup", "domain_exit")


def test_config_file(tmp_path, capsys):
    cfg = {"spray": {"label": "flat_ball"}, "initial": {"x": [0.5, 0], "y": [1, 0]}}
    path = tmp_path / "run.json"
    path.write_text(json.dumps(cfg))
    code, out, _ = run(capsys, "probe", "--config", str(path), "--json")
    rec = json.loads(out)
    assert (rec["a"], rec["b"]) == pytest.approx((-1.5, 0.5), rel=1e-9)


def test_construct_and_complete(capsys):
    code, out, _ = run(capsys, "eval", "--spray", "pathspace:semicircles", "--x", "0.2,0.8", "--y", "1,0.3", "--json")
    assert code == 0
    code, out, _ = run(capsys, "complete", "--spray", "flat_ball", "--strategy", "ln-right", "--x", "0,0", "--y", "1,0", "--json")
    assert code == 0
    code, out, _ = run(capsys, "construct", "--family", "semicircles", "--roundtrip", "--json")
    assert code == 0


def test_curvature_and_classify(capsys):
    code, out, _ = run(capsys, "curvature", "--spray", "hyperbolic_ball", "--x", "0,0", "--y", "1,0", "--json")
    assert json.loads(out)["ric"] == pytest.approx(-3.0, abs=1e-6)
    code, out, _ = run(
        capsys, "classify", "--spray", "flat_ball", "--factor", "funk", "--factor-param", "c=0.5",
        "--x", "0,0", "--y", "1,0", "--t-end", "0.9", "--clock", "--json",
    )
    assert code == 0


@pytest.mark.parametrize(
    "argv, code",
    [
        (["eval", "--spray", "nope", "--x", "0,0", "--y", "1,0"], 2),
        (["eval", "--spray", "flat", "--param", "c=1", "--x", "0,0", "--y", "1,0"], 2),
        (["eval", "--spray", "flat_ball", "--x", "2,0", "--y", "1,0"], 3),
        (["eval", "--spray", "flat", "-n", "3", "--x", "0,0", "--y", "1,0"], 3),
        (["eval", "--config", "/nonexistent/run.json"], 5),
        (["complete", "--spray", "funk_scaled", "--param", "c=0.5", "--strategy", "ln-two-sided", "--x", "0.1,0", "--y", "1,0"], 4),
    ],
)
def test_exit_codes(argv, code, capsys):
    got, _, err = run(capsys, *argv)
    assert got == code
    assert "Traceback" not in err


def test_unknown_config_key(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"spray": "flat", "colour": "red"}))
    assert run(capsys, "eval", "--config", str(path))[0] == 2


def test_verify_single_suite(capsys):
    code, out, _ = run(capsys, "verify", "curvature", "--json")
    assert code == 0
    assert json.loads(out)["passed"]


def test_deterministic_reports(capsys):
    argv = ["classify", "--spray", "sphere_proj", "--factor", "sphere_proj", "--x", "0.3,0.2", "--y", "1,-0.4", "--json"]
    first = run(capsys, *argv)[1]
    second = run(capsys, *argv)[1]
    assert first == second


def test_dumps_shortest_floats_and_nonfinite():
    assert dumps({"b": 0.1, "a": float("inf")}) == '{\n  "a": "inf",\n  "b": 0.1\n}'


def test_console_entry_point():
    out = subprocess.run([sys.executable, "-m", "spraylab.cli", "list", "families"], capture_output=True, text=True)
    assert out.returncode == 0 and "ball_arcs" in out.stdout
