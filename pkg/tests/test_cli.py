import csv
import json
import shutil
from pathlib import Path

import pytest

from tlab.cli import main
from tlab.scenario import nested_pair, save_scenario, two_lines

FAST = ["--steps", "2", "--samples", "100"]


@pytest.fixture
def lines60(tmp_path):
    import math
    path = tmp_path / "two-lines-60.json"
    save_scenario(two_lines(math.pi / 3, seed=12), path)
    return path


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_estimate_writes_all_constants(lines60, tmp_path, capsys):
    out = tmp_path / "est"
    assert main(["estimate", "--scenario", str(lines60), "--out", str(out), *FAST]) == 0
    rows = _rows(out / "constants.csv")
    names = {r["name"] for r in rows}
    assert names == {"str", "tr", "itr", "strc", "itr1", "itr2", "itr3", "itrhat1", "itrhat2"}
    assert list(rows[0]) == ["name", "rho", "value", "samples", "seed", "flag"]
    report = json.loads((out / "report.json").read_text())
    assert report["constants"]["itrhat1"]["value"] == pytest.approx(0.5, abs=0.02)
    meta = json.loads((out / "metadata.json").read_text())
    assert meta["command"] == "estimate" and "timestamp" in meta
    assert "itrhat1" in capsys.readouterr().out


def test_estimate_nested_flags_no_witness(tmp_path):
    path = tmp_path / "nested.json"
    save_scenario(nested_pair(), path)
    out = tmp_path / "est"
    assert main(["estimate", "--scenario", str(path), "--out", str(out), *FAST]) == 0
    itr = [r for r in _rows(out / "constants.csv") if r["name"] == "itr"]
    assert itr and all(float(r["value"]) == 1.0 and r["flag"] == "NoWitness" for r in itr)


def test_missing_file_exit_2(tmp_path, capsys):
    assert main(["estimate", "--scenario", str(tmp_path / "nope.json"), "--out", str(tmp_path)]) == 2
    assert "error" in capsys.readouterr().err


def test_bad_samples_exit_2(lines60, tmp_path):
    assert main(["estimate", "--scenario", str(lines60), "--out", str(tmp_path), "--samples", "10"]) == 2


def test_malformed_scenario_exit_2(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"set_a": {"kind": "ball"}}))
    assert main(["estimate", "--scenario", str(path), "--out", str(tmp_path)]) == 2


def test_altproj_two_lines(lines60, tmp_path, capsys):
    out = tmp_path / "ap"
    assert main(["altproj", "--scenario", str(lines60), "--out", str(out), "--x0", "1,0"]) == 0
    rows = _rows(out / "trace.csv")
    cyc1 = rows[2]
    assert (cyc1["cycle"], cyc1["half_step"]) == ("1", "2")
    assert float(cyc1["x0"]) == pytest.approx(0.25, abs=1e-15)
    assert float(cyc1["x1"]) == pytest.approx(0.0, abs=1e-15)
    term = json.loads((out / "termination.json").read_text())
    assert term["reason"] == "Converged"
    assert term["rate"]["rate_c"] == pytest.approx(0.25, abs=0.02)
    assert "rate per cycle 0.25" in capsys.readouterr().out


def test_altproj_start_in_intersection(lines60, tmp_path):
    out = tmp_path / "ap"
    assert main(["altproj", "--scenario", str(lines60), "--out", str(out), "--x0", "0,0"]) == 0
    term = json.loads((out / "termination.json").read_text())
    assert term["reason"] == "Converged" and term["cycles"] == 0


def test_altproj_stall(tmp_path, capsys):
    src = Path(__file__).parents[1] / "battery" / "08-stall.json"
    out = tmp_path / "ap"
    assert main(["altproj", "--scenario", str(src), "--out", str(out)]) == 0
    term = json.loads((out / "termination.json").read_text())
    assert term["reason"] == "Stalled"
    assert term["stall"]["p"] == [5.0, 1.0] and term["stall"]["q"] == [5.0, 0.0]
    assert "stationary pair" in capsys.readouterr().out
    assert main(["altproj", "--scenario", str(src), "--out", str(out), "--rate"]) == 3


def test_altproj_bad_x0(lines60, tmp_path):
    assert main(["altproj", "--scenario", str(lines60), "--out", str(tmp_path), "--x0", "1,0,0"]) == 2
    assert main(["altproj", "--scenario", str(lines60), "--out", str(tmp_path), "--x0", "a,b"]) == 2


def test_suite_empty_directory_exit_2(tmp_path):
    empty = tmp_path / "empty"
    empty.mkdir()
    assert main(["suite", "--battery", str(empty), "--out", str(tmp_path / "o")]) == 2


def test_suite_corrupted_intersection_exit_1(lines60, tmp_path, capsys):
    bat = tmp_path / "bat"
    bat.mkdir()
    d = json.loads(lines60.read_text())
    d["intersection"] = {"kind": "points", "points": [[0.0, 0.0], [0.3, 0.2]]}
    (bat / "00-corrupt.json").write_text(json.dumps(d))
    rc = main(["suite", "--battery", str(bat), "--out", str(tmp_path / "o"), *FAST])
    assert rc == 1
    err = capsys.readouterr().err
    assert "scenario.intersection_consistent" in err


def test_battery_command(tmp_path):
    out = tmp_path / "bat"
    assert main(["battery", "--out", str(out)]) == 0
    shipped = Path(__file__).parents[1] / "battery"
    names = sorted(p.name for p in out.glob("*.json"))
    assert names == sorted(p.name for p in shipped.glob("*.json"))
    for n in names:
        assert (out / n).read_bytes() == (shipped / n).read_bytes()


def test_verify_command(lines60, tmp_path):
    out = tmp_path / "v"
    assert main(["verify", "--scenario", str(lines60), "--out", str(out), *FAST]) == 0
    rep = json.loads((out / "report.json").read_text())
    assert rep["report"]["overall"] is True


def test_console_script_entry_point(tmp_path):
    exe = shutil.which("tlab")
    if exe is None:
        pytest.skip("console script not installed")
    import subprocess
    res = subprocess.run([exe, "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and "tlab" in res.stdout
