import csv
import json
import subprocess
import sys

import pytest

from onesided.cli import main
from onesided.construction import dumps, loads


@pytest.fixture(scope="module")
def state_file(tmp_path_factory):
    p = tmp_path_factory.mktemp("cli") / "state.json"
    assert main(["construct", "--profile", "scaled", "--steps", "5", "--seed", "0", "--out", str(p)]) == 0
    return p


def _rows(path):
    with open(path) as fh:
        return list(csv.reader(line for line in fh if not line.startswith("#")))


def test_constants(tmp_path):
    out = tmp_path / "c.json"
    assert main(["constants", "--bits", "128", "--out", str(out)]) == 0
    d = json.loads(out.read_text())
    assert all(d["certificates"].values())


def test_construct_and_verify(state_file, tmp_path):
    text = state_file.read_text()
    assert dumps(loads(text)) == text
    rep = tmp_path / "rep.json"
    assert main(["verify", "--in", str(state_file), "--out", str(rep), "--lemma-samples", "20", "--lemma2-range", "50"]) == 0
    d = json.loads(rep.read_text())
    assert d["overall"] and d["conditions"]["overall"]
    assert d["profile_constants"]["theorem_exp"] == 31


def test_construct_is_reproducible(state_file, tmp_path):
    again = tmp_path / "again.json"
    main(["construct", "--profile", "scaled", "--steps", "5", "--seed", "0", "--out", str(again)])
    assert again.read_bytes() == state_file.read_bytes()


def test_tampered_file_fails(state_file, tmp_path, capsys):
    d = json.loads(state_file.read_text())
    d["steps"][2]["m"] = [str(2 * int(x)) for x in d["steps"][2]["m"]]
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(d))
    assert main(["verify", "--in", str(bad)]) == 1
    assert "condition i failed" in capsys.readouterr().err


def test_malformed_file(tmp_path):
    bad = tmp_path / "junk.json"
    bad.write_text("[1, 2")
    assert main(["verify", "--in", str(bad)]) == 1


def test_usage_errors(tmp_path, capsys):
    with pytest.raises(SystemExit) as e:
        main(["construct", "--steps", "many"])
    assert e.value.code == 2
    assert "--steps" in capsys.readouterr().err
    assert main(["verify", "--in", str(tmp_path / "missing.json")]) == 2
    assert main(["construct", "--e-gap", "200", "--e-M1", "10", "--out", str(tmp_path / "x.json")]) == 2
    assert main(["approx", "--alpha", "0.5", "nope"]) == 2


def test_scan_csv(state_file, tmp_path):
    out = tmp_path / "scan.csv"
    png = tmp_path / "scan.png"
    assert main(["scan", "--in", str(state_file), "--height-max", "2000", "--threads", "2",
                 "--out", str(out), "--plot", str(png)]) == 0
    text = out.read_text()
    assert text.startswith("# profile scaled")
    assert "2^-31" in text
    rows = _rows(out)
    assert rows[0] == ["m1", "m2", "height", "form_lo", "form_hi", "normalized_lo", "normalized_hi"]
    vals = [float(r[5]) for r in rows[1:]]
    assert vals == sorted(vals, reverse=True)
    assert png.stat().st_size > 0


def test_approx_outputs(tmp_path):
    out = tmp_path / "a.csv"
    gp = tmp_path / "a.gp"
    png = tmp_path / "a.png"
    assert main(["approx", "--fibonacci", "--height-max", "500", "--out", str(out), "--gnuplot", str(gp),
                 "--plot", str(png)]) == 0
    rows = _rows(out)
    assert [int(r[0]) + int(r[1]) for r in rows[1:6]] == [2, 3, 5, 8, 13]
    assert "plot" in gp.read_text()
    assert png.stat().st_size > 0


def test_plots(state_file, tmp_path):
    p1, p2 = tmp_path / "c.png", tmp_path / "v.png"
    assert main(["construct", "--steps", "3", "--out", str(tmp_path / "s.json"), "--plot", str(p1)]) == 0
    assert main(["verify", "--in", str(state_file), "--plot", str(p2), "--out", str(tmp_path / "r.json")]) == 0
    assert p1.stat().st_size > 0 and p2.stat().st_size > 0


def test_module_entry_point(tmp_path):
    out = tmp_path / "c.json"
    r = subprocess.run([sys.executable, "-m", "onesided", "constants", "--bits", "64", "--out", str(out)],
                       capture_output=True, text=True)
    assert r.returncode == 0, r.stderr
    assert json.loads(out.read_text())["bits"] == 64
