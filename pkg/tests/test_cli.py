import csv
import io
import json

import pytest

from pathgroup.cli import CSV_HEADERS, SCHEMA, main, parse_bound


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_parse_bound():
    assert parse_bound("2pi*1.5") == pytest.approx(3 * 3.141592653589793)
    assert parse_bound("0.25") == 0.25


def test_geodesics_default_and_wider_bound(capsys):
    code, out, _ = run(capsys, "geodesics")
    doc = json.loads(out)
    assert code == 0 and doc["schema"] == SCHEMA
    rows = doc["result"]["rows"]
    assert [r["k"] for r in rows] == [[0, 0], [-1, 1]]
    assert rows[0]["norm"] == pytest.approx(1.3328648814475097, rel=1e-12)
    code, out, _ = run(capsys, "geodesics", "--bound", "2pi*1.7")
    assert len(json.loads(out)["result"]["rows"]) == 3


def test_geodesics_zero_bound_is_empty(capsys):
    code, out, _ = run(capsys, "geodesics", "--bound", "0")
    assert code == 0 and json.loads(out)["result"]["rows"] == []


def test_cut_locus_exit(capsys):
    code, out, err = run(capsys, "geodesics", "--theta", "1/2")
    assert code == 3 and out == ""
    doc = json.loads(err)
    assert doc["exit_code"] == 3 and doc["schema"] == SCHEMA


def test_sigma_json_and_csv(capsys):
    code, out, _ = run(capsys, "sigma", "--ks=0,-1,1", "--R", "0.9", "--r", "0.05")
    items = json.loads(out)["result"]["items"]
    assert code == 0
    assert [it["value"] for it in items[:2]] == pytest.approx([0.0, 0.7])
    code, out, _ = run(capsys, "sigma", "--format", "csv")
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == CSV_HEADERS["sigma"]
    assert [float(r[2]) for r in rows[1:3]] == pytest.approx([0.0, 0.7])
    assert sum(int(r[3]) for r in rows[1:]) == 7


def test_spectrum_negative_R(capsys):
    code, _, err = run(capsys, "spectrum", "--R", "-1")
    assert code == 2 and json.loads(err)["error"] == "BadArgsError"


def test_prime_check_passes(capsys):
    code, out, _ = run(capsys, "prime-check", "--k", "0", "--M", "1", "--p", "5")
    doc = json.loads(out)["result"]
    assert code == 0 and doc["status"] == "PASS"
    assert [r["l"] for r in doc["rows"]] == [-2, -1, 0, 1, 2]


def test_simulate_deterministic_and_passing(capsys):
    argv = ("simulate", "--level", "12", "--paths", "20", "--seed", "7")
    c1, a, _ = run(capsys, *argv)
    c2, b, _ = run(capsys, *argv)
    assert c1 == c2 == 0 and a == b
    assert json.loads(a)["result"]["all_pass"]


def test_simulate_zero_paths(capsys):
    code, out, _ = run(capsys, "simulate", "--paths", "0")
    res = json.loads(out)["result"]
    assert code == 0 and res["checks"] == [] and res["paths"] == 0


def test_simulate_csv_header(capsys):
    code, out, _ = run(capsys, "simulate", "--level", "8", "--paths", "2", "--format", "csv")
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == CSV_HEADERS["simulate"] and len(rows) == 6
    # at level 8 the K/b gap sits above 1e-3, which is a failed check, not an abort
    b = next(r for r in rows if r[0] == "b")
    assert code == 1 and b[1] == "False"


@pytest.mark.parametrize(
    "argv",
    [
        ("verify", "nonsense"),
        ("simulate", "--level", "3"),
        ("simulate", "--level", "21"),
        ("simulate", "--checks", "chen,bogus"),
        ("simulate", "--level", "6", "--paths", "1"),
        ("spectrum", "--theta", "abc"),
        ("geodesics", "--seed", "-1"),
    ],
)
def test_bad_args_exit_2(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 2
    assert json.loads(err.strip().splitlines()[-1])["exit_code"] == 2


def test_verify_ou(capsys):
    code, out, _ = run(capsys, "verify", "ou")
    res = json.loads(out)["result"]
    assert code == 0 and res["status"] == "PASS"
    assert all(r["lemma"] == "ou" for r in res["rows"])


def test_config_file_and_flag_precedence(tmp_path, capsys):
    conf = tmp_path / "run.conf"
    conf.write_text("# sample\nR = 0.5\nr=0.1\n")
    code, out, _ = run(capsys, "sigma", "--config", str(conf))
    assert code == 0 and json.loads(out)["result"]["R"] == 0.5
    code, out, _ = run(capsys, "sigma", "--config", str(conf), "--R", "0.9")
    assert json.loads(out)["result"]["R"] == 0.9
    conf.write_text("bogus = 1\n")
    code, _, _ = run(capsys, "sigma", "--config", str(conf))
    assert code == 2
    code, _, _ = run(capsys, "sigma", "--config", str(tmp_path / "missing"))
    assert code == 2


def test_out_file(tmp_path, capsys):
    dest = tmp_path / "g.json"
    code, out, _ = run(capsys, "geodesics", "--out", str(dest))
    assert code == 0 and out == ""
    assert json.loads(dest.read_text())["command"] == "geodesics"


def test_n3_geodesics(capsys):
    code, out, _ = run(capsys, "geodesics", "--n", "3", "--thetas", "1/10,1/5,-3/10", "--bound", "2pi*0.6")
    assert code == 0 and len(json.loads(out)["result"]["rows"]) >= 1
    code, _, _ = run(capsys, "geodesics", "--n", "3")
    assert code == 2
