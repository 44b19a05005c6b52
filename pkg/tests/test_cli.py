import json
import math

import numpy as np
import pytest

from fracskellam import cli
from fracskellam.cli import main, read_path_csv, read_pmf_csv

TINY = """\
[experiment]
seed = 5
workers = 1

[check rec]
kind = recurrence
family = skellam
lambda = 1, 2
mu = 0.5, 1
"""


def test_simulate_writes_paths_and_manifest(tmp_path):
    out = tmp_path / "run"
    argv = ["simulate", "--alpha", "0.6", "--beta", "0.7", "--lambda", "1,2", "--mu", "0.5,0.5",
            "--t-max", "1", "--h", "0.1", "--n-paths", "3", "--seed", "9", "--out", str(out)]
    assert main(argv) == 0
    t, v = read_path_csv(out / "path_0002.csv")
    np.testing.assert_allclose(t, np.linspace(0, 1, 11))
    assert v.dtype == np.int64 and v[0] == 0
    m = json.loads((out / "manifest.json").read_text())
    assert {"spec", "grid", "seed", "version", "build", "command", "n_paths"} <= set(m)
    assert m["seed"] == 9 and m["spec"]["alpha"] == 0.6 and m["grid"]["points"] == 11
    again = tmp_path / "again"
    assert main(argv[:-1] + [str(again)]) == 0
    for i in range(3):
        assert (out / f"path_{i:04d}.csv").read_bytes() == (again / f"path_{i:04d}.csv").read_bytes()


def test_simulate_json_format(tmp_path):
    assert main(["simulate", "--family", "counting", "--t-max", "1", "--h", "0.5", "--format", "json", "--out", str(tmp_path)]) == 0
    data = json.loads((tmp_path / "path_0000.json").read_text())
    assert data["t"] == [0.0, 0.5, 1.0] and data["value"][0] == 0


def test_zero_paths_still_writes_a_manifest(tmp_path):
    assert main(["simulate", "--n-paths", "0", "--t-max", "1", "--h", "0.5", "--out", str(tmp_path)]) == 0
    assert [p.name for p in tmp_path.iterdir()] == ["manifest.json"]


@pytest.mark.parametrize(
    "argv",
    [
        ["simulate", "--wobble"],
        ["simulate", "--alpha", "fast"],
        ["simulate", "--alpha", "1.5"],
        ["simulate", "--n-paths", "-1"],
        ["simulate", "--h", "0.3", "--t-max", "1"],
        ["pmf", "--lambda", "1,x"],
        ["pmf", "--n-min", "3", "--n-max", "1"],
        ["moments", "--beta", "0.5"],
        ["pgf", "--beta", "0.5", "--clock", "independent", "--u", "0.5"],
        ["tails"],
        ["unknown-command"],
        [],
    ],
)
def test_usage_errors_exit_2(argv, capsys, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert main(argv) == 2
    assert capsys.readouterr().err


def test_io_errors_exit_3(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert main(["simulate", "--t-max", "1", "--h", "0.5", "--out", str(blocker / "sub")]) == 3
    assert main(["pmf", "--out", str(blocker / "pmf.csv")]) == 3
    assert main(["validate", "--config", str(tmp_path / "missing.ini")]) == 3


def test_pmf_time_zero_is_a_point_mass(capsys):
    assert main(["pmf", "--alpha", "0.6", "--beta", "0.7", "--t", "0", "--n-min", "-2", "--n-max", "2"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "n,probability,truncation_bound"
    assert [float(l.split(",")[1]) for l in lines[1:]] == [0.0, 0.0, 1.0, 0.0, 0.0]


def test_pmf_csv_round_trip(tmp_path):
    path = tmp_path / "pmf.csv"
    assert main(["pmf", "--lambda", "1", "--mu", "0.5", "--n-min", "-5", "--n-max", "5", "--out", str(path)]) == 0
    rows = read_pmf_csv(path)
    direct = cli.pmf_rows(cli._spec(cli.build_parser().parse_args(["pmf", "--lambda", "1", "--mu", "0.5"])), 1.0, -5, 5, "exact")
    assert rows == direct


def test_pmf_counting_negative_states_are_zero(capsys):
    assert main(["pmf", "--family", "counting", "--n-min", "-2", "--n-max", "1", "--format", "json"]) == 0
    data = json.loads(capsys.readouterr().out)
    probs = [r["probability"] for r in data["rows"]]
    assert probs[:2] == [0.0, 0.0] and probs[2] == pytest.approx(math.exp(-1.0))


def test_pgf_moments_and_tails_commands(capsys):
    assert main(["pgf", "--u", "0.5"]) == 0
    assert float(capsys.readouterr().out.splitlines()[1].split(",")[1]) == pytest.approx(math.exp(0.5))
    assert main(["moments", "--lambda", "2", "--mu", "0.5", "--t", "3"]) == 0
    row = capsys.readouterr().out.splitlines()[1].split(",")
    assert float(row[2]) == pytest.approx(4.5) and float(row[3]) == pytest.approx(7.5)
    assert main(["tails", "--family", "counting", "--beta", "0.5", "--x", "100"]) == 0
    row = capsys.readouterr().out.splitlines()[1].split(",")
    assert float(row[1]) == pytest.approx(0.1 / math.sqrt(math.pi))


def test_validate_unknown_kind_exits_2_with_line(tmp_path, capsys):
    cfg = tmp_path / "bad.ini"
    cfg.write_text("[experiment]\nseed = 1\n\n[check x]\nkind = telepathy\n")
    assert main(["validate", "--config", str(cfg), "--out", str(tmp_path / "r")]) == 2
    assert "line 5" in capsys.readouterr().err


def test_validate_pass_and_fail_exit_codes(tmp_path):
    good = tmp_path / "good.ini"
    good.write_text(TINY)
    assert main(["validate", "--config", str(good), "--out", str(tmp_path / "a")]) == 0
    bad = tmp_path / "bad.ini"
    bad.write_text(TINY + "threshold = 1e-30\n")
    assert main(["validate", "--config", str(bad), "--out", str(tmp_path / "b")]) == 1
    assert "FAIL" in (tmp_path / "b" / "reports.txt").read_text()


def test_validate_is_byte_reproducible(tmp_path):
    cfg = tmp_path / "c.ini"
    cfg.write_text(TINY + "\n[check fm]\nkind = fractional_moment\nfamily = counting\nn = 2000\n")
    for name in ("a", "b"):
        assert main(["validate", "--config", str(cfg), "--seed", "3", "--out", str(tmp_path / name)]) == 0
    for f in ("reports.jsonl", "reports.txt"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()
    assert json.loads((tmp_path / "a" / "reports.jsonl").read_text().splitlines()[0])["seed"] == 3


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
    assert capsys.readouterr().out.startswith("fracskellam ")
