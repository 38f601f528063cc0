import csv
import filecmp
import json
import math
import os

import pytest

from oscilla.cli import main, parse_grid

HERE = os.path.dirname(__file__)
CONFIGS = os.path.join(HERE, os.pardir, "configs")


def cfg(name):
    return os.path.join(CONFIGS, name)


def read(path):
    with open(path) as fh:
        return list(csv.reader(fh))


def test_solve_writes_track_and_zeros(tmp_path):
    assert main(["solve", "--config", cfg("euler.ini"), "--out", str(tmp_path)]) == 0
    track = read(tmp_path / "track.csv")
    assert track[0] == ["t", "z", "flux", "y", "is_near_zero"]
    zeros = read(tmp_path / "zeros.csv")
    assert zeros[0] == ["index", "location", "bracket_width", "ratio"]
    ratios = [float(r[3]) for r in zeros[2:]]
    assert len(ratios) >= 4
    assert all(abs(r - math.exp(2 * math.pi / math.sqrt(3))) < 1e-4 for r in ratios)
    assert (tmp_path / "track.png").exists()


def test_critical_and_criteria(tmp_path):
    assert main(["critical", "--config", cfg("exponential.ini"), "--out", str(tmp_path)]) == 0
    rows = read(tmp_path / "critical.csv")
    assert rows[0] == ["t", "chi", "chi_f", "chi_tilde_f", "tail_integral"]
    assert all(abs(float(r[1]) - 0.25) < 1e-12 for r in rows[1:])
    assert main(["criteria", "--config", cfg("exponential.ini"), "--out", str(tmp_path),
                 "--no-figures"]) == 0
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["oscillation"]["verdict"] == "holds"
    assert read(tmp_path / "running.csv")[0][:2] == ["t", "int_sqrt_A"]
    assert not (tmp_path / "running.png").exists()


def test_gaps_columns(tmp_path):
    assert main(["gaps", "--config", cfg("exponential.ini"), "--out", str(tmp_path),
                 "--no-figures"]) == 0
    rows = read(tmp_path / "gaps.csv")
    assert rows[0] == ["tau", "T1", "T2", "ratio", "g3", "g1", "g2", "g3p", "g1p", "g2p",
                       "bound"]
    assert all(float(r[10]) == 9.0 for r in rows[1:])


def test_spectral_constant_column(tmp_path):
    assert main(["spectral", "--config", cfg("superexp.ini"), "--out", str(tmp_path)]) == 0
    rows = read(tmp_path / "spectral.csv")
    assert rows[0] == ["R", "lower", "upper", "fd", "constant", "c_star"]
    for r in rows[1:]:
        assert float(r[4]) == 0.25 and float(r[1]) == 0.25
        assert abs(float(r[2]) - 0.25) < 0.0125
    assert (tmp_path / "spectral.png").exists()


def test_outputs_are_reproducible(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["gaps", "--config", cfg("exponential.ini"), "--out", str(a),
                 "--no-figures"]) == 0
    assert main(["gaps", "--config", cfg("exponential.ini"), "--out", str(b), "--threads", "4",
                 "--no-figures"]) == 0
    assert filecmp.cmp(a / "gaps.csv", b / "gaps.csv", shallow=False)


def test_negative_tolerance_is_a_config_error(tmp_path, capsys):
    p = tmp_path / "bad.ini"
    p.write_text("[coefficient]\nfamily = euclidean\nm = 3\n\n[potential]\nkind = zero\n\n"
                 "[solve]\nhorizon = 10\nrtol = -1e-8\n")
    assert main(["solve", "--config", str(p), "--out", str(tmp_path)]) != 0
    err = capsys.readouterr().err
    assert "bad.ini:10" in err and "rtol" in err


def test_malformed_and_missing_config(tmp_path, capsys):
    p = tmp_path / "broken.ini"
    p.write_text("[coefficient\nfamily = euclidean\n")
    assert main(["solve", "--config", str(p)]) != 0
    assert "config error" in capsys.readouterr().err
    assert main(["solve", "--config", str(tmp_path / "nope.ini")]) != 0
    p.write_text("[coefficient]\nfamily = table\ntable = missing.csv\n")
    assert main(["critical", "--config", str(p)]) != 0
    assert "missing.csv" in capsys.readouterr().err


def test_table_config(tmp_path):
    (tmp_path / "v.csv").write_text("# volume\n0 0\n1 1\n2 4\n3 9\n4 16\n")
    p = tmp_path / "t.ini"
    p.write_text("[coefficient]\nfamily = table\ntable = v.csv\n\n[critical]\ngrid = 1, 2, 3\n")
    assert main(["critical", "--config", str(p), "--out", str(tmp_path), "--no-figures"]) == 0
    rows = read(tmp_path / "critical.csv")
    # 1/v is integrable on the bounded table domain, so the tail ends at t = 4
    assert float(rows[1][4]) > 0


def test_parse_grid():
    assert list(parse_grid("1, 2, 3")) == [1.0, 2.0, 3.0]
    assert len(parse_grid("geom:1:100:5")) == 5
    for bad in ("", "3, 2", "geom:0:1:3", "lin:1:2"):
        with pytest.raises(ValueError):
            parse_grid(bad)
