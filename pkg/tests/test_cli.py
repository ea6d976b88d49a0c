import json

import pytest

from plgraph.cli import main


@pytest.fixture
def degfile(tmp_path):
    def write(*degrees):
        f = tmp_path / "deg.txt"
        f.write_text("# test sequence\n" + " ".join(map(str, degrees)) + "\n")
        return str(f)
    return write


def test_params_prints_moments(degfile, capsys):
    assert main(["params", "--degrees", degfile(3, 2, 2, 1), "--gamma", "2.9"]) == 0
    out = capsys.readouterr().out
    assert "M_1 8 " in out and "M_2 10 " in out and "M_3 6 " in out
    assert "xi_eff" in out and "plib_check" in out


def test_generate_simple_triangle(degfile, tmp_path, capsys):
    stats = tmp_path / "stats.json"
    assert main(["generate", "--degrees", degfile(2, 2, 2), "--mode", "simple", "--samples", "3",
                 "--seed", "5", "--stats", str(stats)]) == 0
    out = capsys.readouterr().out
    blocks = out.split("---\n")
    assert len(blocks) == 3
    assert all(b == "# 3 3 5\n1 2\n1 3\n2 3\n" for b in blocks)
    data = json.loads(stats.read_text())
    assert data["wall_time"] is None and data["iterations"]["simple"] >= 3


def test_empty_delta_window_exit(degfile, capsys):
    assert main(["params", "--degrees", degfile(3, 2, 2, 1), "--gamma", "2.8"]) == 3


def test_validation_exit(degfile, capsys):
    assert main(["params", "--degrees", degfile(3, 1, 1), "--gamma", "2.9"]) == 2
    assert main(["params", "--gamma", "2.9"]) == 2


def test_missing_file_exit(tmp_path, capsys):
    assert main(["params", "--degrees", str(tmp_path / "none.txt"), "--gamma", "2.9"]) == 1


def test_budget_exit(degfile, capsys):
    code = main(["generate", "--degrees", degfile(3, 3, 3, 3), "--mode", "simple", "--samples", "30",
                 "--max-restarts", "0"])
    assert code == 4


def test_rho_dump(degfile, capsys):
    assert main(["rho", "--degrees", degfile(3, 2, 2, 2, 1), "--gamma", "2.9"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "i x rho_I rho_III"
    assert lines[1].split()[0] == "0"


def test_uniformity_command(degfile, capsys):
    assert main(["uniformity", "--degrees", degfile(2, 2, 1, 1), "--mode", "simple",
                 "--samples", "2000"]) == 0
    out = capsys.readouterr().out
    assert "graphs 2" in out and "chi2" in out


def test_uniformity_too_few_samples(degfile, capsys):
    assert main(["uniformity", "--degrees", degfile(2, 2, 1, 1), "--mode", "simple", "--samples", "5"]) == 2


def test_bench_csv(tmp_path, capsys):
    out = tmp_path / "bench.csv"
    assert main(["bench", "--gamma", "2.9", "--samples", "2", "--out", str(out), "500", "1000"]) == 0
    rows = out.read_text().splitlines()
    assert rows[0] == "n,wall_time,restarts" and len(rows) == 5
