import subprocess
import sys

import pytest

from conftest import FOUR_TREES
from treechild.cli import main


@pytest.fixture
def four_trees_file(tmp_path):
    path = tmp_path / "four.nwk"
    path.write_text(FOUR_TREES.replace(" ", "\n") + "\n")
    return path


def test_solve_four_trees(four_trees_file, capsys):
    assert main(["solve", str(four_trees_file)]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "h_tc: 3"
    assert out[-2].endswith(",-)")
    assert out[-1].startswith("network: ") and out[-1].endswith(";")
    assert len(out) == 1 + 5 + 3 + 1


def test_solve_max_k_too_small(four_trees_file, capsys):
    assert main(["solve", "--max-k", "2", str(four_trees_file)]) == 1
    captured = capsys.readouterr()
    assert captured.out == ""
    assert captured.err.strip() == "no tree-child solution with k <= 2"


@pytest.mark.parametrize("flags", [["--no-rbe"], ["--no-clusters"], ["-p", "4", "-w", "5"], ["--seed", "3"]])
def test_solve_flags(four_trees_file, capsys, flags):
    assert main(["solve", *flags, str(four_trees_file)]) == 0
    assert capsys.readouterr().out.startswith("h_tc: 3\n")


def test_time_limit_exit_code(tmp_path, capsys):
    path = tmp_path / "g.nwk"
    assert main(["generate", "-n", "14", "-k", "7", "-t", "6", "--seed", "7", "-o", str(path)]) == 0
    code = main(["solve", "--no-clusters", "--time-limit", "0.0001", "-w", "1", str(path)])
    assert code == 3
    assert "time limit" in capsys.readouterr().err


@pytest.mark.parametrize("text", ["((a,b,c),d);\n", "((a,b),(c,d);\n", "((a,b),c);\n((a,b),d);\n", ""])
def test_input_errors(tmp_path, capsys, text):
    path = tmp_path / "bad.nwk"
    path.write_text(text)
    assert main(["solve", str(path)]) == 2
    captured = capsys.readouterr()
    assert captured.out == "" and captured.err


def test_missing_file(capsys):
    assert main(["solve", "/nonexistent/x.nwk"]) == 2
    assert "cannot read" in capsys.readouterr().err


def test_unknown_flag(four_trees_file, capsys):
    assert main(["solve", "--bogus", str(four_trees_file)]) == 2


def test_stdin(monkeypatch, capsys):
    import io
    monkeypatch.setattr(sys, "stdin", io.StringIO("((a,b),c);\n((a,c),b);\n"))
    assert main(["solve", "-"]) == 0
    assert capsys.readouterr().out.startswith("h_tc: 1\n")


def test_generate(capsys):
    assert main(["generate", "-n", "20", "-k", "5", "-t", "10", "--seed", "7"]) == 0
    lines = capsys.readouterr().out.splitlines()
    trees, sidecar = lines[:-1], lines[-1]
    assert 1 <= len(trees) <= 10 and len(set(trees)) == len(trees)
    assert sidecar.startswith("# generator_reticulations: ")
    assert int(sidecar.split(":")[1]) <= 5


def test_generate_then_solve(tmp_path, capsys):
    path = tmp_path / "g.nwk"
    assert main(["generate", "-n", "8", "-k", "2", "-t", "3", "--seed", "11", "-o", str(path)]) == 0
    bound = int(path.read_text().splitlines()[-1].split(":")[1])
    assert main(["solve", str(path)]) == 0
    assert int(capsys.readouterr().out.splitlines()[0].split(":")[1]) <= bound


def test_solve_output_verifies(four_trees_file, tmp_path, capsys):
    sol = tmp_path / "sol.txt"
    assert main(["solve", str(four_trees_file), "-o", str(sol)]) == 0
    assert main(["verify", str(four_trees_file), "--sequence", str(sol)]) == 0
    out = capsys.readouterr().out
    assert "valid: yes" in out and "weight: 3" in out
    assert main(["verify", str(four_trees_file), "--network", str(sol)]) == 0
    out = capsys.readouterr().out
    assert "reticulations: 3" in out and out.count("displayed") == 4 and "not displayed" not in out


def test_verify_rejects_bad_sequence(four_trees_file, tmp_path, capsys):
    seq = tmp_path / "seq.txt"
    seq.write_text("(a,b)\n(b,-)\n")
    assert main(["verify", str(four_trees_file), "--sequence", str(seq)]) == 1
    assert "valid: no" in capsys.readouterr().out


def test_verify_network_not_displaying(four_trees_file, tmp_path, capsys):
    net = tmp_path / "net.enwk"
    net.write_text("(((a,b),e),(c,d));\n")
    assert main(["verify", str(four_trees_file), "--network", str(net)]) == 1
    assert "not displayed" in capsys.readouterr().out


def test_oracle(four_trees_file, capsys):
    assert main(["oracle", "--max-k", "3", str(four_trees_file)]) == 0
    assert capsys.readouterr().out.startswith("h_tc: 3\n")
    assert main(["oracle", "--max-k", "2", str(four_trees_file)]) == 1


def test_stats(four_trees_file, capsys):
    assert main(["stats", str(four_trees_file)]) == 0
    assert capsys.readouterr().out.splitlines() == [
        "n: 5", "t: 4", "unique_cherries: 5", "trivial_cherries: 0", "clusters: 5",
    ]


def test_console_script(four_trees_file):
    res = subprocess.run([sys.executable, "-m", "treechild.cli", "solve", str(four_trees_file)],
                         capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.startswith("h_tc: 3")
