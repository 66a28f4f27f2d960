import re
import subprocess
import sys

import pytest

from renewalctl.cli import EXIT_IO, EXIT_MISMATCH, EXIT_OK, EXIT_PARSE, main
from renewalctl.polyfit import ProfitPolynomial, evaluate
from renewalctl.scenario_file import preset_text


def test_solve_zero_economics(tmp_path, capsys):
    assert main(["solve", "--scenario", "preset:zero_econ", "--out", str(tmp_path)]) == EXIT_OK
    out = capsys.readouterr().out
    assert "profit (full precision): 0.0" in out
    assert (tmp_path / "profit.csv").read_text().splitlines()[1] == "0,0,0"
    assert {p.name for p in tmp_path.iterdir()} >= {"totals.csv", "traces.csv", "report.txt"}


def test_solve_is_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert main(["solve", "--scenario", "preset:periodic", "--eta", "0.3,0.6",
                     "--out", str(d)]) == EXIT_OK
    for name in ("totals.csv", "traces.csv", "profit.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_fit_round_trip(tmp_path, capsys):
    assert main(["optimize", "--scenario", "preset:gen", "--out", str(tmp_path),
                 "--holdout", "2"]) == EXIT_OK
    out = capsys.readouterr().out
    m = re.search(r"argmax = \[([^\]]*)\], value = (\S+)", out)
    argmax = [float(v) for v in m.group(1).split(",")]
    poly = ProfitPolynomial.from_table((tmp_path / "polynomial.txt").read_text())
    assert abs(evaluate(poly, argmax) - float(m.group(2))) <= 1e-12
    assert argmax == [0.0, 1.0]


def test_unknown_key_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.toml"
    bad.write_text(preset_text("gen").replace("[growth]", "[growth]\nspeed = 2"))
    assert main(["solve", "--scenario", str(bad), "--out", str(tmp_path / "o")]) == EXIT_PARSE
    assert "bad.toml:" in capsys.readouterr().err


def test_bad_control_value_exit_code(tmp_path):
    assert main(["solve", "--scenario", "preset:gen", "--eta", "2,0",
                 "--out", str(tmp_path)]) == EXIT_PARSE


def test_unwritable_output(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert main(["solve", "--scenario", "preset:zero_econ",
                 "--out", str(blocker / "sub")]) == EXIT_IO


def test_no_partial_output_on_failure(tmp_path):
    out = tmp_path / "o"
    main(["solve", "--scenario", "preset:gen", "--eta", "2,0", "--out", str(out)])
    assert not out.exists()


def test_nu_table(tmp_path, capsys):
    assert main(["reproduce", "nu-table", "--out", str(tmp_path)]) == EXIT_OK
    text = (tmp_path / "nu_table.csv").read_text().splitlines()
    assert text[0].startswith("n,N,nu")
    assert "2,2,21," in "\n".join(text)


def test_reproduce_strict_reports_mismatch(tmp_path):
    # the generational reference values are not met by the converged solver
    assert main(["reproduce", "gen", "--strict", "--out", str(tmp_path)]) == EXIT_MISMATCH
    assert main(["reproduce", "gen", "--out", str(tmp_path)]) == EXIT_OK


def test_module_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "renewalctl", "--help"], capture_output=True,
                         text=True)
    assert res.returncode == 0 and "optimize" in res.stdout
    res = subprocess.run([sys.executable, "-m", "renewalctl", "solve"], capture_output=True)
    assert res.returncode == 2


def test_solve_with_oracle_check(tmp_path, capsys):
    path = tmp_path / "s.toml"
    path.write_text(preset_text("periodic") + "\n[grid]\noracle_da = 0.01\n")
    assert main(["solve", "--scenario", str(path), "--out", str(tmp_path / "o")]) == EXIT_OK
    assert "upwind oracle profit (da = 0.01)" in capsys.readouterr().out
