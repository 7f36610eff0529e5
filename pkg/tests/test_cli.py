from __future__ import annotations

import json
import subprocess
import sys

import pytest

from subfactorlab.cli import EXIT_FAIL, EXIT_INPUT, EXIT_OK, main


def run(argv, capsys):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.mark.parametrize(
    "argv",
    [
        ["verify-graph", "a3.json"],
        ["verify-graph", "a5_nu.json"],
        ["build-tower", "a4.json", "--depth", "3"],
        ["build-tower", "a3.json", "--depth", "4", "--recover-weights"],
        ["verify-connection", "hadamard_connection.json", "--compare", "hadamard_gauged.json"],
        ["verify-connection", "trivial_connection.json"],
        ["build-lattice", "product_a3_connection.json", "--imax", "3", "--jmax", "3", "--extract"],
        ["embed-tl", "a5.json", "--n", "3"],
    ],
)
def test_passing_commands(argv, fixtures, capsys):
    argv = [fixtures / a if a.endswith(".json") else a for a in argv]
    code, out, _ = run(argv, capsys)
    assert code == EXIT_OK, out
    assert out.rstrip().endswith("OK")


@pytest.mark.parametrize(
    "argv,axiom",
    [
        (["verify-graph", "a3_perturbed.json"], "fair: outgoing weights sum to d"),
        (["build-tower", "a3_perturbed.json"], "balanced"),
        (["verify-graph", "a5_bad_nu.json"], "Frobenius-Perron"),
        (["embed-tl", "a5_bad_nu.json", "--n", "3"], "Frobenius-Perron"),
        (["verify-connection", "bad_connection.json"], "horizontal"),
        (["build-lattice", "bad_connection.json", "--imax", "2", "--jmax", "2"], "inclusion is a unital *-homomorphism"),
        (["embed-tl", "a5.json", "--n", "4", "--expect-kernel", "1"], "kernel dimension"),
    ],
)
def test_negative_controls(argv, axiom, fixtures, capsys):
    code, out, _ = run([argv[0], fixtures / argv[1], *argv[2:]], capsys)
    assert code == EXIT_FAIL
    last = out.rstrip().splitlines()[-1]
    assert last.startswith("VERIFICATION FAILED") and axiom in last


@pytest.mark.parametrize(
    "argv",
    [
        ["verify-graph", "malformed.json"],
        ["verify-graph", "missing_bar.json"],
        ["verify-graph", "does_not_exist.json"],
        ["verify-graph", "a3.json", "--tol", "0.5"],
        ["build-lattice"],
    ],
)
def test_input_errors(argv, fixtures, capsys):
    argv = [fixtures / a if a.endswith(".json") else a for a in argv]
    code, _, err = run(argv, capsys)
    assert code == EXIT_INPUT
    assert "input error" in err


def test_unknown_subcommand_exits_2():
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2


def test_tolerance_env_override(fixtures, capsys, monkeypatch):
    monkeypatch.setenv("SUBFACTORLAB_TOL", "1e-7")
    code, out, _ = run(["verify-graph", fixtures / "a3.json", "--json", "-"], capsys)
    assert code == EXIT_OK
    doc = json.loads(out[out.index("{"):])
    assert {c["tol"] for c in doc["report"]["checks"] if c["tol"] != 0.5} == {1e-7}
    monkeypatch.setenv("SUBFACTORLAB_TOL", "nope")
    code, _, _ = run(["verify-graph", fixtures / "a3.json"], capsys)
    assert code == EXIT_INPUT


def test_tol_flag_beats_env(fixtures, capsys, monkeypatch):
    monkeypatch.setenv("SUBFACTORLAB_TOL", "0.5")
    code, _, _ = run(["verify-graph", fixtures / "a3.json", "--tol", "1e-9"], capsys)
    assert code == EXIT_OK


def test_json_and_dot_outputs(fixtures, tmp_path, capsys):
    js, dot = tmp_path / "r.json", tmp_path / "t.dot"
    code, _, _ = run(["build-tower", fixtures / "a5.json", "--depth", "4", "--json", js, "--dot", dot], capsys)
    assert code == EXIT_OK
    doc = json.loads(js.read_text())
    assert doc["data"]["dims"] == [1, 1, 2, 5, 14]
    text = dot.read_text()
    assert text.count("digraph") + text.count("graph ") >= 2


def test_console_entry_point(fixtures):
    res = subprocess.run([sys.executable, "-m", "subfactorlab.cli", "verify-graph", str(fixtures / "a3_perturbed.json")], capture_output=True, text=True)
    assert res.returncode == 1
