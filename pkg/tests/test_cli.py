import json
import os
import subprocess
import sys
from pathlib import Path

import pytest

from mckit.cli import main
from oracles import theta

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "fixtures"
GOLDEN = Path(__file__).resolve().parent / "golden"


def run(capsys, *argv):
    status = main([str(a) for a in argv])
    return status, capsys.readouterr().out


@pytest.fixture
def theta_file(tmp_path):
    path = tmp_path / "theta.json"
    path.write_text(json.dumps(theta().to_json()))
    return path


def test_skein_unknot_fixture(capsys):
    status, out = run(capsys, "skein", "--diagram", FIXTURES / "unknot.json")
    assert status == 0
    assert out.strip() == "r"


def test_skein_hopf_fixture(capsys):
    _, out = run(capsys, "skein", "--diagram", FIXTURES / "hopf.json")
    assert out.strip() == "alpha^2 - beta^-2 + beta^-2*r^2"


def test_enumerate_matches_golden(capsys):
    lines = (GOLDEN / "enumerate_beta1.txt").read_text().splitlines()
    header, expected = lines[0], lines[1:]
    argv = header.split("generated by: mckit ", 1)[1].split()
    status, out = run(capsys, *argv)
    assert status == 0
    assert out.splitlines() == expected


def test_enumerate_json_single_kappa(capsys):
    status, out = run(capsys, "enumerate", "--beta", "1", "--kappa", "-1", "--format", "json")
    assert status == 0
    assert json.loads(out)["counts"] == {"-1": 15}


def test_faces_numeric(capsys, theta_file):
    status, out = run(capsys, "faces", "--graph", theta_file, "--numeric")
    assert status == 0
    assert "weight: N^3" in out
    assert '"2": "8"' in out


def test_delta_rejects_non_edges(capsys, theta_file):
    status = main(["delta", "--graph", str(theta_file), "--edge", "0,1"])
    assert status == 2
    assert "not an internal edge" in capsys.readouterr().err


def test_check_hat2_is_clean(capsys):
    status, out = run(capsys, "check-hat2", "--count", "3", "--seed", "5")
    assert status == 0
    assert "failing: []" in out


def test_qme_and_partition_on_supported_fixture(capsys):
    chain = FIXTURES / "supported_0_0.json"
    status, out = run(capsys, "qme-check", "--chain", chain, "--truncate", "g_s=4")
    assert status == 0
    assert "failing: {}" in out
    status, out = run(capsys, "partition", "--chain", chain, "--truncate", "g_s=4", "--format", "json")
    assert status == 0
    assert json.loads(out)["series"] != "0"


def test_factor_check(capsys):
    status, out = run(
        capsys, "factor-check", "--z1", FIXTURES / "supported_0_0.json", "--z2", FIXTURES / "supported_0_1.json",
        "--truncate", "g_s=4",
    )
    assert status == 0
    assert "failing: {}" in out


def test_torus_propagator_is_obstructed(capsys):
    status, out = run(capsys, "solve-propagator", "--geometry", "torus")
    assert status == 1
    assert "degree: 2" in out


def test_sphere_propagator_written(capsys, tmp_path):
    target = tmp_path / "p.json"
    status, _ = run(capsys, "solve-propagator", "--geometry", "sphere", "--out", target)
    assert status == 0
    assert json.loads(target.read_text())


def test_output_is_deterministic(capsys):
    _, first = run(capsys, "check-hat2", "--count", "2", "--seed", "3", "--format", "json")
    _, second = run(capsys, "check-hat2", "--count", "2", "--seed", "3", "--format", "json")
    assert first == second


def test_gen_fixtures_reproduces_shipped_files(capsys, tmp_path):
    status, _ = run(capsys, "gen-fixtures", "--out", tmp_path, "--count", "3", "--max-half-edges", "4")
    assert status == 0
    for shipped in FIXTURES.iterdir():
        assert (tmp_path / shipped.name).read_text() == shipped.read_text()


def test_missing_input_exits_2(capsys):
    assert main(["skein", "--diagram", "/nonexistent/d.json"]) == 2


def test_console_entry_point():
    env = dict(os.environ)
    proc = subprocess.run(
        [sys.executable, "-m", "mckit.cli", "skein", "--diagram", str(FIXTURES / "unknot_framed.json")],
        capture_output=True, text=True, env=env, timeout=120,
    )
    assert proc.returncode == 0
    assert proc.stdout.strip() == "alpha*r"
