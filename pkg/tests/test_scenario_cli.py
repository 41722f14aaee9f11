import csv
import subprocess
import sys
import os
import textwrap

import numpy as np
import pytest

from robin_nonlocal import (MARKOV, ScenarioError, build_problem, bundled_scenarios,
                            evaluate_conditions, load_scenario, parse_scenario)
from robin_nonlocal.cli import main, run_one
from robin_nonlocal.scenario import initial_state

BUNDLED = bundled_scenarios()


def _write(tmp_path, text, name="case.scenario"):
    path = tmp_path / name
    path.write_text(textwrap.dedent(text))
    return path


def _read_csv(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def _report(path):
    out = {}
    for line in path.read_text().splitlines():
        key, sep, value = line.partition(": ")
        if sep:
            out[key.strip()] = value
    return out


NEUMANN64 = """
name = "neumann64"
[domain]
kind = "interval"
n = 64
"""


def test_bundled_fixtures_present():
    assert set(BUNDLED) == {"markov_interval", "submarkov_interval", "blowup_interval",
                            "markov_rectangle", "drift_interval"}
    for path in BUNDLED.values():
        sc = load_scenario(path)
        assert sc.expect is not None and sc.name == path.stem


def test_parse_defaults_and_overrides():
    sc = parse_scenario(NEUMANN64)
    assert sc.lam == "auto" and sc.run.theta == 1.0 and sc.mu == []
    pr = build_problem(sc, 10)
    assert pr.grid.n_cells == 10 and not np.any(pr.family.weights)


@pytest.mark.parametrize("text,key", [
    ('betta = 1.0\n[domain]\nkind = "interval"\n', "betta"),
    ('[domain]\nkind = "interval"\nnn = 4\n', "nn"),
    ('[domain]\nkind = "interval"\n[[mu]]\nfaces = "left"\nweight = 1\n', "weight"),
    ('[domain]\nkind = "interval"\n[run]\nsteps = 3\n', "steps"),
])
def test_unknown_keys_named(text, key):
    with pytest.raises(ScenarioError, match=key):
        parse_scenario(text)


@pytest.mark.parametrize("text", [
    '[domain]\nkind = "sphere"\n',
    'expect = "maybe"\n[domain]\nkind = "interval"\n',
    'lambda = -1.0\n[domain]\nkind = "interval"\n',
    '[domain]\nkind = "interval"\n[run]\ndt = 0.0\n',
    '[domain\nkind = "interval"\n',
    'name = "x"\n',
])
def test_invalid_scenarios(text):
    with pytest.raises(ScenarioError):
        parse_scenario(text)


def test_face_named_twice():
    sc = parse_scenario('[domain]\nkind = "interval"\n[[mu]]\nfaces = "all"\n'
                        '[[mu]]\nfaces = "left"\n')
    with pytest.raises(ScenarioError):
        build_problem(sc)


def test_initial_states():
    g = build_problem(parse_scenario(NEUMANN64), 6).grid
    np.testing.assert_array_equal(initial_state("indicator(1:3)", g), [0, 1, 1, 0, 0, 0])
    np.testing.assert_array_equal(initial_state("indicator(:2)", g), [1, 1, 0, 0, 0, 0])
    np.testing.assert_array_equal(initial_state([1, 2, 3, 4, 5, 6], g), np.arange(1, 7))
    with pytest.raises(ScenarioError):
        initial_state("gauss", g)
    with pytest.raises(ScenarioError):
        initial_state([1.0, 2.0], g)


def test_full_preset_roundtrip(tmp_path):
    sc = parse_scenario(textwrap.dedent("""
        beta = [1.0, 2.0]
        [domain]
        kind = "interval"
        n = 3
        [coefficients]
        preset = "full"
        a = [[[1.0]], [[2.0]], [[1.0]]]
        b = [[0.0], [0.1], [0.0]]
        c = [[0.0], [0.0], [0.0]]
        d0 = [0.0, 0.5, 0.0]
        [[mu]]
        faces = [1]
        density = {cells = [1.0, 1.0, 1.0]}
        """))
    pr = build_problem(sc)
    assert pr.coeff.a[1, 0, 0] == 2.0
    np.testing.assert_allclose(pr.family.total_masses, [0.0, 1.0])
    with pytest.raises(ScenarioError):
        build_problem(sc, 5)


def test_simulate_markov(tmp_path):
    assert main(["simulate", str(BUNDLED["markov_interval"]), "--out", str(tmp_path)]) == 0
    rows = _read_csv(tmp_path / "trajectory.csv")
    assert list(rows[0]) == ["t", "min_u", "max_u", "weighted_mass", "deviation_T1"]
    assert float(rows[-1]["t"]) == pytest.approx(10.0)
    assert max(float(r["deviation_T1"]) for r in rows) <= 1e-10
    diag = _report(tmp_path / "diagnostics.txt")
    assert diag["growing"] == "False" and diag["markov_within_tol"] == "True"


def test_simulate_blowup_flags_growth(tmp_path):
    assert main(["simulate", str(BUNDLED["blowup_interval"]), "--out", str(tmp_path)]) == 0
    text = (tmp_path / "diagnostics.txt").read_text()
    assert "growing: True" in text and "WARNING" in text


def test_parse_error_exit_code(tmp_path, capsys):
    bad = _write(tmp_path, NEUMANN64 + "betta = 1.0\n")
    assert main(["simulate", str(bad), "--out", str(tmp_path / "out")]) == 2
    assert "betta" in capsys.readouterr().err
    assert not (tmp_path / "out").exists() or not any((tmp_path / "out").iterdir())


def test_numerical_failure_exit_code(tmp_path, capsys):
    # lambda equals the exact eigenvalue of A0 = Laplacian + 2 I on constants
    path = _write(tmp_path, """
        lambda = 2.0
        [domain]
        kind = "interval"
        n = 8
        [coefficients]
        preset = "drift"
        d0 = -2.0
        """)
    out = tmp_path / "out"
    assert main(["verify", str(path), "--out", str(out)]) == 3
    assert "resolvent" in capsys.readouterr().err
    assert list(out.iterdir()) == []


def test_spectrum_neumann64(tmp_path):
    path = _write(tmp_path, NEUMANN64)
    assert main(["spectrum", str(path), "--out", str(tmp_path)]) == 0
    rep = _report(tmp_path / "report.txt")
    assert abs(float(rep["spectral_bound"])) <= 1e-9
    assert round(float(rep["gap"]), 2) == 9.87
    rows = _read_csv(tmp_path / "spectrum.csv")
    assert len(rows) == 64 and list(rows[0]) == ["re", "im"]


@pytest.mark.parametrize("name,klass", [("markov_interval", "Equilibrium"),
                                        ("submarkov_interval", "ExponentialDecay"),
                                        ("blowup_interval", "BlowUp")])
def test_spectrum_classes(tmp_path, name, klass):
    assert main(["spectrum", str(BUNDLED[name]), "--out", str(tmp_path)]) == 0
    rep = _report(tmp_path / "report.txt")
    assert rep["class"] == klass
    if klass == "Equilibrium":
        assert rep["principal_left_positive"] == "True"


@pytest.mark.parametrize("name", sorted(BUNDLED))
def test_verify_bundled(tmp_path, name):
    assert run_one("verify", BUNDLED[name], tmp_path) == 0
    rep = _report(tmp_path / "verify.txt")
    assert float(rep["resolvent_identity_residual"]) <= 1e-10
    assert rep["overall"] == "PASS"


def test_verify_zero_mu(tmp_path):
    path = _write(tmp_path, 'beta = 1.0\n' + NEUMANN64)
    assert main(["verify", str(path), "--out", str(tmp_path)]) == 0
    assert float(_report(tmp_path / "verify.txt")["resolvent_identity_residual"]) <= 1e-14


def test_verify_flipped_sign_fails(tmp_path):
    text = BUNDLED["markov_interval"].read_text()
    flipped = text.replace("atoms = [{point = [0.2], weight = 1.0}]",
                           "atoms = [{point = [0.2], weight = -1.0}]")
    assert flipped != text
    path = _write(tmp_path, flipped)
    assert main(["verify", str(path), "--out", str(tmp_path)]) == 1
    lines = (tmp_path / "verify.txt").read_text().splitlines()
    row = next(line for line in lines if line.startswith("positivity"))
    assert row.endswith("FAIL")


def test_outputs_are_deterministic(tmp_path, monkeypatch):
    args = [str(BUNDLED["drift_interval"])]
    main(["simulate", *args, "--out", str(tmp_path / "a")])
    monkeypatch.setenv("ROBIN_NONLOCAL_THREADS", "1")
    main(["simulate", *args, "--out", str(tmp_path / "b")])
    main(["spectrum", *args, "--out", str(tmp_path / "a")])
    main(["spectrum", *args, "--out", str(tmp_path / "b")])
    for name in ("trajectory.csv", "spectrum.csv", "diagnostics.txt"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_jobs_write_per_scenario_dirs(tmp_path):
    paths = [str(BUNDLED[n]) for n in ("markov_interval", "submarkov_interval", "drift_interval")]
    assert main(["verify", *paths, "--out", str(tmp_path), "--jobs", "3"]) == 0
    for p in paths:
        stem = os.path.splitext(os.path.basename(p))[0]
        assert (tmp_path / stem / "verify.txt").exists()
    assert not [p for p in tmp_path.iterdir() if p.name.startswith(".partial")]


def test_bundled_markov_verdicts():
    for name in ("markov_interval", "markov_rectangle", "drift_interval"):
        pr = build_problem(load_scenario(BUNDLED[name]))
        assert evaluate_conditions(pr.coeff, pr.family, pr.grid).predicted_class == MARKOV


def test_module_entry_point(tmp_path):
    bad = _write(tmp_path, NEUMANN64 + "betta = 1.0\n")
    proc = subprocess.run([sys.executable, "-m", "robin_nonlocal", "verify", str(bad),
                           "--out", str(tmp_path / "o")], capture_output=True, text=True)
    assert proc.returncode == 2 and "betta" in proc.stderr
    ok = subprocess.run([sys.executable, "-m", "robin_nonlocal", "spectrum",
                         str(BUNDLED["markov_interval"]), "--out", str(tmp_path / "o")])
    assert ok.returncode == 0
