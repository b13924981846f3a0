import json
import math

import numpy as np
import pytest

from quantumness.cli import main
from quantumness.formats import (
    FormatError,
    dumps,
    points_from_json,
    points_to_json,
    state_from_json,
    state_to_json,
)
from quantumness.states import make_cat, make_dicke

from conftest import TETRA


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def make(capsys, tmp_path, name, *flags):
    path = tmp_path / name
    code, _, err = run(capsys, "state", "make", *flags, "--out", str(path))
    assert code == 0, err
    return str(path)


def strip_timestamp(text):
    doc = json.loads(text)
    doc["manifest"].pop("timestamp")
    return json.dumps(doc, sort_keys=True)


def test_state_fock(capsys):
    code, out, err = run(capsys, "state", "make", "--family", "fock", "--n", "3")
    assert code == 0 and err == ""
    doc = json.loads(out)
    amps = np.array(doc["amplitudes"])
    assert doc["system"] == "cv" and amps[3].tolist() == [1.0, 0.0]
    assert {"command", "seed", "versions", "timestamp"} <= set(doc["manifest"])


def test_state_spin_coherent_north(capsys):
    code, out, _ = run(capsys, "state", "make", "--family", "spin-coherent", "--two-s", "4", "--theta", "0", "--phi", "0")
    doc = json.loads(out)
    # theta = 0 is the lowest-weight state |S, -S>
    assert np.array(doc["amplitudes"])[0].tolist() == [1.0, 0.0]
    assert doc["constellation"]["infinity_mult"] == 4


def test_state_photon_added(capsys):
    from quantumness.states import photon_added_mean_number

    code, out, _ = run(capsys, "state", "make", "--family", "padd", "--beta", "1", "--m", "2")
    psi = state_from_json(json.loads(out))
    assert np.linalg.norm(psi.amplitudes) == pytest.approx(1.0, abs=1e-13)
    assert psi.mean_number() == pytest.approx(photon_added_mean_number(1.0, 2), abs=1e-10)


def test_state_usage_errors(capsys):
    code, _, err = run(capsys, "state", "make", "--family", "cat")
    assert code == 2 and "--beta" in err
    code, _, _ = run(capsys, "state", "make", "--family", "unicorn")
    assert code == 2


def test_measure_wehrl_coherent(capsys, tmp_path):
    coh = make(capsys, tmp_path, "coh.json", "--family", "coherent", "--alpha", "1+0.5i")
    code, out, err = run(capsys, "measure", "wehrl", "--state", coh)
    assert code == 0 and err == ""
    doc = json.loads(out)
    assert doc["measure"] == "wehrl"
    assert doc["value"] == pytest.approx(1.0, abs=1e-6)


def test_measure_am_dicke(capsys, tmp_path):
    d = make(capsys, tmp_path, "dicke10.json", "--family", "dicke", "--two-s", "2", "--two-m", "0")
    code, out, _ = run(capsys, "measure", "am", "--state", d, "--order", "1")
    assert code == 0 and abs(json.loads(out)["value"]) < 1e-14


def test_measure_minf_squeezed(capsys, tmp_path):
    sq = make(capsys, tmp_path, "sq1.json", "--family", "squeezed", "--r", "1")
    code, out, _ = run(capsys, "measure", "minf", "--state", sq)
    assert json.loads(out)["value"] == pytest.approx(0.6480543, abs=1e-7)


def test_measure_sweep_csv(capsys, tmp_path):
    p = make(capsys, tmp_path, "padd.json", "--family", "padd", "--beta", "1", "--m", "2")
    code, out, _ = run(capsys, "measure", "wehrl", "--state", p, "--sweep", "beta", "0:1:0.5")
    lines = out.strip().splitlines()
    assert code == 0 and lines[0] == "beta,wehrl"
    assert len(lines) == 4
    first = [float(x) for x in lines[1].split(",")]
    # beta = 0 is the Fock state |2>
    assert first[1] == pytest.approx(3 + math.log(2) - 2 * (1.5 - 0.5772156649015329), abs=1e-6)


def test_measure_mismatch_is_usage_error(capsys, tmp_path):
    d = make(capsys, tmp_path, "d.json", "--family", "dicke", "--two-s", "2", "--two-m", "0")
    code, _, err = run(capsys, "measure", "minf", "--state", d, "--closed")
    assert code == 2 and err


def test_measure_bad_file(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    code, _, err = run(capsys, "measure", "wehrl", "--state", str(bad))
    assert code == 2 and "cannot read" in err


def test_search_kings(capsys):
    code, out, err = run(capsys, "search", "kings", "--two-s", "4", "--order", "2", "--seed", "1", "--restarts", "32")
    assert code == 0 and err == ""
    doc = json.loads(out)
    assert doc["converged"] is True and doc["objective"] < 1e-10
    assert len(doc["constellation"]["stars"]) == 4


def test_search_requires_seed(capsys):
    code, _, err = run(capsys, "search", "kings", "--two-s", "4", "--order", "2")
    assert code == 2 and "--seed" in err
    code, _, err = run(capsys, "sphere", "thomson", "--n", "4")
    assert code == 2 and "--seed" in err


def test_search_nonconvergence_exit_1(capsys):
    code, out, _ = run(capsys, "search", "kings", "--two-s", "2", "--order", "2", "--seed", "1", "--restarts", "4")
    assert code == 1
    assert json.loads(out)["converged"] is False


def test_search_queens_target(capsys, tmp_path):
    d = make(capsys, tmp_path, "d.json", "--family", "dicke", "--two-s", "2", "--two-m", "0")
    code, out, _ = run(capsys, "search", "queens", "--two-s", "2", "--state", d, "--seed", "0")
    doc = json.loads(out)
    assert code == 0 and abs(doc["distance"] - doc["distance_fw"]) < 1e-6


def test_sphere_thomson(capsys):
    code, out, _ = run(capsys, "sphere", "thomson", "--n", "4", "--seed", "1")
    doc = json.loads(out)
    assert code == 0 and doc["energy"] == pytest.approx(3.6742346, abs=1e-6)
    assert points_from_json(doc).shape == (4, 3)


def test_sphere_design_check(capsys, tmp_path):
    p = tmp_path / "tetra.json"
    p.write_text(dumps(points_to_json(TETRA)))
    code, out, _ = run(capsys, "sphere", "design-check", "--points", str(p), "--t", "2")
    doc = json.loads(out)
    assert doc["pass"] is True and doc["strength"] == 2


def test_metrology_avg_crb_tetra(capsys, tmp_path):
    p = tmp_path / "tetra.json"
    p.write_text(dumps(points_to_json(TETRA)))
    st = make(capsys, tmp_path, "tetra_state.json", "--family", "stars", "--points", str(p))
    code, out, _ = run(capsys, "metrology", "avg-crb", "--state", st)
    doc = json.loads(out)
    assert code == 0 and doc["value"] == pytest.approx(0.125, abs=1e-6)
    code, out, _ = run(capsys, "metrology", "avg-crb", "--state",
                       make(capsys, tmp_path, "coh.json", "--family", "spin-coherent", "--two-s", "3"))
    assert json.loads(out)["value"] == math.inf


def test_metrology_sweep(capsys, tmp_path):
    sq = make(capsys, tmp_path, "sq.json", "--family", "squeezed", "--r", "0.5")
    code, out, _ = run(capsys, "metrology", "sweep", "--state", sq, "--n", "8")
    lines = out.strip().splitlines()
    assert lines[0] == "theta,F" and len(lines) == 9


def test_outputs_are_deterministic(capsys):
    argv = ["search", "wehrl-max", "--two-s", "3", "--seed", "4", "--restarts", "2"]
    _, a, _ = run(capsys, *argv)
    _, b, _ = run(capsys, *argv)
    assert strip_timestamp(a) == strip_timestamp(b)


def test_state_json_roundtrip():
    for psi in (make_cat(0.9 + 0.2j, -1), make_dicke(5, 1)):
        doc = json.loads(dumps(state_to_json(psi)))
        back = state_from_json(doc)
        assert np.array_equal(back.amplitudes, psi.amplitudes)


def test_format_errors():
    with pytest.raises(FormatError):
        state_from_json({"system": "spin", "two_S": 3, "amplitudes": [[1, 0]]})
    with pytest.raises(FormatError):
        state_from_json({"system": "qutrit", "amplitudes": [[1, 0]]})
    with pytest.raises(FormatError):
        points_from_json({"points": [[0, 0, 0]]})


def test_dumps_precision():
    x = 0.1 + 0.2
    assert float(json.loads(dumps({"x": x}))["x"]) == x
    assert dumps(math.inf) == "Infinity"
    assert json.loads(dumps({"z": 1 + 2j}))["z"] == [1.0, 2.0]
