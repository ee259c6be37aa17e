import json
import math

import numpy as np
import pytest

from deltaphi.cli import main
from deltaphi.io import parse_record, read_csv


def run(tmp_path, *args):
    return main([*args, "--out", str(tmp_path)])


def test_constants_report(tmp_path, capsys):
    assert run(tmp_path, "constants") == 0
    rec = parse_record((tmp_path / "constants.txt").read_text())
    assert float(rec["alpha_max"]) == 1.0 and float(rec["phi_prime_inf"]) == 1.0


def test_constants_scaling_table(tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"alpha": 0.1, "alphas": [0.4, 0.2, 0.1, 0.05, 0.025]}))
    assert main(["constants", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    header, data = read_csv(tmp_path / "scaling.csv")
    assert data.shape[0] == 5
    col = data[:, header.index("alpha_K_phi")]
    assert col.max() / col.min() < 10


def test_alpha_too_large_exit_2(tmp_path, capsys):
    assert run(tmp_path, "constants", "--alpha", "1.5") == 2
    assert "alpha_phi" in capsys.readouterr().err


def test_bad_config_exit_2(tmp_path):
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps({"grid_points": 5}))
    assert main(["constants", "--config", str(cfg)]) == 2
    cfg.write_text(json.dumps({"colour": "red"}))
    assert main(["constants", "--config", str(cfg)]) == 2
    assert main(["constants", "--config", str(tmp_path / "missing.json")]) == 2


def test_solve_telescope(tmp_path):
    assert run(tmp_path, "solve", "--w", "telescope:cos") == 0
    rec = parse_record((tmp_path / "solution.txt").read_text())
    assert float(rec["residual_sup"]) <= 1e-8
    header, data = read_csv(tmp_path / "v.csv")
    assert header == ["t", "value"]
    assert np.max(np.abs(data[:, 1] - (np.cos(data[:, 0]) - 1.0))) <= 1e-8


def test_solve_zero_file(tmp_path):
    t = np.linspace(0, math.pi, 21)
    path = tmp_path / "w.csv"
    path.write_text("t,value\n" + "".join(f"{float(x)!r},0.0\n" for x in t))
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"w_csv": str(path)}))
    assert main(["solve", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    _, data = read_csv(tmp_path / "v.csv")
    assert np.all(data[:, 1] == 0.0)


def test_solve_not_in_range_exit_3(tmp_path, capsys):
    assert run(tmp_path, "solve", "--w", "raw:one") == 3
    err = capsys.readouterr().err
    assert "spread" in err and "w(t_minus)" in err
    assert run(tmp_path, "solve", "--w", "raw:sin2", "--alpha", "0.9") == 3


def test_gram(tmp_path):
    assert run(tmp_path, "gram", "--alpha", "0.3", "--modes", "8") == 0
    rec = parse_record((tmp_path / "gram.txt").read_text())
    assert float(rec["max_offdiag"]) <= 1e-10 and float(rec["max_diag_error"]) <= 1e-10


def test_gram_unsupported_field(tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"field": {"name": "bump"}}))
    assert main(["gram", "--config", str(cfg)]) == 2


def test_orbit_csv(tmp_path):
    assert run(tmp_path, "orbit", "--t0", "1.0", "--k-max", "200") == 0
    _, data = read_csv(tmp_path / "orbit.csv")
    assert np.all(np.diff(data[:, 1]) > 0) and abs(data[-1, 1] - math.pi) < 1e-6


def test_kernel_constant_seed(tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"seed": "constant"}))
    assert main(["kernel", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    _, data = read_csv(tmp_path / "kernel.csv")
    assert np.all(data[:, 2] == 0.0)


def test_jets_csv(tmp_path):
    assert run(tmp_path, "jets", "--p", "3", "--k-max", "50") == 0
    header, data = read_csv(tmp_path / "jets.csv")
    assert header == ["k", "t", "s", "r", "q"] and data.shape == (51, 5)
    norms = np.abs(data[:, 2:]).sum(axis=1)
    assert norms[-1] < norms[-10]


def test_jets_reflected_orientation(tmp_path):
    assert run(tmp_path, "jets", "--p", "2", "--alpha", "-0.1", "--k-max", "3") == 0
    _, data = read_csv(tmp_path / "jets.csv")
    assert data[1, 1] == pytest.approx(1 - 0.1 * math.sin(1))
    assert data[1, 2] == pytest.approx(1 - 0.1 * math.cos(1))
    assert data[1, 3] == pytest.approx(0.1 * math.sin(1))


def test_roundtrip(tmp_path):
    assert run(tmp_path, "roundtrip", "--v0", "hat", "--alpha", "0.3") == 0
    rec = parse_record((tmp_path / "roundtrip.txt").read_text())
    assert float(rec["max_error_mod_constant"]) <= 1e-8
    assert rec["lip_bound_holds"] == "true"


def test_deterministic_outputs(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert main(["solve", "--out", str(out)]) == 0
        assert main(["orbit", "--out", str(out), "--plot"]) == 0
    for name in ("v.csv", "solution.txt", "orbit.csv", "orbit.svg"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
