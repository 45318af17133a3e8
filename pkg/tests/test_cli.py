import csv
import json
import os

import numpy as np
import pytest

from circlestates import cli, validation
from circlestates.config import RunConfig, apply_overrides, resolve
from circlestates.errors import UsageError
from circlestates.phasespace import PhaseGrid


def run(tmp_path, *args):
    return cli.main([*args, "--out", str(tmp_path)])


def read_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array(rows[1:], dtype=float)


def test_fig1(tmp_path):
    assert run(tmp_path, "fig1") == 0
    header, data = read_csv(tmp_path / "fig1.csv")
    assert header == ["beta_abs", "P_up_n0", "P_up_n1", "P_up_n2"]
    np.testing.assert_array_equal(data[0, 1:], 1.0)
    np.testing.assert_allclose(data[:, 1], 0.5 * (1 + np.exp(-2 * data[:, 0] ** 2)), atol=1e-15)
    meta = json.loads((tmp_path / "fig1.json").read_text())
    peak = meta["maxima"]["n2"]["interior"]
    assert abs(peak["value"] - 0.68) <= 0.01 and abs(peak["beta"] - 1.27) <= 0.02
    assert meta["config"]["beta_points"] == 401
    assert b"\r\n" not in (tmp_path / "fig1.csv").read_bytes()


def test_fig2(tmp_path):
    assert run(tmp_path, "fig2") == 0
    header, data = read_csv(tmp_path / "fig2.csv")
    assert len(header) == 7 and np.all(data[0, 1:] == pytest.approx(1.0))
    meta = json.loads((tmp_path / "fig2.json").read_text())
    m = meta["maxima"]["l1_n1"]
    assert abs(m["interior"]["beta"] - 1.65) <= 0.03 and m["T_t_us"] > 400
    assert abs(meta["spot_l2_n2_beta1.27"] - 0.18) <= 0.01


def test_fig3_small_grid(tmp_path):
    assert run(tmp_path, "fig3", "--grid", "41") == 0
    meta = json.loads((tmp_path / "fig3.json").read_text())
    assert len(meta["grids"]) == 6
    assert meta["grids"]["t0_nondiagonal"]["max_abs"] > meta["grids"]["gt0.1_nondiagonal"]["max_abs"]
    tot = PhaseGrid.load(str(tmp_path / "fig3_gt0.1_total.csv")).values
    diag = PhaseGrid.load(str(tmp_path / "fig3_gt0.1_diagonal.csv")).values
    nond = PhaseGrid.load(str(tmp_path / "fig3_gt0.1_nondiagonal.csv")).values
    assert np.abs(diag + nond - tot).max() <= 1e-12
    side = json.loads((tmp_path / "fig3_t0_total.json").read_text())
    assert side["config"]["grid"]["points"] == 41 and side["part"] == "total"


def test_fig4_and_coherence(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"u_points": 10}))
    assert run(tmp_path, "fig4", "--config", str(cfg)) == 0
    header, data = read_csv(tmp_path / "fig4.csv")
    assert header == ["n", "u", "t", "mu", "lambda", "C"]
    assert len(data) == 3 * 11
    assert np.all(data[data[:, 1] == 0][:, 5] == 1.0)
    assert np.all(data[data[:, 1] > 0.99][:, 5] <= 1e-3)
    assert run(tmp_path, "fig4", "--config", str(cfg), "--form", "printed") == 0
    meta = json.loads((tmp_path / "fig4.json").read_text())
    assert meta["C_at_u0.2"]["n0"] == pytest.approx(0.0443, abs=5e-4)
    assert run(tmp_path, "coherence", "--config", str(cfg), "--excitation", "1", "--components", "2",
               "--beta", "1.0") == 0
    rep = json.loads((tmp_path / "coherence.json").read_text())["report"]
    assert rep["mu"] == pytest.approx(0.2549000463, abs=1e-9)


def test_protocol(tmp_path):
    assert run(tmp_path, "protocol", "--excitation", "0", "--components", "4", "--beta", "1.0") == 0
    meta = json.loads((tmp_path / "protocol.json").read_text())
    assert meta["plan"]["T_us"] == pytest.approx(1.0)
    assert abs(meta["norm_identity_residual"]) <= 1e-12
    assert abs(meta["T_minus_sum_tk"]) <= 1e-12
    assert run(tmp_path, "protocol", "--components", "2") == 0
    assert json.loads((tmp_path / "protocol.json").read_text())["plan"]["T_us"] == 0.0
    assert run(tmp_path, "protocol", "--components", "3") == 2


def test_wigner_is_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert cli.main(["wigner", "--grid", "31", "--workers", "1", "--out", str(a)]) == 0
    assert cli.main(["wigner", "--grid", "31", "--workers", "3", "--out", str(b)]) == 0
    assert (a / "wigner_total.csv").read_bytes() == (b / "wigner_total.csv").read_bytes()
    assert cli.main(["wigner", "--grid", "31", "--part", "nondiagonal", "--out", str(a)]) == 0
    assert (a / "wigner_nondiagonal.json").exists()


def test_config_precedence(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"beta": 2.0, "nbar": 0.5, "grid": {"points": 11}}))
    rc = resolve(str(cfg), {"beta": 2.5})
    assert rc.beta == 2.5 and rc.nbar == 0.5 and rc.grid.points == 11
    assert rc.excitation == RunConfig().excitation
    assert apply_overrides(rc, {"tol": {"kernel": 1e-3}}).tol.kernel == 1e-3


@pytest.mark.parametrize("payload,key", [
    ({"bogus": 1}, "bogus"),
    ({"grid": {"pts": 3}}, "pts"),
    ({"excitation": 1.5}, "excitation"),
    ({"grid": 5}, "grid"),
    ({"form": "other"}, "form"),
])
def test_malformed_config(tmp_path, capsys, payload, key):
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps(payload))
    assert run(tmp_path, "fig1", "--config", str(cfg)) == 2
    assert key in capsys.readouterr().err
    with pytest.raises(UsageError):
        resolve(str(cfg))


def test_invalid_json_and_values(tmp_path, capsys):
    cfg = tmp_path / "bad.json"
    cfg.write_text("{not json")
    assert run(tmp_path, "fig1", "--config", str(cfg)) == 2
    assert run(tmp_path, "fig1", "--beta", "-1") == 2
    assert run(tmp_path, "coherence", "--beta", "0") == 2
    assert "error" in capsys.readouterr().err


@pytest.mark.skipif(os.geteuid() == 0, reason="root ignores directory permissions")
def test_unwritable_output(tmp_path):
    locked = tmp_path / "locked"
    locked.mkdir()
    locked.chmod(0o500)
    try:
        assert cli.main(["fig1", "--out", str(locked / "sub")]) == 3
    finally:
        locked.chmod(0o700)


def test_output_path_is_a_file(tmp_path, capsys):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert cli.main(["fig1", "--out", str(blocker / "sub")]) == 3
    assert "I/O error" in capsys.readouterr().err


def test_unknown_flag_is_usage_error(tmp_path):
    with pytest.raises(SystemExit) as info:
        cli.main(["fig1", "--bogus"])
    assert info.value.code == 2


def test_validate_passes(tmp_path, capsys):
    assert run(tmp_path, "validate") == 0
    out = capsys.readouterr().out
    assert "checks passed" in out and "FAIL" not in out
    report = json.loads((tmp_path / "validate.json").read_text())
    assert all(c["passed"] for c in report["checks"])


def test_validate_reports_breach(tmp_path, capsys, monkeypatch):
    fake = [validation.Check("good", 1e-9, 1e-6), validation.Check("bad", 1e-3, 1e-6),
            validation.Check("crash", float("nan"), 1e-6)]
    monkeypatch.setattr(validation, "run_suite", lambda cfg, extended=False: fake)
    assert run(tmp_path, "validate") == 1
    out = capsys.readouterr().out
    assert out.count("FAIL") == 2 and "1/3 checks passed" in out


@pytest.mark.slow
def test_validate_extended(tmp_path):
    assert run(tmp_path, "validate", "--extended") == 0
