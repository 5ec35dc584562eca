import json
import subprocess
import sys
import time

import pytest

from betawalk import cli
from betawalk.cli import DUAL_KEYS, RunConfig, config_from_args, main
from betawalk.errors import NumericDegeneracyError, ValidationError
from betawalk.stationary import read_field


def run_json(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, json.loads(out)


def test_rate_example(capsys):
    code, rec = run_json(capsys, "rate", "--alpha", "1", "--beta", "1", "--xi1", "0.8")
    assert code == 0
    assert rec["iq"] == pytest.approx(0.2, abs=1e-12)
    assert rec["ia"] == pytest.approx(0.19274, abs=1e-5)
    assert rec["lambda"] == pytest.approx(1.0, abs=1e-9)
    assert rec["branch"] == "right"


def test_dual_keys(capsys):
    code, rec = run_json(capsys, "dual", "--alpha", "1", "--beta", "1", "--tilt", "1.5")
    assert code == 0
    assert tuple(rec) == DUAL_KEYS
    assert rec["lambda"] == pytest.approx(1.0) and rec["xi1"] == pytest.approx(0.8)
    assert rec["iq_star"] == pytest.approx(1.0)


def test_dual_left_and_lln(capsys):
    _, rec = run_json(capsys, "dual", "--alpha", "1", "--beta", "1", "--tilt", "-1.5")
    assert rec["branch"] == "left" and rec["xi1"] == pytest.approx(0.2)
    assert rec["tilt"] == pytest.approx(-1.5) and rec["iq_star"] == pytest.approx(-0.5)
    _, rec = run_json(capsys, "dual", "--alpha", "1", "--beta", "3", "--xi1", "0.25")
    assert rec["branch"] == "at_lln" and rec["lambda"] == "inf" and rec["iq"] == 0
    _, rec = run_json(capsys, "dual", "--alpha", "1", "--beta", "2", "--lambda", "0.7", "--branch", "left")
    assert rec["branch"] == "left" and rec["xi1"] < 1 / 3


@pytest.mark.parametrize("argv", [
    ["rate", "--alpha", "1", "--beta", "1"],
    ["rate", "--alpha", "-1", "--beta", "1", "--xi1", "0.5"],
    ["rate", "--alpha", "1", "--beta", "1", "--xi1", "1.5"],
    ["rate", "--alpha", "1", "--beta", "1", "--xi1", "0.5", "--lambda", "1"],
    ["exponent", "--alpha", "1", "--beta", "1", "--xi1", "0.5", "--seed", "1"],
    ["exponent", "--alpha", "1", "--beta", "1", "--xi1", "0.8", "--n-list", "a,b"],
    ["variance-id", "--alpha", "1", "--beta", "1", "--xi1", "0.2", "--seed", "1"],
    ["nonsense"],
])
def test_validation_errors_exit_2(argv, capsys):
    try:
        code = main(argv)
    except SystemExit as e:
        code = e.code
    assert code == 2
    assert capsys.readouterr().err


def test_numeric_failure_exit_3(monkeypatch, capsys):
    def boom(cfg):
        raise NumericDegeneracyError("ratio left its interval")

    monkeypatch.setitem(cli.HANDLERS, "rate", boom)
    assert main(["rate", "--alpha", "1", "--beta", "1", "--xi1", "0.8"]) == 3
    assert "numeric failure" in capsys.readouterr().err


def test_selftest_failure_exit_4(monkeypatch, capsys):
    from betawalk import selftest
    from betawalk.experiments import ExperimentReport
    monkeypatch.setattr(selftest, "run_selftest", lambda quick: (ExperimentReport("selftest", {}, 0), False))
    assert main(["selftest", "--quick"]) == 4


def test_selftest_quick(tmp_path):
    out = tmp_path / "self.csv"
    t0 = time.perf_counter()
    code = main(["selftest", "--quick", "-o", str(out)])
    assert time.perf_counter() - t0 < 60
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "check,value,tolerance,passed,seconds"
    assert all(",true," in ln for ln in lines[1:])


def test_exponent_byte_identical(tmp_path):
    argv = ["exponent", "--alpha", "1", "--beta", "1", "--xi1", "0.8", "--n-list", "256,512,1024",
            "--replicas", "500", "--seed", "7"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(argv + ["-o", str(a)]) == 0
    assert main(argv + ["-o", str(b), "--threads", "2"]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert a.read_text().splitlines()[0] == "N,m,n,var_log_rho,stderr,replicas"
    man = json.loads((tmp_path / "a.csv.manifest.json").read_text())
    assert man["seed"] == 7 and man["config"]["n_list"] == [256, 512, 1024]
    assert man["version"] and man["wall_time_s"] > 0


def test_wandering_observable(tmp_path):
    out = tmp_path / "w.json"
    assert main(["exponent", "--alpha", "1", "--beta", "1", "--xi1", "0.8", "--n-list", "64,128",
                 "--replicas", "50", "--seed", "1", "--observable", "wandering", "-o", str(out)]) == 0
    rep = json.loads(out.read_text())
    assert rep["name"] == "wandering" and "var_x1" in rep["fits"]


def test_simulate_and_empty(tmp_path):
    out = tmp_path / "s.csv"
    assert main(["simulate", "--alpha", "1", "--beta", "1", "--xi1", "0.8", "--n-list", "10,20",
                 "--replicas", "3", "--seed", "2", "-o", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "replica,N,x1,x2" and len(lines) == 7
    empty = tmp_path / "e.csv"
    assert main(["simulate", "--alpha", "1", "--beta", "1", "--xi1", "0.8", "--replicas", "0",
                 "--seed", "2", "-o", str(empty)]) == 0
    assert empty.read_text() == "replica,N,x1,x2\n"


def test_stationary_dump(tmp_path):
    out = tmp_path / "st.json"
    assert main(["stationary", "--alpha", "1", "--beta", "2", "--lambda", "0.7", "--dims", "20,30",
                 "--seed", "3", "-o", str(out)]) == 0
    rep = json.loads(out.read_text())
    assert rep["point_estimates"]["plaquette_residual"][0] <= 1e-10
    f = read_field(tmp_path / "st.bwre")
    assert f.dims == (20, 30) and f.seed == 3


def test_variance_id_command(tmp_path):
    out = tmp_path / "v.json"
    assert main(["variance-id", "--alpha", "1", "--beta", "1", "--lambda", "1", "--n", "16",
                 "--replicas", "200", "--seed", "1", "-o", str(out)]) == 0
    rep = json.loads(out.read_text())
    assert {"var_log_rho", "rhs_e1", "rhs_e2"} <= set(rep["point_estimates"])


def test_busemann_command(tmp_path):
    out = tmp_path / "b.json"
    assert main(["busemann", "--alpha", "1", "--beta", "1", "--xi1", "0.8", "--n", "64",
                 "--replicas", "100", "--seed", "1", "-o", str(out)]) == 0
    rep = json.loads(out.read_text())
    assert rep["tests"]["busemann_ks"]["p_value"] >= 0 and len(rep["rows"]) == 100


def test_config_round_trip_and_override(tmp_path):
    cfg = RunConfig("exponent", alpha=1.0, beta=2.0, xi1=0.7, n_list=[64, 128], replicas=10, seed=5)
    assert RunConfig.from_json(cfg.to_json()) == cfg
    path = tmp_path / "c.json"
    path.write_text(cfg.to_json())
    got = config_from_args(["exponent", "--config", str(path), "--replicas", "20", "--tilt", "1.0"])
    assert got.replicas == 20 and got.alpha == 1.0 and got.n_list == [64, 128]
    assert got.tilt == 1.0 and got.xi1 is None
    with pytest.raises(ValidationError):
        RunConfig.from_dict({"command": "rate", "colour": "red"})


def test_seed_is_drawn_and_announced(capsys):
    cfg = config_from_args(["simulate", "--alpha", "1", "--beta", "1", "--xi1", "0.8"])
    assert cfg.seed is not None
    assert f"seed: {cfg.seed}" in capsys.readouterr().err


def test_threads_env(monkeypatch):
    monkeypatch.setenv("BETAWALK_THREADS", "5")
    assert config_from_args(["rate", "--alpha", "1", "--beta", "1", "--xi1", "0.8"]).threads == 5
    assert config_from_args(["rate", "--alpha", "1", "--beta", "1", "--xi1", "0.8", "--threads", "2"]).threads == 2


def test_unwritable_output(tmp_path, capsys):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert main(["rate", "--alpha", "1", "--beta", "1", "--xi1", "0.8", "-o", str(blocker / "out.json")]) == 2
    assert "cannot write" in capsys.readouterr().err


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "betawalk", "rate", "--alpha", "1", "--beta", "1", "--xi1", "0.8"],
                       capture_output=True, text=True, timeout=120)
    assert r.returncode == 0 and json.loads(r.stdout)["iq"] == pytest.approx(0.2)
