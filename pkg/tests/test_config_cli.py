import json

import numpy as np
import pytest

from flga.cli import main
from flga.config import LAMBDA_O, ConfigError, RunConfig, load_config, parse_pairs, preset_names


@pytest.fixture
def outroot(tmp_path, monkeypatch):
    monkeypatch.setenv("FLGA_OUTPUT_ROOT", str(tmp_path))
    return tmp_path


def test_presets_load():
    names = preset_names()
    for must in ("eq1d", "eq2d", "shockwave", "taylor_green", "lid_cavity", "qflga", "bench"):
        assert must in names
    for n in names:
        assert isinstance(load_config(n), RunConfig)


def test_parse_and_overrides(tmp_path):
    p = tmp_path / "a.cfg"
    p.write_text("case = shockwave  # comment\nnx = 40\nC = 0.5\n\n")
    cfg = load_config(str(p), {"steps": "7"})
    assert (cfg.nx, cfg.C, cfg.steps, cfg.source) == (40, (0.5,), 7, str(p))
    assert load_config("taylor_green", {"lambdas": "lambda_o"}).lambdas == LAMBDA_O
    with pytest.raises(ConfigError) as e:
        parse_pairs("nx 40")
    assert "line 1" in e.value.problems


def test_unknown_and_bad_keys_rejected():
    with pytest.raises(ConfigError) as e:
        load_config("shockwave", {"nxx": "3", "steps": "many"})
    assert set(e.value.problems) == {"nxx", "steps"}
    for bad in ({"warmup": "5000"}, {"k": "2,3"}, {"model": "D2Q9"}, {"nx": "101"},
                {"repeats": "2"}, {"compare": "lbm", "lbm_tau": "0.4"}, {"U_list": "1.5"}):
        with pytest.raises(ConfigError):
            load_config("shockwave", bad)
    with pytest.raises(ConfigError):
        load_config("no_such_preset")


def test_round_trip_text(tmp_path):
    cfg = load_config("lid_cavity")
    p = tmp_path / "x.cfg"
    p.write_text(cfg.as_text())
    again = load_config(str(p))
    again.source = cfg.source
    assert again == cfg


def test_cli_config_error_exit_code(outroot, capsys):
    assert main(["run", "shockwave", "--set", "bogus=1"]) == 2
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "config" and "bogus" in err["problems"]
    assert main(["run", "shockwave", "--set", "noequals"]) == 2


def test_cli_instability_exit_code(outroot, capsys):
    code = main(["run", "shockwave", "--no-write", "--set", "nx=100", "--set", "steps=200",
                 "--set", "C=40", "--set", "negative=strict", "--set", "compare=none"])
    assert code == 3
    assert json.loads(capsys.readouterr().err)["error"] == "instability"


def test_cli_run_writes_outputs(outroot, capsys):
    assert main(["run", "shockwave", "--set", "nx=64", "--set", "steps=20",
                 "--set", "output=sw"]) == 0
    rep = json.loads(capsys.readouterr().out)
    d = outroot / "sw"
    assert (d / "report.json").is_file() and (d / "config.cfg").is_file()
    assert rep["case"] == "shockwave"
    assert any(f.endswith(".csv") for f in rep["files"])
    # the saved config replays to the same report
    assert main(["run", str(d / "config.cfg"), "--no-write"]) == 0
    again = json.loads(capsys.readouterr().out)
    assert again["norms"] == rep["norms"]
    assert again["drift"] == rep["drift"]


def test_cli_dump_table_and_presets(tmp_path, capsys):
    out = tmp_path / "t.csv"
    assert main(["dump-table", "--model", "D2Q9", "--k", "2", "--C", "1", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "class_index,in_multiset,out_multiset,coefficient"
    assert len(lines) == 61
    assert main(["dump-table", "--model", "D2Q9", "--lambdas", "1,2", "--out", str(out)]) == 2
    capsys.readouterr()
    assert main(["presets"]) == 0
    assert "qflga" in capsys.readouterr().out


def test_cli_qflga_and_bench(outroot, capsys):
    assert main(["qflga-compare", "--no-write", "--set", "nx=16"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["norms"]["flga_f"]["max"] < 1e-12
    assert main(["bench", "--no-write", "--set", "Ns=200,400,800", "--set", "solvers=lbm"]) == 0
    assert '"lbm"' in capsys.readouterr().out
    assert main(["qflga-compare", "shockwave", "--no-write"]) == 2


def test_sweep_cli(outroot, capsys):
    assert main(["sweep-tau", "sweep_d1q3", "--set", "nx=64", "--set", "steps=40",
                 "--set", "C_list=1,2,4", "--set", "output=sw"]) == 0
    assert "gamma=" in capsys.readouterr().out
    assert (outroot / "sw" / "sweep.csv").is_file()
    assert (outroot / "sw" / "calibration.csv").is_file()
