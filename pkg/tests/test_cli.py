import json
import textwrap

import pytest

from ragetn import cli


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(textwrap.dedent(text))
    return str(p)


@pytest.mark.parametrize("spec,mode,expected", [
    ({"backbone": "rage-mps", "n": 12, "d": 1}, "raw", 138),
    ({"backbone": "mps", "n": 16, "d": 4, "boundary": "closed"}, "raw", 512),
    ({"backbone": "mps", "n": 16, "d": 4}, "flat", 384),
    ({"backbone": "rage-mps", "n": 16, "d": 4}, "flat", 476),
])
def test_param_count_anchors(spec, mode, expected):
    assert cli.param_count(spec, mode) == expected


def test_param_count_units_and_errors():
    spec = {"backbone": "mps", "n": 6, "d": 2}
    assert cli.param_count(spec, "raw", "real") == 2 * cli.param_count(spec, "raw", "mixed")
    assert cli.param_count({"backbone": "tts", "n": 8, "d": 2}, "flat") <= \
        cli.param_count({"backbone": "tts", "n": 8, "d": 2}, "raw")
    with pytest.raises(ValueError):
        cli.param_count({"backbone": "peps", "n": 4, "d": 2})
    with pytest.raises(ValueError):
        cli.param_count(spec, "weird")


def test_param_count_command(capsys):
    assert cli.main(["param-count", "backbone=mps", "n=16", "d=4", "--mode", "flat"]) == 0
    assert capsys.readouterr().out.strip() == "384"


def test_selftest_passes(capsys):
    assert cli.main(["selftest"]) == 0
    out = capsys.readouterr().out
    assert "FAIL" not in out and "checks passed" in out


def test_ground_state_run_and_determinism(tmp_path):
    cfg = write(tmp_path, "gs.ini", f"""
        [experiment]
        kind = ground_state
        seed = 2
        output = {tmp_path}/gs.csv

        [model]
        builder = ising_2d
        lx = 2
        ly = 2

        [ansatz]
        backbone = mps
        bond_dim = 4
        """)
    assert cli.main(["run", cfg]) == 0
    first = (tmp_path / "gs.csv").read_bytes()
    lines = first.decode().splitlines()
    assert lines[0] == "sweep,energy,param_count"
    meta = json.loads((tmp_path / "gs.csv.meta.json").read_text())
    assert meta["exact_energy"] == meta["final_energy"]
    assert meta["config"]["model"]["builder"] == "ising_2d"
    assert cli.main(["run", cfg]) == 0
    assert (tmp_path / "gs.csv").read_bytes() == first


def test_circuit_fidelity_run(tmp_path):
    cfg = write(tmp_path, "c.ini", f"""
        [experiment]
        kind = circuit_fidelity
        seed = 0
        output = {tmp_path}/c.csv
        [circuit]
        n_sites = 5
        n_blocks = 3
        n_seeds = 2
        bond_dim = 2
        """)
    assert cli.main(["run", cfg]) == 0
    rows = (tmp_path / "c.csv").read_text().splitlines()
    assert rows[0] == "block,mean_fidelity_mps,mean_fidelity_rage" and len(rows) == 4


def test_model_scan_run(tmp_path):
    cfg = write(tmp_path, "s.ini", f"""
        [experiment]
        kind = model_scan
        seed = 0
        output = {tmp_path}/s.csv
        [model]
        builder = ising_2d
        lx = 2
        ly = 2
        [scan]
        parameter = b
        values = 0.5, 1.0
        [ansatz.mps2]
        backbone = mps
        bond_dim = 2
        [ansatz.tts2]
        backbone = tts
        bond_dim = 2
        """)
    assert cli.main(["run", cfg]) == 0
    rows = (tmp_path / "s.csv").read_text().splitlines()
    assert rows[0] == "b,exact_energy,exact_first_excited,energy_mps2,energy_tts2"
    assert len(rows) == 3


@pytest.mark.parametrize("body,line", [
    ("[experiment]\nkind = ground_state\nseed = 1\n[model]\nbuilder = nope\n", 5),
    ("[experiment]\nkind = ground_state\nseed = one\n", 3),
    ("[experiment]\nkind ground_state\n", 2),
    ("[experiment]\nkind = teleport\nseed = 1\n", 2),
])
def test_config_errors_report_lines(tmp_path, capsys, body, line):
    cfg = write(tmp_path, "bad.ini", body)
    assert cli.main(["run", cfg]) == 2
    assert f"line {line}:" in capsys.readouterr().err


def test_seed_required(tmp_path, capsys):
    cfg = write(tmp_path, "noseed.ini", "[experiment]\nkind = ground_state\n[model]\nbuilder = ising_2d\nlx = 2\nly = 1\n")
    assert cli.main(["run", cfg]) == 2
    assert "seed" in capsys.readouterr().err


def test_number_formats():
    assert cli.fmt_energy(-1.0 / 3) == "-0.333333333333"
    assert cli.fmt_fidelity(2.0 / 3) == "0.6666666667"
