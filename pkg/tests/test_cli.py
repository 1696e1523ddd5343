import csv
import json

import pytest

from irsvlc.cli import main

SMALL = ["--set", "irs.nx=4", "--set", "irs.ny=3"]


def rows(path):
    with open(path) as fh:
        return list(csv.reader(fh))


def test_channel_writes_cfr_and_taps(tmp_path, capsys):
    assert main(["channel", "--user", "eve", "--points", "5", "--fmax", "4e8", "--out", str(tmp_path)] + SMALL) == 0
    cfr = rows(tmp_path / "cfr_eve.csv")
    assert cfr[0] == ["f_Hz", "re_Q", "im_Q", "abs_Q2"] and len(cfr) == 6
    assert float(cfr[-1][0]) == 4e8
    taps = rows(tmp_path / "taps_eve.csv")
    assert taps[0] == ["n", "gain", "delay_s"] and len(taps) == 1 + 1 + 12
    assert json.loads((tmp_path / "manifest.json").read_text())["subcommand"] == "channel"


def test_rate_prints_and_writes_snr(tmp_path, capsys):
    assert main(["rate", "--alloc", "101010101010", "--power", "2", "--snr-csv", "--out", str(tmp_path)]
                + SMALL) == 0
    out = capsys.readouterr().out
    assert "R_B" in out and "C_s" in out and "Mbit/s" in out
    snr = rows(tmp_path / "snr.csv")
    assert snr[0] == ["f_Hz", "snr_bob", "snr_eve"] and len(snr) == 1 + 4097


def test_rate_rejects_wrong_length(tmp_path, capsys):
    assert main(["rate", "--alloc", "101", "--out", str(tmp_path)] + SMALL) == 2
    assert "12 elements" in capsys.readouterr().err


def test_optimize_ga_history(tmp_path, capsys):
    assert main(["optimize", "--seed", "3", "--out", str(tmp_path), "--set", "ga.generations=5"] + SMALL) == 0
    h = rows(tmp_path / "history.csv")
    assert h[0] == ["generation", "best_Cs_Mbps"] and len(h) == 1 + 6
    assert "allocation" in capsys.readouterr().out


def test_optimize_es_guard(tmp_path, capsys):
    assert main(["optimize", "--mode", "es", "--out", str(tmp_path)]) != 0
    assert "exhaustive search over 144" in capsys.readouterr().err


def test_optimize_baselines(tmp_path):
    assert main(["optimize", "--mode", "baselines", "--out", str(tmp_path)] + SMALL) == 0
    labels = [r[0] for r in rows(tmp_path / "baselines.csv")[1:]]
    assert labels == ["los_only", "all_bob", "all_eve", "random"]


def test_experiment_twice_identical(tmp_path):
    args = ["experiment", "--trials", "2", "--seed", "7", "--powers", "1,3", "--set", "ga.generations=3"] + SMALL
    assert main(args + ["--out", str(tmp_path / "a")]) == 0
    assert main(args + ["--out", str(tmp_path / "b"), "--threads", "2"]) == 0
    for name in ("trials.csv", "summary.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_output_dir_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("IRSVLC_OUTPUT_DIR", str(tmp_path / "env"))
    assert main(["channel", "--points", "3"] + SMALL) == 0
    assert (tmp_path / "env" / "cfr_bob.csv").exists()


def test_figures_are_opt_in(tmp_path):
    assert main(["optimize", "--out", str(tmp_path), "--set", "ga.generations=2"] + SMALL) == 0
    assert not list(tmp_path.glob("*.png"))
    assert main(["optimize", "--figures", "--out", str(tmp_path), "--set", "ga.generations=2"] + SMALL) == 0
    assert (tmp_path / "convergence.png").stat().st_size > 0


def test_bad_config_exit_code(tmp_path, capsys):
    assert main(["rate", "--set", "led.half_power_semiangle_deg=120", "--out", str(tmp_path)]) == 2
    assert "led" in capsys.readouterr().err


def test_unknown_subcommand():
    with pytest.raises(SystemExit) as exc:
        main(["teleport"])
    assert exc.value.code != 0


def test_validate_quick_subset(capsys):
    assert main(["validate", "--quick", "--only", "geometry"]) == 0
    out = capsys.readouterr().out
    assert out.count("PASS") == 4 and "FAIL" not in out
