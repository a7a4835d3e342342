import numpy as np

from fdd_precoding.cli import main

TINY = """
m = 6
k = 3
t_dl = 2
powers_db = 10, 20
algorithms = mmse_only, awamse
setups = 1
trials = 2
seed = 5
"""


def _write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def test_sweep_writes_csv_and_plot_data(tmp_path, capsys):
    cfg = _write(tmp_path, "exp.cfg", TINY)
    out = tmp_path / "r.csv"
    dat = tmp_path / "r.dat"
    assert main(["sweep", "--config", cfg, "--out", str(out), "--plot-data", str(dat)]) == 0
    assert "wrote 8 records" in capsys.readouterr().out
    assert out.exists() and dat.exists()
    assert len(out.read_text().splitlines()) == 9


def test_sweep_byte_identical_reruns(tmp_path):
    cfg = _write(tmp_path, "exp.cfg", TINY)
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["sweep", "--config", cfg, "--out", str(a)]) == 0
    assert main(["sweep", "--config", cfg, "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_config_error_exit_code(tmp_path, capsys):
    cfg = _write(tmp_path, "bad.cfg", "m = 6\nwhat = ever\n")
    assert main(["sweep", "--config", cfg, "--out", str(tmp_path / "x.csv")]) == 1
    assert "config error" in capsys.readouterr().err


def test_missing_config_exit_code(tmp_path):
    assert main(["sweep", "--config", str(tmp_path / "nope.cfg"),
                 "--out", str(tmp_path / "x.csv")]) == 1


def test_missing_argument_exit_code():
    assert main(["sweep"]) == 1


def test_bars_command(tmp_path, capsys):
    cfg = _write(tmp_path, "bars.cfg", TINY.replace("powers_db = 10, 20", "powers_db = 20"))
    assert main(["bars", "--config", cfg]) == 0
    out = capsys.readouterr().out
    assert "mmse_only" in out and "awamse" in out


def test_power_alloc_command(tmp_path, capsys):
    cfg = _write(tmp_path, "pa.cfg", TINY.replace("powers_db = 10, 20", "powers_db = 20"))
    assert main(["power-alloc", "--config", cfg, "--power-db", "20"]) == 0
    assert "power fractions" in capsys.readouterr().out


def test_slopes_command(tmp_path, capsys):
    cfg = _write(tmp_path, "exp.cfg", TINY)
    out = tmp_path / "r.csv"
    assert main(["sweep", "--config", cfg, "--out", str(out)]) == 0
    assert main(["slopes", "--in", str(out), "--window", "10,20"]) == 0
    text = capsys.readouterr().out
    assert "slope" in text and "awamse" in text


def test_slopes_bad_window(tmp_path):
    cfg = _write(tmp_path, "exp.cfg", TINY)
    out = tmp_path / "r.csv"
    main(["sweep", "--config", cfg, "--out", str(out)])
    assert main(["slopes", "--in", str(out), "--window", "oops"]) == 1


def test_bench_command(tmp_path, capsys):
    cfg = _write(tmp_path, "bench.cfg", TINY)
    assert main(["bench", "--config", cfg]) == 0
    assert "ms/solve" in capsys.readouterr().out
