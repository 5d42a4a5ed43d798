import subprocess
import sys

import numpy as np
import pytest

from gbessel import cli
from gbessel.cli import ConfigError, RunConfig, config_from_header, main, parse_range


def rows_of(text):
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    return lines[0].split(","), [ln.split(",") for ln in lines[1:]]


def test_gap_single_row(tmp_path):
    out = tmp_path / "g.csv"
    assert main(["gap", "single", "--a", "1.0", "--nu", "0.5", "--tau", "0.0", "-o", str(out)]) == 0
    cols, rows = rows_of(out.read_text())
    assert cols == ["a", "nu", "tau", "times", "logdet", "det", "self_convergence_estimate"]
    assert len(rows) == 1
    det = float(rows[0][5])
    assert 0 < det < 1 and abs(det - 0.7919447422409) < 1e-10


def test_header_round_trip(tmp_path):
    out = tmp_path / "g.csv"
    main(["gap", "single", "--a", "0.7", "--tau", "-0.25", "--order", "28", "-o", str(out)])
    text = out.read_text()
    cfg = config_from_header(text)
    assert cfg.a == (0.7,) and cfg.tau == -0.25 and cfg.order == 28
    assert cfg.mode == "gap-single" and cfg.output == str(out)
    assert RunConfig.from_lines(cfg.to_lines()) == cfg
    for key in ("gbessel ", "geometry: gamma", "conventions: kappa_single", "resolution: "):
        assert key in text


def test_round_trip_of_awkward_values():
    cfg = RunConfig(a=(0.1 + 0.2,), times=(1 / 3, 2 / 3), tau=-1e-17, self_check=False)
    assert RunConfig.from_lines(cfg.to_lines()) == cfg


def test_config_file_with_comments(tmp_path):
    conf = tmp_path / "run.conf"
    conf.write_text("# a gap\na = 0.9   # right endpoint\n\nnu = 1.0\n")
    out = tmp_path / "g.csv"
    assert main(["gap", "single", "--config", str(conf), "--tau", "0.5", "-o", str(out)]) == 0
    cfg = config_from_header(out.read_text())
    assert cfg.a == (0.9,) and cfg.nu == 1.0 and cfg.tau == 0.5


@pytest.mark.parametrize("argv", [
    ["gap", "single", "--a", "-1"],
    ["gap", "single", "--order", "zero"],
    ["gap", "multi", "--a", "1.0"],
    ["gap", "single", "--normalization", "other"],
    ["scan", "--a", "0.1:2.0"],
    ["gap", "bogus"],
])
def test_invalid_config_exit_code(argv, capsys):
    assert main(argv) == 2


def test_unknown_config_key(tmp_path):
    conf = tmp_path / "bad.conf"
    conf.write_text("alpha = 3\n")
    assert main(["gap", "single", "--config", str(conf)]) == 2
    with pytest.raises(ConfigError):
        RunConfig.from_lines(["no equals sign"])


def test_verify_failure_exit_code(capsys):
    assert main(["verify", "identity", "--suite", "quick", "--tol", "1e-30"]) == 1
    assert "FAIL" in capsys.readouterr().err
    assert main(["verify", "identity", "--suite", "quick"]) == 0


def test_scan_order_and_monotone(tmp_path, monkeypatch):
    monkeypatch.setenv(cli.WORKERS_ENV, "3")
    out = tmp_path / "s.csv"
    assert main(["scan", "--a", "0.1:2.0:8", "--no-self-check", "-o", str(out)]) == 0
    _, rows = rows_of(out.read_text())
    a = [float(r[0]) for r in rows]
    det = [float(r[5]) for r in rows]
    assert np.allclose(a, np.linspace(0.1, 2.0, 8))
    assert all(d2 <= d1 for d1, d2 in zip(det, det[1:]))


def test_deterministic_across_worker_counts(tmp_path, monkeypatch):
    texts = []
    for n in ("1", "2"):
        monkeypatch.setenv(cli.WORKERS_ENV, n)
        out = tmp_path / f"s{n}.csv"
        main(["scan", "--tau", "-0.5:0.5:4", "--a", "1.0", "--no-self-check", "-o", str(out)])
        texts.append(out.read_text().replace(str(out), "OUT"))
    assert texts[0] == texts[1]


def test_bad_worker_env(monkeypatch):
    monkeypatch.setenv(cli.WORKERS_ENV, "many")
    assert main(["scan", "--a", "0.5:1.0:2"]) == 2


def test_gap_multi_configs(tmp_path):
    out = tmp_path / "m.csv"
    assert main(["gap", "multi", "--ends", "0.5,1.2", "--tau", "0.3", "--no-self-check",
                 "-o", str(out)]) == 0
    _, rows = rows_of(out.read_text())
    assert rows[0][0] == "0.5;1.2" and abs(float(rows[0][5]) - np.exp(-0.147228858096710)) < 1e-10


def test_verify_lax_rows(tmp_path):
    out = tmp_path / "l.csv"
    assert main(["verify", "lax", "-o", str(out)]) == 0
    cols, rows = rows_of(out.read_text())
    assert cols == ["lambda", "which", "residual"]
    assert {r[1] for r in rows} >= {"A", "U", "V"}


def test_verify_jmu_columns(tmp_path):
    out = tmp_path / "j.csv"
    assert main(["verify", "jmu", "--suite", "quick", "-o", str(out)]) == 0
    cols, rows = rows_of(out.read_text())
    assert cols == ["config", "parameter", "residue_value", "fd_value", "residual"]
    assert [r[1] for r in rows] == ["a", "a[printed]", "tau", "tau[printed]"]


def test_plot_option(tmp_path):
    pytest.importorskip("matplotlib")
    out = tmp_path / "s.csv"
    assert main(["scan", "--a", "0.2:1.0:3", "--no-self-check", "--plot", "-o", str(out)]) == 0
    assert (tmp_path / "s.png").stat().st_size > 0
    assert main(["scan", "--a", "0.2:1.0:3", "--plot"]) == 2


def test_parse_range():
    assert parse_range("1:2:3") == [1.0, 1.5, 2.0]
    assert parse_range("0.5:9:1") == [0.5]
    with pytest.raises(ConfigError):
        parse_range("1:2:0")


def test_console_entry_point():
    r = subprocess.run([sys.executable, "-m", "gbessel", "gap", "single", "--a", "0.5",
                        "--no-self-check"], capture_output=True, text=True, timeout=120)
    assert r.returncode == 0
    assert r.stdout.splitlines()[-1].startswith("0.5,0.5,0.0,0.0,")


def test_negative_values_after_flags():
    got = cli._join_negative_values(["scan", "--plot", "--tau", "-0.5:0.5:4", "--nu", "1", "--a", "-.5"])
    assert got == ["scan", "--plot", "--tau=-0.5:0.5:4", "--nu", "1", "--a=-.5"]
