import os

import numpy
import pytest
from nlallee import util
from nlallee.cli import EXIT_MONITOR, EXIT_OK, EXIT_USAGE, main
from nlallee.grid import Grid
from nlallee.model import ModelParams, StateField

CONFIG_DIR = os.path.join(os.path.dirname(__file__), "..", "configs")

MODEL = """
model.d = 1.0
model.alpha = 0.005
model.theta_min = 0.2
model.theta_max = 0.9
"""

TINY_SIMULATION = MODEL + """
grid.x_lo = -10
grid.x_hi = 10
grid.nx = 41
grid.ntheta = 11
integrator.t_end = 4
integrator.n_records = 4
initial.L = 6
"""


def _config(tmp_path, text, name="run.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def _porcelain(capsys):
    line = capsys.readouterr().out.strip().splitlines()[-1]
    return dict(item.split("=", 1) for item in line.split())


def test_eigen_midpoint_limit(capsys):
    code = main(["eigen", "--alpha", "1000", "--theta-min", "0.2", "--theta-max", "0.9", "--porcelain"])
    assert code == EXIT_OK
    values = _porcelain(capsys)
    assert float(values["lambda"]) == pytest.approx(0.55, abs=1e-3)
    assert values["shape"] == "pass"


def test_eigen_shift(capsys):
    flags = ["eigen", "--alpha", "0.005", "--theta-min", "0.2", "--theta-max", "0.9", "--porcelain"]
    main(flags)
    base = float(_porcelain(capsys)["lambda"])
    main(flags + ["--shift", "-0.3"])
    shifted = float(_porcelain(capsys)["lambda"])
    assert shifted == pytest.approx(base - 0.3, abs=1e-10)


def test_eigen_refinement(capsys):
    flags = ["eigen", "--alpha", "0.005", "--theta-min", "0.2", "--theta-max", "0.9", "--porcelain"]
    main(flags)
    coarse = float(_porcelain(capsys)["lambda"])
    main(flags + ["--ntheta", "1025"])
    fine = float(_porcelain(capsys)["lambda"])
    assert abs(coarse - fine) < 10.0 * (0.7 / 512) ** 2


def test_eigen_reads_model_from_config(tmp_path, capsys):
    assert main(["eigen", "--config", _config(tmp_path, MODEL), "--porcelain"]) == EXIT_OK
    assert float(_porcelain(capsys)["lambda"]) > 0.2


def test_eigen_missing_parameter(capsys):
    assert main(["eigen", "--alpha", "0.005"]) == EXIT_USAGE
    assert "--theta-min" in capsys.readouterr().err


def test_unknown_command():
    with pytest.raises(SystemExit) as info:
        main(["plot"])
    assert info.value.code == EXIT_USAGE


def test_regime_porcelain(capsys):
    code = main(["regime", "--alpha", "0.005", "--theta-min", "0.2", "--theta-max", "0.9", "--porcelain"])
    assert code == EXIT_OK
    values = _porcelain(capsys)
    assert values["cell"] == "SupercriticalSplit"
    assert float(values["alpha_sharp"]) == pytest.approx(259.4, abs=0.1)
    assert values["prediction"] == "Unknown"


def test_simulate_writes_outputs(tmp_path, capsys):
    config = _config(tmp_path, TINY_SIMULATION)
    out = tmp_path / "out"
    assert main(["simulate", "--config", config, "--out", str(out)]) == EXIT_OK

    names = set(os.listdir(out))
    assert {"trajectory.csv", "outcome.txt", "monitor.txt", "monitor.csv"} <= names
    assert {util.snapshot_filename(t) for t in (0.0, 1.0, 2.0, 3.0, 4.0)} <= names

    frame = util.read_csv(out / "trajectory.csv")
    assert list(frame.columns) == util.TRAJECTORY_COLUMNS
    assert len(frame) == 5
    assert (out / "outcome.txt").read_text().startswith("outcome=")


def test_simulate_is_deterministic(tmp_path):
    config = _config(tmp_path, TINY_SIMULATION)
    for name in ("a", "b"):
        assert main(["simulate", "--config", config, "--out", str(tmp_path / name), "--porcelain"]) == EXIT_OK
    for name in ("trajectory.csv", "monitor.csv", util.snapshot_filename(4.0)):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_simulate_support_beyond_domain(tmp_path, capsys):
    config = _config(tmp_path, TINY_SIMULATION.replace("initial.L = 6", "initial.L = 60"))
    assert main(["simulate", "--config", config, "--out", str(tmp_path / "out")]) != EXIT_OK
    assert "DomainError" in capsys.readouterr().err


def test_simulate_reports_config_error(tmp_path, capsys):
    config = _config(tmp_path, MODEL + "grid.nx = lots\n")
    assert main(["simulate", "--config", config]) == EXIT_USAGE
    assert "grid.nx" in capsys.readouterr().err


def test_monitor_rechecks_snapshots(tmp_path, capsys):
    config = _config(tmp_path, TINY_SIMULATION)
    out = tmp_path / "out"
    main(["simulate", "--config", config, "--out", str(out)])
    capsys.readouterr()
    assert main(["monitor", "--config", config, "--snapshots", str(out), "--strict", "--porcelain"]) == EXIT_OK
    assert _porcelain(capsys)["monitors"] == "pass"


def test_monitor_strict_failure(tmp_path, capsys):
    params = ModelParams(d=1.0, alpha=0.005, theta_min=0.2, theta_max=0.9)
    grid = Grid(-10.0, 10.0, 21, 8, params.theta_min, params.theta_max)
    u = numpy.full(grid.shape, 1.0 / params.width)
    snapshots = tmp_path / "snapshots"
    snapshots.mkdir()
    util.write_snapshot(StateField(0.0, u, params, grid), snapshots / util.snapshot_filename(0.0))
    u = u.copy()
    u[4, 4] = -0.01
    util.write_snapshot(StateField(1.0, u, params, grid), snapshots / util.snapshot_filename(1.0))

    config = _config(tmp_path, MODEL)
    args = ["monitor", "--config", config, "--snapshots", str(snapshots), "--porcelain"]
    assert main(args) == EXIT_OK
    assert main(args + ["--strict"]) == EXIT_MONITOR
    assert "positivity" in _porcelain(capsys)["failed"]


SWEEP = TINY_SIMULATION + """
integrator.keep_snapshots = false
sweep.alpha = 0.001, 0.005
sweep.L = 4, 12
output.gnuplot = true
"""


def test_sweep_worker_count_does_not_change_results(tmp_path, capsys):
    config = _config(tmp_path, SWEEP)
    frames = []
    for workers in ("1", "2"):
        out = tmp_path / f"w{workers}"
        assert main(["sweep", "--config", config, "--out", str(out), "--workers", workers]) == EXIT_OK
        frames.append(util.read_csv(out / "sweep.csv").drop(columns=["wall_ms"]))
        assert (out / "sweep_matrix.dat").exists()
        assert "# alpha_star=" in (out / "sweep.csv").read_text()
    assert frames[0].equals(frames[1])
    assert list(frames[0].columns) == util.SWEEP_COLUMNS[:-1]
    assert len(frames[0]) == 4


def test_sweep_needs_section(tmp_path):
    assert main(["sweep", "--config", _config(tmp_path, TINY_SIMULATION), "--out", str(tmp_path)]) == EXIT_USAGE


def test_scan(tmp_path, capsys):
    text = TINY_SIMULATION + "integrator.keep_snapshots = false\nscan.theta_tilde = 0.3, 0.8\nscan.L = 4\n"
    out = tmp_path / "out"
    assert main(["scan", "--config", _config(tmp_path, text), "--out", str(out)]) == EXIT_OK
    frame = util.read_csv(out / "scan.csv")
    assert list(frame["theta_tilde"]) == [0.3, 0.8]
    assert "uniform_control=" in (out / "scan.csv").read_text()


def test_oracle(tmp_path, capsys):
    text = """
oracle.theta0 = -1
oracle.x_lo = -50
oracle.x_hi = 50
oracle.nx = 401
oracle.t_end = 20
oracle.plateau_width = 10
"""
    out = tmp_path / "out"
    assert main(["oracle", "--config", _config(tmp_path, text), "--out", str(out)]) == EXIT_OK
    frame = util.read_csv(out / "oracle.csv")
    assert frame["expected"][0] == pytest.approx(2.0)
    assert frame["measured"][0] == pytest.approx(2.0, rel=0.15)


@pytest.mark.slow
def test_uniform_block_persists(tmp_path):
    out = tmp_path / "uniform_block"
    assert main(["simulate", "--config", os.path.join(CONFIG_DIR, "uniform_block.cfg"), "--out", str(out)]) == EXIT_OK
    assert (out / util.snapshot_filename(200.0)).exists()
    assert (out / "outcome.txt").read_text().startswith("outcome=Persistence")
