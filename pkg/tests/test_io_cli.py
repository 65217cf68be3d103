import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from xxzsqueeze import io
from xxzsqueeze.cli import main
from xxzsqueeze.oracles import oat_series


def run_cli(args, env=None):
    return main(args)


def test_parse_grid():
    vals = io.parse_grid("-3:1:0.1")
    assert len(vals) == 41
    assert vals[0] == pytest.approx(-3.0)
    assert vals[-1] == pytest.approx(1.0)
    assert np.allclose(np.diff(vals), 0.1)
    assert list(io.parse_grid("0.5")) == [0.5]
    assert list(io.parse_grid("0,3,inf"))[:2] == [0.0, 3.0]
    assert np.isinf(io.parse_grid("0,3,inf")[2])
    with pytest.raises(ValueError):
        io.parse_grid("1:0:0.5:9")
    with pytest.raises(ValueError):
        io.parse_grid("0:1:0")


def test_csv_round_trip(tmp_path):
    series = oat_series(12, 0.7, np.linspace(0, 1, 9))
    path = tmp_path / "series.csv"
    io.write_series_csv(path, series)
    table = io.read_csv(path)
    assert list(table.keys()) == list(io.SERIES_COLUMNS)
    assert np.allclose(table["Sx"], series.mean[:, 0])
    assert np.allclose(table["xi2"], series.xi2)
    assert np.allclose(table["tau"], series.t * 0.7)
    assert np.allclose(table["err_S2"], 0.0)


def test_csv_blank_tau_at_isotropic(tmp_path):
    from xxzsqueeze.series import MomentSeries

    t = np.linspace(0, 1, 3)
    series = MomentSeries(t=t, mean=np.zeros((3, 3)), second=np.zeros((3, 3, 3)),
                          s2=np.zeros(3), xi2=np.ones(3), n_spins=4, tau=None)
    path = tmp_path / "series.csv"
    io.write_series_csv(path, series)
    second_line = path.read_text().splitlines()[1].split(",")
    assert second_line[1] == ""  # tau column blank


def test_simulate_oat_and_manifest(tmp_path):
    out = tmp_path / "run"
    rc = run_cli([
        "simulate", "--engine", "oat", "--dims", "2", "--size", "6",
        "--alpha", "0", "--jz-over-jperp", "1.5", "--time-points", "41",
        "--seed", "3", "--out", str(out),
    ])
    assert rc == 0
    table = io.read_csv(out / "series.csv")
    assert table["xi2"][0] == pytest.approx(1.0)
    manifest = io.read_manifest(out)
    assert manifest["schema_version"] == io.SCHEMA_VERSION
    assert manifest["config"]["alpha"] == "0"
    assert "build_id" in manifest and "wall_time_s" in manifest


def test_sweep_cell_count_and_rows(tmp_path):
    out = tmp_path / "sweep"
    rc = run_cli([
        "sweep", "--engine", "ising", "--dims", "1", "--size", "8",
        "--alpha", "2", "--jz-over-jperp", "-3:1:0.1", "--time-points", "41",
        "--seed", "7", "--out", str(out),
    ])
    assert rc == 0
    table = io.read_csv(out / "slice_a2_L8.csv")
    assert len(table["alpha"]) == 41
    assert io.read_manifest(out)["cells_total"] == 41


def test_gap_alpha_zero_identity(tmp_path):
    out = tmp_path / "gap"
    rc = run_cli(["gap", "--dims", "2", "--alpha", "0", "--sizes", "8,16,32",
                  "--out", str(out)])
    assert rc == 0
    table = io.read_csv(out / "gap.csv")
    assert np.allclose(table["gap"], table["L"] ** 2)  # N * |jperp|


def test_cli_determinism_and_workers(tmp_path):
    args = ["simulate", "--engine", "dtwa", "--dims", "2", "--size", "3",
            "--alpha", "3", "--jz-over-jperp", "0.5", "--trajectories", "30",
            "--time-points", "21", "--seed", "11"]
    out1, out2, out3 = (tmp_path / n for n in ("a", "b", "c"))
    assert run_cli(args + ["--out", str(out1)]) == 0
    assert run_cli(args + ["--out", str(out2)]) == 0
    assert run_cli(args + ["--out", str(out3), "--workers", "3"]) == 0
    ref = (out1 / "series.csv").read_bytes()
    assert (out2 / "series.csv").read_bytes() == ref
    assert (out3 / "series.csv").read_bytes() == ref


def test_sweep_resume_reuses_rows(tmp_path):
    base = ["sweep", "--engine", "oat", "--dims", "1", "--size", "6",
            "--alpha", "1", "--time-points", "31", "--seed", "5"]
    full = tmp_path / "full"
    assert run_cli(base + ["--jz-over-jperp", "-1:0:0.5", "--out", str(full)]) == 0
    partial = tmp_path / "partial"
    assert run_cli(base + ["--jz-over-jperp", "-1:-0.5:0.5", "--out", str(partial)]) == 0
    assert run_cli(base + ["--jz-over-jperp", "-1:0:0.5", "--out", str(partial),
                           "--resume"]) == 0
    assert (partial / "slice_a1_L6.csv").read_bytes() == (full / "slice_a1_L6.csv").read_bytes()


def test_manifest_replay_reproduces_csv(tmp_path):
    out = tmp_path / "first"
    args = ["simulate", "--engine", "ising", "--dims", "1", "--size", "7",
            "--alpha", "1.5", "--jz-over-jperp", "-0.5", "--time-points", "31",
            "--seed", "9", "--out", str(out)]
    assert run_cli(args) == 0
    manifest = io.read_manifest(out)
    replay_out = tmp_path / "replay"
    cfg = manifest["config"]
    replay_args = ["simulate", "--engine", cfg["engine"], "--dims", str(cfg["dims"]),
                   "--size", str(cfg["size"]), "--alpha", cfg["alpha"],
                   "--jz-over-jperp", cfg["jz_over_jperp"],
                   "--time-points", str(cfg["time_points"]), "--seed", str(cfg["seed"]),
                   "--out", str(replay_out)]
    assert run_cli(replay_args) == 0
    assert (replay_out / "series.csv").read_bytes() == (out / "series.csv").read_bytes()


def test_exit_codes(tmp_path, capsys):
    # capacity exceeded
    rc = run_cli(["simulate", "--engine", "exact", "--dims", "2", "--size", "5",
                  "--alpha", "3", "--jz-over-jperp", "0", "--time-points", "11",
                  "--out", str(tmp_path / "cap")])
    assert rc == 4
    err = capsys.readouterr().err
    assert json.loads(err.strip().splitlines()[-1])["error"] == "capacity"
    # invalid grid
    rc = run_cli(["sweep", "--engine", "oat", "--dims", "1", "--size", "4",
                  "--alpha", "1", "--jz-over-jperp", "0:1:0",
                  "--out", str(tmp_path / "bad")])
    assert rc == 3
    # unknown flag -> argparse usage error (SystemExit 2)
    with pytest.raises(SystemExit) as exc:
        run_cli(["simulate", "--bogus"])
    assert exc.value.code == 2


def test_husimi_csv(tmp_path):
    out = tmp_path / "husimi"
    rc = run_cli(["simulate", "--engine", "exact", "--dims", "1", "--size", "6",
                  "--alpha", "0", "--jz-over-jperp", "2.0", "--time-points", "11",
                  "--tau-max", "2", "--husimi-times", "0.0,0.3",
                  "--husimi-grid", "13x25", "--out", str(out)])
    assert rc == 0
    files = sorted(out.glob("husimi_*.csv"))
    assert len(files) == 2
    table = io.read_csv(files[0])
    assert len(table["Q"]) == 13 * 25
    # t=0 state is x-polarized: maximum near theta=pi/2, phi=0
    k = int(np.argmax(table["Q"]))
    assert table["theta"][k] == pytest.approx(np.pi / 2, abs=0.2)
    assert min(abs(table["phi"][k]), abs(table["phi"][k] - 2 * np.pi)) < 0.3


def test_bench_command_small(tmp_path):
    out = tmp_path / "bench"
    rc = run_cli(["bench", "--dims", "2", "--size", "2", "--alpha", "0,3",
                  "--jz-over-jperp", "-0.5,0.5", "--trajectories", "200",
                  "--time-points", "41", "--seed", "2", "--out", str(out)])
    assert rc == 0
    table = io.read_csv(out / "bench.csv")
    assert len(table["alpha"]) == 4
    assert np.all(np.abs(table["delta_xi2_opt_dB"]) < 3.0)
    series_files = sorted(out.glob("bench_series_*.csv"))
    assert len(series_files) == 4


def test_dilute_command(tmp_path):
    out = tmp_path / "fill"
    rc = run_cli(["dilute", "--dims", "2", "--size", "8", "--alpha", "3",
                  "--fillings", "0.5,1.0", "--jz-over-jperp", "0.0",
                  "--trajectories", "60", "--time-points", "41", "--seed", "4",
                  "--out", str(out)])
    assert rc == 0
    table = io.read_csv(out / "filling.csv")
    assert list(table["N"]) == [32.0, 64.0]
    assert np.all(table["xi2_opt"] > 0)


def test_cli_entry_point_subprocess(tmp_path):
    out = subprocess.run(
        [sys.executable, "-m", "xxzsqueeze.cli", "gap", "--dims", "1", "--alpha", "1",
         "--sizes", "4,8,16", "--out", str(tmp_path / "g")],
        capture_output=True, text=True)
    assert out.returncode == 0
    assert (tmp_path / "g" / "gap.csv").exists()
