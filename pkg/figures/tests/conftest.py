"""Build small real artifact sets by invoking the simulation CLI as a
subprocess; the figure package touches the primary component only through
its command line and file formats."""

import subprocess
import sys

import pytest

SIM = [sys.executable, "-m", "xxzsqueeze.cli"]


def run_sim(args):
    proc = subprocess.run(SIM + args, capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    return proc


@pytest.fixture(scope="session")
def sweep_artifacts(tmp_path_factory):
    out = tmp_path_factory.mktemp("sweep")
    run_sim([
        "sweep", "--engine", "dtwa", "--dims", "2", "--size", "4",
        "--alpha", "2,3", "--jz-over-jperp", "-2.5:0.5:0.25",
        "--trajectories", "150", "--time-points", "61", "--seed", "19",
        "--save-series", "--detect-boundary", "--out", str(out),
    ])
    return out


@pytest.fixture(scope="session")
def scaling_artifacts(tmp_path_factory):
    out = tmp_path_factory.mktemp("scaling")
    run_sim([
        "scaling", "--mode", "xi2", "--engine", "oat", "--dims", "2",
        "--sizes", "4,6,8", "--alpha", "3", "--jz-over-jperp", "-0.5",
        "--time-points", "201", "--seed", "23", "--out", str(out),
    ])
    return out


@pytest.fixture(scope="session")
def gap_artifacts(tmp_path_factory):
    out = tmp_path_factory.mktemp("gap")
    run_sim(["gap", "--dims", "1", "--alpha", "0.5,2", "--sizes", "8,16,32,64",
             "--out", str(out)])
    return out


@pytest.fixture(scope="session")
def filling_artifacts(tmp_path_factory):
    out = tmp_path_factory.mktemp("filling")
    run_sim([
        "dilute", "--dims", "2", "--size", "6", "--alpha", "3",
        "--fillings", "0.5,1.0", "--jz-over-jperp", "0.0",
        "--trajectories", "80", "--time-points", "41", "--seed", "29",
        "--out", str(out),
    ])
    return out


@pytest.fixture(scope="session")
def husimi_artifacts(tmp_path_factory):
    out = tmp_path_factory.mktemp("husimi")
    run_sim([
        "simulate", "--engine", "exact", "--dims", "1", "--size", "6",
        "--alpha", "0", "--jz-over-jperp", "2.0", "--time-points", "11",
        "--tau-max", "2", "--husimi-times", "0.0,0.4", "--husimi-grid", "17x33",
        "--seed", "1", "--out", str(out),
    ])
    return out
