"""Discrete phase-space trajectory engine.

Each trajectory samples a discrete initial configuration (the polarized
component fixed at +1/2, both transverse components independently +-1/2),
integrates the classical precession equations ds_i/dt = B_i x s_i with an
adaptive embedded Runge-Kutta pair, and contributes collective moments.
Averages, the squared magnetization, the squeezing parameter, and jackknife
errors are accumulated over trajectories.

Trajectory seeds derive from (master_seed, trajectory_index) through
counter-based Philox keys, and per-trajectory results are reduced in index
order, so results are bit-identical for any worker count or schedule.
"""

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import IntegrationError
from .series import MomentSeries, tau_column
from .squeezing import xi2_over_grid

_AXES = {"x": 0, "y": 1, "z": 2}

SPIN_NORM = np.sqrt(3.0) / 2


def default_trajectories(n_spins, reference=500, reference_size=4096):
    """Trajectory count scaling ~1/N, anchored at 500 for 4096 spins."""
    return max(2, int(round(reference * reference_size / n_spins)))


def trajectory_rng(master_seed, index):
    """Independent stream for one trajectory from a counter-based key."""
    if master_seed < 0:
        raise ValueError("master_seed must be nonnegative")
    key = np.array([master_seed & 0xFFFFFFFFFFFFFFFF, index & 0xFFFFFFFFFFFFFFFF],
                   dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def sample_initial_trajectory(n_spins, axis="x", rng=None):
    """Discrete initial configuration, shape (3, N).

    The component along ``axis`` is +1/2 deterministically; each orthogonal
    component is +-1/2 with probability 1/2, so every spin has |s| = sqrt(3)/2.
    """
    if rng is None:
        rng = np.random.default_rng()
    if axis not in _AXES:
        raise ValueError(f"axis must be one of x, y, z, got {axis!r}")
    fixed = _AXES[axis]
    spins = np.empty((3, n_spins))
    spins[fixed] = 0.5
    for other in range(3):
        if other != fixed:
            spins[other] = rng.integers(0, 2, n_spins) - 0.5
    return spins


def classical_energy(spins, model):
    """Classical Hamiltonian value; spins has shape (..., 3, N)."""
    w = model.weights
    sx, sy, sz = spins[..., 0, :], spins[..., 1, :], spins[..., 2, :]
    exy = np.einsum("...i,ij,...j->...", sx, w, sx) + np.einsum("...i,ij,...j->...", sy, w, sy)
    ezz = np.einsum("...i,ij,...j->...", sz, w, sz)
    return model.jperp * exy + model.jz * ezz


def effective_fields(spins, model):
    """Local precession fields B_i, shape (3, N); gradient of the classical
    Hamiltonian with the ordered-double-sum factor of two."""
    if spins.shape[1] != model.n_sites:
        raise ValueError("spin count does not match the model")
    w = model.weights
    return np.stack([
        2.0 * model.jperp * w @ spins[0],
        2.0 * model.jperp * w @ spins[1],
        2.0 * model.jz * w @ spins[2],
    ])


@dataclass
class TrajectorySnapshots:
    t: np.ndarray
    spins: np.ndarray       # (T, 3, N)
    collective: np.ndarray  # (T, 3)
    s2: np.ndarray          # (T,) collective |S|^2
    norms: np.ndarray       # (T, N) per-spin lengths
    energy: np.ndarray      # (T,)
    n_steps: int


def evolve_trajectory(spins, model, t_grid, rtol=1e-8, atol=None):
    """Integrate one trajectory and return dense-output snapshots."""
    t_grid = np.ascontiguousarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or len(t_grid) < 1:
        raise ValueError("t_grid must be a 1d array")
    if len(t_grid) > 1 and np.any(np.diff(t_grid) <= 0):
        raise ValueError("t_grid must be strictly increasing")
    if spins.shape != (3, model.n_sites):
        raise ValueError("state shape does not match the model")
    if rtol <= 0:
        raise ValueError("tolerance must be positive")
    if atol is None:
        atol = 1e-2 * rtol
    out, status, t_reached, n_steps = kernels.dtwa_integrate(
        np.ascontiguousarray(spins, dtype=float),
        np.ascontiguousarray(model.weights, dtype=float),
        float(model.jperp), float(model.jz), t_grid, float(rtol), float(atol),
    )
    if status != kernels.STATUS_OK:
        raise IntegrationError("step size underflow", t_reached=float(t_reached))
    collective = out.sum(axis=2)
    return TrajectorySnapshots(
        t=t_grid,
        spins=out,
        collective=collective,
        s2=np.sum(collective**2, axis=1),
        norms=np.sqrt(np.sum(out**2, axis=1)),
        energy=classical_energy(out, model),
        n_steps=n_steps,
    )


def _worker_count(workers):
    if workers is not None:
        return max(1, int(workers))
    env = os.environ.get("XXZSQUEEZE_WORKERS", "")
    if env.strip():
        return max(1, int(env))
    return 1


def _jackknife_errors(values):
    """Jackknife standard error of the mean along axis 0."""
    m = values.shape[0]
    total = values.sum(axis=0)
    loo = (total - values) / (m - 1)
    center = loo.mean(axis=0)
    return np.sqrt((m - 1) / m * np.sum((loo - center) ** 2, axis=0))


def run_dtwa(model, n_traj, t_grid, master_seed, axis="x", rtol=1e-8, atol=None,
             workers=None, min_mean_spin=None, diagnostics=False):
    """Trajectory-averaged collective moments on a time grid.

    Estimators: <S_a> and <S_a S_b> are trajectory means of the collective
    vector and its products; <S^2> is the trajectory mean of |S|^2, which
    needs no quantum correction because sum_a s_{a,i}^2 = 3/4 per spin
    reproduces the operator identity sum_a S_a^2 = sum_{i!=j} s_i.s_j + 3N/4.
    Statistical errors are trajectory-level jackknife estimates.
    """
    if n_traj < 2:
        raise ValueError("at least two trajectories required")
    t_grid = np.ascontiguousarray(t_grid, dtype=float)
    if atol is None:
        atol = 1e-2 * rtol
    n = model.n_sites
    w = np.ascontiguousarray(model.weights, dtype=float)
    jperp, jz = float(model.jperp), float(model.jz)
    n_t = len(t_grid)

    coll = np.empty((n_traj, n_t, 3))
    norm_drift = np.zeros(n_traj)
    energy_drift = np.zeros(n_traj)
    failures = []

    def run_one(idx):
        rng = trajectory_rng(master_seed, idx)
        spins = sample_initial_trajectory(n, axis=axis, rng=rng)
        out, status, t_reached, _ = kernels.dtwa_integrate(
            spins, w, jperp, jz, t_grid, float(rtol), float(atol))
        if status != kernels.STATUS_OK:
            failures.append((idx, float(t_reached)))
            return
        coll[idx] = out.sum(axis=2)
        if diagnostics:
            norms = np.sqrt(np.sum(out**2, axis=1))
            norm_drift[idx] = np.max(np.abs(norms - SPIN_NORM))
            energy = classical_energy(out, model)
            scale = max(1.0, abs(energy[0]))
            energy_drift[idx] = np.max(np.abs(energy - energy[0])) / scale

    n_workers = _worker_count(workers)
    if n_workers == 1:
        for idx in range(n_traj):
            run_one(idx)
    else:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            list(pool.map(run_one, range(n_traj)))
    if failures:
        idx, t_reached = sorted(failures)[0]
        raise IntegrationError(
            f"trajectory {idx} failed at t={t_reached:.6g}",
            t_reached=t_reached, trajectory=idx,
        )

    mean = coll.mean(axis=0)
    products = coll[:, :, :, None] * coll[:, :, None, :]
    second = products.mean(axis=0)
    s2 = np.trace(second, axis1=1, axis2=2)
    xi2 = xi2_over_grid(mean, second, n, min_mean_spin=min_mean_spin)

    err_mean = _jackknife_errors(coll)
    err_second = _jackknife_errors(products)
    err_s2 = _jackknife_errors(np.sum(coll**2, axis=2))
    err_xi2 = _jackknife_xi2(coll, products, n, min_mean_spin)

    meta = {
        "engine": "dtwa",
        "master_seed": int(master_seed),
        "rtol": rtol,
        "atol": atol,
        "axis": axis,
    }
    if diagnostics:
        meta["max_norm_drift"] = float(norm_drift.max())
        meta["max_energy_drift"] = float(energy_drift.max())
    return MomentSeries(
        t=t_grid, mean=mean, second=second, s2=s2, xi2=xi2,
        n_spins=n, n_traj=n_traj, tau=tau_column(t_grid, jperp, jz),
        err_mean=err_mean, err_second=err_second, err_s2=err_s2, err_xi2=err_xi2,
        meta=meta,
    )


def _jackknife_xi2(coll, products, n_spins, min_mean_spin, block=32):
    """Jackknife error of xi^2(t) via leave-one-out moment means."""
    m, n_t = coll.shape[0], coll.shape[1]
    err = np.empty(n_t)
    sum_mean = coll.sum(axis=0)
    sum_prod = products.sum(axis=0)
    for start in range(0, n_t, block):
        stop = min(start + block, n_t)
        loo_mean = (sum_mean[start:stop][None] - coll[:, start:stop]) / (m - 1)
        loo_prod = (sum_prod[start:stop][None] - products[:, start:stop]) / (m - 1)
        with np.errstate(invalid="ignore"):
            loo_xi2 = xi2_over_grid(loo_mean, loo_prod, n_spins, min_mean_spin=min_mean_spin)
        center = np.nanmean(loo_xi2, axis=0)
        dev = np.where(np.isfinite(loo_xi2), loo_xi2 - center, 0.0)
        err[start:stop] = np.sqrt((m - 1) / m * np.sum(dev**2, axis=0))
    return err
