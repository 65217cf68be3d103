"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line
(run with ``pytest tests/test_acceptance.py -v -s``). Tolerances are pinned
here, not configurable. The heavy phase-diagram runs use fixed seeds, so
their outcomes are reproducible to the byte.
"""

import numpy as np
import pytest

from xxzsqueeze import io
from xxzsqueeze.cli import main as cli_main
from xxzsqueeze.dtwa import SPIN_NORM, evolve_trajectory, run_dtwa, sample_initial_trajectory, trajectory_rng
from xxzsqueeze.exact import evolve_exact, initial_product_state, collective_moments
from xxzsqueeze.gap import GapSpec, fit_gap_exponent, gap, gap_scan
from xxzsqueeze.lattice import build_lattice, build_model, coupling_weights
from xxzsqueeze.oracles import (
    ising_series, oat_series, validate_ising_closed_forms, validate_oat_closed_forms,
)
from xxzsqueeze.phases import (
    SweepConfig, cell_seed, detect_boundary, fit_log_divergence, fit_power_law,
    run_sweep, time_grid,
)
from xxzsqueeze.squeezing import (
    min_transverse_variance, optimal_squeezing, summarize, to_decibels, transverse_pair,
)


def report(name, ok, detail):
    print(f"\n[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    assert ok, f"{name}: {detail}"


def test_coherent_state_identities():
    details = []
    ok = True
    # exact engine and oracles: 1e-10
    for n in (6, 10):
        psi = initial_product_state(n, "x")
        mean, second, s2 = collective_moments(psi, n)
        xi2 = n * min_transverse_variance(mean, second) / np.linalg.norm(mean) ** 2
        s2_0 = (n / 2) * (n / 2 + 1)
        ok &= abs(xi2 - 1) < 1e-10 and abs(s2 - s2_0) < 1e-10
    series = oat_series(16, 0.5, np.linspace(0, 1, 5))
    ok &= abs(series.xi2[0] - 1) < 1e-10
    w = np.ones((10, 10)) - np.eye(10)
    ok &= abs(ising_series(w, 1.0, np.linspace(0, 1, 3)).xi2[0] - 1) < 1e-10
    details.append("exact/oracles exact to 1e-10")
    # trajectory engine: xi2 within 3 sigma; S2 deterministic parts exact,
    # full value within 3 sigma (the estimator is unbiased; see ledger)
    lat = build_lattice(2, 6)
    model = build_model(lat, 3.0, jperp=1.0, jz=0.0)
    series = run_dtwa(model, 500, np.linspace(0, 0.5, 5), master_seed=100)
    n = lat.n_sites
    s2_0 = (n / 2) * (n / 2 + 1)
    ok &= abs(series.xi2[0] - 1) <= 3 * series.err_xi2[0]
    ok &= series.mean[0, 0] == n / 2
    ok &= series.second[0, 0, 0] == n * n / 4
    ok &= abs(series.s2[0] - s2_0) <= 3 * series.err_s2[0]
    spins = sample_initial_trajectory(n, "x", trajectory_rng(100, 0))
    ok &= np.all(np.sqrt((spins**2).sum(axis=0)) == SPIN_NORM)
    details.append(
        f"dtwa xi2(0)={series.xi2[0]:.4f}+-{series.err_xi2[0]:.4f}, "
        f"S2(0)={series.s2[0]:.2f} vs {s2_0} (err {series.err_s2[0]:.2f})")
    report("coherent-state identities", ok, "; ".join(details))


def test_oat_scaling():
    sizes = np.array([16, 32, 64, 128, 256])
    xi2_opt, t_opt = [], []
    for n in sizes:
        grid = np.linspace(0, 4 * n ** (-2 / 3), 3001)
        opt = optimal_squeezing(oat_series(n, 1.0, grid))
        xi2_opt.append(opt.xi2_opt)
        t_opt.append(opt.t_opt)
    fit_xi = fit_power_law(sizes, xi2_opt)
    fit_t = fit_power_law(sizes, t_opt)
    nu, nu_t = fit_xi.params["nu"], fit_t.params["nu"]
    ok = abs(nu - 2 / 3) <= 0.1 and abs(nu_t - 2 / 3) <= 0.1
    report("oat-scaling", ok,
           f"xi2_opt ~ 1/N^{nu:.3f} (target 2/3 +- 0.1), chi*t_opt ~ 1/N^{nu_t:.3f}")


def test_oracle_cross_validation():
    err_oat = max(validate_oat_closed_forms(n_spins=12, chi=0.45, n_times=20),
                  validate_oat_closed_forms(n_spins=9, chi=-0.8, n_times=20))
    err_ising = max(validate_ising_closed_forms(n_spins=12, jz=1.1, n_times=20),
                    validate_ising_closed_forms(n_spins=10, jz=-0.7, n_times=20, seed=5))
    ok = err_oat < 1e-8 and err_ising < 1e-8
    report("oracle-cross-validation", ok,
           f"OAT dev {err_oat:.2e}, Ising dev {err_ising:.2e} (tol 1e-8, N<=12, 20 points)")


def test_dtwa_vs_exact_4x4():
    lat = build_lattice(2, 4)
    n = lat.n_sites
    worst_db, worst_s2 = 0.0, 0.0
    for alpha in (0.0, 3.0, 6.0):
        for jz in (-1.0, -0.5, 0.0, 0.5):
            model = build_model(lat, alpha, jperp=1.0, jz=jz)
            grid = time_grid(1.0, jz, 8.0, 81)
            sim = run_dtwa(model, 4000, grid, cell_seed(7, alpha, jz, n),
                           rtol=1e-6, workers=2)
            ref = evolve_exact(model, grid, tol=1e-10)
            ss, sr = summarize(sim), summarize(ref)
            worst_db = max(worst_db, abs(to_decibels(ss.xi2_opt) - to_decibels(sr.xi2_opt)))
            worst_s2 = max(worst_s2, abs(ss.s2_min - sr.s2_min))
    ok = worst_db <= 1.5 and worst_s2 <= 0.05
    report("dtwa-vs-exact-4x4", ok,
           f"worst |d xi2_opt| = {worst_db:.2f} dB (tol 1.5), "
           f"worst |d S2_min|/S2_0 = {worst_s2:.3f} (tol 0.05), 4000 trajectories")


def test_phase_boundary_desk_scale():
    jz_grid = tuple(np.round(np.arange(-2.5, 0.51, 0.1), 10))
    sizes_traj = ((8, 1024), (12, 512), (16, 256))
    ns, crits, jumps = [], [], []
    for size, n_traj in sizes_traj:
        config = SweepConfig(dims=2, sizes=(size,), alphas=(3.0,), jz_ratios=jz_grid,
                             engine="dtwa", n_traj=n_traj, tau_max=8.0, n_times=121,
                             rtol=1e-6, master_seed=42, workers=2)
        result = run_sweep(config)
        rows = [c for c in result.slice(3.0, size) if c.status == "ok"]
        est = detect_boundary([c.jz_ratio for c in rows],
                              [c.s2_min_norm for c in rows],
                              [c.t_opt for c in rows])
        ns.append(rows[0].n_spins)
        crits.append(est.jz_crit)
        jumps.append(est.jz_crit_t_jump)
    fit = fit_log_divergence(ns, crits)
    gamma = fit.params["gamma"]
    decreasing = all(b < a for a, b in zip(crits, crits[1:]))
    finite = all(np.isfinite(c) for c in crits)
    ok = finite and decreasing and gamma > 0
    report("phase-boundary-desk-scale", ok,
           f"jz_crit(L=8,12,16) = {crits} (t-jump cross-check {jumps}), "
           f"gamma = {gamma:.3f} +- {fit.errors['gamma']:.3f} > 0")


def test_collective_scaling_desk_scale():
    sizes = [8, 12, 16, 24]
    ns, xi2s, errs = [], [], []
    for size in sizes:
        lat = build_lattice(2, size)
        n = lat.n_sites
        n_traj = max(256, int(round(4096 * 64 / n)))
        model = build_model(lat, 3.0, jperp=1.0, jz=0.0)
        grid = time_grid(1.0, 0.0, 6.0, 121)
        series = run_dtwa(model, n_traj, grid, cell_seed(11, 3.0, 0.0, n),
                          rtol=1e-6, workers=2)
        summary = summarize(series)
        ns.append(n)
        xi2s.append(summary.xi2_opt)
        errs.append(summary.xi2_opt_err)
    fit = fit_power_law(ns, xi2s, errors=errs)
    nu = fit.params["nu"]
    # Ising control on the same sizes from the solvable limit
    ising_opt = []
    for size in sizes:
        w = coupling_weights(build_lattice(2, size), 3.0)
        series = ising_series(w, 1.0, np.linspace(0, 1.5, 121))
        ising_opt.append(summarize(series).xi2_opt)
    fit_ising = fit_power_law(ns, ising_opt)
    nu_ising = fit_ising.params["nu"]
    ok = nu > 0 and abs(nu - 0.8) <= 0.25 and abs(nu_ising) < 0.1
    report("collective-scaling-desk-scale", ok,
           f"dtwa nu = {nu:.3f} +- {fit.errors['nu']:.3f} (target 0.8 +- 0.25), "
           f"ising control |nu| = {abs(nu_ising):.3f} < 0.1")


def test_spectral_gap():
    details = []
    # alpha=0 identity
    exact0 = all(
        abs(gap(GapSpec(size, dims, 0.0, jperp=0.9)) - 0.9 * size**dims) < 1e-9 * size**dims
        for dims, size in ((1, 16), (2, 12), (3, 6)))
    details.append("alpha=0 gap = N|jperp|")
    # long range: bounded below across L in {16..256}
    persistent = True
    for alpha in (0.5, 1.0):
        _, _, gaps = gap_scan([16, 32, 64, 128, 256], 1, alpha)
        persistent &= bool(np.min(gaps) >= 0.9 * gaps[0])
    details.append("alpha<=D gap bounded below (10%)")
    # short range: decreasing toward zero with clean power law
    _, _, gaps2 = gap_scan([16, 32, 64, 128, 256], 1, 2.0)
    closing = bool(np.all(np.diff(gaps2) < 0) and gaps2[-1] < 0.2 * gaps2[0])
    exponent, _, resid, gamma_hat = fit_gap_exponent([16, 32, 64, 128, 256], 1, 2.0)
    details.append(f"alpha=2 exponent {exponent:.3f} (a-D-gamma={2 - 1 - gamma_hat:.3f}), "
                   f"max log-residual {resid:.4f} < 0.05")
    ok = exact0 and persistent and closing and resid < 0.05
    report("spectral-gap", ok, "; ".join(details))


def test_determinism_cli(tmp_path):
    args = ["sweep", "--engine", "dtwa", "--dims", "2", "--size", "3", "--alpha", "3",
            "--jz-over-jperp", "-1:0:0.5", "--trajectories", "40",
            "--time-points", "31", "--seed", "17"]
    outs = [tmp_path / name for name in ("w1", "w1b", "w3")]
    assert cli_main(args + ["--out", str(outs[0]), "--workers", "1"]) == 0
    assert cli_main(args + ["--out", str(outs[1]), "--workers", "1"]) == 0
    assert cli_main(args + ["--out", str(outs[2]), "--workers", "3"]) == 0
    ref = (outs[0] / "slice_a3_L3.csv").read_bytes()
    ok = all((out / "slice_a3_L3.csv").read_bytes() == ref for out in outs[1:])
    report("determinism", ok, "byte-identical slice CSVs across reruns and worker counts")


def test_conservation_suite():
    # per-trajectory norm and energy drift at default tolerance
    tol = 1e-8
    lat = build_lattice(2, 5)
    model = build_model(lat, 3.0, jperp=1.0, jz=-0.6)
    grid = np.linspace(0, 8.0, 33)
    worst_norm, worst_energy = 0.0, 0.0
    for idx in range(5):
        spins = sample_initial_trajectory(lat.n_sites, "x", trajectory_rng(3, idx))
        snap = evolve_trajectory(spins, model, grid, rtol=tol)
        worst_norm = max(worst_norm, float(np.max(np.abs(snap.norms - SPIN_NORM))))
        scale = max(1.0, abs(snap.energy[0]))
        worst_energy = max(worst_energy, float(np.max(np.abs(snap.energy - snap.energy[0])) / scale))
    ok = worst_norm < 10 * tol and worst_energy < 10 * tol
    # <S_z> conservation within 3 sigma
    series = run_dtwa(model, 300, grid, master_seed=23)
    drift = np.abs(series.mean[:, 2] - series.mean[0, 2])
    ok &= bool(np.all(drift <= 3 * np.maximum(series.err_mean[:, 2], 1e-12)))
    # closed-form transverse minimization vs 1e5-point grid scan on 1000
    # random PSD inputs (unit-scale covariances so grid discretization error
    # stays below the 1e-9 bar)
    rng = np.random.default_rng(99)
    phis = np.linspace(0, np.pi, 100_000, endpoint=False)
    cos_p, sin_p = np.cos(phis), np.sin(phis)
    worst_gap = 0.0
    for _ in range(1000):
        mean = rng.normal(size=3) * 5
        while np.linalg.norm(mean) < 1e-3:
            mean = rng.normal(size=3) * 5
        m = rng.normal(size=(3, 3))
        cov = m @ m.T
        cov /= np.trace(cov)
        second = cov + np.outer(mean, mean)
        lam = min_transverse_variance(mean, second)
        e1, e2 = transverse_pair(mean)
        axes = np.outer(cos_p, e1) + np.outer(sin_p, e2)
        var = np.einsum("ki,ij,kj->k", axes, second, axes) - (axes @ mean) ** 2
        worst_gap = max(worst_gap, float(abs(lam - var.min())))
    ok &= worst_gap < 1e-9
    report("conservation-suite", ok,
           f"norm drift {worst_norm:.2e} < {10*tol:.0e}, energy drift {worst_energy:.2e}, "
           f"Sz within 3 sigma, closed-form vs grid minimization gap {worst_gap:.2e} < 1e-9")
