"""Command-line entry points.

Subcommands: simulate, sweep, scaling, gap, bench, dilute. Every command
writes CSV artifacts plus a manifest.json echoing the resolved
configuration; identical configuration and seed reproduce byte-identical
CSVs for any worker count.
"""

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import io
from .dtwa import default_trajectories, run_dtwa
from .errors import BoundaryNotFoundError, CapacityError, IntegrationError
from .exact import evolve_exact, husimi_scan
from .gap import GapSpec, fit_gap_exponent, gap, spin_wave_energy
from .lattice import build_lattice, build_model, coupling_weights, dilute, mean_coupling
from .oracles import ising_series, oat_series
from .phases import (
    SweepConfig, cell_seed, detect_boundary, fit_log_divergence, fit_power_law,
    run_cell, run_sweep, time_grid,
)
from .squeezing import summarize, to_decibels

EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_USAGE = 2
EXIT_INVALID = 3
EXIT_CAPACITY = 4
EXIT_INTEGRATION = 5


def _add_lattice_options(parser, size_flag=True):
    parser.add_argument("--dims", type=int, default=2, help="spatial dimension (1-3)")
    if size_flag:
        parser.add_argument("--size", type=int, required=True, help="linear lattice size L")
    parser.add_argument("--bc", choices=("periodic", "open"), default="periodic")
    parser.add_argument("--jperp", type=float, default=1.0,
                        help="transverse coupling (sign selectable)")
    parser.add_argument("--filling", type=float, default=1.0,
                        help="occupied-site fraction in (0, 1]")


def _add_run_options(parser):
    parser.add_argument("--trajectories", type=int, default=None,
                        help="trajectory count (default: 500*4096/N)")
    parser.add_argument("--tau-max", type=float, default=8.0,
                        help="time window in units of 1/|jz-jperp|")
    parser.add_argument("--time-points", type=int, default=161)
    parser.add_argument("--rtol", type=float, default=1e-6,
                        help="integrator relative tolerance")
    parser.add_argument("--exact-tol", type=float, default=1e-10,
                        help="exact-propagator local error tolerance")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--workers", type=int, default=None,
                        help="worker threads (default: XXZSQUEEZE_WORKERS or 1)")
    parser.add_argument("--axis", choices=("x", "y", "z"), default="x")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="xxzsqueeze",
        description="Spin-squeezing dynamics of power-law XXZ models",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="single run of one engine, full time series")
    _add_lattice_options(p)
    _add_run_options(p)
    p.add_argument("--engine", choices=("dtwa", "exact", "oat", "ising"), default="dtwa")
    p.add_argument("--alpha", type=str, required=True, help="power-law exponent (inf allowed)")
    p.add_argument("--jz-over-jperp", type=str, required=True, help="single ratio value")
    p.add_argument("--husimi-times", type=str, default=None,
                   help="comma list of times for sphere overlap scans (exact engine)")
    p.add_argument("--husimi-grid", type=str, default="41x81")
    p.add_argument("--out", type=str, required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="grid over jz/jperp (and alpha) at one size")
    _add_lattice_options(p)
    _add_run_options(p)
    p.add_argument("--engine", choices=("dtwa", "exact", "oat", "ising"), default="dtwa")
    p.add_argument("--alpha", type=str, required=True, help="value or comma list, inf allowed")
    p.add_argument("--jz-over-jperp", type=str, required=True, help="grid start:stop:step or list")
    p.add_argument("--save-series", action="store_true", help="persist per-cell time series")
    p.add_argument("--detect-boundary", action="store_true")
    p.add_argument("--resume", action="store_true", help="skip cells already in --out")
    p.add_argument("--out", type=str, required=True)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("scaling", help="size scans: optimal-squeezing or boundary fits")
    _add_lattice_options(p, size_flag=False)
    _add_run_options(p)
    p.add_argument("--engine", choices=("dtwa", "exact", "oat", "ising"), default="dtwa")
    p.add_argument("--mode", choices=("xi2", "boundary"), default="xi2")
    p.add_argument("--sizes", type=str, required=True, help="comma list of linear sizes")
    p.add_argument("--alpha", type=str, required=True)
    p.add_argument("--jz-over-jperp", type=str, required=True,
                   help="single ratio (xi2 mode) or grid (boundary mode)")
    p.add_argument("--out", type=str, required=True)
    p.set_defaults(func=cmd_scaling)

    p = sub.add_parser("gap", help="spectral-gap lattice sums and scaling fit")
    p.add_argument("--dims", type=int, default=2)
    p.add_argument("--alpha", type=str, required=True, help="value or comma list")
    p.add_argument("--sizes", type=str, required=True)
    p.add_argument("--jperp", type=float, default=1.0)
    p.add_argument("--out", type=str, required=True)
    p.set_defaults(func=cmd_gap)

    p = sub.add_parser("bench", help="trajectory engine vs exact on identical configs")
    _add_lattice_options(p)
    _add_run_options(p)
    p.add_argument("--alpha", type=str, required=True)
    p.add_argument("--jz-over-jperp", type=str, required=True)
    p.add_argument("--out", type=str, required=True)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("dilute", help="filling-fraction scan with oracle references")
    _add_lattice_options(p)
    _add_run_options(p)
    p.add_argument("--alpha", type=str, required=True)
    p.add_argument("--fillings", type=str, required=True, help="comma list in (0, 1]")
    p.add_argument("--jz-over-jperp", type=str, required=True)
    p.add_argument("--out", type=str, required=True)
    p.set_defaults(func=cmd_dilute)

    return parser


def _config_echo(args, skip=("func", "command")):
    out = {}
    for key, value in sorted(vars(args).items()):
        if key in skip:
            continue
        if isinstance(value, float) and np.isinf(value):
            value = "inf"
        out[key] = value
    return out


def _sweep_config(args, alphas, jz_ratios, sizes, engine):
    return SweepConfig(
        dims=args.dims,
        sizes=tuple(sizes),
        alphas=tuple(float(a) for a in alphas),
        jz_ratios=tuple(float(j) for j in jz_ratios),
        engine=engine,
        jperp=args.jperp,
        bc=args.bc,
        filling=args.filling,
        n_traj=args.trajectories,
        tau_max=args.tau_max,
        n_times=args.time_points,
        rtol=args.rtol,
        exact_tol=args.exact_tol,
        master_seed=args.seed,
        workers=args.workers,
    )


def cmd_simulate(args):
    t0 = time.monotonic()
    alpha = float(io.parse_float_list(args.alpha)[0])
    jz_ratio = float(io.parse_float_list(args.jz_over_jperp)[0])
    config = _sweep_config(args, [alpha], [jz_ratio], [args.size], args.engine)
    store = {}
    cell = run_cell(config, alpha, jz_ratio, args.size,
                    series_sink=lambda key, s: store.__setitem__(key, s),
                    raise_errors=True)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    series = store[(alpha, jz_ratio, args.size)]
    io.write_series_csv(outdir / "series.csv", series)
    io.write_csv(outdir / "summary.csv", io.SUMMARY_COLUMNS, [io.summary_row(cell)])
    if args.husimi_times:
        if args.engine != "exact":
            raise ValueError("husimi scans require --engine exact")
        n_theta, n_phi = (int(v) for v in args.husimi_grid.lower().split("x"))
        times = sorted(float(v) for v in args.husimi_times.split(","))
        lattice = build_lattice(args.dims, args.size, args.bc)
        model = build_model(lattice, alpha, jperp=args.jperp, jz=jz_ratio * args.jperp)
        thetas, phis, overlaps = husimi_scan(
            model, times, axis=args.axis, n_theta=n_theta, n_phi=n_phi, tol=args.exact_tol)
        for t, q in overlaps.items():
            rows = zip(thetas, phis, q)
            io.write_csv(outdir / f"husimi_t{io.jz_tag(t)}.csv", ("theta", "phi", "Q"), rows)
    io.write_manifest(outdir, "simulate", _config_echo(args), time.monotonic() - t0)
    print(f"simulate: wrote {outdir}/series.csv "
          f"(xi2_opt={cell.xi2_opt:.6g} at t={cell.t_opt:.6g}, flags={cell.flags or '-'})")
    return EXIT_OK


def _load_done_cells(outdir, config):
    """Existing slice rows for resume, keyed like sweep cells. Raw-string
    parsing keeps 64-bit seeds and flag strings exact."""
    from .phases import CellResult

    done = {}
    for alpha in config.alphas:
        for size in config.sizes:
            path = Path(outdir) / f"slice_a{io.alpha_tag(alpha)}_L{size}.csv"
            if not path.exists():
                continue
            for row in io.read_csv_rows(path):
                cell = CellResult(
                    alpha=float(row["alpha"]),
                    jz_ratio=float(row["jz_over_jperp"]),
                    size=size,
                    n_spins=int(row["N"]),
                    seed=int(row["seed"]),
                    n_traj=int(row["n_traj"]),
                    status=row["status"],
                    t_opt=float(row["t_opt"]),
                    tau_opt=float(row["tau_opt"]),
                    xi2_opt=float(row["xi2_opt"]),
                    xi2_opt_db=float(row["xi2_opt_dB"]),
                    s2_min_norm=float(row["S2_min_norm"]),
                    t_opt_err=float(row["t_opt_err"]),
                    xi2_opt_err=float(row["xi2_opt_err"]),
                    s2_min_err=float(row["S2_min_err"]),
                    flags=row["flags"],
                )
                done[(cell.alpha, cell.jz_ratio, size)] = cell
    return done


def cmd_sweep(args):
    t0 = time.monotonic()
    alphas = io.parse_float_list(args.alpha)
    jz_ratios = io.parse_grid(args.jz_over_jperp)
    config = _sweep_config(args, alphas, jz_ratios, [args.size], args.engine)
    outdir = Path(args.out)
    done = _load_done_cells(outdir, config) if args.resume else None
    store = {} if args.save_series else None
    sink = (lambda key, s: store.__setitem__(key, s)) if args.save_series else None
    result = run_sweep(config, done=done, series_sink=sink)

    boundaries = []
    if args.detect_boundary:
        for alpha in config.alphas:
            for size in config.sizes:
                rows = [c for c in result.slice(alpha, size) if c.status == "ok"]
                if len(rows) < 5:
                    continue
                try:
                    est = detect_boundary(
                        [c.jz_ratio for c in rows],
                        [c.s2_min_norm for c in rows],
                        [c.t_opt for c in rows],
                        jperp=config.jperp,
                    )
                except (BoundaryNotFoundError, ValueError):
                    continue
                boundaries.append((alpha, size, rows[0].n_spins, est))
    io.write_sweep(outdir, result, series_store=store, boundaries=boundaries)
    n_ok = sum(1 for c in result.cells.values() if c.status == "ok")
    io.write_manifest(outdir, "sweep", _config_echo(args), time.monotonic() - t0,
                      extra={"cells_total": len(result.cells), "cells_ok": n_ok})
    print(f"sweep: {n_ok}/{len(result.cells)} cells ok -> {outdir}")
    return EXIT_OK


def cmd_scaling(args):
    t0 = time.monotonic()
    alphas = io.parse_float_list(args.alpha)
    sizes = io.parse_int_list(args.sizes)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    fits = {}
    if args.mode == "xi2":
        jz_ratio = float(io.parse_float_list(args.jz_over_jperp)[0])
        for alpha in alphas:
            config = _sweep_config(args, [alpha], [jz_ratio], sizes, args.engine)
            result = run_sweep(config)
            rows = []
            ns, xi2s, errs = [], [], []
            for size in sizes:
                cells = result.slice(alpha, size)
                cell = cells[0]
                rows.append((size, cell.n_spins, cell.jz_ratio, cell.t_opt, cell.xi2_opt,
                             cell.xi2_opt_db, cell.xi2_opt_err, cell.flags,
                             cell.seed, cell.n_traj, cell.status))
                if cell.status == "ok":
                    ns.append(cell.n_spins)
                    xi2s.append(cell.xi2_opt)
                    errs.append(cell.xi2_opt_err)
            io.write_csv(
                outdir / f"scaling_a{io.alpha_tag(alpha)}.csv",
                ("L", "N", "jz_over_jperp", "t_opt", "xi2_opt", "xi2_opt_dB",
                 "xi2_opt_err", "flags", "seed", "n_traj", "status"),
                rows,
            )
            fit = fit_power_law(ns, xi2s, errors=errs)
            fits[io.alpha_tag(alpha)] = fit.as_dict()
        fit_path = outdir / "fit_power.json"
    else:
        jz_ratios = io.parse_grid(args.jz_over_jperp)
        for alpha in alphas:
            config = _sweep_config(args, [alpha], jz_ratios, sizes, args.engine)
            result = run_sweep(config)
            boundary_rows = []
            ns, crits = [], []
            for size in sizes:
                rows = [c for c in result.slice(alpha, size) if c.status == "ok"]
                io.write_csv(outdir / f"slice_a{io.alpha_tag(alpha)}_L{size}.csv",
                             io.SUMMARY_COLUMNS, [io.summary_row(c) for c in rows])
                est = detect_boundary(
                    [c.jz_ratio for c in rows],
                    [c.s2_min_norm for c in rows],
                    [c.t_opt for c in rows],
                    jperp=config.jperp,
                )
                n_spins = rows[0].n_spins
                boundary_rows.append((alpha, n_spins, size, est.jz_crit,
                                      est.jz_crit_t_jump, est.resolution, est.s2_min_at_crit))
                ns.append(n_spins)
                crits.append(est.jz_crit)
            io.write_csv(outdir / "boundary.csv", io.BOUNDARY_COLUMNS, boundary_rows)
            fit = fit_log_divergence(ns, crits)
            fits[io.alpha_tag(alpha)] = fit.as_dict()
        fit_path = outdir / "fit_log.json"
    fit_path.write_text(json.dumps(fits, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    io.write_manifest(outdir, f"scaling-{args.mode}", _config_echo(args), time.monotonic() - t0)
    print(f"scaling[{args.mode}]: fits -> {fit_path}")
    return EXIT_OK


def cmd_gap(args):
    t0 = time.monotonic()
    alphas = io.parse_float_list(args.alpha)
    sizes = io.parse_int_list(args.sizes)
    outdir = Path(args.out)
    rows = []
    fits = {}
    for alpha in alphas:
        for size in sizes:
            spec = GapSpec(size, args.dims, float(alpha), args.jperp)
            k_soft = np.zeros(args.dims)
            k_soft[0] = 2 * np.pi / size
            e_min = spin_wave_energy(spec, k_soft)
            rows.append((size, spec.epsilon, alpha, args.dims, args.jperp,
                         e_min, gap(spec)))
        if len(sizes) >= 3 and not np.isinf(alpha):
            exponent, intercept, resid, gamma_hat = fit_gap_exponent(
                sizes, args.dims, float(alpha), args.jperp)
            fits[io.alpha_tag(alpha)] = {
                "exponent": exponent, "intercept": intercept,
                "max_log_residual": resid, "gamma_hat": gamma_hat,
                "alpha_minus_d_minus_gamma": float(alpha) - args.dims - gamma_hat,
            }
    io.write_csv(outdir / "gap.csv", io.GAP_COLUMNS, rows)
    if fits:
        (outdir / "gap_fit.json").write_text(
            json.dumps(fits, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    io.write_manifest(outdir, "gap", _config_echo(args), time.monotonic() - t0)
    print(f"gap: {len(rows)} rows -> {outdir}/gap.csv")
    return EXIT_OK


BENCH_COLUMNS = (
    "alpha", "jz_over_jperp", "N",
    "xi2_opt_dtwa", "xi2_opt_exact", "delta_xi2_opt_dB",
    "s2_min_norm_dtwa", "s2_min_norm_exact", "delta_s2_min_norm",
    "t_opt_dtwa", "t_opt_exact", "n_traj", "seed",
)


def cmd_bench(args):
    t0 = time.monotonic()
    alphas = io.parse_float_list(args.alpha)
    jz_ratios = io.parse_grid(args.jz_over_jperp)
    outdir = Path(args.out)
    lattice = build_lattice(args.dims, args.size, args.bc)
    if args.filling < 1.0:
        lattice = dilute(lattice, args.filling, cell_seed(args.seed, 0.0, 0.0,
                                                          lattice.n_sites, args.filling))
    n = lattice.n_sites
    n_traj = args.trajectories or default_trajectories(n)
    rows = []
    for alpha in alphas:
        for jz_ratio in jz_ratios:
            jz = float(jz_ratio) * args.jperp
            model = build_model(lattice, float(alpha), jperp=args.jperp, jz=jz)
            grid = time_grid(args.jperp, jz, args.tau_max, args.time_points)
            seed = cell_seed(args.seed, float(alpha), float(jz_ratio), n)
            sim = run_dtwa(model, n_traj, grid, seed, rtol=args.rtol,
                           workers=args.workers, axis=args.axis)
            ref = evolve_exact(model, grid, tol=args.exact_tol, axis=args.axis)
            sum_sim = summarize(sim)
            sum_ref = summarize(ref)
            delta_db = float(to_decibels(sum_sim.xi2_opt) - to_decibels(sum_ref.xi2_opt))
            rows.append((
                alpha, jz_ratio, n,
                sum_sim.xi2_opt, sum_ref.xi2_opt, delta_db,
                sum_sim.s2_min, sum_ref.s2_min, sum_sim.s2_min - sum_ref.s2_min,
                sum_sim.t_opt, sum_ref.t_opt, n_traj, seed,
            ))
            name = f"bench_series_a{io.alpha_tag(alpha)}_jz{io.jz_tag(jz_ratio)}.csv"
            with np.errstate(invalid="ignore", divide="ignore"):
                series_rows = zip(
                    grid,
                    sim.xi2, ref.xi2,
                    to_decibels(sim.xi2) - to_decibels(ref.xi2),
                    sim.s2 / sim.s2_initial, ref.s2 / ref.s2_initial,
                    (sim.s2 - ref.s2) / ref.s2_initial,
                )
                io.write_csv(outdir / name,
                             ("t", "xi2_dtwa", "xi2_exact", "delta_dB",
                              "s2_norm_dtwa", "s2_norm_exact", "delta_s2_norm"),
                             series_rows)
    io.write_csv(outdir / "bench.csv", BENCH_COLUMNS, rows)
    io.write_manifest(outdir, "bench", _config_echo(args), time.monotonic() - t0)
    worst = max((abs(r[5]) for r in rows), default=0.0)
    print(f"bench: {len(rows)} configs, worst |delta xi2_opt| = {worst:.3f} dB -> {outdir}")
    return EXIT_OK


DILUTE_COLUMNS = (
    "filling", "N", "alpha", "jz_over_jperp",
    "t_opt", "tau_opt", "xi2_opt", "xi2_opt_dB", "xi2_opt_err", "S2_min_norm", "flags",
    "xi2_opt_oat", "xi2_opt_oat_dB", "xi2_opt_ising", "xi2_opt_ising_dB",
    "seed", "n_traj", "status",
)


def cmd_dilute(args):
    t0 = time.monotonic()
    alpha = float(io.parse_float_list(args.alpha)[0])
    fillings = [float(f) for f in io.parse_float_list(args.fillings)]
    jz_ratios = io.parse_grid(args.jz_over_jperp)
    outdir = Path(args.out)
    rows = []
    for filling in fillings:
        base = build_lattice(args.dims, args.size, args.bc)
        lattice = base if filling >= 1.0 else dilute(
            base, filling, cell_seed(args.seed, 0.0, 0.0, base.n_sites, filling))
        n = lattice.n_sites
        weights = coupling_weights(lattice, alpha)
        h_alpha = mean_coupling(weights)
        n_traj = args.trajectories or default_trajectories(n)
        for jz_ratio in jz_ratios:
            jz = float(jz_ratio) * args.jperp
            model = build_model(lattice, alpha, jperp=args.jperp, jz=jz)
            grid = time_grid(args.jperp, jz, args.tau_max, args.time_points)
            seed = cell_seed(args.seed, alpha, float(jz_ratio), n, filling)
            status, message = "ok", ""
            try:
                series = run_dtwa(model, n_traj, grid, seed, rtol=args.rtol,
                                  workers=args.workers, axis=args.axis)
                summary = summarize(series)
            except IntegrationError as exc:
                rows.append((filling, n, alpha, jz_ratio) + (np.nan,) * 7
                            + (np.nan,) * 4 + (seed, n_traj, f"failed: {exc}"))
                continue
            chi_eff = h_alpha * (jz - args.jperp)
            oat_ref = summarize(oat_series(n, chi_eff, grid)) if chi_eff != 0 else None
            ising_ref = summarize(ising_series(weights, jz - args.jperp, grid))
            gap_scale = abs(jz - args.jperp)
            rows.append((
                filling, n, alpha, jz_ratio,
                summary.t_opt, summary.t_opt * gap_scale if gap_scale > 0 else np.nan,
                summary.xi2_opt, float(to_decibels(summary.xi2_opt)),
                summary.xi2_opt_err, summary.s2_min, "|".join(summary.flags),
                oat_ref.xi2_opt if oat_ref else np.nan,
                float(to_decibels(oat_ref.xi2_opt)) if oat_ref else np.nan,
                ising_ref.xi2_opt, float(to_decibels(ising_ref.xi2_opt)),
                seed, n_traj, status,
            ))
    io.write_csv(outdir / "filling.csv", DILUTE_COLUMNS, rows)
    io.write_manifest(outdir, "dilute", _config_echo(args), time.monotonic() - t0)
    print(f"dilute: {len(rows)} rows -> {outdir}/filling.csv")
    return EXIT_OK


# flags whose values can start with '-' (grids, lists); fold them into
# --flag=value form so argparse does not mistake them for options
_VALUE_FLAGS = ("--jz-over-jperp", "--alpha", "--fillings", "--sizes",
                "--husimi-times", "--jperp")


def _fold_value_flags(argv):
    out = []
    k = 0
    while k < len(argv):
        tok = argv[k]
        if tok in _VALUE_FLAGS and k + 1 < len(argv):
            out.append(f"{tok}={argv[k + 1]}")
            k += 2
        else:
            out.append(tok)
            k += 1
    return out


def main(argv=None):
    parser = build_parser()
    if argv is None:
        argv = sys.argv[1:]
    try:
        args = parser.parse_args(_fold_value_flags(list(argv)))
        return args.func(args)
    except CapacityError as exc:
        _emit_error("capacity", exc, EXIT_CAPACITY)
        return EXIT_CAPACITY
    except IntegrationError as exc:
        _emit_error("integration-failure", exc, EXIT_INTEGRATION)
        return EXIT_INTEGRATION
    except (ValueError, BoundaryNotFoundError) as exc:
        _emit_error("invalid-argument", exc, EXIT_INVALID)
        return EXIT_INVALID
    except OSError as exc:
        _emit_error("io-error", exc, EXIT_UNEXPECTED)
        return EXIT_UNEXPECTED


def _emit_error(kind, exc, code):
    payload = {"error": kind, "message": str(exc), "exit_code": code}
    print(json.dumps(payload), file=sys.stderr)


if __name__ == "__main__":
    sys.exit(main())
