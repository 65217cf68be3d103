"""Persistence: CSV schemas for series / sweeps / fits, run manifests, and
the grid syntax used by the command line.

CSV files are UTF-8 with '\\n' line ends, '.' decimals, and shortest
round-trip float formatting, so identical configurations reproduce
byte-identical files. Manifests carry timing and are exempt from that.
"""

import hashlib
import json
import time
from pathlib import Path

import numpy as np

SCHEMA_VERSION = 1

SERIES_COLUMNS = (
    "t", "tau", "Sx", "Sy", "Sz",
    "Sxx", "Sxy", "Sxz", "Syy", "Syz", "Szz",
    "S2", "xi2", "xi2_dB",
    "err_Sx", "err_Sy", "err_Sz",
    "err_Sxx", "err_Sxy", "err_Sxz", "err_Syy", "err_Syz", "err_Szz",
    "err_S2", "err_xi2",
)

SUMMARY_COLUMNS = (
    "alpha", "jz_over_jperp", "N", "t_opt", "tau_opt", "xi2_opt", "xi2_opt_dB",
    "S2_min_norm", "t_opt_err", "xi2_opt_err", "S2_min_err", "flags",
    "seed", "n_traj", "status",
)

BOUNDARY_COLUMNS = ("alpha", "N", "L", "jz_crit", "jz_crit_t_jump", "resolution", "s2_min_at_crit")

GAP_COLUMNS = ("L", "epsilon", "alpha", "dims", "jperp", "E_min", "gap")


def fmt(value):
    """Shortest round-trip decimal form; deterministic across runs."""
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def write_csv(path, columns, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [",".join(columns)]
    for row in rows:
        lines.append(",".join(fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def read_csv_rows(path):
    """Rows as dicts of raw strings (exact round trip, e.g. 64-bit seeds)."""
    text = Path(path).read_text(encoding="utf-8").strip().split("\n")
    header = text[0].split(",")
    rows = []
    for line in text[1:]:
        parts = line.split(",")
        rows.append({name: (parts[k] if k < len(parts) else "")
                     for k, name in enumerate(header)})
    return rows


def read_csv(path):
    """Columns as a dict of float arrays (strings preserved where not numeric)."""
    text = Path(path).read_text(encoding="utf-8").strip().split("\n")
    header = text[0].split(",")
    raw = [line.split(",") for line in text[1:]]
    out = {}
    for k, name in enumerate(header):
        values = [row[k] if k < len(row) else "" for row in raw]
        try:
            out[name] = np.array(
                [float(v) if v != "" else np.nan for v in values], dtype=float
            )
        except ValueError:
            out[name] = np.array(values, dtype=object)
    return out


def series_rows(series):
    from .squeezing import to_decibels

    n_t = len(series.t)
    tau = series.tau
    with np.errstate(invalid="ignore", divide="ignore"):
        db = np.where(np.isfinite(series.xi2) & (series.xi2 > 0),
                      to_decibels(np.where(series.xi2 > 0, series.xi2, 1.0)), np.nan)
    for k in range(n_t):
        yield (
            series.t[k],
            None if tau is None else tau[k],
            series.mean[k, 0], series.mean[k, 1], series.mean[k, 2],
            series.second[k, 0, 0], series.second[k, 0, 1], series.second[k, 0, 2],
            series.second[k, 1, 1], series.second[k, 1, 2], series.second[k, 2, 2],
            series.s2[k], series.xi2[k], db[k],
            series.err_mean[k, 0], series.err_mean[k, 1], series.err_mean[k, 2],
            series.err_second[k, 0, 0], series.err_second[k, 0, 1], series.err_second[k, 0, 2],
            series.err_second[k, 1, 1], series.err_second[k, 1, 2], series.err_second[k, 2, 2],
            series.err_s2[k], series.err_xi2[k],
        )


def write_series_csv(path, series):
    write_csv(path, SERIES_COLUMNS, series_rows(series))


def summary_row(cell):
    return (
        cell.alpha, cell.jz_ratio, cell.n_spins, cell.t_opt, cell.tau_opt,
        cell.xi2_opt, cell.xi2_opt_db, cell.s2_min_norm,
        cell.t_opt_err, cell.xi2_opt_err, cell.s2_min_err,
        cell.flags, cell.seed, cell.n_traj, cell.status,
    )


def alpha_tag(alpha):
    if np.isinf(alpha):
        return "inf"
    if float(alpha) == int(alpha):
        return str(int(alpha))
    return repr(float(alpha)).replace(".", "p").replace("-", "m")


def jz_tag(jz):
    return repr(float(jz)).replace(".", "p").replace("-", "m")


def write_sweep(outdir, result, series_store=None, boundaries=None):
    """Persist a SweepResult: one summary CSV per (alpha, size) slice, an
    optional series CSV per cell, and an optional boundary table."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    config = result.config
    for alpha in config.alphas:
        for size in config.sizes:
            rows = [summary_row(c) for c in result.slice(alpha, size)]
            if rows:
                name = f"slice_a{alpha_tag(alpha)}_L{size}.csv"
                write_csv(outdir / name, SUMMARY_COLUMNS, rows)
    if series_store:
        series_dir = outdir / "series"
        for (alpha, jz_ratio, size), series in sorted(series_store.items()):
            name = f"series_a{alpha_tag(alpha)}_L{size}_jz{jz_tag(jz_ratio)}.csv"
            write_series_csv(series_dir / name, series)
    if boundaries:
        rows = [
            (alpha, n, size, b.jz_crit, b.jz_crit_t_jump, b.resolution, b.s2_min_at_crit)
            for (alpha, size, n, b) in boundaries
        ]
        write_csv(outdir / "boundary.csv", BOUNDARY_COLUMNS, rows)


def build_id(config_dict):
    """Short content hash of the resolved configuration."""
    canon = json.dumps(config_dict, sort_keys=True, default=str)
    return hashlib.sha1(canon.encode()).hexdigest()[:12]


def write_manifest(outdir, command, config_dict, wall_time_s, extra=None):
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "config": config_dict,
        "build_id": build_id(config_dict),
        "wall_time_s": wall_time_s,
        "created_unix": time.time(),
    }
    if extra:
        manifest.update(extra)
    (outdir / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True, default=str) + "\n",
        encoding="utf-8",
    )
    return manifest


def read_manifest(path):
    path = Path(path)
    if path.is_dir():
        path = path / "manifest.json"
    return json.loads(path.read_text(encoding="utf-8"))


def parse_grid(spec):
    """start:stop:step inclusive of both endpoints within half a step;
    a plain number or comma list is also accepted."""
    spec = spec.strip()
    if ":" in spec:
        parts = spec.split(":")
        if len(parts) != 3:
            raise ValueError(f"grid must be start:stop:step, got {spec!r}")
        start, stop, step = (float(p) for p in parts)
        if step == 0 or (stop - start) * step < 0:
            raise ValueError(f"inconsistent grid {spec!r}")
        count = int(np.floor((stop - start) / step + 0.5 + 1e-9))
        values = start + step * np.arange(count + 1)
        return values[np.abs(values - start) <= abs(stop - start) + abs(step) / 2]
    return parse_float_list(spec)


def parse_float_list(spec):
    values = []
    for tok in spec.split(","):
        tok = tok.strip()
        if not tok:
            continue
        values.append(float("inf") if tok.lower() in ("inf", "infinity") else float(tok))
    if not values:
        raise ValueError("empty list")
    return np.array(values)


def parse_int_list(spec):
    return [int(tok) for tok in spec.split(",") if tok.strip()]
