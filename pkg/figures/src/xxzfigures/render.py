"""Figure builders over simulation artifacts.

Every builder is read-only over the artifact directory and deterministic
for fixed inputs. Builders return the output path; the heatmap additionally
returns the boundary-overlay rows it drew so callers can check them against
the artifact table verbatim.
"""

from dataclasses import dataclass, field
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .artifacts import (
    SchemaError, find_series, find_slices, read_manifest, read_table,
    require_columns,
)

DB_LABEL = r"$-10\,\log_{10}\xi^2_{\rm opt}$"


@dataclass
class PlotSpec:
    kind: str
    artifacts: str
    out: str
    options: dict = field(default_factory=dict)


def render(spec):
    """Dispatch a PlotSpec to its builder; returns the written path."""
    builders = {
        "heatmap": heatmap,
        "timeseries": timeseries,
        "scaling": scaling,
        "boundary": boundary_scaling,
        "gap": gap_figure,
        "filling": filling,
        "sphere": sphere,
    }
    if spec.kind not in builders:
        raise ValueError(f"unknown figure kind {spec.kind!r}")
    result = builders[spec.kind](spec.artifacts, spec.out, **spec.options)
    return result


def _alpha_key(alpha):
    return np.inf if np.isinf(alpha) else alpha


def _alpha_label(alpha):
    return r"$\infty$" if np.isinf(alpha) else f"{alpha:g}"


def heatmap(artifacts, out, size=None):
    """Phase-diagram panels (squeezing in dB, minimal squared magnetization,
    optimal time) on the (jz/jperp, alpha) grid, with the alpha = D guide
    line and the detected boundary overlaid.

    Returns (path, overlay_rows) with one (alpha, jz_crit) per overlay point.
    """
    slices = find_slices(artifacts)
    if size is not None:
        slices = [s for s in slices if s[1] == size]
    if not slices:
        raise FileNotFoundError(f"no slice CSVs in {artifacts}")
    size = slices[0][1]
    manifest = read_manifest(artifacts)
    dims = int(manifest["config"].get("dims", 2))

    alphas = sorted({a for a, _, _ in slices}, key=_alpha_key)
    tables = {}
    for alpha, sz, path in slices:
        table = read_table(path)
        require_columns(table, ("jz_over_jperp", "xi2_opt_dB", "S2_min_norm", "t_opt"), path)
        tables[alpha] = table
    jz = tables[alphas[0]]["jz_over_jperp"]

    grids = {name: np.full((len(alphas), len(jz)), np.nan)
             for name in ("xi2_opt_dB", "S2_min_norm", "t_opt")}
    for row, alpha in enumerate(alphas):
        table = tables[alpha]
        for name in grids:
            grids[name][row, : len(table[name])] = table[name]

    overlay = []
    boundary_path = Path(artifacts) / "boundary.csv"
    if boundary_path.exists():
        btable = read_table(boundary_path)
        require_columns(btable, ("alpha", "L", "jz_crit"), boundary_path)
        keep = btable["L"] == size
        overlay = list(zip(btable["alpha"][keep], btable["jz_crit"][keep]))

    fig, axes = plt.subplots(3, 1, figsize=(6, 9), sharex=True)
    titles = (DB_LABEL, r"$\langle S^2\rangle_{\rm min}/\langle S^2\rangle_0$",
              r"$t_{\rm opt}\times J_\perp$")
    y_pos = np.arange(len(alphas))
    extent = (jz[0], jz[-1], -0.5, len(alphas) - 0.5)
    for ax, name, title in zip(axes, grids, titles):
        data = grids[name]
        if name == "t_opt":
            data = np.log10(np.where(data > 0, data, np.nan))
            title += " (log10)"
        im = ax.imshow(data, origin="lower", aspect="auto", extent=extent,
                       cmap="viridis")
        fig.colorbar(im, ax=ax, label=title)
        ax.set_yticks(y_pos)
        ax.set_yticklabels([_alpha_label(a) for a in alphas])
        ax.set_ylabel(r"$\alpha$")
        finite = [i for i, a in enumerate(alphas) if np.isfinite(a)]
        if any(np.isclose(alphas[i], dims) for i in finite):
            row = next(i for i in finite if np.isclose(alphas[i], dims))
            ax.axhline(row, color="0.6", linestyle="--", linewidth=1)
        for alpha, jz_crit in overlay:
            row = next((i for i, a in enumerate(alphas)
                        if a == alpha or (np.isinf(a) and np.isinf(alpha))), None)
            if row is not None:
                ax.plot([jz_crit], [row], marker="o", color="0.4", ms=5,
                        linestyle="dotted")
    axes[-1].set_xlabel(r"$J_z/J_\perp$")
    fig.suptitle(f"L = {size} ({size**dims} spins, D = {dims})")
    fig.tight_layout()
    fig.savefig(out, dpi=150)
    plt.close(fig)
    return Path(out), overlay


def timeseries(artifacts, out, alpha=None, size=None):
    """Squeezing and squared magnetization over time, one curve per jz value,
    with per-curve minimum markers and the boundary-adjacent curve in red."""
    series = find_series(artifacts)
    if alpha is not None:
        series = [s for s in series if s[0] == alpha or (np.isinf(alpha) and np.isinf(s[0]))]
    if size is not None:
        series = [s for s in series if s[1] == size]
    if not series:
        raise FileNotFoundError(f"no series CSVs in {artifacts}")
    series.sort(key=lambda s: s[2])
    jz_values = [s[2] for s in series]

    red_jz = None
    boundary_path = Path(artifacts) / "boundary.csv"
    if boundary_path.exists():
        btable = read_table(boundary_path)
        require_columns(btable, ("alpha", "jz_crit"), boundary_path)
        crits = [c for a, c in zip(btable["alpha"], btable["jz_crit"])
                 if alpha is None or a == alpha]
        if crits:
            above = [jz for jz in jz_values if jz > crits[0]]
            red_jz = min(above) if above else None

    cmap = plt.get_cmap("viridis")
    fig, axes = plt.subplots(2, 1, figsize=(6, 7), sharex=True)
    for k, (a, sz, jz, path) in enumerate(series):
        table = read_table(path)
        require_columns(table, ("t", "xi2", "S2"), path)
        x = table["tau"] if "tau" in table and np.any(np.isfinite(table["tau"])) else table["t"]
        color = "red" if red_jz is not None and jz == red_jz else cmap(
            k / max(1, len(series) - 1))
        with np.errstate(invalid="ignore", divide="ignore"):
            db = -10 * np.log10(table["xi2"])
        axes[0].plot(x, db, color=color, lw=1.2, label=f"{jz:g}")
        s2 = table["S2"] / table["S2"][0]
        axes[1].plot(x, s2, color=color, lw=1.2)
        finite = np.isfinite(table["xi2"])
        if np.any(finite):
            i_min = np.flatnonzero(finite)[np.argmin(table["xi2"][finite])]
            axes[0].plot([x[i_min]], [db[i_min]], marker="v", color=color, ms=5)
    axes[0].set_ylabel(r"$-10\,\log_{10}\xi^2$")
    axes[1].set_ylabel(r"$\langle S^2\rangle/\langle S^2\rangle_0$")
    axes[1].set_xlabel(r"$\tau = t\,|J_z - J_\perp|$")
    if len(series) <= 12:
        axes[0].legend(title=r"$J_z/J_\perp$", fontsize=7)
    fig.tight_layout()
    fig.savefig(out, dpi=150)
    plt.close(fig)
    return Path(out)


def _load_fits(artifacts, name):
    import json

    path = Path(artifacts) / name
    if not path.exists():
        return {}
    return json.loads(path.read_text(encoding="utf-8"))


def scaling(artifacts, out):
    """Optimal squeezing versus size on log-log axes with a/N^nu fit lines."""
    paths = sorted(Path(artifacts).glob("scaling_a*.csv"))
    if not paths:
        raise FileNotFoundError(f"no scaling CSVs in {artifacts}")
    fits = _load_fits(artifacts, "fit_power.json")
    fig, ax = plt.subplots(figsize=(5, 4))
    for path in paths:
        table = read_table(path)
        require_columns(table, ("N", "xi2_opt"), path)
        tag = path.stem.replace("scaling_a", "")
        points = ax.plot(table["N"], table["xi2_opt"], "o", label=rf"$\alpha$ = {tag}")
        if tag in fits:
            params = fits[tag]["params"]
            n_dense = np.geomspace(table["N"].min(), table["N"].max(), 50)
            ax.plot(n_dense, params["a"] / n_dense ** params["nu"], "--",
                    color=points[0].get_color(),
                    label=rf"fit $\nu$ = {params['nu']:.2f}")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("N")
    ax.set_ylabel(r"$\xi^2_{\rm opt}$")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(out, dpi=150)
    plt.close(fig)
    return Path(out)


def boundary_scaling(artifacts, out):
    """Critical coupling versus system size with the -gamma*ln(N)+b fit."""
    path = Path(artifacts) / "boundary.csv"
    table = read_table(path)
    require_columns(table, ("N", "jz_crit", "alpha"), path)
    fits = _load_fits(artifacts, "fit_log.json")
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.semilogx(table["N"], table["jz_crit"], "o")
    for tag, fit in fits.items():
        params = fit["params"]
        n_dense = np.geomspace(table["N"].min(), table["N"].max(), 50)
        ax.plot(n_dense, -params["gamma"] * np.log(n_dense) + params["b"], "--",
                label=rf"$\alpha$ = {tag}: $-{params['gamma']:.2f}\,\ln N {params['b']:+.2f}$")
    ax.set_xlabel("N")
    ax.set_ylabel(r"$J_z^{\rm crit}/J_\perp$")
    if fits:
        ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(out, dpi=150)
    plt.close(fig)
    return Path(out)


def gap_figure(artifacts, out):
    """Spectral gap versus epsilon = 2/L on log-log axes, one line per alpha."""
    path = Path(artifacts) / "gap.csv"
    table = read_table(path)
    require_columns(table, ("epsilon", "gap", "alpha", "dims"), path)
    fits = _load_fits(artifacts, "gap_fit.json")
    fig, ax = plt.subplots(figsize=(5, 4))
    for alpha in sorted(set(table["alpha"])):
        keep = table["alpha"] == alpha
        line = ax.loglog(table["epsilon"][keep], table["gap"][keep], "o-",
                         label=rf"$\alpha$ = {alpha:g}")
        tag = "inf" if np.isinf(alpha) else (f"{int(alpha)}" if alpha == int(alpha)
                                             else f"{alpha}".replace(".", "p"))
        if tag in fits:
            exp = fits[tag]["exponent"]
            eps = table["epsilon"][keep]
            ref = table["gap"][keep][np.argmax(eps)]
            ax.loglog(eps, ref * (eps / eps.max()) ** exp, "--",
                      color=line[0].get_color(), lw=0.8,
                      label=rf"$\epsilon^{{{exp:.2f}}}$")
    ax.set_xlabel(r"$\epsilon = 2/L$")
    ax.set_ylabel(r"$\Delta_{\rm gap}/|J_\perp|$")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(out, dpi=150)
    plt.close(fig)
    return Path(out)


def filling(artifacts, out):
    """Optimal squeezing versus filling fraction with oracle reference levels."""
    path = Path(artifacts) / "filling.csv"
    table = read_table(path)
    require_columns(table, ("filling", "jz_over_jperp", "xi2_opt_dB",
                            "xi2_opt_oat_dB", "xi2_opt_ising_dB"), path)
    fig, ax = plt.subplots(figsize=(5, 4))
    for jz in sorted(set(table["jz_over_jperp"])):
        keep = table["jz_over_jperp"] == jz
        order = np.argsort(table["filling"][keep])
        line = ax.plot(table["filling"][keep][order], table["xi2_opt_dB"][keep][order],
                       "o-", label=rf"$J_z/J_\perp$ = {jz:g}")
        oat = table["xi2_opt_oat_dB"][keep][order]
        if np.any(np.isfinite(oat)):
            ax.plot(table["filling"][keep][order], oat, ":",
                    color=line[0].get_color(), lw=1.0)
    ising = table["xi2_opt_ising_dB"]
    if np.any(np.isfinite(ising)):
        ax.axhline(np.nanmax(ising), color="0.5", linestyle="-.", lw=1.0,
                   label="Ising limit")
    ax.set_xlabel("filling fraction f")
    ax.set_ylabel(DB_LABEL)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(out, dpi=150)
    plt.close(fig)
    return Path(out)


def sphere(artifacts, out, time_tag=None):
    """Husimi overlap on the sphere as a theta-phi map (one panel per time)."""
    paths = sorted(Path(artifacts).glob("husimi_*.csv"))
    if time_tag is not None:
        paths = [p for p in paths if p.stem == f"husimi_t{time_tag}"]
    if not paths:
        raise FileNotFoundError(f"no husimi CSVs in {artifacts}")
    fig, axes = plt.subplots(1, len(paths), figsize=(4 * len(paths), 3.2),
                             squeeze=False)
    for ax, path in zip(axes[0], paths):
        table = read_table(path)
        require_columns(table, ("theta", "phi", "Q"), path)
        thetas = np.unique(table["theta"])
        phis = np.unique(table["phi"])
        grid = table["Q"].reshape(len(thetas), len(phis))
        mesh = ax.pcolormesh(phis, thetas, grid, cmap="Blues", shading="nearest")
        fig.colorbar(mesh, ax=ax, label="Q")
        ax.invert_yaxis()
        ax.set_xlabel(r"$\phi$")
        ax.set_ylabel(r"$\theta$")
        ax.set_title(path.stem.replace("husimi_t", "t = ").replace("p", "."))
    fig.tight_layout()
    fig.savefig(out, dpi=150)
    plt.close(fig)
    return Path(out)
