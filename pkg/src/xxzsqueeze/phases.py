"""Parameter sweeps over (alpha, jz/jperp, size), dynamical-phase-boundary
detection from the dip in the minimal squared magnetization, and the
size-scaling fits (power law for optimal squeezing, log divergence for the
critical Ising coupling)."""

import math
from dataclasses import dataclass, field, asdict

import numpy as np

from .dtwa import default_trajectories, run_dtwa
from .errors import BoundaryNotFoundError, XXZSqueezeError
from .exact import evolve_exact
from .lattice import build_lattice, build_model, coupling_weights, dilute, mean_coupling
from .oracles import ising_series, oat_series
from .squeezing import summarize, to_decibels

ENGINES = ("dtwa", "exact", "oat", "ising")


def _float_bits(x):
    return int(np.float64(x).view(np.uint64))


def cell_seed(master_seed, alpha, jz_ratio, n_spins, filling=1.0):
    """Deterministic per-cell seed derived from parameter values, so cells
    are independent of sweep-grid ordering and safe to resume."""
    ss = np.random.SeedSequence(
        [int(master_seed), _float_bits(alpha), _float_bits(jz_ratio),
         int(n_spins), _float_bits(filling)]
    )
    return int(ss.generate_state(1, np.uint64)[0])


def time_grid(jperp, jz, tau_max, n_times):
    """Uniform grid from 0 covering tau_max units of the slow scale
    |jz - jperp| (falling back to the remaining coupling when isotropic)."""
    scale = abs(jz - jperp)
    if scale < 1e-12:
        scale = abs(jperp) if jperp != 0 else abs(jz)
    if scale == 0:
        scale = 1.0
    return np.linspace(0.0, tau_max / scale, n_times)


@dataclass
class SweepConfig:
    dims: int = 2
    sizes: tuple = (8,)
    alphas: tuple = (3.0,)
    jz_ratios: tuple = (0.0,)
    engine: str = "dtwa"
    jperp: float = 1.0
    bc: str = "periodic"
    filling: float = 1.0
    n_traj: int | None = None
    tau_max: float = 8.0
    n_times: int = 161
    rtol: float = 1e-6
    exact_tol: float = 1e-10
    master_seed: int = 0
    workers: int | None = None

    def __post_init__(self):
        if self.engine not in ENGINES:
            raise ValueError(f"unknown engine {self.engine!r}")
        if not self.jz_ratios or not self.alphas or not self.sizes:
            raise ValueError("sweep grids must be nonempty")
        if self.tau_max <= 0 or self.n_times < 2:
            raise ValueError("tau_max must be positive and n_times >= 2")


@dataclass
class CellResult:
    alpha: float
    jz_ratio: float
    size: int
    n_spins: int
    seed: int
    n_traj: int
    status: str = "ok"
    message: str = ""
    t_opt: float = math.nan
    tau_opt: float = math.nan
    xi2_opt: float = math.nan
    xi2_opt_db: float = math.nan
    s2_min_norm: float = math.nan
    t_opt_err: float = 0.0
    xi2_opt_err: float = 0.0
    s2_min_err: float = 0.0
    flags: str = ""

    def as_row(self):
        return asdict(self)


@dataclass
class SweepResult:
    config: SweepConfig
    cells: dict = field(default_factory=dict)  # (alpha, jz_ratio, size) -> CellResult

    def slice(self, alpha, size):
        """Cells of one (alpha, size) slice ordered by jz ratio."""
        rows = [c for (a, _, s), c in self.cells.items() if a == alpha and s == size]
        return sorted(rows, key=lambda c: c.jz_ratio)


def run_cell(config, alpha, jz_ratio, size, series_sink=None, raise_errors=False):
    """Evaluate one sweep cell; engine failures are recorded on the returned
    CellResult (or re-raised when ``raise_errors`` is set, for single runs)."""
    lattice = build_lattice(config.dims, size, config.bc)
    seed = cell_seed(config.master_seed, alpha, jz_ratio, lattice.n_sites, config.filling)
    if config.filling < 1.0:
        # geometry shared by every (alpha, jz) cell at this size and filling
        dilution_seed = cell_seed(config.master_seed, 0.0, 0.0, lattice.n_sites, config.filling)
        lattice = dilute(lattice, config.filling, dilution_seed)
    n = lattice.n_sites
    jz = jz_ratio * config.jperp
    grid = time_grid(config.jperp, jz, config.tau_max, config.n_times)
    n_traj = config.n_traj if config.n_traj is not None else default_trajectories(n)
    cell = CellResult(
        alpha=alpha, jz_ratio=jz_ratio, size=size, n_spins=n, seed=seed,
        n_traj=n_traj if config.engine == "dtwa" else 0,
    )
    try:
        if config.engine == "dtwa":
            model = build_model(lattice, alpha, jperp=config.jperp, jz=jz)
            series = run_dtwa(model, n_traj, grid, seed, rtol=config.rtol,
                              workers=config.workers)
        elif config.engine == "exact":
            model = build_model(lattice, alpha, jperp=config.jperp, jz=jz)
            series = evolve_exact(model, grid, tol=config.exact_tol)
        elif config.engine == "oat":
            weights = coupling_weights(lattice, alpha)
            chi = mean_coupling(weights) * (jz - config.jperp)
            series = oat_series(n, chi, grid)
        else:  # ising
            weights = coupling_weights(lattice, alpha)
            series = ising_series(weights, jz, grid)
        summary = summarize(series)
    except XXZSqueezeError as exc:
        if raise_errors:
            raise
        cell.status = "failed"
        cell.message = str(exc)
        return cell
    gap_scale = abs(jz - config.jperp)
    cell.t_opt = summary.t_opt
    cell.tau_opt = summary.t_opt * gap_scale if gap_scale > 0 else math.nan
    cell.xi2_opt = summary.xi2_opt
    cell.xi2_opt_db = float(to_decibels(summary.xi2_opt)) if summary.xi2_opt > 0 else math.nan
    cell.s2_min_norm = summary.s2_min
    cell.t_opt_err = summary.t_opt_err
    cell.xi2_opt_err = summary.xi2_opt_err
    cell.s2_min_err = summary.s2_min_err
    cell.flags = "|".join(summary.flags)
    if series_sink is not None:
        series_sink((alpha, jz_ratio, size), series)
    return cell


def run_sweep(config, done=None, series_sink=None, progress=None):
    """Evaluate every cell of the grid; previously computed cells may be
    supplied in ``done`` and are carried over untouched (resume support)."""
    result = SweepResult(config=config)
    if done:
        result.cells.update(done)
    for alpha in config.alphas:
        for size in config.sizes:
            for jz_ratio in config.jz_ratios:
                key = (alpha, jz_ratio, size)
                if key in result.cells:
                    continue
                result.cells[key] = run_cell(config, alpha, jz_ratio, size,
                                             series_sink=series_sink)
                if progress is not None:
                    progress(key, result.cells[key])
    return result


@dataclass
class BoundaryEstimate:
    jz_crit: float
    jz_crit_t_jump: float
    resolution: float
    s2_min_at_crit: float
    index: int


def detect_boundary(jz_ratios, s2_min, t_opt=None, jperp=1.0):
    """Critical Ising coupling from the interior dip of <S^2>_min on the
    jz < jperp side, cross-checked against the jump in the optimal time.

    ``jz_ratios`` must be sorted ascending. Raises BoundaryNotFoundError when
    the restricted slice has no interior local minimum (phase spans it).
    """
    jz_ratios = np.asarray(jz_ratios, dtype=float)
    s2_min = np.asarray(s2_min, dtype=float)
    if np.any(np.diff(jz_ratios) <= 0):
        raise ValueError("jz grid must be sorted ascending")
    # jz < jperp in ratio units: < 1 for jperp > 0, > 1 for jperp < 0
    side = jz_ratios < 1.0 if jperp > 0 else jz_ratios > 1.0
    jz_side = jz_ratios[side]
    s2_side = s2_min[side]
    if len(jz_side) < 5:
        raise ValueError("need at least 5 grid points on the jz < jperp side")
    interior = [
        i for i in range(1, len(jz_side) - 1)
        if s2_side[i] < s2_side[i - 1] and s2_side[i] < s2_side[i + 1]
    ]
    if not interior:
        raise BoundaryNotFoundError("no interior local minimum of S2_min in slice")
    best = min(interior, key=lambda i: s2_side[i])
    step = float(np.median(np.diff(jz_side)))

    jz_jump = math.nan
    if t_opt is not None:
        t_side = np.asarray(t_opt, dtype=float)[side]
        valid = np.isfinite(t_side)
        ratios = np.abs(np.diff(np.log(np.where(valid, t_side, np.nan))))
        if np.any(np.isfinite(ratios)):
            j = int(np.nanargmax(ratios))
            jz_jump = 0.5 * (jz_side[j] + jz_side[j + 1])
    return BoundaryEstimate(
        jz_crit=float(jz_side[best]),
        jz_crit_t_jump=float(jz_jump),
        resolution=step,
        s2_min_at_crit=float(s2_side[best]),
        index=int(best),
    )


# fitted exponents from sizes below this are flagged: residual finite-size
# and sampling corrections are expected there
SMALL_N_THRESHOLD = 1024


@dataclass
class FitResult:
    kind: str                 # "power" or "log"
    params: dict
    errors: dict
    residual_norm: float
    cov: np.ndarray
    n_points: int
    caveats: tuple = ()

    def as_dict(self):
        return {
            "kind": self.kind,
            "params": self.params,
            "errors": self.errors,
            "residual_norm": self.residual_norm,
            "cov": np.asarray(self.cov).tolist(),
            "n_points": self.n_points,
            "caveats": list(self.caveats),
        }


def _linear_fit(design, y, weights=None):
    """Weighted least squares with parameter covariance."""
    if weights is not None:
        sw = np.sqrt(weights)
        design = design * sw[:, None]
        y = y * sw
    params, res, _, _ = np.linalg.lstsq(design, y, rcond=None)
    dof = max(1, len(y) - design.shape[1])
    resid = y - design @ params
    sigma2 = float(resid @ resid) / dof
    cov = sigma2 * np.linalg.inv(design.T @ design)
    return params, cov, float(np.linalg.norm(resid))


def fit_power_law(sizes, xi2_opt, errors=None, weighted=False):
    """Fit xi2_opt = a / N^nu by least squares in log-log coordinates."""
    sizes = np.asarray(sizes, dtype=float)
    xi2_opt = np.asarray(xi2_opt, dtype=float)
    if len(sizes) < 3:
        raise ValueError("need at least 3 sizes")
    if np.any(xi2_opt <= 0):
        raise ValueError("xi2_opt values must be positive")
    y = np.log(xi2_opt)
    design = np.stack([np.ones_like(sizes), -np.log(sizes)], axis=1)
    w = None
    if weighted and errors is not None:
        rel = np.asarray(errors, dtype=float) / xi2_opt
        w = 1.0 / np.maximum(rel, 1e-12) ** 2
    params, cov, resid = _linear_fit(design, y, w)
    caveats = ("small-sizes",) if sizes.max() < SMALL_N_THRESHOLD else ()
    return FitResult(
        kind="power",
        params={"a": float(np.exp(params[0])), "nu": float(params[1])},
        errors={"a": float(np.exp(params[0]) * np.sqrt(cov[0, 0])),
                "nu": float(np.sqrt(cov[1, 1]))},
        residual_norm=resid,
        cov=cov,
        n_points=len(sizes),
        caveats=caveats,
    )


def fit_log_divergence(sizes, jz_crit, errors=None, weighted=False):
    """Fit jz_crit/jperp = -gamma * ln(N) + b by least squares."""
    sizes = np.asarray(sizes, dtype=float)
    jz_crit = np.asarray(jz_crit, dtype=float)
    if len(sizes) < 3:
        raise ValueError("need at least 3 sizes")
    if len(np.unique(sizes)) < 2:
        raise ValueError("degenerate size list")
    design = np.stack([-np.log(sizes), np.ones_like(sizes)], axis=1)
    w = None
    if weighted and errors is not None:
        w = 1.0 / np.maximum(np.asarray(errors, dtype=float), 1e-12) ** 2
    params, cov, resid = _linear_fit(design, jz_crit, w)
    caveats = ("small-sizes",) if sizes.max() < SMALL_N_THRESHOLD else ()
    return FitResult(
        kind="log",
        params={"gamma": float(params[0]), "b": float(params[1])},
        errors={"gamma": float(np.sqrt(cov[0, 0])), "b": float(np.sqrt(cov[1, 1]))},
        residual_norm=resid,
        cov=cov,
        n_points=len(sizes),
        caveats=caveats,
    )
