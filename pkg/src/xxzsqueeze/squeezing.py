"""Squeezing parameter, optimal squeezing time, and minimal squared magnetization.

The squeezing parameter follows the metrological-gain definition
xi^2 = N * min_phi Var(S_phi_perp) / |<S>|^2, with the minimization over the
plane orthogonal to the mean spin done in closed form via the smaller
eigenvalue of the 2x2 transverse covariance matrix.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateMeanSpinError


def transverse_pair(means):
    """Orthonormal pair spanning the plane orthogonal to each mean-spin vector.

    ``means`` has shape (..., 3) and must be nonzero along the last axis.
    The pair is built from the coordinate axis least aligned with the mean,
    so it is deterministic; xi^2 does not depend on the choice.
    """
    means = np.asarray(means, dtype=float)
    norm = np.linalg.norm(means, axis=-1, keepdims=True)
    unit = means / norm
    pick = np.argmin(np.abs(unit), axis=-1)
    seed = np.zeros_like(unit)
    np.put_along_axis(seed, pick[..., None], 1.0, axis=-1)
    e1 = np.cross(seed, unit)
    e1 /= np.linalg.norm(e1, axis=-1, keepdims=True)
    e2 = np.cross(unit, e1)
    return e1, e2


def min_transverse_variance(means, seconds):
    """Smallest variance over axes orthogonal to the mean spin (closed form).

    ``seconds`` are symmetrized second moments with shape (..., 3, 3).
    Returns min_phi Var(S_phi_perp) = lambda_min of the transverse covariance.
    """
    means = np.asarray(means, dtype=float)
    seconds = np.asarray(seconds, dtype=float)
    e1, e2 = transverse_pair(means)
    m1 = np.einsum("...i,...i->...", means, e1)
    m2 = np.einsum("...i,...i->...", means, e2)
    c11 = np.einsum("...i,...ij,...j->...", e1, seconds, e1) - m1 * m1
    c22 = np.einsum("...i,...ij,...j->...", e2, seconds, e2) - m2 * m2
    c12 = np.einsum("...i,...ij,...j->...", e1, seconds, e2) - m1 * m2
    half_sum = 0.5 * (c11 + c22)
    half_diff = 0.5 * (c11 - c22)
    return half_sum - np.sqrt(half_diff**2 + c12**2)


def squeezing_param(mean_spin, second_moments, n_spins, min_mean_spin=None):
    """xi^2 for a single set of collective moments.

    Raises DegenerateMeanSpinError when |<S>| falls below the threshold
    (default 1e-6 * N), where the definition diverges.
    """
    mean_spin = np.asarray(mean_spin, dtype=float)
    if min_mean_spin is None:
        min_mean_spin = 1e-6 * n_spins
    length = float(np.linalg.norm(mean_spin))
    if length < min_mean_spin:
        raise DegenerateMeanSpinError(
            f"mean spin length {length:.3e} below threshold {min_mean_spin:.3e}"
        )
    lam = float(min_transverse_variance(mean_spin, second_moments))
    return n_spins * lam / length**2


def xi2_over_grid(means, seconds, n_spins, min_mean_spin=None):
    """Vectorized xi^2 over leading axes; NaN where the mean spin is degenerate."""
    means = np.asarray(means, dtype=float)
    if min_mean_spin is None:
        min_mean_spin = 1e-6 * n_spins
    lengths = np.linalg.norm(means, axis=-1)
    ok = lengths >= min_mean_spin
    xi2 = np.full(lengths.shape, np.nan)
    if np.any(ok):
        lam = min_transverse_variance(means[ok], np.asarray(seconds, dtype=float)[ok])
        xi2[ok] = n_spins * lam / lengths[ok] ** 2
    return xi2


FLAG_BOUNDARY = "boundary-minimum"
FLAG_FLAT = "flat-series"


@dataclass
class OptimalSqueezing:
    t_opt: float
    xi2_opt: float
    t_opt_err: float
    xi2_opt_err: float
    index: int
    flags: tuple = ()


@dataclass
class SqueezingSummary:
    t_opt: float
    xi2_opt: float
    s2_min: float
    t_opt_err: float = 0.0
    xi2_opt_err: float = 0.0
    s2_min_err: float = 0.0
    flags: tuple = ()
    extras: dict = field(default_factory=dict)


def _parabolic_vertex(x, y):
    """Vertex of the parabola through three points; None unless convex."""
    x0, x1, x2 = x
    y0, y1, y2 = y
    f01 = (y1 - y0) / (x1 - x0)
    f12 = (y2 - y1) / (x2 - x1)
    a = (f12 - f01) / (x2 - x0)
    if a <= 0:
        return None
    b = f01 - a * (x0 + x1)
    c = y0 - (a * x0 + b) * x0
    xv = -b / (2 * a)
    yv = (a * xv + b) * xv + c
    return xv, yv


def optimal_squeezing(series, refine=True):
    """Time and value of minimal xi^2 on a MomentSeries.

    The discrete argmin (ties broken toward earliest time) is refined by
    3-point parabolic interpolation in log xi^2 when the minimum is interior
    and the neighborhood is convex. Boundary minima and flat series are
    flagged rather than refined.
    """
    t = np.asarray(series.t, dtype=float)
    xi2 = np.asarray(series.xi2, dtype=float)
    finite = np.isfinite(xi2)
    if not np.any(finite):
        raise ValueError("xi^2 is undefined on the whole series")
    flags = []
    xi2_masked = np.where(finite, xi2, np.inf)
    spread = np.max(xi2_masked[finite]) - np.min(xi2_masked[finite])
    if spread <= 1e-12 * max(1.0, abs(float(np.max(xi2_masked[finite])))):
        flags.append(FLAG_FLAT)
        idx = 0
    else:
        idx = int(np.argmin(xi2_masked))
    last = len(t) - 1
    if idx == 0 or idx == last or not finite[min(idx + 1, last)] or not finite[max(idx - 1, 0)]:
        if FLAG_FLAT not in flags:
            flags.append(FLAG_BOUNDARY)

    t_opt = float(t[idx])
    xi2_opt = float(xi2[idx])
    if idx > 0:
        gap_lo = t[idx] - t[idx - 1]
    else:
        gap_lo = t[1] - t[0] if last >= 1 else 0.0
    if idx < last:
        gap_hi = t[idx + 1] - t[idx]
    else:
        gap_hi = gap_lo
    t_opt_err = 0.5 * max(gap_lo, gap_hi)
    xi2_opt_err = float(np.asarray(series.err_xi2)[idx])

    if refine and not flags and 0 < idx < last and xi2[idx] > 0:
        triple_t = t[idx - 1 : idx + 2]
        triple_y = np.log(xi2[idx - 1 : idx + 2])
        vertex = _parabolic_vertex(triple_t, triple_y)
        if vertex is not None:
            tv, yv = vertex
            if triple_t[0] <= tv <= triple_t[2]:
                t_opt = float(tv)
                xi2_opt = float(np.exp(yv))
    return OptimalSqueezing(
        t_opt=t_opt,
        xi2_opt=xi2_opt,
        t_opt_err=t_opt_err,
        xi2_opt_err=xi2_opt_err,
        index=idx,
        flags=tuple(flags),
    )


def min_squared_magnetization(series, t_opt, normalized=False):
    """Minimum of <S^2> restricted to times t <= t_opt."""
    t = np.asarray(series.t, dtype=float)
    if t_opt < t[0] - 1e-12 or t_opt > t[-1] + 1e-12:
        raise ValueError(f"t_opt={t_opt} outside the series range")
    window = t <= t_opt + 1e-12
    idx = int(np.argmin(np.asarray(series.s2)[window]))
    value = float(np.asarray(series.s2)[window][idx])
    err = float(np.asarray(series.err_s2)[window][idx])
    if normalized:
        value /= series.s2_initial
        err /= series.s2_initial
    return value, err


def summarize(series, normalized_s2=True, refine=True):
    """SqueezingSummary (t_opt, xi2_opt, S2_min) for one series."""
    opt = optimal_squeezing(series, refine=refine)
    s2_min, s2_err = min_squared_magnetization(series, opt.t_opt, normalized=normalized_s2)
    return SqueezingSummary(
        t_opt=opt.t_opt,
        xi2_opt=opt.xi2_opt,
        s2_min=s2_min,
        t_opt_err=opt.t_opt_err,
        xi2_opt_err=opt.xi2_opt_err,
        s2_min_err=s2_err,
        flags=opt.flags,
    )


def to_decibels(xi2):
    """-10*log10(xi^2): positive values mean squeezing."""
    return -10.0 * np.log10(xi2)
