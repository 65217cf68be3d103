"""Closed-form moment series for the two exactly solvable limits.

Uniform twisting (the alpha=0 limit, Hamiltonian chi*S_z^2 acting on the
x-polarized coherent state) and the power-law Ising limit (jperp=0) both
admit product closed forms. Sign and factor conventions are the dominant
bug class here, so both oracles ship with self-tests against the exact
engine (`validate_oat_closed_forms`, `validate_ising_closed_forms`) that
the test suite runs before anything else relies on them.
"""

import numpy as np

from . import kernels
from .series import MomentSeries, tau_column
from .squeezing import xi2_over_grid


def oat_moments(n_spins, chi_t):
    """Exact collective moments of exp(-i*chi*S_z^2*t) on the x-polarized state.

    ``chi_t`` is the dimensionless phase chi*t (scalar or array). Returns
    (mean (...,3), second (...,3,3) symmetrized, s2). <S^2> is conserved.
    """
    n = n_spins
    chi_t = np.asarray(chi_t, dtype=float)
    cos1 = np.cos(chi_t)
    sx = (n / 2) * cos1 ** (n - 1)
    syy = n / 4 + (n * (n - 1) / 8) * (1 - np.cos(2 * chi_t) ** (n - 2))
    szz = np.full_like(chi_t, n / 4)
    s2 = np.full_like(chi_t, (n / 2) * (n / 2 + 1))
    sxx = s2 - syy - szz
    syz = (n * (n - 1) / 4) * np.sin(chi_t) * cos1 ** (n - 2)
    zeros = np.zeros_like(chi_t)
    mean = np.stack([sx, zeros, zeros], axis=-1)
    second = np.empty(chi_t.shape + (3, 3))
    second[..., 0, 0] = sxx
    second[..., 1, 1] = syy
    second[..., 2, 2] = szz
    second[..., 0, 1] = second[..., 1, 0] = 0.0
    second[..., 0, 2] = second[..., 2, 0] = 0.0
    second[..., 1, 2] = second[..., 2, 1] = syz
    return mean, second, s2


def oat_series(n_spins, chi, t_grid, min_mean_spin=None):
    """MomentSeries for uniform twisting with strength chi."""
    if n_spins < 2:
        raise ValueError("at least two spins required")
    t_grid = np.asarray(t_grid, dtype=float)
    mean, second, s2 = oat_moments(n_spins, chi * t_grid)
    xi2 = xi2_over_grid(mean, second, n_spins, min_mean_spin=min_mean_spin)
    return MomentSeries(
        t=t_grid, mean=mean, second=second, s2=s2, xi2=xi2,
        n_spins=n_spins, n_traj=0, tau=tau_column(t_grid, 0.0, chi),
        meta={"engine": "oat", "chi": float(chi)},
    )


def ising_moments(weights, jz, t):
    """Exact collective moments of the power-law Ising model at one time.

    Every one- and two-point function is a product over partner sites of
    cosines of the accumulated half-phase jz*w_ik*t (ordered-sum convention).
    """
    n = weights.shape[0]
    ph = np.ascontiguousarray(jz * t * weights)
    sum_p, sum_a, sum_b, sum_c = kernels.ising_pair_sums(ph)
    mean = np.array([0.5 * sum_p, 0.0, 0.0])
    sxx = (sum_a + sum_b) / 8 + n / 4
    syy = (sum_a - sum_b) / 8 + n / 4
    szz = n / 4
    syz = sum_c / 4
    second = np.array([[sxx, 0.0, 0.0], [0.0, syy, syz], [0.0, syz, szz]])
    s2 = sum_a / 4 + 3 * n / 4
    return mean, second, s2


def ising_series(weights, jz, t_grid, min_mean_spin=None):
    """MomentSeries for the Ising limit (jperp=0) with couplings jz*w_ij."""
    weights = np.asarray(weights, dtype=float)
    if not np.allclose(weights, weights.T):
        raise ValueError("weights must be symmetric")
    n = weights.shape[0]
    t_grid = np.asarray(t_grid, dtype=float)
    n_t = len(t_grid)
    mean = np.empty((n_t, 3))
    second = np.empty((n_t, 3, 3))
    s2 = np.empty(n_t)
    for k in range(n_t):
        mean[k], second[k], s2[k] = ising_moments(weights, jz, t_grid[k])
    xi2 = xi2_over_grid(mean, second, n, min_mean_spin=min_mean_spin)
    return MomentSeries(
        t=t_grid, mean=mean, second=second, s2=s2, xi2=xi2,
        n_spins=n, n_traj=0, tau=tau_column(t_grid, 0.0, jz),
        meta={"engine": "ising", "jz": float(jz)},
    )


def _series_deviation(series_a, series_b):
    """Largest deviation across all emitted columns.

    Moments are compared absolutely. xi^2 is compared relative to its
    magnitude: it spans many orders of magnitude as the mean spin decays
    and its absolute value is ill-conditioned exactly where the definition
    degenerates, which no analysis ever evaluates.
    """
    xi_a, xi_b = series_a.xi2, series_b.xi2
    both = np.isfinite(xi_a) & np.isfinite(xi_b)
    xi_dev = 0.0
    if np.any(both):
        xi_dev = float(np.max(np.abs(xi_a[both] - xi_b[both])
                              / np.maximum(1.0, np.abs(xi_b[both]))))
    return max(
        float(np.max(np.abs(series_a.mean - series_b.mean))),
        float(np.max(np.abs(series_a.second - series_b.second))),
        float(np.max(np.abs(series_a.s2 - series_b.s2))),
        xi_dev,
    )


def validate_oat_closed_forms(n_spins=8, chi=0.7, n_times=20, exact_tol=1e-11):
    """Deviation of the closed forms from exact evolution.

    Checks both the pure twisting realization (jperp=0, uniform weights,
    where jz*sum_{i!=j} s_zi*s_zj differs from chi*S_z^2 only by a constant)
    and a uniform-coupling XXZ model with jperp != 0 and jz-jperp = chi.
    """
    from .exact import evolve_exact
    from .lattice import CouplingModel

    w = np.ones((n_spins, n_spins)) - np.eye(n_spins)
    t_max = 2.5 * n_spins ** (-2 / 3) / abs(chi)
    t_grid = np.linspace(0, t_max, n_times)
    reference = oat_series(n_spins, chi, t_grid)
    worst = 0.0
    for jperp in (0.0, 0.6):
        model = CouplingModel(weights=w, jperp=jperp, jz=jperp + chi, alpha=0.0)
        exact = evolve_exact(model, t_grid, tol=exact_tol)
        worst = max(worst, _series_deviation(reference, exact))
    return worst


def validate_ising_closed_forms(n_spins=8, jz=0.9, n_times=20, seed=11, exact_tol=1e-11):
    """Deviation of the Ising closed forms from exact evolution on random weights."""
    from .exact import evolve_exact
    from .lattice import CouplingModel

    rng = np.random.default_rng(seed)
    w = rng.uniform(0.1, 1.0, (n_spins, n_spins))
    w = 0.5 * (w + w.T)
    np.fill_diagonal(w, 0.0)
    t_grid = np.linspace(0, 3.0 / abs(jz), n_times)
    reference = ising_series(w, jz, t_grid)
    model = CouplingModel(weights=w, jperp=0.0, jz=jz, alpha=np.nan)
    exact = evolve_exact(model, t_grid, tol=exact_tol)
    return _series_deviation(reference, exact)
