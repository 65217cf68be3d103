"""Spin-wave energies and the spectral gap of the isotropic model.

The gap is the lattice sum |J_perp| * sum_{n != 0} (1 - cos(2*pi*n_1/L)) / |n|^alpha
over the periodic box Z_L^D, realized as the symmetric window of
minimum-image representatives around the origin (for even L the axis
offsets run from -L/2+1 to L/2). The brute-force tests pin this convention.
"""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class GapSpec:
    size: int
    dims: int
    alpha: float
    jperp: float = 1.0

    def __post_init__(self):
        if self.size < 2:
            raise ValueError("size must be at least 2")
        if self.alpha < 0:
            raise ValueError("alpha must be nonnegative")

    @property
    def epsilon(self):
        return 2.0 / self.size


def _offsets(size):
    """Minimum-image axis representatives: for even L they run -L/2+1 .. L/2
    (the +-L/2 pair is one site), for odd L they are symmetric."""
    return np.arange(-((size - 1) // 2), size // 2 + 1)


def _offset_grid(spec):
    axes = [_offsets(spec.size)] * spec.dims
    grids = np.meshgrid(*axes, indexing="ij")
    coords = np.stack([g.ravel() for g in grids], axis=1)
    nonzero = np.any(coords != 0, axis=1)
    return coords[nonzero]

def _inverse_power(dist2, alpha):
    if np.isinf(alpha):
        return (dist2 == 1).astype(float)
    return dist2 ** (-alpha / 2)


def spin_wave_energy(spec, k):
    """E_k = -jperp * sum_{n != 0} (1 - cos(k.n)) / |n|^alpha."""
    k = np.atleast_1d(np.asarray(k, dtype=float))
    if k.shape != (spec.dims,):
        raise ValueError("wavevector dimension mismatch")
    coords = _offset_grid(spec)
    dist2 = np.sum(coords.astype(float) ** 2, axis=1)
    weights = _inverse_power(dist2, spec.alpha)
    phases = coords @ k
    return -spec.jperp * float(np.sum((1 - np.cos(phases)) * weights))


def gap(spec):
    """|E_k| at the softest wavenumber k = (2*pi/L, 0, ..., 0)."""
    k = np.zeros(spec.dims)
    k[0] = 2 * np.pi / spec.size
    return abs(spin_wave_energy(spec, k))


def rescaled_integral(spec):
    """Discrete I_D(eps): the gap sum rescaled by eps^(alpha-D), so that
    gap = |jperp| * eps^(alpha-D) * I_D(eps)."""
    eps = spec.epsilon
    return gap(spec) / (abs(spec.jperp) * eps ** (spec.alpha - spec.dims))


def gap_scan(sizes, dims, alpha, jperp=1.0):
    """Arrays (L, eps, gap) over a list of linear sizes."""
    sizes = np.asarray(sizes, dtype=int)
    gaps = np.array([gap(GapSpec(int(s), dims, alpha, jperp)) for s in sizes])
    return sizes, 2.0 / sizes, gaps


def fit_gap_exponent(sizes, dims, alpha, jperp=1.0):
    """Log-log fit gap ~ eps^exponent over the given sizes.

    Returns (exponent, intercept, max_log_residual, gamma_hat) where
    gamma_hat is the numerically extracted divergence exponent of I_D(eps)
    (so exponent should track alpha - dims - gamma_hat).
    """
    sizes, eps, gaps = gap_scan(sizes, dims, alpha, jperp)
    log_eps = np.log(eps)
    coeffs = np.polyfit(log_eps, np.log(gaps), 1)
    residuals = np.log(gaps) - np.polyval(coeffs, log_eps)
    integrals = np.array([
        rescaled_integral(GapSpec(int(s), dims, alpha, jperp)) for s in sizes
    ])
    gamma_hat = -np.polyfit(log_eps, np.log(integrals), 1)[0]
    return float(coeffs[0]), float(coeffs[1]), float(np.max(np.abs(residuals))), float(gamma_hat)
