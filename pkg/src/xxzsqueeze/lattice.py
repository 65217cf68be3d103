"""Lattices, power-law coupling weights, dilution, and the drive-induced XX mapping.

Site coordinates are integer vectors on a cubic lattice with spacing 1.
Under periodic boundaries all distances use the minimum-image convention
per axis, so d_ij <= sqrt(D) * L / 2.
"""

from dataclasses import dataclass, field, replace

import numpy as np

PERIODIC = "periodic"
OPEN = "open"


@dataclass(frozen=True)
class Lattice:
    """Cubic lattice in D dimensions with a list of occupied sites.

    ``coords`` has shape (N, D); rows are integer site coordinates inside
    the box given by ``lengths``. Immutable after construction.
    """

    dims: int
    lengths: tuple
    bc: str
    coords: np.ndarray = field(repr=False)

    def __post_init__(self):
        if not 1 <= self.dims <= 3:
            raise ValueError(f"dims must be 1, 2, or 3, got {self.dims}")
        if len(self.lengths) != self.dims:
            raise ValueError("one length per dimension required")
        if any(ell < 1 for ell in self.lengths):
            raise ValueError(f"lengths must be positive, got {self.lengths}")
        if self.bc not in (PERIODIC, OPEN):
            raise ValueError(f"unknown boundary condition {self.bc!r}")
        coords = np.asarray(self.coords)
        if coords.ndim != 2 or coords.shape[1] != self.dims:
            raise ValueError("coords must have shape (N, dims)")
        if coords.shape[0] < 1:
            raise ValueError("lattice must contain at least one site")
        if np.any(coords < 0) or np.any(coords >= np.asarray(self.lengths)):
            raise ValueError("site coordinates out of bounds")
        if len(np.unique(coords, axis=0)) != coords.shape[0]:
            raise ValueError("duplicate sites")
        object.__setattr__(self, "coords", coords.astype(np.int64))
        self.coords.setflags(write=False)

    @property
    def n_sites(self):
        return self.coords.shape[0]

    def pair_distances(self):
        """N x N matrix of Euclidean distances (minimum image if periodic)."""
        delta = self.coords[:, None, :] - self.coords[None, :, :]
        if self.bc == PERIODIC:
            lengths = np.asarray(self.lengths)
            delta = delta - lengths * np.round(delta / lengths)
        return np.sqrt(np.sum(delta.astype(float) ** 2, axis=-1))


def build_lattice(dims, lengths, bc=PERIODIC):
    """Fully occupied cubic lattice; sites enumerated row-major."""
    if np.isscalar(lengths):
        lengths = (int(lengths),) * dims
    lengths = tuple(int(ell) for ell in lengths)
    if any(ell < 1 for ell in lengths):
        raise ValueError(f"lengths must be positive, got {lengths}")
    grids = np.meshgrid(*[np.arange(ell) for ell in lengths], indexing="ij")
    coords = np.stack([g.ravel() for g in grids], axis=1)
    return Lattice(dims=dims, lengths=lengths, bc=bc, coords=coords)


def coupling_weights(lattice, alpha):
    """Pairwise weights 1/d_ij^alpha; alpha=inf is the nearest-neighbor indicator.

    The diagonal is zero. Distances of exactly 1 define nearest neighbors
    (lattice spacing is 1).
    """
    if alpha < 0:
        raise ValueError(f"alpha must be nonnegative, got {alpha}")
    dist = lattice.pair_distances()
    n = lattice.n_sites
    if np.isinf(alpha):
        weights = (np.abs(dist - 1.0) < 1e-9).astype(float)
    else:
        with np.errstate(divide="ignore"):
            weights = np.where(dist > 0, dist, 1.0) ** (-float(alpha))
        weights[np.arange(n), np.arange(n)] = 0.0
    np.fill_diagonal(weights, 0.0)
    return weights


def mean_coupling(weights):
    """Average of w_ij over all ordered pairs i != j."""
    n = weights.shape[0]
    if n < 2:
        raise ValueError("mean coupling requires at least two sites")
    return float(np.sum(weights) / (n * (n - 1)))


def dilute(lattice, filling, seed):
    """Keep round(f*N) sites chosen uniformly without replacement.

    The surviving sites keep their original coordinates, so distances are
    computed on the undiluted geometry.
    """
    if not 0 < filling <= 1:
        raise ValueError(f"filling fraction must be in (0, 1], got {filling}")
    if filling == 1:
        return lattice
    n_keep = int(round(filling * lattice.n_sites))
    if n_keep < 2:
        raise ValueError(f"filling {filling} leaves fewer than two sites")
    rng = np.random.default_rng(seed)
    keep = np.sort(rng.choice(lattice.n_sites, size=n_keep, replace=False))
    return replace(lattice, coords=lattice.coords[keep])


@dataclass(frozen=True)
class CouplingModel:
    """Symmetric pairwise weights plus the two scalar couplings of the XXZ model.

    The Hamiltonian convention is the ordered double sum over i != j, so each
    unordered pair contributes twice; all downstream code (classical fields,
    exact matrix elements, analytic series) uses this convention.
    """

    weights: np.ndarray = field(repr=False)
    jperp: float
    jz: float
    alpha: float

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise ValueError("weight matrix must be square")
        if not np.allclose(w, w.T):
            raise ValueError("weight matrix must be symmetric")
        if np.any(np.diag(w) != 0):
            raise ValueError("weight matrix must have zero diagonal")
        if np.any(w < 0):
            raise ValueError("weights must be nonnegative")
        object.__setattr__(self, "weights", w)
        self.weights.setflags(write=False)

    @property
    def n_sites(self):
        return self.weights.shape[0]


def build_model(lattice, alpha, jperp=1.0, jz=0.0):
    """Convenience constructor: weights from the lattice, couplings attached."""
    return CouplingModel(
        weights=coupling_weights(lattice, alpha), jperp=jperp, jz=jz, alpha=alpha
    )


def xx_from_drive(jz, n_sites, h_alpha):
    """Map a strongly driven Ising model onto XX couplings.

    Returns (jperp', jz', omega_min): the effective couplings (jz/2, 0) and
    the drive scale that must be greatly exceeded for the mapping to hold,
    omega_min = N * h_alpha * |jz| / 2.
    """
    omega_min = 0.5 * n_sites * h_alpha * abs(jz)
    return jz / 2.0, 0.0, omega_min
