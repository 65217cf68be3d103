"""Time series of collective spin moments shared by all engines.

A MomentSeries holds first and second collective moments on a time grid,
the squared magnetization, the squeezing parameter, and per-quantity
statistical errors (zero for deterministic engines). Second moments are
always symmetrized, which the classical trajectory estimator satisfies
automatically and the exact engine enforces explicitly.
"""

from dataclasses import dataclass, field

import numpy as np

# Order of the six independent second moments in flattened CSV layout.
SECOND_MOMENT_KEYS = ("xx", "xy", "xz", "yy", "yz", "zz")
_SM_INDEX = {"xx": (0, 0), "xy": (0, 1), "xz": (0, 2), "yy": (1, 1), "yz": (1, 2), "zz": (2, 2)}


@dataclass
class MomentSeries:
    t: np.ndarray
    mean: np.ndarray        # (T, 3)
    second: np.ndarray      # (T, 3, 3), symmetrized
    s2: np.ndarray          # (T,)
    xi2: np.ndarray         # (T,), NaN where the mean spin is degenerate
    n_spins: int
    n_traj: int = 0
    tau: np.ndarray | None = None   # t * |jz - jperp|; None at the isotropic point
    err_mean: np.ndarray | None = None
    err_second: np.ndarray | None = None
    err_s2: np.ndarray | None = None
    err_xi2: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        n_t = len(self.t)
        if self.err_mean is None:
            self.err_mean = np.zeros((n_t, 3))
        if self.err_second is None:
            self.err_second = np.zeros((n_t, 3, 3))
        if self.err_s2 is None:
            self.err_s2 = np.zeros(n_t)
        if self.err_xi2 is None:
            self.err_xi2 = np.zeros(n_t)

    @property
    def s2_initial(self):
        n = self.n_spins
        return (n / 2) * (n / 2 + 1)

    def second_moment(self, key):
        i, j = _SM_INDEX[key]
        return self.second[:, i, j]

    def err_second_moment(self, key):
        i, j = _SM_INDEX[key]
        return self.err_second[:, i, j]


def tau_column(t, jperp, jz):
    """Dimensionless time t*|jz - jperp|, or None at the isotropic point."""
    gap = abs(jz - jperp)
    if gap == 0:
        return None
    return np.asarray(t) * gap
