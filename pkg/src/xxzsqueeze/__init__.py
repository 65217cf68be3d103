"""Spin-squeezing dynamics of power-law XXZ lattice models.

Discrete phase-space trajectory sampling for large systems, exact
state-vector evolution for small ones, closed-form series for the two
solvable limits, and analysis tools for the squeezing phase diagram.
"""

from .backend import USE_NUMBA, backend_name
from .dtwa import (
    default_trajectories, effective_fields, evolve_trajectory, run_dtwa,
    sample_initial_trajectory, trajectory_rng,
)
from .errors import (
    BoundaryNotFoundError, CapacityError, DegenerateMeanSpinError,
    IntegrationError, XXZSqueezeError,
)
from .exact import (
    apply_hamiltonian, dense_hamiltonian, evolve_exact, husimi_q,
    initial_product_state,
)
from .gap import GapSpec, fit_gap_exponent, gap, gap_scan, spin_wave_energy
from .lattice import (
    CouplingModel, Lattice, build_lattice, build_model, coupling_weights,
    dilute, mean_coupling, xx_from_drive,
)
from .oracles import ising_series, oat_series
from .phases import (
    SweepConfig, detect_boundary, fit_log_divergence, fit_power_law,
    run_sweep,
)
from .series import MomentSeries
from .squeezing import (
    min_squared_magnetization, optimal_squeezing, squeezing_param, summarize,
    to_decibels,
)

__version__ = "0.1.0"
