import numpy as np
import pytest

from xxzsqueeze.errors import DegenerateMeanSpinError
from xxzsqueeze.series import MomentSeries
from xxzsqueeze.squeezing import (
    FLAG_BOUNDARY, FLAG_FLAT, min_squared_magnetization, min_transverse_variance,
    optimal_squeezing, squeezing_param, summarize, to_decibels,
)


def make_series(t, xi2, s2=None, n_spins=10):
    t = np.asarray(t, dtype=float)
    n_t = len(t)
    if s2 is None:
        s2 = np.full(n_t, (n_spins / 2) * (n_spins / 2 + 1))
    return MomentSeries(
        t=t, mean=np.tile([n_spins / 2, 0, 0], (n_t, 1)),
        second=np.tile(np.eye(3), (n_t, 1, 1)), s2=np.asarray(s2, dtype=float),
        xi2=np.asarray(xi2, dtype=float), n_spins=n_spins,
    )


def grid_min_variance(mean, second, n_phi=100_000):
    """Brute-force oracle: scan the transverse angle."""
    from xxzsqueeze.squeezing import transverse_pair

    e1, e2 = transverse_pair(mean)
    phis = np.linspace(0, np.pi, n_phi, endpoint=False)
    axes = np.outer(np.cos(phis), e1) + np.outer(np.sin(phis), e2)
    var = np.einsum("ki,ij,kj->k", axes, second, axes) - (axes @ mean) ** 2
    return var.min()


def random_psd_inputs(rng, n_spins=20):
    mean = rng.normal(size=3) * n_spins / 4
    while np.linalg.norm(mean) < 1e-3 * n_spins:
        mean = rng.normal(size=3) * n_spins / 4
    m = rng.normal(size=(3, 3))
    cov = m @ m.T
    second = cov + np.outer(mean, mean)
    return mean, second


def test_coherent_state_value():
    n = 12
    mean = np.array([n / 2, 0.0, 0.0])
    second = np.diag([n * n / 4, n / 4, n / 4])
    assert squeezing_param(mean, second, n) == pytest.approx(1.0, abs=1e-14)


def test_diagonal_covariance_value():
    n = 8
    mean = np.array([n / 2, 0.0, 0.0])
    second = np.diag([n * n / 4, n / 8, n / 2])
    assert squeezing_param(mean, second, n) == pytest.approx(0.5, abs=1e-14)


def test_closed_form_matches_grid_scan():
    rng = np.random.default_rng(5)
    for _ in range(30):
        mean, second = random_psd_inputs(rng)
        lam = min_transverse_variance(mean, second)
        ref = grid_min_variance(mean, second)
        assert lam <= ref + 1e-12
        assert lam == pytest.approx(ref, abs=1e-8 * max(1, abs(ref)) + 1e-9)


def test_closed_form_below_every_sampled_angle():
    from xxzsqueeze.squeezing import transverse_pair

    rng = np.random.default_rng(6)
    mean, second = random_psd_inputs(rng)
    lam = min_transverse_variance(mean, second)
    e1, e2 = transverse_pair(mean)
    for phi in rng.uniform(0, np.pi, 200):
        axis = np.cos(phi) * e1 + np.sin(phi) * e2
        var = axis @ second @ axis - (axis @ mean) ** 2
        assert lam <= var + 1e-12


def test_rotation_invariance():
    rng = np.random.default_rng(7)
    mean, second = random_psd_inputs(rng)
    base = squeezing_param(mean, second, 20)
    for _ in range(10):
        q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
        rot = q * np.sign(np.linalg.det(q))
        rotated = squeezing_param(rot @ mean, rot @ second @ rot.T, 20)
        assert rotated == pytest.approx(base, rel=1e-10)


def test_degenerate_mean_spin_raises():
    second = np.eye(3)
    with pytest.raises(DegenerateMeanSpinError):
        squeezing_param(np.zeros(3), second, 10)
    with pytest.raises(DegenerateMeanSpinError):
        squeezing_param(np.array([1e-9, 0, 0]), second, 10)
    # configurable threshold
    assert squeezing_param(np.array([1e-9, 0, 0]), second, 10, min_mean_spin=1e-10) > 0


def test_optimal_squeezing_parabola_vertex():
    t = np.linspace(0, 2, 21)
    t_true, depth = 0.94, -2.0
    xi2 = np.exp(depth + 3.0 * (t - t_true) ** 2)
    opt = optimal_squeezing(make_series(t, xi2))
    assert opt.t_opt == pytest.approx(t_true, abs=1e-6)
    assert opt.xi2_opt == pytest.approx(np.exp(depth), rel=1e-6)
    assert not opt.flags


def test_optimal_squeezing_dense_grid_oracle():
    from xxzsqueeze.oracles import oat_series

    n, chi = 40, 1.0
    coarse = oat_series(n, chi, np.linspace(0, 0.5, 41))
    dense = oat_series(n, chi, np.linspace(0, 0.5, 20001))
    opt_c = optimal_squeezing(coarse)
    idx_d = int(np.nanargmin(dense.xi2))
    assert abs(opt_c.t_opt - dense.t[idx_d]) < 0.5 / 40  # within one coarse step
    assert opt_c.xi2_opt == pytest.approx(dense.xi2[idx_d], rel=2e-3)


def test_optimal_squeezing_flags():
    t = np.linspace(0, 1, 11)
    flat = optimal_squeezing(make_series(t, np.ones(11)))
    assert FLAG_FLAT in flat.flags
    monotone = optimal_squeezing(make_series(t, np.linspace(1, 0.2, 11)))
    assert FLAG_BOUNDARY in monotone.flags
    # earliest-time tie breaking
    xi2 = np.ones(11)
    xi2[3] = xi2[7] = 0.5
    tie = optimal_squeezing(make_series(t, xi2), refine=False)
    assert tie.index == 3


def test_min_squared_magnetization():
    n = 10
    s2_0 = (n / 2) * (n / 2 + 1)
    t = np.linspace(0, 1, 11)
    series = make_series(t, np.ones(11), s2=np.linspace(s2_0, s2_0 / 2, 11), n_spins=n)
    val, _ = min_squared_magnetization(series, t_opt=0.0)
    assert val == s2_0
    val, _ = min_squared_magnetization(series, t_opt=1.0)
    assert val == s2_0 / 2
    # dip after t_opt must not count
    s2 = np.full(11, s2_0)
    s2[3] = 0.8 * s2_0
    s2[8] = 0.5 * s2_0
    series = make_series(t, np.ones(11), s2=s2, n_spins=n)
    val, _ = min_squared_magnetization(series, t_opt=t[5])
    assert val == pytest.approx(0.8 * s2_0)
    norm, _ = min_squared_magnetization(series, t_opt=t[5], normalized=True)
    assert norm == pytest.approx(0.8)
    with pytest.raises(ValueError):
        min_squared_magnetization(series, t_opt=2.0)


def test_summarize_invariants():
    from xxzsqueeze.oracles import oat_series

    n = 24
    series = oat_series(n, 1.0, np.linspace(0, 0.6, 101))
    summary = summarize(series)
    assert summary.xi2_opt <= 1.0
    assert summary.s2_min <= 1.0 + 1e-12  # normalized
    assert to_decibels(summary.xi2_opt) > 0
