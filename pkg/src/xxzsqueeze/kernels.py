"""Hot numerical kernels: classical trajectory integration, matrix-free
Hamiltonian application, and the Ising-limit pair products.

Every kernel exists in two semantically identical variants. The loop-style
sources below compile under ``numba.njit`` (nogil, cached); when numba is
disabled a vectorized numpy twin is exported under the same name. The
integrator source is already numpy-vectorized over spins, so it doubles as
its own fallback.
"""

import numpy as np

from .backend import USE_NUMBA

# Dormand-Prince 5(4) tableau. The fifth-order solution propagates; the
# embedded fourth-order difference drives step control. E includes the
# seventh (FSAL) stage.
_DP_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0])
_DP_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84])
_DP_E = np.array(
    [71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40]
)
# Quartic dense-output polynomial: y(t+theta*h) = y + h * sum_s K_s sum_m P[s,m] theta^(m+1)
_DP_P = np.array(
    [
        [1.0, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
        [0.0, 0.0, 0.0, 0.0],
        [0.0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
        [0.0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
        [0.0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
        [0.0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
        [0.0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
    ]
)

STATUS_OK = 0
STATUS_STEP_UNDERFLOW = 1


def _torque_src(w, jperp, jz, y):
    """Precession rates for the classical XXZ equations of motion.

    ``y`` has shape (3, N). The local field on spin i is
    B_i = 2 * sum_j w_ij * (jperp*s_xj, jperp*s_yj, jz*s_zj); the factor 2
    comes from the ordered double sum over i != j in the Hamiltonian.
    Returns dy/dt = B x s.
    """
    bx = 2.0 * jperp * np.dot(w, y[0])
    by = 2.0 * jperp * np.dot(w, y[1])
    bz = 2.0 * jz * np.dot(w, y[2])
    dy = np.empty_like(y)
    dy[0] = by * y[2] - bz * y[1]
    dy[1] = bz * y[0] - bx * y[2]
    dy[2] = bx * y[1] - by * y[0]
    return dy


def _rms_scaled(v, scale):
    return np.sqrt(np.mean((v / scale) ** 2))


def _dtwa_integrate_src(y0, w, jperp, jz, t_grid, rtol, atol):
    """Adaptive Dormand-Prince integration of one trajectory.

    ``y0`` has shape (3, N); ``t_grid`` is increasing and starts at the
    initial time. Snapshots on the grid come from the quartic dense-output
    interpolant, so grid density never constrains the step size.

    Returns (snapshots (T, 3, N), status, t_reached, n_steps).
    """
    n_t = t_grid.shape[0]
    out = np.empty((n_t, 3, y0.shape[1]))
    out[0] = y0
    t = t_grid[0]
    t_end = t_grid[n_t - 1]
    y = y0.copy()
    f = _torque(w, jperp, jz, y)
    n_steps = 0
    if n_t == 1 or t_end == t:
        return out, STATUS_OK, t, n_steps

    # Initial step: standard two-sample curvature probe, order p=5.
    scale = atol + rtol * np.abs(y)
    d0 = _rms_scaled(y, scale)
    d1 = _rms_scaled(f, scale)
    if d0 < 1e-5 or d1 < 1e-5:
        h0 = 1e-6
    else:
        h0 = 0.01 * d0 / d1
    y1 = y + h0 * f
    f1 = _torque(w, jperp, jz, y1)
    d2 = _rms_scaled(f1 - f, scale) / h0
    if d1 <= 1e-15 and d2 <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    h = min(min(100.0 * h0, h1), t_end - t)

    k = np.empty((7, 3, y0.shape[1]))
    k[0] = f
    idx = 1
    status = STATUS_OK
    while idx < n_t:
        if h < 1e-13 * max(1.0, abs(t)):
            status = STATUS_STEP_UNDERFLOW
            break
        if t + h > t_end:
            h = t_end - t
        k[1] = _torque(w, jperp, jz, y + (h * 0.2) * k[0])
        k[2] = _torque(w, jperp, jz, y + h * ((3 / 40) * k[0] + (9 / 40) * k[1]))
        k[3] = _torque(
            w, jperp, jz,
            y + h * ((44 / 45) * k[0] + (-56 / 15) * k[1] + (32 / 9) * k[2]),
        )
        k[4] = _torque(
            w, jperp, jz,
            y + h * (
                (19372 / 6561) * k[0] + (-25360 / 2187) * k[1]
                + (64448 / 6561) * k[2] + (-212 / 729) * k[3]
            ),
        )
        k[5] = _torque(
            w, jperp, jz,
            y + h * (
                (9017 / 3168) * k[0] + (-355 / 33) * k[1] + (46732 / 5247) * k[2]
                + (49 / 176) * k[3] + (-5103 / 18656) * k[4]
            ),
        )
        y_new = y + h * (
            _DP_B[0] * k[0] + _DP_B[2] * k[2] + _DP_B[3] * k[3]
            + _DP_B[4] * k[4] + _DP_B[5] * k[5]
        )
        k[6] = _torque(w, jperp, jz, y_new)
        err_vec = h * (
            _DP_E[0] * k[0] + _DP_E[2] * k[2] + _DP_E[3] * k[3]
            + _DP_E[4] * k[4] + _DP_E[5] * k[5] + _DP_E[6] * k[6]
        )
        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        err = _rms_scaled(err_vec, scale)
        if err <= 1.0:
            while idx < n_t and t_grid[idx] <= t + h * (1 + 1e-12):
                theta = (t_grid[idx] - t) / h
                if theta >= 1.0 - 1e-12:
                    out[idx] = y_new
                else:
                    b1 = theta * (_DP_P[0, 0] + theta * (_DP_P[0, 1] + theta * (_DP_P[0, 2] + theta * _DP_P[0, 3])))
                    interp = b1 * k[0]
                    for s in range(2, 7):
                        bs = theta * (_DP_P[s, 0] + theta * (_DP_P[s, 1] + theta * (_DP_P[s, 2] + theta * _DP_P[s, 3])))
                        interp = interp + bs * k[s]
                    out[idx] = y + h * interp
                idx += 1
            t = t + h
            y = y_new
            k[0] = k[6]
            n_steps += 1
            if err == 0.0:
                factor = 10.0
            else:
                factor = min(10.0, 0.9 * err ** -0.2)
            h *= factor
        else:
            h *= max(0.2, 0.9 * err ** -0.2)
    return out, status, t, n_steps


def _xxz_diag_src(n_sites, pair_i, pair_j, pair_w, jz):
    """Diagonal of the XXZ Hamiltonian over all 2^N bit-basis states.

    Bit 0 of a basis index is site 0; a set bit means spin down (s_z=-1/2).
    The ordered-sum convention gives each unordered pair the coefficient
    2*jz*w_ij * s_zi*s_zj = +-jz*w_ij/2.
    """
    dim = 1 << n_sites
    diag = np.zeros(dim)
    for p in range(pair_i.shape[0]):
        i = pair_i[p]
        j = pair_j[p]
        c = 0.5 * jz * pair_w[p]
        for a in range(dim):
            if ((a >> i) & 1) == ((a >> j) & 1):
                diag[a] += c
            else:
                diag[a] -= c
    return diag


def _xxz_apply_src(psi, diag, pair_i, pair_j, pair_w, jperp):
    """Matrix-free H|psi>: diagonal part plus flip-flop terms jperp*w_ij."""
    dim = psi.shape[0]
    out = np.empty_like(psi)
    for a in range(dim):
        out[a] = diag[a] * psi[a]
    for p in range(pair_i.shape[0]):
        i = pair_i[p]
        j = pair_j[p]
        c = jperp * pair_w[p]
        mask = (1 << i) | (1 << j)
        for a in range(dim):
            if ((a >> i) & 1) == 0 and ((a >> j) & 1) == 1:
                b = a ^ mask
                out[a] += c * psi[b]
                out[b] += c * psi[a]
    return out


def _flip_apply_src(psi, n_sites, axis):
    """S_x|psi> (axis=0) or S_y|psi> (axis=1) via single-site bit flips."""
    dim = psi.shape[0]
    out = np.zeros(dim, np.complex128)
    for i in range(n_sites):
        m = 1 << i
        if axis == 0:
            for a in range(dim):
                out[a] += 0.5 * psi[a ^ m]
        else:
            for a in range(dim):
                if (a >> i) & 1 == 0:
                    out[a] += -0.5j * psi[a ^ m]
                else:
                    out[a] += 0.5j * psi[a ^ m]
    return out


def _ising_pair_sums_src(ph):
    """Collective sums of the Ising-limit product formulas.

    ``ph[i, k]`` is the accumulated half-phase jz*w_ik*t. Returns
    (sum_p, sum_a, sum_b, sum_c) with
      sum_p = sum_i prod_{k!=i} cos(ph_ik)
      sum_a = sum_{i!=j} prod_{k!=i,j} cos(ph_ik - ph_jk)
      sum_b = sum_{i!=j} prod_{k!=i,j} cos(ph_ik + ph_jk)
      sum_c = sum_{i!=j} sin(ph_ij) prod_{k!=i,j} cos(ph_ik)
    """
    n = ph.shape[0]
    cph = np.cos(ph)
    sph = np.sin(ph)
    sum_p = 0.0
    for i in range(n):
        pr = 1.0
        for kk in range(n):
            if kk != i:
                pr *= cph[i, kk]
        sum_p += pr
    sum_c = 0.0
    pre = np.empty(n)
    suf = np.empty(n)
    for i in range(n):
        acc = 1.0
        for j in range(n):
            pre[j] = acc
            if j != i:
                acc *= cph[i, j]
        acc = 1.0
        for j in range(n - 1, -1, -1):
            suf[j] = acc
            if j != i:
                acc *= cph[i, j]
        for j in range(n):
            if j != i:
                sum_c += sph[i, j] * pre[j] * suf[j]
    sum_a = 0.0
    sum_b = 0.0
    for i in range(n):
        for j in range(i):
            pa = 1.0
            pb = 1.0
            for kk in range(n):
                if kk != i and kk != j:
                    cc = cph[i, kk] * cph[j, kk]
                    ss = sph[i, kk] * sph[j, kk]
                    pa *= cc + ss
                    pb *= cc - ss
            sum_a += 2.0 * pa
            sum_b += 2.0 * pb
    return sum_p, sum_a, sum_b, sum_c


# ---------------------------------------------------------------------------
# numpy fallbacks for the loop-only kernels


def _xxz_diag_numpy(n_sites, pair_i, pair_j, pair_w, jz):
    dim = 1 << n_sites
    idx = np.arange(dim)
    diag = np.zeros(dim)
    for p in range(len(pair_i)):
        same = ((idx >> pair_i[p]) & 1) == ((idx >> pair_j[p]) & 1)
        diag += np.where(same, 0.5, -0.5) * (jz * pair_w[p])
    return diag


def _xxz_apply_numpy(psi, diag, pair_i, pair_j, pair_w, jperp):
    out = diag * psi
    idx = np.arange(psi.shape[0])
    for p in range(len(pair_i)):
        i, j = pair_i[p], pair_j[p]
        mask = (1 << int(i)) | (1 << int(j))
        sel = idx[((idx >> i) & 1) != ((idx >> j) & 1)]
        out[sel] += (jperp * pair_w[p]) * psi[sel ^ mask]
    return out


def _flip_apply_numpy(psi, n_sites, axis):
    dim = psi.shape[0]
    idx = np.arange(dim)
    out = np.zeros(dim, np.complex128)
    for i in range(n_sites):
        m = 1 << i
        if axis == 0:
            out += 0.5 * psi[idx ^ m]
        else:
            sign = np.where((idx >> i) & 1 == 0, -0.5j, 0.5j)
            out += sign * psi[idx ^ m]
    return out


def _ising_pair_sums_numpy(ph):
    n = ph.shape[0]
    cph, sph = np.cos(ph), np.sin(ph)
    row = cph.copy()
    np.fill_diagonal(row, 1.0)
    sum_p = float(np.prod(row, axis=1).sum())
    ones = np.ones((n, 1))
    pre = np.cumprod(np.concatenate([ones, row[:, :-1]], axis=1), axis=1)
    suf = np.cumprod(np.concatenate([ones, row[:, :0:-1]], axis=1), axis=1)[:, ::-1]
    excl = pre * suf  # excl[i, j] = prod_{k != i, j} cph[i, k]
    sum_c = float(np.sum(sph * excl) - np.sum(np.diag(sph) * np.diag(excl)))
    sum_a = 0.0
    sum_b = 0.0
    for i in range(n):
        cc = cph[i] * cph
        ss = sph[i] * sph
        u = cc + ss
        v = cc - ss
        u[:, i] = 1.0
        v[:, i] = 1.0
        np.fill_diagonal(u, 1.0)
        np.fill_diagonal(v, 1.0)
        pa = np.prod(u, axis=1)
        pb = np.prod(v, axis=1)
        pa[i] = 0.0
        pb[i] = 0.0
        sum_a += float(pa.sum())
        sum_b += float(pb.sum())
    return sum_p, sum_a, sum_b, sum_c


if USE_NUMBA:
    from numba import njit

    _jit = njit(cache=True, nogil=True)
    _torque = _jit(_torque_src)
    _rms_scaled = _jit(_rms_scaled)
    dtwa_integrate = _jit(_dtwa_integrate_src)
    xxz_diag = _jit(_xxz_diag_src)
    xxz_apply = _jit(_xxz_apply_src)
    flip_apply = _jit(_flip_apply_src)
    ising_pair_sums = _jit(_ising_pair_sums_src)
else:
    _torque = _torque_src
    dtwa_integrate = _dtwa_integrate_src
    xxz_diag = _xxz_diag_numpy
    xxz_apply = _xxz_apply_numpy
    flip_apply = _flip_apply_numpy
    ising_pair_sums = _ising_pair_sums_numpy


def torque(w, jperp, jz, y):
    """Public wrapper for the classical precession rates."""
    return _torque(w, jperp, jz, y)
