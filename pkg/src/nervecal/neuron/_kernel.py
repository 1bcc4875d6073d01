"""Compiled time-stepping loop for the compartmental cable.

Units: mV, ms, uF, mS, uA (uF * mV / ms == uA == mS * mV).
"""

import math

import numpy as np
from numba import njit


@njit(cache=True)
def _vtrap(x, y):
    # x / (exp(x/y) - 1) with the removable singularity at x = 0
    r = x / y
    if abs(r) < 1e-6:
        return y * (1.0 - 0.5 * r)
    return x / (math.exp(r) - 1.0)


@njit(cache=True)
def hh_rates(v, na_shift):
    """Squid-axon rate constants (1/ms), resting potential -65 mV.

    ``na_shift`` moves the sodium activation and inactivation curves towards
    hyperpolarized potentials by that many mV.
    """
    vs = v + na_shift
    am = 0.1 * _vtrap(-(vs + 40.0), 10.0)
    bm = 4.0 * math.exp(-(vs + 65.0) / 18.0)
    ah = 0.07 * math.exp(-(vs + 65.0) / 20.0)
    bh = 1.0 / (1.0 + math.exp(-(vs + 35.0) / 10.0))
    an = 0.01 * _vtrap(-(v + 55.0), 10.0)
    bn = 0.125 * math.exp(-(v + 65.0) / 80.0)
    return am, bm, ah, bh, an, bn


@njit(cache=True)
def steady_gates(v, na_shift):
    am, bm, ah, bh, an, bn = hh_rates(v, na_shift)
    return am / (am + bm), ah / (ah + bh), an / (an + bn)


TABLE_LO = -150.0
TABLE_HI = 150.0
TABLE_STEP = 0.02


@njit(cache=True)
def gate_table(dt, na_shift):
    """Steady state and exponential-Euler decay factor per gate on a voltage grid.

    Columns: m_inf, m_decay, h_inf, h_decay, n_inf, n_decay.
    """
    n = int(round((TABLE_HI - TABLE_LO) / TABLE_STEP)) + 1
    tab = np.empty((n, 6))
    for i in range(n):
        v = TABLE_LO + i * TABLE_STEP
        am, bm, ah, bh, an, bn = hh_rates(v, na_shift)
        tab[i, 0] = am / (am + bm)
        tab[i, 1] = math.exp(-dt * (am + bm))
        tab[i, 2] = ah / (ah + bh)
        tab[i, 3] = math.exp(-dt * (ah + bh))
        tab[i, 4] = an / (an + bn)
        tab[i, 5] = math.exp(-dt * (an + bn))
    return tab


@njit(cache=True)
def integrate(cap, g_pas, e_pas, g_axial, node_index, g_na, g_k, e_na, e_k, na_shift,
              v_init, dt, n_steps, stim_on, stim_off, stim_current, stim_comp, meas, v_ref):
    """Advance the chain ``n_steps`` steps of ``dt``.

    Gating variables take an exponential-Euler step at the old potential
    (rates interpolated from a per-run table inside [-150, 150] mV); the
    membrane and axial currents are then solved implicitly (backward Euler)
    with one Thomas sweep.

    Returns ``(trace, diag, bad_step)`` where ``trace[s]`` is the potential at
    ``meas`` at time ``s * dt``, ``diag = [max |V - v_ref| over all
    compartments and steps, min gate, max gate]`` and ``bad_step`` is the first
    step producing a non-finite potential (-1 if none).
    """
    n = cap.shape[0]
    nn = node_index.shape[0]
    v = np.full(n, v_init)
    m = np.empty(nn)
    h = np.empty(nn)
    q = np.empty(nn)
    m0, h0, q0 = steady_gates(v_init, na_shift)
    for j in range(nn):
        m[j] = m0
        h[j] = h0
        q[j] = q0

    trace = np.empty(n_steps)
    diag = np.zeros(3)
    diag[1] = 1.0
    diag[2] = 0.0
    cdt = cap / dt
    # the axial and passive parts of the matrix never change
    base = cdt + g_pas
    for i in range(n - 1):
        base[i] += g_axial[i]
        base[i + 1] += g_axial[i]
    i_pas = g_pas * e_pas
    dm = np.empty(n)
    rhs = np.empty(n)
    inv = np.empty(n)
    n_trig = stim_on.shape[0]
    tab = gate_table(dt, na_shift)
    n_tab = tab.shape[0]
    row = np.empty(6)

    for s in range(n_steps):
        trace[s] = v[meas]
        t_mid = (s + 0.5) * dt

        for i in range(n):
            dm[i] = base[i]
            rhs[i] = cdt[i] * v[i] + i_pas[i]

        for j in range(nn):
            i = node_index[j]
            x = (v[i] - TABLE_LO) / TABLE_STEP
            if 0.0 <= x < n_tab - 1:
                b = int(x)
                f = x - b
                for c in range(6):
                    row[c] = tab[b, c] + f * (tab[b + 1, c] - tab[b, c])
            else:
                am, bm, ah, bh, an, bn = hh_rates(v[i], na_shift)
                row[0] = am / (am + bm)
                row[1] = math.exp(-dt * (am + bm))
                row[2] = ah / (ah + bh)
                row[3] = math.exp(-dt * (ah + bh))
                row[4] = an / (an + bn)
                row[5] = math.exp(-dt * (an + bn))
            m[j] = row[0] + (m[j] - row[0]) * row[1]
            h[j] = row[2] + (h[j] - row[2]) * row[3]
            q[j] = row[4] + (q[j] - row[4]) * row[5]
            gna = g_na[j] * m[j] * m[j] * m[j] * h[j]
            q2 = q[j] * q[j]
            gk = g_k[j] * q2 * q2
            dm[i] += gna + gk
            rhs[i] += gna * e_na + gk * e_k
            lo = min(m[j], h[j], q[j])
            hi = max(m[j], h[j], q[j])
            if lo < diag[1]:
                diag[1] = lo
            if hi > diag[2]:
                diag[2] = hi

        for k in range(n_trig):
            if stim_on[k] <= t_mid < stim_off[k]:
                rhs[stim_comp] += stim_current[k]

        # Thomas sweep; off-diagonals are -g_axial
        for i in range(1, n):
            g = g_axial[i - 1]
            inv[i - 1] = 1.0 / dm[i - 1]
            w = g * inv[i - 1]
            dm[i] -= w * g
            rhs[i] += w * rhs[i - 1]
        v[n - 1] = rhs[n - 1] / dm[n - 1]
        worst = abs(v[n - 1] - v_ref)
        for i in range(n - 2, -1, -1):
            v[i] = (rhs[i] + g_axial[i] * v[i + 1]) * inv[i]
            dev = abs(v[i] - v_ref)
            if dev > worst:
                worst = dev
        if not worst < 1e300:
            trace[s:] = np.nan
            return trace, diag, s
        if worst > diag[0]:
            diag[0] = worst

    return trace, diag, -1
