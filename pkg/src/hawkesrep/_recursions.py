"""Compiled inner loops: likelihood recursions and thinning simulators.

Kernel convention is passed as an integer flag: 0 for unit-mass densities
``b*exp(-b t)``, 1 for unnormalized ``exp(-b t)``.  All loops are O(N K^2)
per pass thanks to the usual Markovian update of the excitation state
``R[i, j] = sum_l g_ij(t - t_lj)``; the companion ``Q[i, j]`` carries the
age-weighted sums needed for decay gradients.
"""

from __future__ import annotations

import numpy as np
from numba import njit

LOGLIK_FLOOR = -1e300


@njit(cache=True)
def loglik_grad(times, types, horizon, lam0, alpha, beta, measures, unnorm, want_grad):
    n = times.size
    k = lam0.size
    r_state = np.zeros((k, k))
    q_state = np.zeros((k, k))
    glam = np.zeros(k)
    galpha = np.zeros((k, k))
    gbeta = np.zeros((k, k))
    total = 0.0
    prev_t = 0.0
    prev_c = -1
    for idx in range(n):
        t = times[idx]
        c = types[idx]
        dt = t - prev_t
        for i in range(k):
            for j in range(k):
                r = r_state[i, j]
                if prev_c == j:
                    r += 1.0 if unnorm == 1 else beta[i, j]
                decay = np.exp(-beta[i, j] * dt)
                if want_grad:
                    q_state[i, j] = decay * (q_state[i, j] + dt * r)
                r_state[i, j] = decay * r
        lam = lam0[c]
        for j in range(k):
            lam += alpha[c, j] * r_state[c, j]
        if lam <= 0.0:
            return LOGLIK_FLOOR, np.zeros(k), np.zeros((k, k)), np.zeros((k, k))
        total += np.log(lam)
        if want_grad:
            inv = 1.0 / lam
            glam[c] += inv
            for j in range(k):
                galpha[c, j] += r_state[c, j] * inv
                if unnorm == 1:
                    dr_dbeta = -q_state[c, j]
                else:
                    dr_dbeta = r_state[c, j] / beta[c, j] - q_state[c, j]
                gbeta[c, j] += alpha[c, j] * dr_dbeta * inv
        prev_t = t
        prev_c = c
    for i in range(k):
        total -= measures[i] * lam0[i] * horizon
        if want_grad:
            glam[i] -= measures[i] * horizon
    for idx in range(n):
        j = types[idx]
        s = horizon - times[idx]
        for i in range(k):
            b = beta[i, j]
            e = np.exp(-b * s)
            if unnorm == 1:
                big_g = (1.0 - e) / b
                dg_dbeta = s * e / b - (1.0 - e) / (b * b)
            else:
                big_g = 1.0 - e
                dg_dbeta = s * e
            total -= measures[i] * alpha[i, j] * big_g
            if want_grad:
                galpha[i, j] -= measures[i] * big_g
                gbeta[i, j] -= measures[i] * alpha[i, j] * dg_dbeta
    return total, glam, galpha, gbeta


@njit(cache=True)
def thin_multivariate(rng, horizon, lam0, alpha, beta, measures, g_zero, max_events):
    """Ogata thinning for the K-component process.

    The dominating rate is the ground intensity refreshed at each candidate,
    valid because every excitation term decays monotonically between events.
    Returns (times, types, exploded).
    """
    k = lam0.size
    r_state = np.zeros((k, k))
    lam_comp = np.empty(k)
    lam_bar = 0.0
    for i in range(k):
        lam_bar += measures[i] * lam0[i]
    cap = 1024
    times = np.empty(cap)
    types = np.empty(cap, np.int64)
    n = 0
    t = 0.0
    exploded = False
    while lam_bar > 0.0:
        t_cand = t + rng.exponential(1.0 / lam_bar)
        if t_cand > horizon:
            break
        dt = t_cand - t
        for i in range(k):
            for j in range(k):
                r_state[i, j] *= np.exp(-beta[i, j] * dt)
        lam = 0.0
        for i in range(k):
            s = lam0[i]
            for j in range(k):
                s += alpha[i, j] * r_state[i, j]
            lam_comp[i] = measures[i] * s
            lam += lam_comp[i]
        t = t_cand
        if rng.random() * lam_bar <= lam:
            u = rng.random() * lam
            c = k - 1
            acc = 0.0
            for i in range(k):
                acc += lam_comp[i]
                if u <= acc:
                    c = i
                    break
            if n == cap:
                cap = cap * 2
                new_times = np.empty(cap)
                new_types = np.empty(cap, np.int64)
                new_times[:n] = times
                new_types[:n] = types
                times = new_times
                types = new_types
            times[n] = t
            types[n] = c
            n += 1
            for i in range(k):
                r_state[i, c] += g_zero[i, c]
            if n >= max_events:
                exploded = True
                break
            lam = 0.0
            for i in range(k):
                s = lam0[i]
                for j in range(k):
                    s += alpha[i, j] * r_state[i, j]
                lam += measures[i] * s
        lam_bar = lam
    return times[:n].copy(), types[:n].copy(), exploded


@njit(cache=True)
def thin_univariate_const(rng, horizon, immigrant_rate, xi, beta, g_zero, max_events):
    """Thinning for the ground process when productivity and decay are
    mark-free; marks can then be attached afterwards without changing the law.
    Returns (times, exploded)."""
    excite = 0.0
    lam_bar = immigrant_rate
    cap = 1024
    times = np.empty(cap)
    n = 0
    t = 0.0
    exploded = False
    while lam_bar > 0.0:
        t_cand = t + rng.exponential(1.0 / lam_bar)
        if t_cand > horizon:
            break
        excite *= np.exp(-beta * (t_cand - t))
        lam = immigrant_rate + excite
        t = t_cand
        if rng.random() * lam_bar <= lam:
            if n == cap:
                cap = cap * 2
                new_times = np.empty(cap)
                new_times[:n] = times
                times = new_times
            times[n] = t
            n += 1
            excite += xi * g_zero
            if n >= max_events:
                exploded = True
                break
            lam = immigrant_rate + excite
        lam_bar = lam
    return times[:n].copy(), exploded
