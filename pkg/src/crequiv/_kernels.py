"""Compiled inner loops for the per-transition likelihood fits.

A transition block is described by the distinct observed times (``t_all``,
their logs and multiplicities ``w``), the number of events ``d`` of that
cause, and the sums of event times and log event times. Parameters live
in the unconstrained space of ``hazards.to_unconstrained``.
"""
import numpy as np
from numba import njit

BIG = 1e300


@njit(cache=True)
def neg_loglik(code, x, t_all, log_t_all, w, d, sum_ev, sum_log_ev, t_ref):
    if code == 0:
        lam = np.exp(x[0])
        total = 0.0
        for i in range(t_all.size):
            total += w[i] * t_all[i]
        val = -(d * x[0] - lam * total)
    elif code == 1:
        a = np.exp(x[0])
        b = x[1] / t_ref
        cum = 0.0
        if abs(b) < 1e-10:
            for i in range(t_all.size):
                t = t_all[i]
                cum += w[i] * t * (1.0 + 0.5 * b * t)
            cum *= a
        else:
            for i in range(t_all.size):
                cum += w[i] * np.expm1(b * t_all[i])
            cum *= a / b
        val = -(d * x[0] + b * sum_ev - cum)
    else:
        lk = x[1]
        k = np.exp(lk)
        cum = 0.0
        for i in range(t_all.size):
            cum += w[i] * np.exp(k * (log_t_all[i] - x[0]))
        val = -(d * (lk - k * x[0]) + (k - 1.0) * sum_log_ev - cum)
    if not np.isfinite(val):
        return BIG
    return val


@njit(cache=True)
def neg_loglik_exposure(code, x, exposure, d, sum_ev, sum_log_ev, t_ref):
    """Exponential shortcut: the block only depends on total exposure."""
    lam = np.exp(x[0])
    val = -(d * x[0] - lam * exposure)
    if not np.isfinite(val):
        return BIG
    return val


@njit(cache=True)
def _objective(code, x, t_all, log_t_all, w, d, sum_ev, sum_log_ev, t_ref, exposure):
    if code == 0:
        return neg_loglik_exposure(code, x, exposure, d, sum_ev, sum_log_ev, t_ref)
    return neg_loglik(code, x, t_all, log_t_all, w, d, sum_ev, sum_log_ev, t_ref)


@njit(cache=True)
def nelder_mead(code, x0, step, t_all, log_t_all, w, d, sum_ev, sum_log_ev, t_ref, xatol, maxiter):
    """Standard Nelder-Mead (reflect 1, expand 2, contract 1/2, shrink 1/2).

    Stops when every vertex lies within ``xatol`` (max-norm) of the best one.
    Returns ``(x_best, f_best, iterations, converged)``.
    """
    exposure = 0.0
    for i in range(t_all.size):
        exposure += w[i] * t_all[i]
    n = x0.size
    sim = np.empty((n + 1, n))
    fs = np.empty(n + 1)
    for i in range(n + 1):
        for m in range(n):
            sim[i, m] = x0[m]
        if i > 0:
            sim[i, i - 1] += step[i - 1]
        fs[i] = _objective(code, sim[i], t_all, log_t_all, w, d, sum_ev, sum_log_ev, t_ref, exposure)

    c = np.empty(n)
    xr = np.empty(n)
    xe = np.empty(n)
    xc = np.empty(n)
    it = 0
    converged = False
    while it < maxiter:
        # insertion sort on function values
        for i in range(1, n + 1):
            fv = fs[i]
            row = sim[i].copy()
            j = i - 1
            while j >= 0 and fs[j] > fv:
                fs[j + 1] = fs[j]
                sim[j + 1] = sim[j]
                j -= 1
            fs[j + 1] = fv
            sim[j + 1] = row

        diam = 0.0
        for i in range(1, n + 1):
            for m in range(n):
                dv = abs(sim[i, m] - sim[0, m])
                if dv > diam:
                    diam = dv
        if diam < xatol:
            converged = True
            break
        it += 1

        for m in range(n):
            s = 0.0
            for i in range(n):
                s += sim[i, m]
            c[m] = s / n
        for m in range(n):
            xr[m] = 2.0 * c[m] - sim[n, m]
        fr = _objective(code, xr, t_all, log_t_all, w, d, sum_ev, sum_log_ev, t_ref, exposure)

        if fr < fs[0]:
            for m in range(n):
                xe[m] = 3.0 * c[m] - 2.0 * sim[n, m]
            fe = _objective(code, xe, t_all, log_t_all, w, d, sum_ev, sum_log_ev, t_ref, exposure)
            if fe < fr:
                sim[n] = xe
                fs[n] = fe
            else:
                sim[n] = xr
                fs[n] = fr
            continue
        if fr < fs[n - 1]:
            sim[n] = xr
            fs[n] = fr
            continue

        if fr < fs[n]:
            for m in range(n):
                xc[m] = c[m] + 0.5 * (xr[m] - c[m])
            fc = _objective(code, xc, t_all, log_t_all, w, d, sum_ev, sum_log_ev, t_ref, exposure)
            accept = fc <= fr
        else:
            for m in range(n):
                xc[m] = c[m] + 0.5 * (sim[n, m] - c[m])
            fc = _objective(code, xc, t_all, log_t_all, w, d, sum_ev, sum_log_ev, t_ref, exposure)
            accept = fc < fs[n]
        if accept:
            sim[n] = xc
            fs[n] = fc
            continue

        for i in range(1, n + 1):
            for m in range(n):
                sim[i, m] = sim[0, m] + 0.5 * (sim[i, m] - sim[0, m])
            fs[i] = _objective(code, sim[i], t_all, log_t_all, w, d, sum_ev, sum_log_ev, t_ref, exposure)

    best = 0
    for i in range(1, n + 1):
        if fs[i] < fs[best]:
            best = i
    return sim[best].copy(), fs[best], it, converged
