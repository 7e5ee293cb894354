"""Pure-Python reference kernels.

Same algorithms as the compiled ``_ckernels`` module (results agree to
rounding); used when the extension is unavailable or disabled.
"""
import math

import numpy as np

NM_RHO = 1.0
NM_CHI = 2.0
NM_PSI = 0.5
NM_SIGMA = 0.5
NM_NONZDELT = 0.05
NM_ZDELT = 0.00025


def rk4_lyapunov(m0, mc, ms, noise, sigma0, omega2, t0, dt, n_steps, sample_every, bound):
    """Integrate dS/dt = N - M(t) S - S M(t)^T with classical RK4.

    ``M(t) = m0 + cos(omega2 t) mc + sin(omega2 t) ms``.  S is symmetrized
    after every step.

    Returns
    -------
    samples : ndarray, shape (k, n, n)
        S at step 0, every ``sample_every`` steps, and at the final step.
    average : ndarray, shape (n, n)
        Trapezoidal time average of S over the integrated interval.
    bad_step : int
        -1, or the step index at which an entry first exceeded ``bound``
        (samples then end with that state).
    """
    m0 = np.asarray(m0, dtype=float)
    mc = np.asarray(mc, dtype=float)
    ms = np.asarray(ms, dtype=float)
    noise = np.asarray(noise, dtype=float)
    s = np.array(sigma0, dtype=float)
    periodic = omega2 != 0.0

    def drift(t):
        if not periodic:
            return m0
        return m0 + math.cos(omega2 * t) * mc + math.sin(omega2 * t) * ms

    def rhs(m, x):
        p = m @ x
        return noise - p - p.T

    samples = [s.copy()]
    acc = np.zeros_like(s)
    bad = -1
    half = 0.5 * dt
    for i in range(n_steps):
        t = t0 + i * dt
        m_a = drift(t)
        m_b = drift(t + half)
        m_c = drift(t + dt)
        k1 = rhs(m_a, s)
        k2 = rhs(m_b, s + half * k1)
        k3 = rhs(m_b, s + half * k2)
        k4 = rhs(m_c, s + dt * k3)
        new = s + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        new = 0.5 * (new + new.T)
        acc += 0.5 * (s + new)
        s = new
        if not np.all(np.abs(s) <= bound):
            bad = i + 1
            samples.append(s.copy())
            break
        if (i + 1) % sample_every == 0 or i + 1 == n_steps:
            samples.append(s.copy())
    steps_done = n_steps if bad < 0 else bad
    average = acc / steps_done if steps_done else s.copy()
    return np.array(samples), average, bad


def _parity(sinv, pref, a0, a1, b0, b1):
    m = (a0, a1, b0, b1)
    q = 0.0
    for i in range(4):
        row = 0.0
        for j in range(4):
            row += sinv[i][j] * m[j]
        q += m[i] * row
    return pref * math.exp(-q)


def chsh_value(sinv, pref, x):
    """CHSH combination of displaced parities at x = (b1, b2, b1', b2')."""
    s = [list(map(float, r)) for r in np.asarray(sinv)] if isinstance(sinv, np.ndarray) else sinv
    return (
        _parity(s, pref, x[0], x[1], x[2], x[3])
        + _parity(s, pref, x[4], x[5], x[2], x[3])
        + _parity(s, pref, x[0], x[1], x[6], x[7])
        - _parity(s, pref, x[4], x[5], x[6], x[7])
    )


def nelder_mead_bell(sinv, pref, x0, xatol, fatol, max_iter):
    """Minimize -|B| with the standard Nelder-Mead simplex.

    Returns ``(x, b, n_iter, converged)`` where ``b`` is the signed CHSH
    value at the best vertex.
    """
    s = [list(map(float, r)) for r in np.asarray(sinv, dtype=float)]
    n = 8

    def f(x):
        return -abs(chsh_value(s, pref, x))

    sim = [list(map(float, x0))]
    for k in range(n):
        y = list(sim[0])
        if y[k] != 0.0:
            y[k] = (1.0 + NM_NONZDELT) * y[k]
        else:
            y[k] = NM_ZDELT
        sim.append(y)
    fsim = [f(v) for v in sim]
    sim, fsim = _sort(sim, fsim)

    it = 1
    converged = False
    while it < max_iter:
        xspread = 0.0
        fspread = 0.0
        for j in range(1, n + 1):
            fspread = max(fspread, abs(fsim[0] - fsim[j]))
            for k in range(n):
                xspread = max(xspread, abs(sim[j][k] - sim[0][k]))
        if xspread <= xatol and fspread <= fatol:
            converged = True
            break
        xbar = [0.0] * n
        for j in range(n):
            for k in range(n):
                xbar[k] += sim[j][k]
        xbar = [v / n for v in xbar]
        worst = sim[n]
        xr = [(1.0 + NM_RHO) * xbar[k] - NM_RHO * worst[k] for k in range(n)]
        fxr = f(xr)
        shrink = False
        if fxr < fsim[0]:
            xe = [(1.0 + NM_RHO * NM_CHI) * xbar[k] - NM_RHO * NM_CHI * worst[k] for k in range(n)]
            fxe = f(xe)
            if fxe < fxr:
                sim[n], fsim[n] = xe, fxe
            else:
                sim[n], fsim[n] = xr, fxr
        elif fxr < fsim[n - 1]:
            sim[n], fsim[n] = xr, fxr
        elif fxr < fsim[n]:
            xc = [(1.0 + NM_PSI * NM_RHO) * xbar[k] - NM_PSI * NM_RHO * worst[k] for k in range(n)]
            fxc = f(xc)
            if fxc <= fxr:
                sim[n], fsim[n] = xc, fxc
            else:
                shrink = True
        else:
            xcc = [(1.0 - NM_PSI) * xbar[k] + NM_PSI * worst[k] for k in range(n)]
            fxcc = f(xcc)
            if fxcc < fsim[n]:
                sim[n], fsim[n] = xcc, fxcc
            else:
                shrink = True
        if shrink:
            for j in range(1, n + 1):
                sim[j] = [sim[0][k] + NM_SIGMA * (sim[j][k] - sim[0][k]) for k in range(n)]
                fsim[j] = f(sim[j])
        sim, fsim = _sort(sim, fsim)
        it += 1
    best = np.array(sim[0])
    return best, chsh_value(s, pref, sim[0]), it, converged


def _sort(sim, fsim):
    # stable insertion order must match the compiled kernel
    order = sorted(range(len(fsim)), key=lambda j: fsim[j])
    return [sim[j] for j in order], [fsim[j] for j in order]
