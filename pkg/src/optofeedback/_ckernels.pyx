# cython: language_level=3
"""Compiled kernels: RK4 covariance integration and the Bell-CHSH simplex search."""
import numpy as np
cimport numpy as cnp
from libc.math cimport cos, sin, exp, fabs

cnp.import_array()

cdef double NM_RHO = 1.0
cdef double NM_CHI = 2.0
cdef double NM_PSI = 0.5
cdef double NM_SIGMA = 0.5
cdef double NM_NONZDELT = 0.05
cdef double NM_ZDELT = 0.00025


cdef inline void _drift(double[:, ::1] m0, double[:, ::1] mc, double[:, ::1] ms,
                        double omega2, double t, double[:, ::1] out) noexcept nogil:
    cdef Py_ssize_t n = m0.shape[0], i, j
    cdef double c, s
    if omega2 == 0.0:
        for i in range(n):
            for j in range(n):
                out[i, j] = m0[i, j]
        return
    c = cos(omega2 * t)
    s = sin(omega2 * t)
    for i in range(n):
        for j in range(n):
            out[i, j] = m0[i, j] + c * mc[i, j] + s * ms[i, j]


cdef inline void _rhs(double[:, ::1] m, double[:, ::1] x, double[:, ::1] noise,
                      double[:, ::1] p, double[:, ::1] out) noexcept nogil:
    cdef Py_ssize_t n = m.shape[0], i, j, k
    cdef double acc
    for i in range(n):
        for j in range(n):
            acc = 0.0
            for k in range(n):
                acc += m[i, k] * x[k, j]
            p[i, j] = acc
    for i in range(n):
        for j in range(n):
            out[i, j] = noise[i, j] - p[i, j] - p[j, i]


def rk4_lyapunov(m0, mc, ms, noise, sigma0, double omega2, double t0, double dt,
                 Py_ssize_t n_steps, Py_ssize_t sample_every, double bound):
    """Integrate dS/dt = N - M(t) S - S M(t)^T with classical RK4.

    See ``_pykernels.rk4_lyapunov`` for the contract.
    """
    cdef double[:, ::1] a0 = np.ascontiguousarray(m0, dtype=np.float64)
    cdef double[:, ::1] ac = np.ascontiguousarray(mc, dtype=np.float64)
    cdef double[:, ::1] as_ = np.ascontiguousarray(ms, dtype=np.float64)
    cdef double[:, ::1] nz = np.ascontiguousarray(noise, dtype=np.float64)
    cdef Py_ssize_t n = a0.shape[0]
    cdef Py_ssize_t n_samples = 1 + (n_steps + sample_every - 1) // sample_every
    out_np = np.empty((n_samples, n, n), dtype=np.float64)
    cdef double[:, :, ::1] out = out_np
    cdef double[:, ::1] s = np.array(sigma0, dtype=np.float64, order="C")
    cdef double[:, ::1] tmp = np.empty((n, n))
    cdef double[:, ::1] new = np.empty((n, n))
    cdef double[:, ::1] p = np.empty((n, n))
    cdef double[:, ::1] ma = np.empty((n, n))
    cdef double[:, ::1] mb = np.empty((n, n))
    cdef double[:, ::1] mcc = np.empty((n, n))
    cdef double[:, ::1] k1 = np.empty((n, n))
    cdef double[:, ::1] k2 = np.empty((n, n))
    cdef double[:, ::1] k3 = np.empty((n, n))
    cdef double[:, ::1] k4 = np.empty((n, n))
    avg_np = np.zeros((n, n), dtype=np.float64)
    cdef double[:, ::1] acc = avg_np
    cdef Py_ssize_t i, a, b, k = 0, bad = -1, steps_done
    cdef double t, half = 0.5 * dt, h6 = dt / 6.0, v
    cdef bint blown

    with nogil:
        for a in range(n):
            for b in range(n):
                out[0, a, b] = s[a, b]
        k = 1
        for i in range(n_steps):
            t = t0 + i * dt
            _drift(a0, ac, as_, omega2, t, ma)
            _drift(a0, ac, as_, omega2, t + half, mb)
            _drift(a0, ac, as_, omega2, t + dt, mcc)
            _rhs(ma, s, nz, p, k1)
            for a in range(n):
                for b in range(n):
                    tmp[a, b] = s[a, b] + half * k1[a, b]
            _rhs(mb, tmp, nz, p, k2)
            for a in range(n):
                for b in range(n):
                    tmp[a, b] = s[a, b] + half * k2[a, b]
            _rhs(mb, tmp, nz, p, k3)
            for a in range(n):
                for b in range(n):
                    tmp[a, b] = s[a, b] + dt * k3[a, b]
            _rhs(mcc, tmp, nz, p, k4)
            for a in range(n):
                for b in range(n):
                    new[a, b] = s[a, b] + h6 * (k1[a, b] + 2.0 * k2[a, b] + 2.0 * k3[a, b] + k4[a, b])
            blown = False
            for a in range(n):
                for b in range(a, n):
                    v = 0.5 * (new[a, b] + new[b, a])
                    acc[a, b] += 0.5 * (s[a, b] + v)
                    if a != b:
                        acc[b, a] += 0.5 * (s[b, a] + v)
                    s[a, b] = v
                    s[b, a] = v
                    if not (fabs(v) <= bound):
                        blown = True
            if blown:
                bad = i + 1
                for a in range(n):
                    for b in range(n):
                        out[k, a, b] = s[a, b]
                k += 1
                break
            if (i + 1) % sample_every == 0 or i + 1 == n_steps:
                for a in range(n):
                    for b in range(n):
                        out[k, a, b] = s[a, b]
                k += 1

    steps_done = n_steps if bad < 0 else bad
    if steps_done:
        avg_np /= steps_done
    else:
        avg_np[:] = np.asarray(s)
    return out_np[:k].copy(), avg_np, bad


cdef inline double _parity(double[:, ::1] si, double pref,
                           double a0, double a1, double b0, double b1) noexcept nogil:
    cdef double m[4]
    cdef double q = 0.0, row
    cdef int i, j
    m[0] = a0
    m[1] = a1
    m[2] = b0
    m[3] = b1
    for i in range(4):
        row = 0.0
        for j in range(4):
            row += si[i, j] * m[j]
        q += m[i] * row
    return pref * exp(-q)


cdef inline double _chsh(double[:, ::1] si, double pref, double* x) noexcept nogil:
    return (_parity(si, pref, x[0], x[1], x[2], x[3])
            + _parity(si, pref, x[4], x[5], x[2], x[3])
            + _parity(si, pref, x[0], x[1], x[6], x[7])
            - _parity(si, pref, x[4], x[5], x[6], x[7]))


def chsh_value(sinv, double pref, x):
    """CHSH combination of displaced parities at x = (b1, b2, b1', b2')."""
    cdef double[:, ::1] si = np.ascontiguousarray(sinv, dtype=np.float64)
    cdef double xx[8]
    cdef int i
    for i in range(8):
        xx[i] = x[i]
    return _chsh(si, pref, xx)


cdef inline double _obj(double[:, ::1] si, double pref, double* x) noexcept nogil:
    return -fabs(_chsh(si, pref, x))


cdef void _sort(double sim[9][8], double fsim[9]) noexcept nogil:
    # stable insertion sort on fsim, carrying the vertices along
    cdef int i, j, k
    cdef double fk
    cdef double row[8]
    for i in range(1, 9):
        fk = fsim[i]
        for k in range(8):
            row[k] = sim[i][k]
        j = i - 1
        while j >= 0 and fsim[j] > fk:
            fsim[j + 1] = fsim[j]
            for k in range(8):
                sim[j + 1][k] = sim[j][k]
            j -= 1
        fsim[j + 1] = fk
        for k in range(8):
            sim[j + 1][k] = row[k]


def nelder_mead_bell(sinv, double pref, x0, double xatol, double fatol, int max_iter):
    """Minimize -|B| with the standard Nelder-Mead simplex.

    See ``_pykernels.nelder_mead_bell`` for the contract.
    """
    cdef double[:, ::1] si = np.ascontiguousarray(sinv, dtype=np.float64)
    cdef double sim[9][8]
    cdef double fsim[9]
    cdef double xbar[8]
    cdef double xr[8]
    cdef double xe[8]
    cdef double xc[8]
    cdef double fxr, fxe, fxc, xspread, fspread
    cdef int n = 8, j, k, it = 1
    cdef bint converged = False, shrink
    for k in range(n):
        sim[0][k] = x0[k]

    with nogil:
        for j in range(n):
            for k in range(n):
                sim[j + 1][k] = sim[0][k]
            if sim[j + 1][j] != 0.0:
                sim[j + 1][j] = (1.0 + NM_NONZDELT) * sim[j + 1][j]
            else:
                sim[j + 1][j] = NM_ZDELT
        for j in range(n + 1):
            fsim[j] = _obj(si, pref, sim[j])
        _sort(sim, fsim)

        while it < max_iter:
            xspread = 0.0
            fspread = 0.0
            for j in range(1, n + 1):
                if fabs(fsim[0] - fsim[j]) > fspread:
                    fspread = fabs(fsim[0] - fsim[j])
                for k in range(n):
                    if fabs(sim[j][k] - sim[0][k]) > xspread:
                        xspread = fabs(sim[j][k] - sim[0][k])
            if xspread <= xatol and fspread <= fatol:
                converged = True
                break
            for k in range(n):
                xbar[k] = 0.0
            for j in range(n):
                for k in range(n):
                    xbar[k] += sim[j][k]
            for k in range(n):
                xbar[k] = xbar[k] / n
            for k in range(n):
                xr[k] = (1.0 + NM_RHO) * xbar[k] - NM_RHO * sim[n][k]
            fxr = _obj(si, pref, xr)
            shrink = False
            if fxr < fsim[0]:
                for k in range(n):
                    xe[k] = (1.0 + NM_RHO * NM_CHI) * xbar[k] - NM_RHO * NM_CHI * sim[n][k]
                fxe = _obj(si, pref, xe)
                if fxe < fxr:
                    for k in range(n):
                        sim[n][k] = xe[k]
                    fsim[n] = fxe
                else:
                    for k in range(n):
                        sim[n][k] = xr[k]
                    fsim[n] = fxr
            elif fxr < fsim[n - 1]:
                for k in range(n):
                    sim[n][k] = xr[k]
                fsim[n] = fxr
            elif fxr < fsim[n]:
                for k in range(n):
                    xc[k] = (1.0 + NM_PSI * NM_RHO) * xbar[k] - NM_PSI * NM_RHO * sim[n][k]
                fxc = _obj(si, pref, xc)
                if fxc <= fxr:
                    for k in range(n):
                        sim[n][k] = xc[k]
                    fsim[n] = fxc
                else:
                    shrink = True
            else:
                for k in range(n):
                    xc[k] = (1.0 - NM_PSI) * xbar[k] + NM_PSI * sim[n][k]
                fxc = _obj(si, pref, xc)
                if fxc < fsim[n]:
                    for k in range(n):
                        sim[n][k] = xc[k]
                    fsim[n] = fxc
                else:
                    shrink = True
            if shrink:
                for j in range(1, n + 1):
                    for k in range(n):
                        sim[j][k] = sim[0][k] + NM_SIGMA * (sim[j][k] - sim[0][k])
                    fsim[j] = _obj(si, pref, sim[j])
            _sort(sim, fsim)
            it += 1

    best = np.empty(8)
    for k in range(n):
        best[k] = sim[0][k]
    return best, _chsh(si, pref, sim[0]), it, bool(converged)
