"""Compiled RK4 loop for the vectorized (Liouville-space) backend.

Mirrors ``Generator.stepper`` + ``integrate`` exactly; the pure-numpy path is
kept as the reference and the test-suite compares the two.
"""
from __future__ import annotations

import math

import numpy as np
from numba import njit

LAW_CODES = {"off": 0, "proportional": 1, "compensating": 2, "power": 3, "strength": 4}


def law_params(law) -> np.ndarray:
    return np.array([law.K, law.W_max, law.S, law.epsilon_den, law.f_cap,
                     law.K_fb, law.epsilon_sign])


@njit(cache=True)
def _fields(code, p, t1, t2, t3, ov):
    if code == 1:
        return p[0] * t1, p[0] * t2, p[0] * t3
    if code == 3:
        norm = math.sqrt(t1 * t1 + t2 * t2 + t3 * t3)
        if norm <= p[6]:
            return 0.0, 0.0, 0.0
        s = math.sqrt(p[1]) / norm
        return s * t1, s * t2, s * t3
    if code == 4:
        out = [0.0, 0.0, 0.0]
        ts = (t1, t2, t3)
        for k in range(3):
            if abs(ts[k]) > p[6]:
                out[k] = math.copysign(p[2], ts[k])
        return out[0], out[1], out[2]
    if code == 2:
        if abs(t1) < p[3]:
            f1 = p[5] * t1
        else:
            f1 = -ov / t1
        if abs(f1) > p[4]:
            f1 = math.copysign(p[4], f1)
        return f1, t2, t3
    return 0.0, 0.0, 0.0


@njit(cache=True)
def _csr_matvec(indptr, indices, data, x, out):
    for i in range(out.shape[0]):
        acc = 0j
        for k in range(indptr[i], indptr[i + 1]):
            acc += data[k] * x[indices[k]]
        out[i] = acc


@njit(cache=True)
def _deriv(x, off, f_in, ip0, ix0, d0, ip_off, ix_off, d_off, ipc, ixc, dc, rows,
           code, p, out, tmp, f_out):
    """Write dx into ``out``; return the fidelity.

    Fields are taken from ``f_in`` when it is non-empty (sample-and-hold),
    otherwise evaluated from ``x``; the fields used land in ``f_out``.
    """
    n2 = x.shape[0]
    # functionals: rows 0..2 T_k, 3 overlap, 4 fidelity
    vals = np.empty(5)
    for r in range(5):
        acc = 0j
        for i in range(n2):
            acc += rows[r, i] * x[i]
        vals[r] = acc.real
    if off:
        _csr_matvec(ip_off, ix_off, d_off, x, out)
        f_out[:] = 0.0
        return vals[4]
    _csr_matvec(ip0, ix0, d0, x, out)
    if f_in.shape[0] == 3:
        f1, f2, f3 = f_in[0], f_in[1], f_in[2]
    else:
        f1, f2, f3 = _fields(code, p, vals[0], vals[1], vals[2], vals[3])
    f_out[0] = f1
    f_out[1] = f2
    f_out[2] = f3
    _csr_matvec(ipc, ixc, dc, x, tmp)
    for i in range(n2):
        out[i] += f1 * tmp[i] + f2 * tmp[n2 + i] + f3 * tmp[2 * n2 + i]
    return vals[4]


@njit(cache=True)
def advance(x, n_steps, dt, off, best, margin, arm, watch_peak, hold,
            ip0, ix0, d0, ip_off, ix_off, d_off, ipc, ixc, dc, rows, code, p):
    """Advance ``n_steps``; returns (x, off, best, step index of switch-off or -1).

    With ``hold`` the fields from the first stage are reused for the rest of
    the step.
    """
    n2 = x.shape[0]
    k1 = np.empty(n2, np.complex128)
    k2 = np.empty(n2, np.complex128)
    k3 = np.empty(n2, np.complex128)
    k4 = np.empty(n2, np.complex128)
    y = np.empty(n2, np.complex128)
    tmp = np.empty(3 * n2, np.complex128)
    free = np.empty(0)
    f = np.zeros(3)
    scratch = np.zeros(3)
    switched = -1
    for s in range(n_steps):
        fid = _deriv(x, off, free, ip0, ix0, d0, ip_off, ix_off, d_off, ipc, ixc, dc, rows,
                     code, p, k1, tmp, f)
        if watch_peak and not off:
            if fid > best:
                best = fid
            if best >= arm and fid < best - margin:
                off = True
                switched = s
                _deriv(x, off, free, ip0, ix0, d0, ip_off, ix_off, d_off, ipc, ixc, dc, rows,
                       code, p, k1, tmp, f)
        stage_f = f if hold else free
        for i in range(n2):
            y[i] = x[i] + 0.5 * dt * k1[i]
        _deriv(y, off, stage_f, ip0, ix0, d0, ip_off, ix_off, d_off, ipc, ixc, dc, rows,
               code, p, k2, tmp, scratch)
        for i in range(n2):
            y[i] = x[i] + 0.5 * dt * k2[i]
        _deriv(y, off, stage_f, ip0, ix0, d0, ip_off, ix_off, d_off, ipc, ixc, dc, rows,
               code, p, k3, tmp, scratch)
        for i in range(n2):
            y[i] = x[i] + dt * k3[i]
        _deriv(y, off, stage_f, ip0, ix0, d0, ip_off, ix_off, d_off, ipc, ixc, dc, rows,
               code, p, k4, tmp, scratch)
        for i in range(n2):
            x[i] = x[i] + (dt / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
    return x, off, best, switched


# --- matrix-form backend (large spaces) -----------------------------------------
#
# Operators are CSR arrays; blocks of equally sized operators (controls, jumps)
# are stacked row-wise, operator k occupying rows k*n .. (k+1)*n-1.  The state
# is the row-major flattening of a Hermitian rho, which lets rho A^+ be read
# off as (A rho)^+.

@njit(cache=True)
def _csr_times_dense(ip, ix, d, row0, n, x, out, scale=1.0, accumulate=False):
    """out[i, j] (+)= scale * sum_k A[row0 + i, k] rho[k, j] with rho = x.reshape(n, n)."""
    if not accumulate:
        out[:] = 0j
    for i in range(n):
        base = i * n
        for p in range(ip[row0 + i], ip[row0 + i + 1]):
            a = scale * d[p]
            kb = ix[p] * n
            for j in range(n):
                out[base + j] += a * x[kb + j]


@njit(cache=True)
def _deriv_matrix(x, n, off, f_in, he, he_off, ctrl, jumps, weights, frows, code, p,
                  out, a, b, f_out):
    n_ctrl = ctrl[0].shape[0] - 1
    vals = np.zeros(5)
    fip, fix, fd = frows
    for r in range(5):
        acc = 0j
        for q in range(fip[r], fip[r + 1]):
            acc += fd[q] * x[fix[q]]
        vals[r] = acc.real
    if off:
        _csr_times_dense(he_off[0], he_off[1], he_off[2], 0, n, x, a)
        f_out[:] = 0.0
    else:
        _csr_times_dense(he[0], he[1], he[2], 0, n, x, a)
        if f_in.shape[0] == 3:
            f1, f2, f3 = f_in[0], f_in[1], f_in[2]
        else:
            f1, f2, f3 = _fields(code, p, vals[0], vals[1], vals[2], vals[3])
        f_out[0] = f1
        f_out[1] = f2
        f_out[2] = f3
        fs = (f1, f2, f3)
        for k in range(n_ctrl // n):
            if fs[k] != 0.0:
                _csr_times_dense(ctrl[0], ctrl[1], ctrl[2], k * n, n, x, a, fs[k], True)
    for i in range(n):
        for j in range(n):
            out[i * n + j] = -1j * (a[i * n + j] - np.conj(a[j * n + i]))
    jip, jix, jd = jumps
    for m in range(weights.shape[0]):
        _csr_times_dense(jip, jix, jd, m * n, n, x, b)
        w = weights[m]
        # (J B^+)[i, j] = sum_k J[i, k] conj(B[j, k])
        for i in range(n):
            for q in range(jip[m * n + i], jip[m * n + i + 1]):
                c = w * jd[q]
                k = jix[q]
                for j in range(n):
                    out[i * n + j] += c * np.conj(b[j * n + k])
    return vals[4]


@njit(cache=True)
def advance_matrix(x, n, n_steps, dt, off, best, margin, arm, watch_peak, hold,
                   he, he_off, ctrl, jumps, weights, frows, code, p):
    """Matrix-form counterpart of ``advance``."""
    n2 = x.shape[0]
    k1 = np.empty(n2, np.complex128)
    k2 = np.empty(n2, np.complex128)
    k3 = np.empty(n2, np.complex128)
    k4 = np.empty(n2, np.complex128)
    y = np.empty(n2, np.complex128)
    a = np.empty(n2, np.complex128)
    b = np.empty(n2, np.complex128)
    free = np.empty(0)
    f = np.zeros(3)
    scratch = np.zeros(3)
    switched = -1
    for s in range(n_steps):
        fid = _deriv_matrix(x, n, off, free, he, he_off, ctrl, jumps, weights, frows,
                            code, p, k1, a, b, f)
        if watch_peak and not off:
            if fid > best:
                best = fid
            if best >= arm and fid < best - margin:
                off = True
                switched = s
                _deriv_matrix(x, n, off, free, he, he_off, ctrl, jumps, weights, frows,
                              code, p, k1, a, b, f)
        stage_f = f if hold else free
        for i in range(n2):
            y[i] = x[i] + 0.5 * dt * k1[i]
        _deriv_matrix(y, n, off, stage_f, he, he_off, ctrl, jumps, weights, frows,
                      code, p, k2, a, b, scratch)
        for i in range(n2):
            y[i] = x[i] + 0.5 * dt * k2[i]
        _deriv_matrix(y, n, off, stage_f, he, he_off, ctrl, jumps, weights, frows,
                      code, p, k3, a, b, scratch)
        for i in range(n2):
            y[i] = x[i] + dt * k3[i]
        _deriv_matrix(y, n, off, stage_f, he, he_off, ctrl, jumps, weights, frows,
                      code, p, k4, a, b, scratch)
        for i in range(n2):
            x[i] = x[i] + (dt / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
    return x, off, best, switched
