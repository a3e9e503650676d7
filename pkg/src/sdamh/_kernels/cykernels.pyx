# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled kernels: hot loops for simulation, filtering, and Monte-Carlo
impulse responses.

Arithmetic matches the pure-Python twin operation for operation (same
accumulation order, contraction disabled in the build) so that a fixed seed
produces identical trajectories on both backends.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, log, fabs

cnp.import_array()

cdef double LOG2PI = 1.8378770664093453390819377091247588396072387695312500


cdef inline double _pi_of(double z) nogil:
    cdef double e
    if z >= 0.0:
        e = exp(-z)
        return 1.0 / (1.0 + e)
    e = exp(z)
    return e / (1.0 + e)


cdef inline double _one_minus_pi_of(double z) nogil:
    cdef double e
    if z >= 0.0:
        e = exp(-z)
        return e / (1.0 + e)
    e = exp(z)
    return 1.0 / (1.0 + e)


cdef double _seed_sums(double[::1] vals, Py_ssize_t lo, Py_ssize_t hi) nogil:
    cdef double s = 0.0
    cdef Py_ssize_t j
    for j in range(lo, hi):
        s += vals[j]
    return s


def filter_path(g, double omega, double beta, double alpha, double b0_init):
    """Impact-recursion path b_{i+1} = omega + beta*b_i + alpha*(g_i - b_i)."""
    cdef double[::1] gv = np.ascontiguousarray(g, dtype=np.float64)
    cdef Py_ssize_t n = gv.shape[0]
    out = np.empty(n)
    cdef double[::1] ov = out
    cdef double b = b0_init
    cdef Py_ssize_t i
    for i in range(n):
        ov[i] = b
        b = omega + beta * b + alpha * (gv[i] - b)
    return out


def loglik_fast(r_eff, x_eff, design, cr, cx, double sigma2, double omega,
                double beta, double alpha, double b0_init, double pi_clip):
    """Total log-likelihood over the effective sample (fused single pass)."""
    cdef double[::1] rv = np.ascontiguousarray(r_eff, dtype=np.float64)
    cdef double[::1] xv = np.ascontiguousarray(x_eff, dtype=np.float64)
    cdef double[:, ::1] D = np.ascontiguousarray(design, dtype=np.float64)
    cdef double[::1] crv = np.ascontiguousarray(cr, dtype=np.float64)
    cdef double[::1] cxv = np.ascontiguousarray(cx, dtype=np.float64)
    cdef Py_ssize_t n = rv.shape[0], w = D.shape[1]
    cdef Py_ssize_t i, j
    cdef double state, zt, g, s, p_obs, b = b0_init
    cdef double gauss_const = -0.5 * (LOG2PI + log(sigma2))
    cdef double inv2s2 = 1.0 / (2.0 * sigma2)
    cdef double total = 0.0
    cdef long n_clamped = 0
    cdef long first_bad = -1
    with nogil:
        for i in range(n):
            state = 0.0
            zt = 0.0
            for j in range(w):
                state += crv[j] * D[i, j]
                zt += cxv[j] * D[i, j]
            g = xv[i] * (rv[i] - state)
            s = g - b
            if xv[i] > 0.0:
                p_obs = _pi_of(zt)
            else:
                p_obs = _one_minus_pi_of(zt)
            if p_obs < pi_clip:
                n_clamped += 1
                if first_bad < 0:
                    first_bad = i
                p_obs = pi_clip
            total += gauss_const - s * s * inv2s2 + log(p_obs)
            b = omega + beta * b + alpha * s
    return total, int(n_clamped), int(first_bad)


def filter_detail(r, x, int L1, int L2, cr, cx, double sigma2, double omega,
                  double beta, double alpha, double b0_init, double pi_clip):
    """Sequential filter pass with rolling lag aggregates.

    Returns (total, per_obs, b0_path, scores, n_clamped, first_bad).
    """
    cdef double[::1] rv = np.ascontiguousarray(r, dtype=np.float64)
    cdef double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef double[::1] crv = np.ascontiguousarray(cr, dtype=np.float64)
    cdef double[::1] cxv = np.ascontiguousarray(cx, dtype=np.float64)
    cdef Py_ssize_t T = rv.shape[0]
    cdef Py_ssize_t n = T - L2
    per_obs = np.empty(n)
    b0_path = np.empty(n)
    scores = np.empty(n)
    cdef double[::1] pv = per_obs
    cdef double[::1] bv = b0_path
    cdef double[::1] sv = scores
    cdef double n1 = L1 - 1.0
    cdef double n2 = L2 - L1 * 1.0
    cdef double sr1 = _seed_sums(rv, L2 - L1, L2 - 1)
    cdef double sr2 = _seed_sums(rv, 0, L2 - L1)
    cdef double sx1 = _seed_sums(xv, L2 - L1, L2 - 1)
    cdef double sx2 = _seed_sums(xv, 0, L2 - L1)
    cdef double c0 = crv[0], c1 = crv[1], c2 = crv[2], c3 = crv[3], c4 = crv[4], c5 = crv[5], c6 = crv[6]
    cdef double d0 = cxv[0], d1 = cxv[1], d2 = cxv[2], d3 = cxv[3], d4 = cxv[4], d5 = cxv[5], d6 = cxv[6]
    cdef double gauss_const = -0.5 * (LOG2PI + log(sigma2))
    cdef double inv2s2 = 1.0 / (2.0 * sigma2)
    cdef double b = b0_init
    cdef double total = 0.0
    cdef long n_clamped = 0
    cdef long first_bad = -1
    cdef Py_ssize_t k, i
    cdef double r1, x1, rl1, rl2, xl1, xl2, state, zt, xt, g, s, p_obs, ll
    with nogil:
        for k in range(L2, T):
            r1 = rv[k - 1]
            x1 = xv[k - 1]
            rl1 = sr1 / n1
            rl2 = sr2 / n2
            xl1 = sx1 / n1
            xl2 = sx2 / n2
            state = c0 + c1 * r1 + c2 * rl1 + c3 * rl2 + c4 * x1 + c5 * xl1 + c6 * xl2
            zt = d0 + d1 * r1 + d2 * rl1 + d3 * rl2 + d4 * x1 + d5 * xl1 + d6 * xl2
            xt = xv[k]
            g = xt * (rv[k] - state)
            s = g - b
            if xt > 0.0:
                p_obs = _pi_of(zt)
            else:
                p_obs = _one_minus_pi_of(zt)
            if p_obs < pi_clip:
                n_clamped += 1
                if first_bad < 0:
                    first_bad = k - L2
                p_obs = pi_clip
            ll = gauss_const - s * s * inv2s2 + log(p_obs)
            i = k - L2
            pv[i] = ll
            bv[i] = b
            sv[i] = s
            total += ll
            b = omega + beta * b + alpha * s
            sr1 += rv[k - 1] - rv[k - L1]
            sr2 += rv[k - L1] - rv[k - L2]
            sx1 += xv[k - 1] - xv[k - L1]
            sx2 += xv[k - L1] - xv[k - L2]
    return total, per_obs, b0_path, scores, int(n_clamped), int(first_bad)


def simulate_agg(int T, int L1, int L2, cr, cx, double sigma, double omega,
                 double beta, double alpha, b0_sched, double b0_init,
                 warm_r, warm_x, z, u):
    """Simulate T trades of an aggregated-lag variant. Returns (r, x, b0)."""
    full_r = np.concatenate([np.asarray(warm_r, dtype=np.float64), np.zeros(T)])
    full_x = np.concatenate([np.asarray(warm_x, dtype=np.float64), np.zeros(T)])
    cdef double[::1] fr = full_r
    cdef double[::1] fx = full_x
    cdef double[::1] crv = np.ascontiguousarray(cr, dtype=np.float64)
    cdef double[::1] cxv = np.ascontiguousarray(cx, dtype=np.float64)
    cdef double[::1] zv = np.ascontiguousarray(z, dtype=np.float64)
    cdef double[::1] uv = np.ascontiguousarray(u, dtype=np.float64)
    cdef bint has_sched = b0_sched is not None
    cdef double[::1] sched
    if has_sched:
        sched = np.ascontiguousarray(b0_sched, dtype=np.float64)
    else:
        sched = np.empty(0)
    out_r = np.empty(T)
    out_x = np.empty(T)
    out_b0 = np.empty(T)
    cdef double[::1] orv = out_r
    cdef double[::1] oxv = out_x
    cdef double[::1] obv = out_b0
    cdef double n1 = L1 - 1.0
    cdef double n2 = L2 - L1 * 1.0
    cdef double sr1 = _seed_sums(fr, L2 - L1, L2 - 1)
    cdef double sr2 = _seed_sums(fr, 0, L2 - L1)
    cdef double sx1 = _seed_sums(fx, L2 - L1, L2 - 1)
    cdef double sx2 = _seed_sums(fx, 0, L2 - L1)
    cdef double c0 = crv[0], c1 = crv[1], c2 = crv[2], c3 = crv[3], c4 = crv[4], c5 = crv[5], c6 = crv[6]
    cdef double d0 = cxv[0], d1 = cxv[1], d2 = cxv[2], d3 = cxv[3], d4 = cxv[4], d5 = cxv[5], d6 = cxv[6]
    cdef double b0_dyn = b0_init
    cdef Py_ssize_t i, k
    cdef double r1, x1, rl1, rl2, xl1, xl2, zt, pi, xt, state, b0t, mu1, rt
    with nogil:
        for i in range(T):
            k = L2 + i
            r1 = fr[k - 1]
            x1 = fx[k - 1]
            rl1 = sr1 / n1
            rl2 = sr2 / n2
            xl1 = sx1 / n1
            xl2 = sx2 / n2
            zt = d0 + d1 * r1 + d2 * rl1 + d3 * rl2 + d4 * x1 + d5 * xl1 + d6 * xl2
            pi = _pi_of(zt)
            xt = 1.0 if uv[i] < pi else -1.0
            state = c0 + c1 * r1 + c2 * rl1 + c3 * rl2 + c4 * x1 + c5 * xl1 + c6 * xl2
            b0t = sched[i] if has_sched else b0_dyn
            mu1 = state + b0t * xt
            rt = mu1 + sigma * zv[i]
            if not has_sched:
                b0_dyn = omega + beta * b0t + alpha * (xt * (rt - mu1))
            orv[i] = rt
            oxv[i] = xt
            obv[i] = b0t
            sr1 += fr[k - 1] - fr[k - L1]
            sr2 += fr[k - L1] - fr[k - L2]
            sx1 += fx[k - 1] - fx[k - L1]
            sx2 += fx[k - L1] - fx[k - L2]
            fr[k] = rt
            fx[k] = xt
    return out_r, out_x, out_b0


def simulate_raw(int T, int p, cr, cx, double sigma, double b0,
                 warm_r, warm_x, z, u):
    """Simulate T trades of the raw-lag modified model. Returns (r, x)."""
    cdef Py_ssize_t W = len(warm_r)
    full_r = np.concatenate([np.asarray(warm_r, dtype=np.float64), np.zeros(T)])
    full_x = np.concatenate([np.asarray(warm_x, dtype=np.float64), np.zeros(T)])
    cdef double[::1] fr = full_r
    cdef double[::1] fx = full_x
    cdef double[::1] crv = np.ascontiguousarray(cr, dtype=np.float64)
    cdef double[::1] cxv = np.ascontiguousarray(cx, dtype=np.float64)
    cdef double[::1] zv = np.ascontiguousarray(z, dtype=np.float64)
    cdef double[::1] uv = np.ascontiguousarray(u, dtype=np.float64)
    out_r = np.empty(T)
    out_x = np.empty(T)
    cdef double[::1] orv = out_r
    cdef double[::1] oxv = out_x
    cdef Py_ssize_t i, k, j
    cdef double zt, pi, xt, state, rt
    with nogil:
        for i in range(T):
            k = W + i
            zt = cxv[0]
            for j in range(1, p + 1):
                zt += cxv[j] * fr[k - j]
            for j in range(1, p + 1):
                zt += cxv[p + j] * fx[k - j]
            pi = _pi_of(zt)
            xt = 1.0 if uv[i] < pi else -1.0
            state = crv[0]
            for j in range(1, p + 1):
                state += crv[j] * fr[k - j]
            for j in range(1, p + 1):
                state += crv[p + j] * fx[k - j]
            rt = state + b0 * xt + sigma * zv[i]
            orv[i] = rt
            oxv[i] = xt
            fr[k] = rt
            fx[k] = xt
    return out_r, out_x


def cirf_paths(hist_r, hist_x, int L1, int L2, double b0_t, cr, cx,
               double sigma, double omega, double beta, double alpha, int H,
               double delta_x, z_s, z_u, u_s, u_u, bint linear_trade,
               double trade_sigma, z2_s, z2_u):
    """Per-path cumulative impulse responses; see the Python twin for the
    branch conventions. Returns an (S, H+1) matrix."""
    cdef double[::1] hr = np.ascontiguousarray(hist_r, dtype=np.float64)
    cdef double[::1] hx = np.ascontiguousarray(hist_x, dtype=np.float64)
    cdef double[::1] crv = np.ascontiguousarray(cr, dtype=np.float64)
    cdef double[::1] cxv = np.ascontiguousarray(cx, dtype=np.float64)
    cdef double[:, ::1] zs = np.ascontiguousarray(z_s, dtype=np.float64)
    cdef double[:, ::1] zu = np.ascontiguousarray(z_u, dtype=np.float64)
    cdef double[:, ::1] us = np.ascontiguousarray(u_s, dtype=np.float64)
    cdef double[:, ::1] uu = np.ascontiguousarray(u_u, dtype=np.float64)
    cdef double[:, ::1] z2s
    cdef double[:, ::1] z2u
    if linear_trade:
        z2s = np.ascontiguousarray(z2_s, dtype=np.float64)
        z2u = np.ascontiguousarray(z2_u, dtype=np.float64)
    else:
        z2s = np.empty((1, 1))
        z2u = np.empty((1, 1))
    cdef Py_ssize_t S = zs.shape[0]
    out = np.empty((S, H + 1))
    cdef double[:, ::1] ov = out
    # branch rings: two value/sign buffers of length L2 each
    buf = np.empty((4, L2))
    cdef double[:, ::1] bufv = buf
    cdef double c0 = crv[0], c1 = crv[1], c2 = crv[2], c3 = crv[3], c4 = crv[4], c5 = crv[5], c6 = crv[6]
    cdef double d0 = cxv[0], d1 = cxv[1], d2 = cxv[2], d3 = cxv[3], d4 = cxv[4], d5 = cxv[5], d6 = cxv[6]
    cdef double base_sr1 = _seed_sums(hr, L2 - L1, L2 - 1)
    cdef double base_sr2 = _seed_sums(hr, 0, L2 - L1)
    cdef double base_sx1 = _seed_sums(hx, L2 - L1, L2 - 1)
    cdef double base_sx2 = _seed_sums(hx, 0, L2 - L1)
    cdef double n1 = L1 - 1.0
    cdef double n2 = L2 - L1 * 1.0
    cdef Py_ssize_t si, h, j, head_a, head_b
    cdef double sr1_a, sr2_a, sx1_a, sx2_a, sr1_b, sr2_b, sx1_b, sx2_b
    cdef double b0_a, b0_b, csum
    cdef double r1, x1, rl1, rl2, xl1, xl2, state_a, state_b, zt_a, zt_b
    cdef double x_a, x_b, pi_a, pi_b, mu1_a, mu1_b, r_a, r_b
    with nogil:
        for si in range(S):
            for j in range(L2):
                bufv[0, j] = hr[j]
                bufv[1, j] = hx[j]
                bufv[2, j] = hr[j]
                bufv[3, j] = hx[j]
            head_a = 0
            head_b = 0
            sr1_a = base_sr1; sr2_a = base_sr2; sx1_a = base_sx1; sx2_a = base_sx2
            sr1_b = base_sr1; sr2_b = base_sr2; sx1_b = base_sx1; sx2_b = base_sx2
            b0_a = b0_t
            b0_b = b0_t
            csum = 0.0
            for h in range(H + 1):
                r1 = bufv[0, (head_a + L2 - 1) % L2]
                x1 = bufv[1, (head_a + L2 - 1) % L2]
                rl1 = sr1_a / n1
                rl2 = sr2_a / n2
                xl1 = sx1_a / n1
                xl2 = sx2_a / n2
                state_a = c0 + c1 * r1 + c2 * rl1 + c3 * rl2 + c4 * x1 + c5 * xl1 + c6 * xl2
                zt_a = d0 + d1 * r1 + d2 * rl1 + d3 * rl2 + d4 * x1 + d5 * xl1 + d6 * xl2
                r1 = bufv[2, (head_b + L2 - 1) % L2]
                x1 = bufv[3, (head_b + L2 - 1) % L2]
                rl1 = sr1_b / n1
                rl2 = sr2_b / n2
                xl1 = sx1_b / n1
                xl2 = sx2_b / n2
                state_b = c0 + c1 * r1 + c2 * rl1 + c3 * rl2 + c4 * x1 + c5 * xl1 + c6 * xl2
                zt_b = d0 + d1 * r1 + d2 * rl1 + d3 * rl2 + d4 * x1 + d5 * xl1 + d6 * xl2
                if linear_trade:
                    x_b = zt_b + trade_sigma * z2u[si, h]
                    x_a = zt_a + trade_sigma * z2s[si, h]
                    if h == 0:
                        x_a = x_a + delta_x
                else:
                    pi_b = _pi_of(zt_b)
                    x_b = 1.0 if uu[si, h] < pi_b else -1.0
                    if h == 0:
                        x_a = delta_x
                    else:
                        pi_a = _pi_of(zt_a)
                        x_a = 1.0 if us[si, h] < pi_a else -1.0
                mu1_a = state_a + b0_a * x_a
                mu1_b = state_b + b0_b * x_b
                r_a = mu1_a + sigma * zs[si, h]
                r_b = mu1_b + sigma * zu[si, h]
                b0_a = omega + beta * b0_a + alpha * (x_a * (r_a - mu1_a))
                b0_b = omega + beta * b0_b + alpha * (x_b * (r_b - mu1_b))
                # roll branch A
                sr1_a += bufv[0, (head_a + L2 - 1) % L2] - bufv[0, (head_a + L2 - L1) % L2]
                sr2_a += bufv[0, (head_a + L2 - L1) % L2] - bufv[0, head_a % L2]
                sx1_a += bufv[1, (head_a + L2 - 1) % L2] - bufv[1, (head_a + L2 - L1) % L2]
                sx2_a += bufv[1, (head_a + L2 - L1) % L2] - bufv[1, head_a % L2]
                bufv[0, head_a % L2] = r_a
                bufv[1, head_a % L2] = x_a
                head_a = (head_a + 1) % L2
                # roll branch B
                sr1_b += bufv[2, (head_b + L2 - 1) % L2] - bufv[2, (head_b + L2 - L1) % L2]
                sr2_b += bufv[2, (head_b + L2 - L1) % L2] - bufv[2, head_b % L2]
                sx1_b += bufv[3, (head_b + L2 - 1) % L2] - bufv[3, (head_b + L2 - L1) % L2]
                sx2_b += bufv[3, (head_b + L2 - L1) % L2] - bufv[3, head_b % L2]
                bufv[2, head_b % L2] = r_b
                bufv[3, head_b % L2] = x_b
                head_b = (head_b + 1) % L2
                csum += r_a - r_b
                ov[si, h] = csum
    return out
