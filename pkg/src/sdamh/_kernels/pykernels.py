"""Pure-Python kernels: reference twin of the compiled extension.

Every function here mirrors the Cython implementation operation by
operation (same accumulation order, no FMA), so a fixed seed produces the
same trajectories on either backend. The sequential loops run on Python
floats; the likelihood objective used inside optimizers has a vectorized
fast path.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.signal import lfilter

LOG2PI = math.log(2.0 * math.pi)


def _logistic_pair(z: float) -> tuple[float, float]:
    """(pi, 1-pi) for pi = Logit^-1(z), both computed without cancellation."""
    if z >= 0.0:
        e = math.exp(-z)
        den = 1.0 + e
        return 1.0 / den, e / den
    e = math.exp(z)
    den = 1.0 + e
    return e / den, 1.0 / den


def _seed_sums(vals, lo: int, hi: int) -> float:
    """Sequential sum of vals[lo:hi]; seeding must match the rolling updates."""
    s = 0.0
    for j in range(lo, hi):
        s += vals[j]
    return s


def filter_path(g: np.ndarray, omega: float, beta: float, alpha: float,
                b0_init: float) -> np.ndarray:
    """Path of the impact recursion b_{i+1} = omega + beta*b_i + alpha*s_i.

    ``g`` holds x_t*(r_t - state_t); the scaled score is s_i = g_i - b_i, so
    the recursion is linear with constant coefficient (beta - alpha). Used by
    the vectorized likelihood; the sequential filter keeps its own loop.
    """
    n = len(g)
    if n == 0:
        return np.empty(0)
    c = beta - alpha
    path = np.empty(n)
    path[0] = b0_init
    if n > 1:
        v = omega + alpha * np.asarray(g[: n - 1], dtype=float)
        path[1:], _ = lfilter([1.0], [1.0, -c], v, zi=[c * b0_init])
    return path


def loglik_fast(r_eff, x_eff, design, cr, cx, sigma2, omega, beta, alpha,
                b0_init, pi_clip):
    """Total log-likelihood over the effective sample (vectorized).

    Returns (total, n_clamped, first_bad) where first_bad is the 0-based
    effective index of the first clamped trade-sign probability (-1 if none).
    """
    state = design @ cr
    g = x_eff * (r_eff - state)
    path = filter_path(g, omega, beta, alpha, b0_init)
    s = g - path
    gauss = -0.5 * (LOG2PI + math.log(sigma2)) - (s * s) / (2.0 * sigma2)

    z = design @ cx
    az = np.abs(z)
    e = np.exp(-az)
    den = 1.0 + e
    p_big = 1.0 / den
    p_small = e / den
    pi = np.where(z >= 0.0, p_big, p_small)
    om_pi = np.where(z >= 0.0, p_small, p_big)
    p_obs = np.where(x_eff > 0.0, pi, om_pi)
    bad = p_obs < pi_clip
    n_clamped = int(np.count_nonzero(bad))
    first_bad = int(np.argmax(bad)) if n_clamped else -1
    bern = np.log(np.maximum(p_obs, pi_clip))
    return float(np.sum(gauss) + np.sum(bern)), n_clamped, first_bad


def filter_detail(r, x, L1, L2, cr, cx, sigma2, omega, beta, alpha, b0_init,
                  pi_clip):
    """Sequential filter pass over one series with rolling lag aggregates.

    Returns (total, per_obs, b0_path, scores, n_clamped, first_bad). The
    online filter reproduces this loop step by step, so the arithmetic here
    is the canonical one.
    """
    T = len(r)
    n = T - L2
    rl = np.asarray(r, dtype=float).tolist()
    xl = np.asarray(x, dtype=float).tolist()
    per_obs = np.empty(n)
    b0_path = np.empty(n)
    scores = np.empty(n)
    n1 = float(L1 - 1)
    n2 = float(L2 - L1)
    sr1 = _seed_sums(rl, L2 - L1, L2 - 1)
    sr2 = _seed_sums(rl, 0, L2 - L1)
    sx1 = _seed_sums(xl, L2 - L1, L2 - 1)
    sx2 = _seed_sums(xl, 0, L2 - L1)
    c0, c1, c2, c3, c4, c5, c6 = [float(v) for v in cr]
    d0, d1, d2, d3, d4, d5, d6 = [float(v) for v in cx]
    gauss_const = -0.5 * (LOG2PI + math.log(sigma2))
    inv2s2 = 1.0 / (2.0 * sigma2)
    b0 = float(b0_init)
    total = 0.0
    n_clamped = 0
    first_bad = -1
    for k in range(L2, T):
        r1 = rl[k - 1]
        x1 = xl[k - 1]
        rl1 = sr1 / n1
        rl2 = sr2 / n2
        xl1 = sx1 / n1
        xl2 = sx2 / n2
        state = c0 + c1 * r1 + c2 * rl1 + c3 * rl2 + c4 * x1 + c5 * xl1 + c6 * xl2
        zt = d0 + d1 * r1 + d2 * rl1 + d3 * rl2 + d4 * x1 + d5 * xl1 + d6 * xl2
        xt = xl[k]
        g = xt * (rl[k] - state)
        s = g - b0
        pi, om_pi = _logistic_pair(zt)
        p_obs = pi if xt > 0.0 else om_pi
        if p_obs < pi_clip:
            n_clamped += 1
            if first_bad < 0:
                first_bad = k - L2
            p_obs = pi_clip
        ll = gauss_const - s * s * inv2s2 + math.log(p_obs)
        i = k - L2
        per_obs[i] = ll
        b0_path[i] = b0
        scores[i] = s
        total += ll
        b0 = omega + beta * b0 + alpha * s
        sr1 += rl[k - 1] - rl[k - L1]
        sr2 += rl[k - L1] - rl[k - L2]
        sx1 += xl[k - 1] - xl[k - L1]
        sx2 += xl[k - L1] - xl[k - L2]
    return total, per_obs, b0_path, scores, n_clamped, first_bad


def simulate_agg(T, L1, L2, cr, cx, sigma, omega, beta, alpha, b0_sched,
                 b0_init, warm_r, warm_x, z, u):
    """Simulate T trades of an aggregated-lag variant.

    ``b0_sched`` is an explicit impact path (scenario) or None for the
    score-driven recursion seeded at ``b0_init``. ``warm_r``/``warm_x`` give
    the L2 pre-sample trades; ``z``/``u`` are the Gaussian and uniform draws.
    Returns (r, x, b0_used).
    """
    full_r = list(np.asarray(warm_r, dtype=float)) + [0.0] * T
    full_x = list(np.asarray(warm_x, dtype=float)) + [0.0] * T
    sched = None if b0_sched is None else np.asarray(b0_sched, dtype=float).tolist()
    zl = np.asarray(z, dtype=float).tolist()
    ul = np.asarray(u, dtype=float).tolist()
    out_r = np.empty(T)
    out_x = np.empty(T)
    out_b0 = np.empty(T)
    n1 = float(L1 - 1)
    n2 = float(L2 - L1)
    sr1 = _seed_sums(full_r, L2 - L1, L2 - 1)
    sr2 = _seed_sums(full_r, 0, L2 - L1)
    sx1 = _seed_sums(full_x, L2 - L1, L2 - 1)
    sx2 = _seed_sums(full_x, 0, L2 - L1)
    c0, c1, c2, c3, c4, c5, c6 = [float(v) for v in cr]
    d0, d1, d2, d3, d4, d5, d6 = [float(v) for v in cx]
    b0_dyn = float(b0_init)
    for i in range(T):
        k = L2 + i
        r1 = full_r[k - 1]
        x1 = full_x[k - 1]
        rl1 = sr1 / n1
        rl2 = sr2 / n2
        xl1 = sx1 / n1
        xl2 = sx2 / n2
        zt = d0 + d1 * r1 + d2 * rl1 + d3 * rl2 + d4 * x1 + d5 * xl1 + d6 * xl2
        pi, _ = _logistic_pair(zt)
        xt = 1.0 if ul[i] < pi else -1.0
        state = c0 + c1 * r1 + c2 * rl1 + c3 * rl2 + c4 * x1 + c5 * xl1 + c6 * xl2
        b0t = sched[i] if sched is not None else b0_dyn
        mu1 = state + b0t * xt
        rt = mu1 + sigma * zl[i]
        if sched is None:
            b0_dyn = omega + beta * b0t + alpha * (xt * (rt - mu1))
        out_r[i] = rt
        out_x[i] = xt
        out_b0[i] = b0t
        sr1 += full_r[k - 1] - full_r[k - L1]
        sr2 += full_r[k - L1] - full_r[k - L2]
        sx1 += full_x[k - 1] - full_x[k - L1]
        sx2 += full_x[k - L1] - full_x[k - L2]
        full_r[k] = rt
        full_x[k] = xt
    return out_r, out_x, out_b0


def simulate_raw(T, p, cr, cx, sigma, b0, warm_r, warm_x, z, u):
    """Simulate T trades of the raw-lag modified model (logistic trade eq).

    cr = [mu1, a_1..a_p, b_1..b_p] (b0 separate), cx = [mu2, c_1..c_p, d_1..d_p].
    """
    W = len(warm_r)
    full_r = list(np.asarray(warm_r, dtype=float)) + [0.0] * T
    full_x = list(np.asarray(warm_x, dtype=float)) + [0.0] * T
    zl = np.asarray(z, dtype=float).tolist()
    ul = np.asarray(u, dtype=float).tolist()
    crl = [float(v) for v in cr]
    cxl = [float(v) for v in cx]
    out_r = np.empty(T)
    out_x = np.empty(T)
    for i in range(T):
        k = W + i
        zt = cxl[0]
        for j in range(1, p + 1):
            zt += cxl[j] * full_r[k - j]
        for j in range(1, p + 1):
            zt += cxl[p + j] * full_x[k - j]
        pi, _ = _logistic_pair(zt)
        xt = 1.0 if ul[i] < pi else -1.0
        state = crl[0]
        for j in range(1, p + 1):
            state += crl[j] * full_r[k - j]
        for j in range(1, p + 1):
            state += crl[p + j] * full_x[k - j]
        rt = state + b0 * xt + sigma * zl[i]
        out_r[i] = rt
        out_x[i] = xt
        full_r[k] = rt
        full_x[k] = xt
    return out_r, out_x


class _Ring:
    """Fixed-length history ring with rolling lag-window sums."""

    __slots__ = ("buf_r", "buf_x", "head", "L1", "L2", "sr1", "sr2", "sx1", "sx2")

    def __init__(self, hist_r, hist_x, L1, L2):
        self.buf_r = list(hist_r)
        self.buf_x = list(hist_x)
        self.head = 0  # index of the oldest entry (lag L2)
        self.L1 = L1
        self.L2 = L2
        # lag i lives at (head - i) mod L2; lags 2..L1 feed the short window
        self.sr1 = _seed_sums(self.buf_r, L2 - L1, L2 - 1)
        self.sr2 = _seed_sums(self.buf_r, 0, L2 - L1)
        self.sx1 = _seed_sums(self.buf_x, L2 - L1, L2 - 1)
        self.sx2 = _seed_sums(self.buf_x, 0, L2 - L1)

    def lags(self):
        L1, L2 = self.L1, self.L2
        h = self.head
        r1 = self.buf_r[(h + L2 - 1) % L2]
        x1 = self.buf_x[(h + L2 - 1) % L2]
        return (r1, self.sr1 / (L1 - 1.0), self.sr2 / (L2 - L1 * 1.0),
                x1, self.sx1 / (L1 - 1.0), self.sx2 / (L2 - L1 * 1.0))

    def push(self, r_new, x_new):
        L1, L2 = self.L1, self.L2
        h = self.head
        r_lag1 = self.buf_r[(h + L2 - 1) % L2]
        r_lagL1 = self.buf_r[(h + L2 - L1) % L2]
        r_lagL2 = self.buf_r[h]
        x_lag1 = self.buf_x[(h + L2 - 1) % L2]
        x_lagL1 = self.buf_x[(h + L2 - L1) % L2]
        x_lagL2 = self.buf_x[h]
        self.sr1 += r_lag1 - r_lagL1
        self.sr2 += r_lagL1 - r_lagL2
        self.sx1 += x_lag1 - x_lagL1
        self.sx2 += x_lagL1 - x_lagL2
        self.buf_r[h] = r_new
        self.buf_x[h] = x_new
        self.head = (h + 1) % L2


def cirf_paths(hist_r, hist_x, L1, L2, b0_t, cr, cx, sigma, omega, beta,
               alpha, H, delta_x, z_s, z_u, u_s, u_u, linear_trade,
               trade_sigma, z2_s, z2_u):
    """Per-path cumulative impulse responses of a trade-sign shock.

    Two futures per path share the conditioning history: the shocked branch
    forces x_t (logistic variants) or adds ``delta_x`` to the drawn value
    (linear trade equation); the other draws x_t. The caller controls common
    random numbers by passing the same arrays for both branches, and
    antithetic pairing by mirroring rows. Returns an (S, H+1) matrix of
    per-path CIRF values, cumulative from horizon 0.
    """
    S = z_s.shape[0]
    out = np.empty((S, H + 1))
    hist_r = np.asarray(hist_r, dtype=float).tolist()
    hist_x = np.asarray(hist_x, dtype=float).tolist()
    c = [float(v) for v in cr]
    d = [float(v) for v in cx]
    zs = np.asarray(z_s, dtype=float)
    zu = np.asarray(z_u, dtype=float)
    us = np.asarray(u_s, dtype=float)
    uu = np.asarray(u_u, dtype=float)
    if linear_trade:
        z2s = np.asarray(z2_s, dtype=float)
        z2u = np.asarray(z2_u, dtype=float)
    for s_i in range(S):
        ring_a = _Ring(hist_r, hist_x, L1, L2)
        ring_b = _Ring(hist_r, hist_x, L1, L2)
        b0_a = float(b0_t)
        b0_b = float(b0_t)
        csum = 0.0
        for h in range(H + 1):
            r1, rl1, rl2, x1, xl1, xl2 = ring_a.lags()
            state_a = c[0] + c[1] * r1 + c[2] * rl1 + c[3] * rl2 + c[4] * x1 + c[5] * xl1 + c[6] * xl2
            zt_a = d[0] + d[1] * r1 + d[2] * rl1 + d[3] * rl2 + d[4] * x1 + d[5] * xl1 + d[6] * xl2
            r1, rl1, rl2, x1, xl1, xl2 = ring_b.lags()
            state_b = c[0] + c[1] * r1 + c[2] * rl1 + c[3] * rl2 + c[4] * x1 + c[5] * xl1 + c[6] * xl2
            zt_b = d[0] + d[1] * r1 + d[2] * rl1 + d[3] * rl2 + d[4] * x1 + d[5] * xl1 + d[6] * xl2
            if linear_trade:
                x_b = zt_b + trade_sigma * z2u[s_i, h]
                x_a = zt_a + trade_sigma * z2s[s_i, h]
                if h == 0:
                    x_a = x_a + delta_x
            else:
                pi_b, _ = _logistic_pair(zt_b)
                x_b = 1.0 if uu[s_i, h] < pi_b else -1.0
                if h == 0:
                    x_a = float(delta_x)
                else:
                    pi_a, _ = _logistic_pair(zt_a)
                    x_a = 1.0 if us[s_i, h] < pi_a else -1.0
            mu1_a = state_a + b0_a * x_a
            mu1_b = state_b + b0_b * x_b
            r_a = mu1_a + sigma * zs[s_i, h]
            r_b = mu1_b + sigma * zu[s_i, h]
            b0_a = omega + beta * b0_a + alpha * (x_a * (r_a - mu1_a))
            b0_b = omega + beta * b0_b + alpha * (x_b * (r_b - mu1_b))
            ring_a.push(r_a, x_a)
            ring_b.push(r_b, x_b)
            csum += r_a - r_b
            out[s_i, h] = csum
    return out
