"""Loop kernels compiled with numba. Same signatures as ``_numpy``."""
import math

import numba as nb
import numpy as np

njit = nb.njit(cache=True, nogil=True, fastmath=False)

_INV_LN2 = 1.0 / math.log(2.0)


@njit
def outage_count(px, py, x, d2, snr_scale, gamma_th):
    count = 0
    for j in range(px.shape[0]):
        dx = px[j] - x
        gamma = snr_scale / (dx * dx + py[j] * py[j] + d2)
        if gamma < gamma_th:
            count += 1
    return count


@njit
def _log_block(acc, block):
    # log of a running product, or nan when it has left the finite range
    if block < 1e300:
        return acc + math.log(block)
    return np.nan


@njit
def secrecy_stats(px, py, x, d2, snr_scale, gamma_eve, r_sec):
    # All sums of logs are taken over blocks of products; thresholds compare
    # SNRs directly: gap > 0 iff g > g_eve, gap < r_sec iff 1+g < (1+g_eve) 2^r_sec.
    n = px.shape[0]
    r_eve = math.log1p(gamma_eve) * _INV_LN2
    sec_lim = (1.0 + gamma_eve) * 2.0**r_sec
    log_all = 0.0
    log_pos = 0.0
    n_pos = 0
    sec_out = 0
    b_all = 1.0
    b_pos = 1.0
    k_all = 0
    k_pos = 0
    for j in range(n):
        dx = px[j] - x
        g = snr_scale / (dx * dx + py[j] * py[j] + d2)
        b_all *= 1.0 + g
        k_all += 1
        if k_all == 16:
            log_all = _log_block(log_all, b_all)
            b_all = 1.0
            k_all = 0
        if g > gamma_eve:
            n_pos += 1
            b_pos *= 1.0 + g
            k_pos += 1
            if k_pos == 16:
                log_pos = _log_block(log_pos, b_pos)
                b_pos = 1.0
                k_pos = 0
            if 1.0 + g < sec_lim:
                sec_out += 1
        elif r_sec > 0.0:
            sec_out += 1
    log_all = _log_block(log_all, b_all)
    log_pos = _log_block(log_pos, b_pos)
    if not (math.isfinite(log_all) and math.isfinite(log_pos)):
        return _secrecy_stats_direct(px, py, x, d2, snr_scale, gamma_eve, r_sec)
    rate_mean = log_all * _INV_LN2 / n
    clipped = (log_pos * _INV_LN2 - n_pos * r_eve) / n
    return rate_mean - r_eve, max(clipped, 0.0), sec_out / n, rate_mean


@njit
def _secrecy_stats_direct(px, py, x, d2, snr_scale, gamma_eve, r_sec):
    n = px.shape[0]
    r_eve = math.log1p(gamma_eve) * _INV_LN2
    signed = 0.0
    clipped = 0.0
    rate_sum = 0.0
    sec_out = 0
    for j in range(n):
        dx = px[j] - x
        r_user = math.log1p(snr_scale / (dx * dx + py[j] * py[j] + d2)) * _INV_LN2
        gap = r_user - r_eve
        signed += gap
        rs = gap if gap > 0.0 else 0.0
        clipped += rs
        rate_sum += r_user
        if rs < r_sec:
            sec_out += 1
    return signed / n, clipped / n, sec_out / n, rate_sum / n


@njit
def rates(px, py, x, d2, snr_scale):
    out = np.empty(px.shape[0])
    for j in range(px.shape[0]):
        dx = px[j] - x
        out[j] = math.log1p(snr_scale / (dx * dx + py[j] * py[j] + d2)) * _INV_LN2
    return out


@njit
def kth_largest_dist2(px, py, x, d2, m):
    n = px.shape[0]
    dist2 = np.empty(n)
    for j in range(n):
        dx = px[j] - x
        dist2[j] = dx * dx + py[j] * py[j] + d2
    value = np.partition(dist2, n - m)[n - m]
    idx = 0
    for j in range(n):
        dx = px[j] - x
        if dx * dx + py[j] * py[j] + d2 == value:
            idx = j
            break
    return value, idx


@njit
def secrecy_value_grad(px, py, ex, ey, x, d2, k0, power):
    n = px.shape[0]
    dxe = ex - x
    de = dxe * dxe + ey * ey + d2
    ge = power * k0 / de
    h = 0.0
    h_p = 0.0
    h_x = 0.0
    # sum of log1p taken as one log per block of products; falls back to
    # elementwise log1p if a block product leaves the finite range
    block = 1.0
    start = 0
    for j in range(n):
        dx = px[j] - x
        dj = dx * dx + py[j] * py[j] + d2
        g = power * k0 / dj
        inv = 1.0 / (1.0 + g)
        h_p += (k0 / dj) * inv
        h_x += g * inv * 2.0 * dx / dj
        block *= 1.0 + g
        if (j - start) == 15 or j == n - 1:
            if block < 1e300:
                h += math.log(block)
            else:
                for i in range(start, j + 1):
                    di = px[i] - x
                    h += math.log1p(power * k0 / (di * di + py[i] * py[i] + d2))
            block = 1.0
            start = j + 1
    h = h / n - math.log1p(ge)
    h_p = h_p / n - (k0 / de) / (1.0 + ge)
    h_x = h_x / n - (ge / (1.0 + ge)) * 2.0 * dxe / de
    return h * _INV_LN2, h_p * _INV_LN2, h_x * _INV_LN2


@njit
def pilot_loss_grad(px, py, ex, ey, x, power, d2, k0, p_max, r_th, r_sec, lam, mu):
    n = px.shape[0]
    dxe = ex - x
    de = dxe * dxe + ey * ey + d2
    ge = power * k0 / de
    r_eve = math.log1p(ge) * _INV_LN2
    dre_dx = _INV_LN2 * (ge / (1.0 + ge)) * 2.0 * dxe / de
    dre_dp = _INV_LN2 * (k0 / de) / (1.0 + ge)
    loss = 0.0
    g_x = 0.0
    g_p = 0.0
    coef_eve = 0.0
    for j in range(n):
        dx = px[j] - x
        dj = dx * dx + py[j] * py[j] + d2
        g = power * k0 / dj
        r_user = math.log1p(g) * _INV_LN2
        coef = 0.0
        out_arg = r_th - r_user
        if out_arg > 0.0:
            loss += out_arg
            coef -= 1.0
        sec_arg = r_sec - (r_user - r_eve)
        if sec_arg > 0.0:
            loss += lam * sec_arg
            coef -= lam
            coef_eve += lam
        if coef != 0.0:
            g_x += coef * _INV_LN2 * (g / (1.0 + g)) * 2.0 * dx / dj
            g_p += coef * _INV_LN2 * (k0 / dj) / (1.0 + g)
    g_x += coef_eve * dre_dx
    g_p += coef_eve * dre_dp
    loss = loss / n + mu * power / p_max
    return loss, g_x / n, g_p / n + mu / p_max


@njit
def _logistic(a):
    if a >= 0.0:
        return 1.0 / (1.0 + math.exp(-a))
    e = math.exp(a)
    return e / (1.0 + e)


@njit
def _forward_acts(theta, sizes, feat, act):
    nl = sizes.shape[0] - 1
    act[: sizes[0]] = feat
    p = 0
    a_in = 0
    for layer in range(nl):
        nin = sizes[layer]
        nout = sizes[layer + 1]
        a_out = a_in + nin
        b0 = p + nout * nin
        for o in range(nout):
            s = theta[b0 + o]
            row = p + o * nin
            for i in range(nin):
                s += theta[row + i] * act[a_in + i]
            act[a_out + o] = math.tanh(s) if layer < nl - 1 else s
        p = b0 + nout
        a_in = a_out


@njit
def policy_forward(theta, sizes, feat):
    total = 0
    for s in sizes:
        total += s
    act = np.empty(total)
    _forward_acts(theta, sizes, feat, act)
    return act[total - sizes[-1]:].copy()


@njit
def policy_loss_grad(theta, sizes, feat, px, py, ex, ey, length, d2, k0,
                     p_max, r_th, r_sec, lam, mu):
    nl = sizes.shape[0] - 1
    total = 0
    for s in sizes:
        total += s
    act = np.empty(total)
    _forward_acts(theta, sizes, feat, act)

    s1 = _logistic(act[total - 2])
    s2 = _logistic(act[total - 1])
    x = length * s1
    power = p_max * s2
    loss, g_x, g_p = pilot_loss_grad(px, py, ex, ey, x, power, d2, k0,
                                     p_max, r_th, r_sec, lam, mu)

    grad = np.zeros(theta.shape[0])
    maxw = 0
    for s in sizes:
        if s > maxw:
            maxw = s
    delta = np.zeros(maxw)
    prev = np.zeros(maxw)
    delta[0] = g_x * length * s1 * (1.0 - s1)
    delta[1] = g_p * p_max * s2 * (1.0 - s2)

    # parameter and activation offsets of the last layer
    p_end = theta.shape[0]
    a_in = total - sizes[-1]
    for layer in range(nl - 1, -1, -1):
        nin = sizes[layer]
        nout = sizes[layer + 1]
        a_in -= nin
        p = p_end - nout * nin - nout
        b0 = p + nout * nin
        for o in range(nout):
            d = delta[o]
            grad[b0 + o] = d
            row = p + o * nin
            for i in range(nin):
                grad[row + i] = d * act[a_in + i]
        if layer > 0:
            for i in range(nin):
                s = 0.0
                for o in range(nout):
                    s += theta[p + o * nin + i] * delta[o]
                h = act[a_in + i]
                prev[i] = s * (1.0 - h * h)
            for i in range(nin):
                delta[i] = prev[i]
        p_end = p
    return loss, grad
