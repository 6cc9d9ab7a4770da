"""Vectorized numpy kernels. Reference path when numba is disabled."""
import math

import numpy as np

_INV_LN2 = 1.0 / math.log(2.0)


def _dist2(px, py, x, d2):
    dx = px - x
    return dx * dx + py * py + d2


def outage_count(px, py, x, d2, snr_scale, gamma_th):
    gamma = snr_scale / _dist2(px, py, x, d2)
    return int(np.count_nonzero(gamma < gamma_th))


def secrecy_stats(px, py, x, d2, snr_scale, gamma_eve, r_sec):
    r_user = np.log1p(snr_scale / _dist2(px, py, x, d2)) * _INV_LN2
    gap = r_user - math.log1p(gamma_eve) * _INV_LN2
    rs = np.maximum(gap, 0.0)
    n = px.shape[0]
    return (float(gap.mean()), float(rs.mean()),
            np.count_nonzero(rs < r_sec) / n, float(r_user.mean()))


def rates(px, py, x, d2, snr_scale):
    return np.log1p(snr_scale / _dist2(px, py, x, d2)) * _INV_LN2


def kth_largest_dist2(px, py, x, d2, m):
    dist2 = _dist2(px, py, x, d2)
    n = dist2.shape[0]
    value = np.partition(dist2, n - m)[n - m]
    idx = int(np.flatnonzero(dist2 == value)[0])
    return float(value), idx


def secrecy_value_grad(px, py, ex, ey, x, d2, k0, power):
    dxe = ex - x
    de = dxe * dxe + ey * ey + d2
    ge = power * k0 / de
    dx = px - x
    dj = dx * dx + py * py + d2
    g = power * k0 / dj
    h = np.log1p(g).mean() - math.log1p(ge)
    h_p = ((k0 / dj) / (1.0 + g)).mean() - (k0 / de) / (1.0 + ge)
    h_x = ((g / (1.0 + g)) * 2.0 * dx / dj).mean() - (ge / (1.0 + ge)) * 2.0 * dxe / de
    return float(h * _INV_LN2), float(h_p * _INV_LN2), float(h_x * _INV_LN2)


def pilot_loss_grad(px, py, ex, ey, x, power, d2, k0, p_max, r_th, r_sec, lam, mu):
    n = px.shape[0]
    dxe = ex - x
    de = dxe * dxe + ey * ey + d2
    ge = power * k0 / de
    r_eve = math.log1p(ge) * _INV_LN2
    dx = px - x
    dj = dx * dx + py * py + d2
    g = power * k0 / dj
    r_user = np.log1p(g) * _INV_LN2
    out_arg = r_th - r_user
    sec_arg = r_sec - (r_user - r_eve)
    out_on = out_arg > 0.0
    sec_on = sec_arg > 0.0
    loss = (np.where(out_on, out_arg, 0.0) + lam * np.where(sec_on, sec_arg, 0.0)).sum()
    coef = -(out_on * 1.0) - lam * sec_on
    coef_eve = lam * np.count_nonzero(sec_on)
    g_x = (coef * _INV_LN2 * (g / (1.0 + g)) * 2.0 * dx / dj).sum()
    g_p = (coef * _INV_LN2 * (k0 / dj) / (1.0 + g)).sum()
    g_x += coef_eve * _INV_LN2 * (ge / (1.0 + ge)) * 2.0 * dxe / de
    g_p += coef_eve * _INV_LN2 * (k0 / de) / (1.0 + ge)
    return (float(loss / n + mu * power / p_max), float(g_x / n),
            float(g_p / n + mu / p_max))


def _logistic(a):
    if a >= 0.0:
        return 1.0 / (1.0 + math.exp(-a))
    e = math.exp(a)
    return e / (1.0 + e)


def _layers(theta, sizes):
    p = 0
    for nin, nout in zip(sizes[:-1], sizes[1:]):
        nin, nout = int(nin), int(nout)
        w = theta[p:p + nout * nin].reshape(nout, nin)
        b = theta[p + nout * nin:p + nout * nin + nout]
        yield p, w, b
        p += nout * nin + nout


def policy_forward(theta, sizes, feat):
    h = np.asarray(feat, dtype=np.float64)
    layers = list(_layers(theta, sizes))
    for k, (_, w, b) in enumerate(layers):
        h = w @ h + b
        if k < len(layers) - 1:
            h = np.tanh(h)
    return h


def policy_loss_grad(theta, sizes, feat, px, py, ex, ey, length, d2, k0,
                     p_max, r_th, r_sec, lam, mu):
    layers = list(_layers(theta, sizes))
    acts = [np.asarray(feat, dtype=np.float64)]
    for k, (_, w, b) in enumerate(layers):
        z = w @ acts[-1] + b
        acts.append(np.tanh(z) if k < len(layers) - 1 else z)
    a = acts[-1]
    s1 = _logistic(a[0])
    s2 = _logistic(a[1])
    loss, g_x, g_p = pilot_loss_grad(px, py, ex, ey, length * s1, p_max * s2, d2, k0,
                                     p_max, r_th, r_sec, lam, mu)
    grad = np.empty_like(theta)
    delta = np.array([g_x * length * s1 * (1.0 - s1), g_p * p_max * s2 * (1.0 - s2)])
    for k in range(len(layers) - 1, -1, -1):
        p, w, _ = layers[k]
        nout, nin = w.shape
        grad[p:p + nout * nin] = np.outer(delta, acts[k]).ravel()
        grad[p + nout * nin:p + nout * nin + nout] = delta
        if k > 0:
            delta = (w.T @ delta) * (1.0 - acts[k] ** 2)
    return loss, grad
