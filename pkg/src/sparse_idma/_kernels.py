"""Numba kernels for the joint belief-propagation decoder.

All kernels operate on flat CSR-style arrays so a whole decoding iteration
runs without Python overhead.  LLR sign convention: positive <=> bit 0 <=>
symbol +amplitude.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def _sigmoid(x):
    if x >= 0.0:
        return 1.0 / (1.0 + np.exp(-x))
    e = np.exp(x)
    return e / (1.0 + e)


@njit(cache=True)
def _clip(x, c):
    if x > c:
        return c
    if x < -c:
        return -c
    return x


@njit(cache=True)
def mac_update_real(node_ptr, node_edges, me_amp, m_v2mac, y_c, noise_var,
                    clip, dp_max_degree, m_mac2v):
    """Extrinsic MAC-node messages on a real channel.

    Degree-1 nodes emit the plain Gaussian LLR.  Nodes whose incident
    amplitudes are all equal (and degree <= dp_max_degree) use the exact
    lattice convolution; mixed-amplitude or very high-degree nodes fall back
    to Gaussian soft interference cancellation.
    """
    n_nodes = node_ptr.shape[0] - 1
    max_d = 0
    for j in range(n_nodes):
        d = node_ptr[j + 1] - node_ptr[j]
        if d > max_d:
            max_d = d
    pref = np.empty((max_d + 1, max_d + 1))
    suff = np.empty((max_d + 1, max_d + 1))
    q = np.empty(max_d + 1)
    logw = np.empty(max_d + 1)

    inv_nv = 1.0 / noise_var
    for j in range(n_nodes):
        lo = node_ptr[j]
        d = node_ptr[j + 1] - lo
        if d == 0:
            continue
        y = y_c[j]
        if d == 1:
            e = node_edges[lo]
            m_mac2v[e] = _clip(2.0 * me_amp[e] * y * inv_nv, clip)
            continue
        a0 = me_amp[node_edges[lo]]
        equal = True
        for i in range(1, d):
            if abs(me_amp[node_edges[lo + i]] - a0) > 1e-12 * (1.0 + abs(a0)):
                equal = False
                break
        if equal and d <= dp_max_degree:
            # exact marginalization over the lattice of interferer sums
            pref[0, 0] = 1.0
            for i in range(d):
                p = _sigmoid(m_v2mac[node_edges[lo + i]])
                pref[i + 1, 0] = pref[i, 0] * (1.0 - p)
                for t in range(1, i + 1):
                    pref[i + 1, t] = pref[i, t] * (1.0 - p) + pref[i, t - 1] * p
                pref[i + 1, i + 1] = pref[i, i] * p
            suff[d, 0] = 1.0
            for i in range(d - 1, -1, -1):
                p = _sigmoid(m_v2mac[node_edges[lo + i]])
                m = d - 1 - i  # symbols already folded into suff[i+1]
                suff[i, 0] = suff[i + 1, 0] * (1.0 - p)
                for t in range(1, m + 1):
                    suff[i, t] = suff[i + 1, t] * (1.0 - p) + suff[i + 1, t - 1] * p
                suff[i, m + 1] = suff[i + 1, m] * p
            for i in range(d):
                # pmf over number of +1 symbols among the other d-1 users
                for t in range(d):
                    q[t] = 0.0
                for s in range(i + 1):
                    ps = pref[i, s]
                    if ps == 0.0:
                        continue
                    for t in range(d - 1 - i + 1):
                        q[s + t] += ps * suff[i + 1, t]
                # log-domain mixture for x_i = +a and -a
                num = -np.inf
                den = -np.inf
                for t in range(d):
                    if q[t] <= 0.0:
                        continue
                    s_int = a0 * (2.0 * t - (d - 1))
                    lq = np.log(q[t])
                    rp = y - s_int - a0
                    rm = y - s_int + a0
                    lp = lq - 0.5 * rp * rp * inv_nv
                    lm = lq - 0.5 * rm * rm * inv_nv
                    if lp > num:
                        num = lp + np.log1p(np.exp(num - lp))
                    else:
                        num = num + np.log1p(np.exp(lp - num))
                    if lm > den:
                        den = lm + np.log1p(np.exp(den - lm))
                    else:
                        den = den + np.log1p(np.exp(lm - den))
                m_mac2v[node_edges[lo + i]] = _clip(num - den, clip)
        else:
            # Gaussian soft interference cancellation
            sum_mean = 0.0
            sum_var = 0.0
            for i in range(d):
                e = node_edges[lo + i]
                a = me_amp[e]
                t = np.tanh(0.5 * m_v2mac[e])
                logw[i] = t  # reuse scratch to stash tanh values
                sum_mean += t * a
                sum_var += a * a * (1.0 - t * t)
            for i in range(d):
                e = node_edges[lo + i]
                a = me_amp[e]
                t = logw[i]
                mean_o = sum_mean - t * a
                var_o = sum_var - a * a * (1.0 - t * t)
                m_mac2v[e] = _clip(
                    2.0 * a * (y - mean_o) / (noise_var + var_o), clip
                )


@njit(cache=True)
def mac_update_complex(node_ptr, node_edges, me_mu, m_v2mac, y_c, noise_var,
                       clip, m_mac2v):
    """Gaussian soft-interference-cancellation MAC update, complex channel."""
    n_nodes = node_ptr.shape[0] - 1
    max_d = 0
    for j in range(n_nodes):
        d = node_ptr[j + 1] - node_ptr[j]
        if d > max_d:
            max_d = d
    tanhs = np.empty(max_d)
    for j in range(n_nodes):
        lo = node_ptr[j]
        d = node_ptr[j + 1] - lo
        if d == 0:
            continue
        y = y_c[j]
        sum_mean = 0.0 + 0.0j
        sum_var = 0.0
        for i in range(d):
            e = node_edges[lo + i]
            mu = me_mu[e]
            t = np.tanh(0.5 * m_v2mac[e])
            tanhs[i] = t
            sum_mean += t * mu
            sum_var += (mu.real * mu.real + mu.imag * mu.imag) * (1.0 - t * t)
        for i in range(d):
            e = node_edges[lo + i]
            mu = me_mu[e]
            t = tanhs[i]
            mean_o = sum_mean - t * mu
            var_o = sum_var - (mu.real * mu.real + mu.imag * mu.imag) * (1.0 - t * t)
            resid = y - mean_o
            num = mu.real * resid.real + mu.imag * resid.imag
            m_mac2v[e] = _clip(4.0 * num / (noise_var + var_o), clip)


@njit(cache=True)
def var_update(active, var_ptr, var_edges, vp_ptr, vp_edges, m_c2v, m_mac2v,
               clip, extrinsic, m_v2c, m_v2mac, app):
    """Variable-node update for all active branches.

    Messages to checks exclude the target check edge; messages to MAC edges
    exclude the target MAC edge when `extrinsic` is set.
    """
    K_b = active.shape[0]
    N = var_ptr.shape[0] - 1
    for k in range(K_b):
        if not active[k]:
            continue
        base = k * N
        for p in range(N):
            sum_mac = 0.0
            for fi in range(vp_ptr[base + p], vp_ptr[base + p + 1]):
                sum_mac += m_mac2v[vp_edges[fi]]
            sum_chk = 0.0
            for ei in range(var_ptr[p], var_ptr[p + 1]):
                sum_chk += m_c2v[k, var_edges[ei]]
            app[k, p] = sum_mac + sum_chk
            for ei in range(var_ptr[p], var_ptr[p + 1]):
                e = var_edges[ei]
                m_v2c[k, e] = _clip(sum_mac + sum_chk - m_c2v[k, e], clip)
            for fi in range(vp_ptr[base + p], vp_ptr[base + p + 1]):
                f = vp_edges[fi]
                if extrinsic:
                    m_v2mac[f] = _clip(sum_chk + sum_mac - m_mac2v[f], clip)
                else:
                    m_v2mac[f] = _clip(sum_chk + sum_mac, clip)


@njit(cache=True)
def check_update(active, check_ptr, check_edges, m_v2c, clip, m_c2v):
    """Standard tanh-product check update with leave-one-out products."""
    K_b = active.shape[0]
    n_checks = check_ptr.shape[0] - 1
    max_dc = 0
    for c in range(n_checks):
        dc = check_ptr[c + 1] - check_ptr[c]
        if dc > max_dc:
            max_dc = dc
    t = np.empty(max_dc)
    pref = np.empty(max_dc + 1)
    suff = np.empty(max_dc + 1)
    lim = 1.0 - 1e-15
    for k in range(K_b):
        if not active[k]:
            continue
        for c in range(n_checks):
            lo = check_ptr[c]
            dc = check_ptr[c + 1] - lo
            for i in range(dc):
                t[i] = np.tanh(0.5 * m_v2c[k, check_edges[lo + i]])
            pref[0] = 1.0
            for i in range(dc):
                pref[i + 1] = pref[i] * t[i]
            suff[dc] = 1.0
            for i in range(dc - 1, -1, -1):
                suff[i] = suff[i + 1] * t[i]
            for i in range(dc):
                prod = pref[i] * suff[i + 1]
                if prod > lim:
                    prod = lim
                elif prod < -lim:
                    prod = -lim
                m_c2v[k, check_edges[lo + i]] = _clip(
                    2.0 * np.arctanh(prod), clip
                )


@njit(cache=True)
def parity_and_freeze(active, check_ptr, check_vars, vp_ptr, vp_edges, app,
                      clip, iteration, bits, parity_ok, iters_used, m_v2mac):
    """Hard-decide active branches; freeze those whose syndrome vanishes.

    Frozen branches keep participating through MAC edges pinned at +/-clip.
    Returns the number of branches frozen during this call.
    """
    K_b = active.shape[0]
    N = app.shape[1]
    n_checks = check_ptr.shape[0] - 1
    n_frozen = 0
    for k in range(K_b):
        if not active[k]:
            continue
        for p in range(N):
            bits[k, p] = 1 if app[k, p] < 0.0 else 0
        ok = True
        for c in range(n_checks):
            s = 0
            for i in range(check_ptr[c], check_ptr[c + 1]):
                s ^= bits[k, check_vars[i]]
            if s != 0:
                ok = False
                break
        if ok:
            active[k] = False
            parity_ok[k] = True
            iters_used[k] = iteration
            base = k * N
            for p in range(N):
                pin = clip if app[k, p] >= 0.0 else -clip
                for fi in range(vp_ptr[base + p], vp_ptr[base + p + 1]):
                    m_v2mac[vp_edges[fi]] = pin
            n_frozen += 1
    return n_frozen
