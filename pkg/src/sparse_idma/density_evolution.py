"""Gaussian-approximation density evolution for the joint ensemble.

Tracks per-edge-type mutual information through the protograph LDPC code and
the Poisson-loaded MAC nodes, using the symmetric-Gaussian J function and the
soft-interference-cancellation MMSE function phi.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .txchain import FrameLayout, RepetitionDD, powers_for_ebn0

_LN2 = math.log(2.0)
# order 255 keeps both integrals within ~3e-9 of adaptive quadrature and
# strictly monotone through sigma ~ 14 (beyond which they saturate in floats)
_GH_X, _GH_W = np.polynomial.hermite.hermgauss(255)
_SQRT_PI = math.sqrt(math.pi)

SIGMA_MAX = 60.0
DEFAULT_TARGET_MI = 1.0 - 1e-4


def j_fun(sigma):
    """MI between a consistent Gaussian LLR (std sigma) and its bit.

    High-order Gauss-Hermite quadrature of the defining integral; strictly
    increasing with J(0) = 0.
    """
    sigma = np.asarray(sigma, dtype=np.float64)
    if np.any(sigma < 0):
        raise ValueError("sigma must be non-negative")
    s = sigma[..., None]
    y = 0.5 * s * s + math.sqrt(2.0) * s * _GH_X
    integrand = np.logaddexp(0.0, -y) / _LN2
    out = 1.0 - (integrand @ _GH_W) / _SQRT_PI
    out = np.clip(out, 0.0, 1.0)
    out = np.where(sigma == 0.0, 0.0, out)  # exact endpoint
    return out if out.ndim else float(out)


def _j_derivative(sigma):
    sigma = np.asarray(sigma, dtype=np.float64)
    s = sigma[..., None]
    y = 0.5 * s * s + math.sqrt(2.0) * s * _GH_X
    # d/dsigma of -log2(1+e^-y) integrated: sigmoid(-y)/ln2 * dy/dsigma
    sig = np.where(y >= 0, np.exp(-np.logaddexp(0.0, y)),
                   1.0 - np.exp(-np.logaddexp(0.0, -y)))
    integrand = sig / _LN2 * (s + math.sqrt(2.0) * _GH_X)
    out = (integrand @ _GH_W) / _SQRT_PI
    return out if out.ndim else float(out)


_J_GRID_SIGMA = np.linspace(0.0, SIGMA_MAX, 24001)
_J_GRID_VALUE = j_fun(_J_GRID_SIGMA)
J_MAX = float(_J_GRID_VALUE[-1])


def j_inv(I):
    """Inverse of j_fun: interpolated initial guess plus Newton refinement."""
    I_arr = np.asarray(I, dtype=np.float64)
    if np.any(I_arr < 0) or np.any(I_arr > 1.0):
        raise ValueError("I must lie in [0, 1]")
    I_c = np.minimum(I_arr, min(J_MAX, 1.0 - 1e-12))
    sigma = np.interp(I_c, _J_GRID_VALUE, _J_GRID_SIGMA)
    for _ in range(3):
        f = j_fun(sigma) - I_c
        df = _j_derivative(sigma)
        step = np.where(df > 1e-300, f / np.maximum(df, 1e-300), 0.0)
        sigma = np.clip(sigma - step, 0.0, SIGMA_MAX)
    return sigma if sigma.ndim else float(sigma)


def phi_fun(sigma):
    """Residual MMSE of a +-1 symbol after soft interference cancellation.

    phi(0) = 1; strictly decreasing to 0 as the prior LLR sharpens.
    """
    sigma = np.asarray(sigma, dtype=np.float64)
    if np.any(sigma < 0):
        raise ValueError("sigma must be non-negative")
    s = sigma[..., None]
    integrand = np.tanh(0.25 * s * s - 0.5 * math.sqrt(2.0) * s * _GH_X)
    out = 1.0 - (integrand @ _GH_W) / _SQRT_PI
    out = np.clip(out, 0.0, 1.0)
    out = np.where(sigma == 0.0, 1.0, out)  # exact endpoint
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class MacDegreeProfile:
    """Node- and edge-perspective MAC degree probabilities and mean load."""

    G: np.ndarray  # G[0..dmax], node perspective (includes degree 0)
    gamma: np.ndarray  # gamma[1..dmax] stored at index k-1, edge perspective
    mu: float

    @property
    def dmax(self):
        return len(self.G) - 1

    @staticmethod
    def single_user():
        """Degenerate profile: every occupied channel use has one user."""
        return MacDegreeProfile(G=np.array([0.0, 1.0]),
                                gamma=np.array([1.0]), mu=1.0)


def mac_degree_profile(K_users, N, dd: RepetitionDD, N_c,
                       k_inclusive=True, tail=1e-12) -> MacDegreeProfile:
    """Poisson MAC-node degree profile of the sparse superposition.

    Mean load mu = K_users * N * E[l] / N_c (with `k_inclusive=False` the
    user count is dropped from the mean, the literal per-user occupancy
    fraction).  The Poisson mass is truncated where the tail drops below
    `tail` and renormalized; gamma is the edge-perspective shift.
    """
    if min(K_users, N, N_c) <= 0:
        raise ValueError("arguments must be positive")
    mu = N * dd.mean() / N_c
    if k_inclusive:
        mu *= K_users
    if mu <= 0:
        raise ValueError("mean MAC load must be positive")
    dmax = 1
    # find truncation point where the remaining tail is below `tail`
    from scipy.stats import poisson

    dmax = int(poisson.isf(tail, mu)) + 1
    k = np.arange(dmax + 1)
    G = poisson.pmf(k, mu)
    G = G / G.sum()
    edge_mass = k * G
    gamma = edge_mass[1:] / edge_mass.sum()
    return MacDegreeProfile(G=G, gamma=gamma, mu=float(mu))


@dataclass
class DeResult:
    converged: bool
    iterations: int
    I_app: np.ndarray  # (num_var_protos, len(l_values))
    l_values: tuple
    trajectory: np.ndarray | None = None


def de_evolve(proto, dd: RepetitionDD, profile: MacDegreeProfile,
              amp_per_l, interference_msq_amp, noise_var=1.0,
              max_iters=500, target=DEFAULT_TARGET_MI, stall_tol=1e-9,
              track_trajectory=False) -> DeResult:
    """Run the joint density-evolution recursion to (non-)convergence.

    amp_per_l: per-symbol amplitude for each repetition class l with nu_l > 0.
    interference_msq_amp: mean-square amplitude of an interfering symbol
    (edge-perspective over repetition classes).

    Per iteration, in order: MAC-to-variable MI from the degree profile with
    (k-1)-fold soft-cancelled interference; variable-to-check per edge type
    (with the l-fold MAC term); check-to-variable; variable-to-MAC (with the
    (l-1)-fold MAC term); averaging over variable nodes and over nu; the APP
    MI used for the convergence decision.
    """
    base = proto.base_matrix
    nc, nv = base.shape
    edges = proto.edge_list  # (check, var, parallel)
    nE = len(edges)
    e_chk = np.array([e[0] for e in edges])
    e_var = np.array([e[1] for e in edges])
    l_values = tuple(l for l in range(1, dd.L + 1) if dd.nu[l - 1] > 0)
    nu_w = np.array([dd.nu[l - 1] for l in l_values])
    amps = np.array([amp_per_l[l] for l in l_values])
    nL = len(l_values)
    gamma = profile.gamma
    k_arr = np.arange(1, len(gamma) + 1)

    I_c2v = np.zeros((nE, nL))
    I_v2mac_avg = 0.0
    I_app = np.zeros((nv, nL))
    traj = [] if track_trajectory else None

    var_masks = [e_var == v for v in range(nv)]
    chk_masks = [e_chk == c for c in range(nc)]

    converged = False
    prev_min_app = -1.0
    it = 0
    for it in range(1, max_iters + 1):
        # MAC -> variable, per repetition class
        phi = phi_fun(j_inv(min(I_v2mac_avg, J_MAX)))
        var_int = (k_arr - 1) * phi * interference_msq_amp
        sigma_ch = 2.0 * amps[None, :] / np.sqrt(noise_var + var_int[:, None])
        I_mac2v = gamma @ np.clip(j_fun(sigma_ch), 0.0, J_MAX)  # (nL,)
        mac_var = j_inv(np.minimum(I_mac2v, J_MAX)) ** 2  # LLR variance per l

        # variable -> check per edge type
        s2_c2v = j_inv(np.minimum(I_c2v, J_MAX)) ** 2  # (nE, nL)
        I_v2c = np.zeros((nE, nL))
        for v in range(nv):
            mask = var_masks[v]
            tot = s2_c2v[mask].sum(axis=0)
            ex = tot[None, :] - s2_c2v[mask]
            lv = np.array(l_values, dtype=float)
            I_v2c[mask] = j_fun(np.sqrt(ex + lv[None, :] * mac_var[None, :]))

        # check -> variable per edge type
        s2_rev = j_inv(np.minimum(1.0 - I_v2c, J_MAX)) ** 2
        I_c2v_new = np.zeros((nE, nL))
        for c in range(nc):
            mask = chk_masks[c]
            tot = s2_rev[mask].sum(axis=0)
            ex = tot[None, :] - s2_rev[mask]
            I_c2v_new[mask] = 1.0 - j_fun(np.sqrt(ex))
        I_c2v = np.clip(I_c2v_new, 0.0, J_MAX)

        # variable -> MAC per variable node, then the nu-weighted average
        s2_c2v = j_inv(np.minimum(I_c2v, J_MAX)) ** 2
        I_v2mac_v = np.zeros((nv, nL))
        for v in range(nv):
            mask = var_masks[v]
            tot = s2_c2v[mask].sum(axis=0)
            lm1 = np.array(l_values, dtype=float) - 1.0
            I_v2mac_v[v] = j_fun(np.sqrt(lm1 * mac_var + tot))
            I_app[v] = j_fun(np.sqrt(tot + j_inv(
                np.minimum(I_v2mac_v[v], J_MAX)) ** 2))
        I_v2mac_per_l = I_v2mac_v.mean(axis=0)
        I_v2mac_avg = float(nu_w @ I_v2mac_per_l)

        min_app = float(I_app.min())
        if track_trajectory:
            traj.append(min_app)
        if min_app >= target:
            converged = True
            break
        if min_app - prev_min_app < stall_tol and it > 5:
            break
        prev_min_app = min_app

    return DeResult(converged=converged, iterations=it, I_app=I_app.copy(),
                    l_values=l_values,
                    trajectory=np.array(traj) if track_trajectory else None)


def system_amplitudes(layout: FrameLayout, dd: RepetitionDD, N, ebn0_target_db,
                      split_ratio=1.0):
    """Per-class symbol amplitudes and interferer mean-square amplitude.

    The Eb/N0 budget is split between preamble and coding powers at the given
    per-use ratio P1:P2; density evolution sees the coding segment only, with
    the preamble energy charged against the budget.
    """
    P1, P2 = powers_for_ebn0(layout, ebn0_target_db, split_ratio)
    amp_per_l = {l: math.sqrt(layout.N_c * P2 / (N * l))
                 for l in range(1, dd.L + 1)}
    msq = layout.N_c * P2 / (N * dd.mean())
    return amp_per_l, msq


def de_threshold(proto, dd: RepetitionDD, layout: FrameLayout, N, K_a,
                 split_ratio=1.0, resolution_db=0.05, lo_db=-10.0,
                 hi_db=20.0, max_iters=500, target=DEFAULT_TARGET_MI,
                 k_inclusive=True) -> float:
    """Minimum Eb/N0 (dB) at which the joint DE recursion converges.

    Bisection to `resolution_db`; returns +inf when even the upper bracket
    fails to converge.
    """
    profile = mac_degree_profile(K_a, N, dd, layout.N_c,
                                 k_inclusive=k_inclusive)

    def converges(ebn0_db):
        amp_per_l, msq = system_amplitudes(layout, dd, N, ebn0_db, split_ratio)
        res = de_evolve(proto, dd, profile, amp_per_l, msq,
                        max_iters=max_iters, target=target)
        return res.converged

    if not converges(hi_db):
        return math.inf
    if converges(lo_db):
        return lo_db
    lo, hi = lo_db, hi_db
    while hi - lo > resolution_db:
        mid = 0.5 * (lo + hi)
        if converges(mid):
            hi = mid
        else:
            lo = mid
    return hi


def single_user_threshold(proto, resolution_db=0.05, lo_db=-5.0, hi_db=15.0,
                          max_iters=2000, target=DEFAULT_TARGET_MI) -> float:
    """Standalone single-user BPSK/AWGN threshold of a protograph (Eb/N0 dB).

    Degenerate ensemble: nu = x, gamma_1 = 1 (no interference); the recursion
    reduces to standard protograph density evolution.
    """
    dd = RepetitionDD.regular(1)
    profile = MacDegreeProfile.single_user()
    rate = proto.design_rate

    def converges(ebn0_db):
        a = math.sqrt(2.0 * rate * 10.0 ** (ebn0_db / 10.0))
        res = de_evolve(proto, dd, profile, {1: a}, a * a,
                        max_iters=max_iters, target=target)
        return res.converged

    if not converges(hi_db):
        return math.inf
    if converges(lo_db):
        return lo_db
    lo, hi = lo_db, hi_db
    while hi - lo > resolution_db:
        mid = 0.5 * (lo + hi)
        if converges(mid):
            hi = mid
        else:
            lo = mid
    return hi


def threshold_report_row(proto, dd, K_a, rate, threshold_db, iterations):
    """CSV row (proto hash, nu, K_a, rate, threshold dB, iterations)."""
    nu_str = ";".join(f"{x:.6g}" for x in dd.nu)
    return [proto.content_hash()[:16], nu_str, K_a, rate,
            "inf" if math.isinf(threshold_db) else f"{threshold_db:.3f}",
            iterations]
