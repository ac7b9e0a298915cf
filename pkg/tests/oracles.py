"""Independent oracles used by the test suite.

Each oracle is written directly from the defining mathematics, without
reference to the library implementation, so agreement is evidence of
correctness rather than self-consistency.
"""

import math

import numpy as np
from scipy.integrate import quad


# ---------------------------------------------------------------------------
# graph girth (BFS shortest cycle through each edge)
# ---------------------------------------------------------------------------

def lifted_girth(H):
    """Shortest cycle length of the bipartite Tanner graph of H.

    For each edge (c, v) we remove it, BFS from v to c in the remaining
    graph; the shortest such path + 1 edge closes the shortest cycle through
    that edge.  Returns inf for a forest.
    """
    H = np.asarray(H.todense()) if hasattr(H, "todense") else np.asarray(H)
    n_checks, n_vars = H.shape
    var_adj = [list(np.flatnonzero(H[:, v])) for v in range(n_vars)]
    chk_adj = [list(np.flatnonzero(H[c, :])) for c in range(n_checks)]
    best = math.inf
    for c in range(n_checks):
        for v in chk_adj[c]:
            # BFS from v to c avoiding the direct edge (c, v)
            dist_v = {v: 0}
            dist_c = {}
            frontier = [("v", v)]
            d = 0
            found = None
            while frontier and found is None and d < best:
                nxt = []
                for kind, node in frontier:
                    if kind == "v":
                        for cc in var_adj[node]:
                            if node == v and cc == c:
                                continue  # removed edge
                            if cc not in dist_c:
                                dist_c[cc] = d + 1
                                if cc == c:
                                    found = d + 1
                                nxt.append(("c", cc))
                    else:
                        for vv in chk_adj[node]:
                            if vv not in dist_v:
                                dist_v[vv] = d + 1
                                nxt.append(("v", vv))
                frontier = nxt
                d += 1
            if found is not None:
                best = min(best, found + 1)
    return best


# ---------------------------------------------------------------------------
# GF(2) linear algebra
# ---------------------------------------------------------------------------

def gf2_rank(M):
    A = np.array(M, dtype=np.uint8) % 2
    rows, cols = A.shape
    r = 0
    for c in range(cols):
        pivots = np.flatnonzero(A[r:, c])
        if pivots.size == 0:
            continue
        p = pivots[0] + r
        if p != r:
            A[[r, p]] = A[[p, r]]
        for i in range(rows):
            if i != r and A[i, c]:
                A[i] ^= A[r]
        r += 1
        if r == rows:
            break
    return r


def gf2_solve_codeword(H, free_values, free_cols):
    """Solve H x = 0 with x[free_cols] pinned; brute-force over pivot bits."""
    H = np.asarray(H, dtype=np.uint8)
    n = H.shape[1]
    others = [i for i in range(n) if i not in set(free_cols)]
    for assignment in range(1 << len(others)):
        x = np.zeros(n, dtype=np.uint8)
        x[list(free_cols)] = free_values
        for i, col in enumerate(others):
            x[col] = (assignment >> i) & 1
        if not np.any((H @ x) % 2):
            return x
    raise AssertionError("no codeword found")


# ---------------------------------------------------------------------------
# two-user extrinsic LLR (mixture oracle)
# ---------------------------------------------------------------------------

def pairwise_llr_oracle(ell, y, amp, noise_var):
    """Exact extrinsic LLR of x2 from y = x1 + x2 + z by direct mixture."""
    p1 = 1.0 / (1.0 + math.exp(-ell))  # P(x1 = +amp)
    def lik(x1, x2):
        return math.exp(-0.5 * (y - x1 - x2) ** 2 / noise_var)
    num = p1 * lik(amp, amp) + (1 - p1) * lik(-amp, amp)
    den = p1 * lik(amp, -amp) + (1 - p1) * lik(-amp, -amp)
    return math.log(num) - math.log(den)


def mac_llr_brute(llrs, amps, y, noise_var):
    """Extrinsic MAC LLRs by 2^(d-1) enumeration of the other users."""
    d = len(llrs)
    out = np.zeros(d)
    probs = [1.0 / (1.0 + math.exp(-l)) for l in llrs]  # P(+amp)
    for i in range(d):
        others = [j for j in range(d) if j != i]
        num = den = 0.0
        for mask in range(1 << (d - 1)):
            pr = 1.0
            s = 0.0
            for bit, j in enumerate(others):
                if (mask >> bit) & 1:
                    pr *= probs[j]
                    s += amps[j]
                else:
                    pr *= 1.0 - probs[j]
                    s -= amps[j]
            num += pr * math.exp(-0.5 * (y - s - amps[i]) ** 2 / noise_var)
            den += pr * math.exp(-0.5 * (y - s + amps[i]) ** 2 / noise_var)
        out[i] = math.log(num) - math.log(den)
    return out


# ---------------------------------------------------------------------------
# J and phi by adaptive quadrature
# ---------------------------------------------------------------------------

def j_quad(sigma):
    """MI of a consistent Gaussian LLR N(sigma^2/2, sigma^2), adaptive quad."""
    if sigma == 0.0:
        return 0.0
    s2 = sigma * sigma

    def integrand(x):
        return (math.exp(-((x - s2 / 2.0) ** 2) / (2.0 * s2))
                / math.sqrt(2.0 * math.pi * s2)
                * math.log1p(math.exp(-x)) / math.log(2.0))

    val, _err = quad(integrand, -40 * sigma, 40 * sigma + s2, limit=400)
    return 1.0 - val


def phi_quad(sigma):
    """1 - E tanh(sigma^2/4 - sigma*Y/2), Y standard normal, adaptive quad."""
    if sigma == 0.0:
        return 1.0

    def integrand(t):
        return (math.exp(-t * t / 2.0) / math.sqrt(2.0 * math.pi)
                * math.tanh(sigma * sigma / 4.0 - sigma * t / 2.0))

    val, _err = quad(integrand, -40.0, 40.0, limit=400)
    return 1.0 - val


# ---------------------------------------------------------------------------
# Monte-Carlo density evolution (histogram-free, sampled) for a regular
# single-user ensemble
# ---------------------------------------------------------------------------

def mc_de_converges(a, dv, dc, n_samples=1_000_000, max_iters=200,
                    err_target=1e-4, seed=0):
    """Sampled density evolution for a (dv, dc)-regular BPSK/AWGN ensemble.

    Channel LLR = 2a(a+z), z ~ N(0,1).  Tracks genuine message samples
    (no Gaussian approximation); converged when the message error rate
    falls below err_target.
    """
    rng = np.random.default_rng(seed)
    chan = 2.0 * a * (a + rng.standard_normal(n_samples))
    v2c = chan.copy()
    for _ in range(max_iters):
        # check update from dc-1 independently resampled incoming messages
        t = np.tanh(0.5 * v2c[rng.integers(0, n_samples,
                                           size=(dc - 1, n_samples))])
        prod = np.clip(np.prod(t, axis=0), -1 + 1e-15, 1 - 1e-15)
        c2v = 2.0 * np.arctanh(prod)
        # variable update from dv-1 incoming check messages
        idx = rng.integers(0, n_samples, size=(dv - 1, n_samples))
        v2c = np.clip(chan + c2v[idx].sum(axis=0), -700, 700)
        err = np.mean(v2c < 0)
        if err < err_target:
            return True
    return False


def mc_de_threshold(dv, dc, rate, lo_db=0.0, hi_db=3.0, resolution_db=0.05,
                    n_samples=1_000_000, seed=0):
    """Single-user Eb/N0 threshold (dB) of a regular ensemble by sampled DE."""
    def conv(ebn0_db):
        a = math.sqrt(2.0 * rate * 10.0 ** (ebn0_db / 10.0))
        return mc_de_converges(a, dv, dc, n_samples=n_samples, seed=seed)

    if not conv(hi_db):
        return math.inf
    lo, hi = lo_db, hi_db
    while hi - lo > resolution_db:
        mid = 0.5 * (lo + hi)
        if conv(mid):
            hi = mid
        else:
            lo = mid
    return hi
