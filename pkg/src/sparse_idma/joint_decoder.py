"""Joint multi-user Tanner graph construction and flooding BP decoding.

One branch per detected preamble: its lifted LDPC code, interleaver,
repetition factor and gain.  MAC nodes are the N_c coding-segment channel
uses; each carries the superposition of the BPSK symbols mapped there.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .txchain import FrameLayout, RepetitionDD, make_interleaver, rep_factor, \
    symbol_amplitude

DEFAULT_CLIP = 30.0
DEFAULT_MAX_ITERS = 100
DEFAULT_DP_MAX_DEGREE = 16


def pairwise_h(ell, y, amp, noise_var):
    """Exact extrinsic LLR of x2 from y = x1 + x2 + z, x_i in {+-amp}.

    `ell` is the prior LLR of x1; z is zero-mean Gaussian with variance
    noise_var.  Evaluated in the log domain for stability.
    """
    ell = np.asarray(ell, dtype=np.float64)
    c = 2.0 * amp / noise_var
    num = np.logaddexp(0.0, ell + c * (y - amp))
    den = np.logaddexp(ell, -c * (y + amp))
    return num - den


def check_node_update(incoming):
    """2*atanh(prod tanh(m/2)) of the incoming messages on the other edges."""
    t = np.tanh(0.5 * np.asarray(incoming, dtype=np.float64))
    prod = np.clip(np.prod(t), -1.0 + 1e-15, 1.0 - 1e-15)
    return 2.0 * np.arctanh(prod)


def variable_node_update(check_msgs, mac_msgs, extrinsic_mac=True):
    """Extrinsic variable-node outputs.

    Returns (messages to check edges, messages to MAC edges); each output
    excludes its own edge's incoming message (MAC exclusion only when
    `extrinsic_mac`).
    """
    check_msgs = np.asarray(check_msgs, dtype=np.float64)
    mac_msgs = np.asarray(mac_msgs, dtype=np.float64)
    sc = check_msgs.sum()
    sm = mac_msgs.sum()
    to_checks = sm + sc - check_msgs
    if extrinsic_mac:
        to_macs = sc + sm - mac_msgs
    else:
        to_macs = np.full_like(mac_msgs, sc + sm)
    return to_checks, to_macs


def mac_node_update(incoming, y, noise_var, clip=DEFAULT_CLIP,
                    dp_max_degree=DEFAULT_DP_MAX_DEGREE):
    """Extrinsic LLR per edge at one MAC node.

    `incoming` is a list of (llr, effective_amplitude) pairs.  Real equal
    amplitudes use the exact lattice convolution; mixed amplitudes use
    Gaussian soft interference cancellation; complex amplitudes (fading) use
    the complex SIC kernel.
    """
    llrs = np.array([m for m, _a in incoming], dtype=np.float64)
    amps = np.array([a for _m, a in incoming])
    d = len(llrs)
    if d < 1:
        raise ValueError("MAC node needs degree >= 1")
    node_ptr = np.array([0, d], dtype=np.int64)
    node_edges = np.arange(d, dtype=np.int64)
    out = np.zeros(d)
    if np.iscomplexobj(amps) or np.iscomplexobj(np.asarray(y)):
        _kernels.mac_update_complex(
            node_ptr, node_edges, amps.astype(np.complex128), llrs,
            np.array([y], dtype=np.complex128), noise_var, clip, out)
    else:
        _kernels.mac_update_real(
            node_ptr, node_edges, amps.astype(np.float64), llrs,
            np.array([float(y)]), noise_var, clip, dp_max_degree, out)
    return out


@dataclass
class Branch:
    """Decoder-side view of one detected preamble."""

    w_p: int
    l: int
    amplitude: float
    gain: complex


@dataclass
class JointGraph:
    """Flat-array multi-user Tanner graph for one trial."""

    code: object
    branches: list
    y_c: np.ndarray
    noise_var: float
    complex_mode: bool
    # MAC edges: parallel arrays, grouped by MAC node and by (branch, position)
    me_mu: np.ndarray = field(repr=False)
    node_ptr: np.ndarray = field(repr=False)
    node_edges: np.ndarray = field(repr=False)
    vp_ptr: np.ndarray = field(repr=False)
    vp_edges: np.ndarray = field(repr=False)
    # shared LDPC adjacency (identical for every branch)
    var_ptr: np.ndarray = field(repr=False)
    var_edges: np.ndarray = field(repr=False)
    check_ptr: np.ndarray = field(repr=False)
    check_edges: np.ndarray = field(repr=False)
    check_vars: np.ndarray = field(repr=False)

    @property
    def n_branches(self):
        return len(self.branches)

    @property
    def n_mac_nodes(self):
        return self.node_ptr.shape[0] - 1

    def mac_degrees(self):
        return np.diff(self.node_ptr)


def _ldpc_adjacency(code):
    """CSR adjacency of H in both directions with a common edge numbering."""
    H = code.parity_check.tocoo()
    order = np.lexsort((H.row, H.col))  # edges sorted by variable
    e_var = H.col[order].astype(np.int64)
    e_chk = H.row[order].astype(np.int64)
    n_checks, n_vars = code.parity_check.shape
    var_ptr = np.zeros(n_vars + 1, dtype=np.int64)
    np.add.at(var_ptr, e_var + 1, 1)
    var_ptr = np.cumsum(var_ptr)
    var_edges = np.arange(len(e_var), dtype=np.int64)
    by_check = np.argsort(e_chk, kind="stable")
    check_ptr = np.zeros(n_checks + 1, dtype=np.int64)
    np.add.at(check_ptr, e_chk + 1, 1)
    check_ptr = np.cumsum(check_ptr)
    check_edges = by_check.astype(np.int64)
    check_vars = e_var[by_check]
    return var_ptr, var_edges, check_ptr, check_edges, check_vars


def build_joint_graph(detected, layout: FrameLayout, dd: RepetitionDD, code,
                      y_c, global_seed=0, mode="awgn",
                      noise_var=None) -> JointGraph:
    """Assemble the joint graph from detected (preamble index, gain) pairs.

    In AWGN mode gains are clamped to 1 (the decoder knows them to be unity);
    in fading mode the complex gain estimates enter the MAC messages.
    """
    complex_mode = mode == "rayleigh"
    if noise_var is None:
        noise_var = 1.0
    N = code.N
    N_c = layout.N_c
    branches = []
    me_branch, me_pos, me_mac = [], [], []
    for k, (w_p, gain) in enumerate(detected):
        w_p = int(w_p)
        l = rep_factor(w_p, dd, layout.M_p)
        if N * l > N_c:
            raise ValueError("repetition overflow in detected branch")
        amp = symbol_amplitude(layout, N, l)
        g = complex(gain) if complex_mode else 1.0
        branches.append(Branch(w_p=w_p, l=l, amplitude=amp, gain=g))
        perm = make_interleaver(w_p, N_c, global_seed)
        occupied = np.flatnonzero(perm < N * l)
        me_mac.append(occupied)
        me_pos.append(perm[occupied] % N)
        me_branch.append(np.full(occupied.size, k, dtype=np.int64))

    K_b = len(branches)
    me_branch = np.concatenate(me_branch) if K_b else np.zeros(0, dtype=np.int64)
    me_pos = np.concatenate(me_pos) if K_b else np.zeros(0, dtype=np.int64)
    me_mac = np.concatenate(me_mac) if K_b else np.zeros(0, dtype=np.int64)
    n_edges = me_mac.size

    if complex_mode:
        me_mu = np.array(
            [branches[k].amplitude * branches[k].gain for k in me_branch],
            dtype=np.complex128,
        ) if n_edges else np.zeros(0, dtype=np.complex128)
    else:
        amps = np.array([b.amplitude for b in branches]) if K_b else np.zeros(0)
        me_mu = amps[me_branch] if n_edges else np.zeros(0)

    by_node = np.argsort(me_mac, kind="stable")
    node_ptr = np.zeros(N_c + 1, dtype=np.int64)
    np.add.at(node_ptr, me_mac + 1, 1)
    node_ptr = np.cumsum(node_ptr)
    node_edges = by_node.astype(np.int64)

    vp_key = me_branch * N + me_pos
    by_vp = np.argsort(vp_key, kind="stable")
    vp_ptr = np.zeros(K_b * N + 1, dtype=np.int64)
    np.add.at(vp_ptr, vp_key + 1, 1)
    vp_ptr = np.cumsum(vp_ptr)
    vp_edges = by_vp.astype(np.int64)

    var_ptr, var_edges, check_ptr, check_edges, check_vars = _ldpc_adjacency(code)

    y_c = np.asarray(y_c)
    if complex_mode:
        y_c = y_c.astype(np.complex128)
    else:
        y_c = y_c.astype(np.float64)

    return JointGraph(
        code=code, branches=branches, y_c=y_c, noise_var=float(noise_var),
        complex_mode=complex_mode, me_mu=me_mu, node_ptr=node_ptr,
        node_edges=node_edges, vp_ptr=vp_ptr, vp_edges=vp_edges,
        var_ptr=var_ptr, var_edges=var_edges, check_ptr=check_ptr,
        check_edges=check_edges, check_vars=check_vars,
    )


@dataclass
class DecodedBranch:
    branch_index: int
    w_p: int
    w_c: int
    codeword: np.ndarray
    iterations: int


@dataclass
class DecodeResult:
    decoded: list  # DecodedBranch entries, parity-satisfying branches only
    parity_ok: np.ndarray
    iterations_used: np.ndarray
    total_iterations: int
    trace: np.ndarray | None = None  # (iteration, fraction parity-ok) rows

    def message_set(self, layout: FrameLayout):
        """Deduplicated set of decoded (w_p, w_c) full message indices."""
        return {(d.w_p << layout.B_c) | d.w_c for d in self.decoded}


def decode_joint(graph: JointGraph, max_iters=DEFAULT_MAX_ITERS,
                 clip=DEFAULT_CLIP, damping=0.0, extrinsic=True,
                 dp_max_degree=DEFAULT_DP_MAX_DEGREE,
                 collect_trace=False) -> DecodeResult:
    """Flooding BP over the joint graph.

    Schedule per iteration: all MAC updates, then all variable updates (with
    per-branch parity early exit; satisfied branches pin their MAC messages at
    the decision values), then all check updates.  Only branches whose hard
    decision satisfies every parity check are returned.
    """
    code = graph.code
    K_b = graph.n_branches
    N = code.N
    n_hedges = graph.var_edges.shape[0]
    n_medges = graph.vp_edges.shape[0]

    m_c2v = np.zeros((K_b, n_hedges))
    m_v2c = np.zeros((K_b, n_hedges))
    m_mac2v = np.zeros(n_medges)
    m_v2mac = np.zeros(n_medges)
    app = np.zeros((K_b, N))
    bits = np.zeros((K_b, N), dtype=np.uint8)
    active = np.ones(K_b, dtype=np.bool_)
    parity_ok = np.zeros(K_b, dtype=np.bool_)
    iters_used = np.full(K_b, -1, dtype=np.int64)
    trace_rows = [] if collect_trace else None

    def _mac_pass():
        if graph.complex_mode:
            _kernels.mac_update_complex(
                graph.node_ptr, graph.node_edges, graph.me_mu, m_v2mac,
                graph.y_c, graph.noise_var, clip, m_mac2v)
        else:
            _kernels.mac_update_real(
                graph.node_ptr, graph.node_edges, graph.me_mu, m_v2mac,
                graph.y_c, graph.noise_var, clip, dp_max_degree, m_mac2v)

    total_iters = 0
    if max_iters == 0 and K_b > 0:
        # decisions from channel-side MAC LLRs alone
        _mac_pass()
        _kernels.var_update(active, graph.var_ptr, graph.var_edges,
                            graph.vp_ptr, graph.vp_edges, m_c2v, m_mac2v,
                            clip, extrinsic, m_v2c, m_v2mac, app)
        _kernels.parity_and_freeze(active, graph.check_ptr, graph.check_vars,
                                   graph.vp_ptr, graph.vp_edges, app, clip, 0,
                                   bits, parity_ok, iters_used, m_v2mac)

    for it in range(1, max_iters + 1):
        if K_b == 0 or not active.any():
            break
        total_iters = it
        if damping > 0.0:
            prev = m_mac2v.copy()
        _mac_pass()
        if damping > 0.0:
            m_mac2v *= (1.0 - damping)
            m_mac2v += damping * prev
        _kernels.var_update(active, graph.var_ptr, graph.var_edges,
                            graph.vp_ptr, graph.vp_edges, m_c2v, m_mac2v,
                            clip, extrinsic, m_v2c, m_v2mac, app)
        _kernels.parity_and_freeze(active, graph.check_ptr, graph.check_vars,
                                   graph.vp_ptr, graph.vp_edges, app, clip,
                                   it, bits, parity_ok, iters_used, m_v2mac)
        if collect_trace:
            trace_rows.append((it, parity_ok.mean()))
        if not active.any():
            break
        _kernels.check_update(active, graph.check_ptr, graph.check_edges,
                              m_v2c, clip, m_c2v)

    decoded = []
    for k in range(K_b):
        if not parity_ok[k]:
            continue
        msg_bits = code.message_from_codeword(bits[k])
        w_c = 0
        for i, b in enumerate(msg_bits):  # B_c can exceed 64 bits
            if b:
                w_c |= 1 << i
        decoded.append(DecodedBranch(
            branch_index=k, w_p=graph.branches[k].w_p, w_c=w_c,
            codeword=bits[k].copy(), iterations=int(iters_used[k])))
    trace = np.array(trace_rows) if collect_trace else None
    return DecodeResult(decoded=decoded, parity_ok=parity_ok,
                        iterations_used=iters_used,
                        total_iterations=total_iters, trace=trace)


def trace_to_csv(trace, path):
    """Write a per-iteration convergence trace as CSV."""
    import csv

    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["iteration", "fraction_parity_ok"])
        for it, frac in trace:
            w.writerow([int(it), float(frac)])
