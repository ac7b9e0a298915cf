"""Protograph LDPC codes: validation, PEG lifting, encoding and parity checks.

A protograph is a small bipartite multigraph given as a non-negative integer
base matrix (checks x variables).  Lifting by a factor Z replaces every edge
type by a permutation between the Z copies of its endpoints; the permutations
are chosen greedily by progressive edge growth (PEG) to maximize local girth.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

CACHE_FORMAT_VERSION = 1


class ProtographError(ValueError):
    pass


class RankDeficientLiftError(RuntimeError):
    """Raised when a lifted parity-check matrix does not have full row rank."""


@dataclass(frozen=True)
class Protograph:
    """Validated protograph base matrix with an edge-type enumeration."""

    base_matrix: np.ndarray
    # (check_proto, var_proto, parallel_index) per edge type
    edge_list: tuple = field(compare=False)

    @property
    def num_checks(self):
        return self.base_matrix.shape[0]

    @property
    def num_vars(self):
        return self.base_matrix.shape[1]

    @property
    def num_edges(self):
        return len(self.edge_list)

    @property
    def design_rate(self):
        nc, nv = self.base_matrix.shape
        return (nv - nc) / nv

    def var_degrees(self):
        return self.base_matrix.sum(axis=0)

    def check_degrees(self):
        return self.base_matrix.sum(axis=1)

    def content_hash(self):
        h = hashlib.sha256()
        h.update(str(self.base_matrix.shape).encode())
        h.update(np.ascontiguousarray(self.base_matrix, dtype=np.int64).tobytes())
        return h.hexdigest()

    def to_text(self):
        nc, nv = self.base_matrix.shape
        lines = [f"{nc} {nv}"]
        for row in self.base_matrix:
            lines.append(" ".join(str(int(x)) for x in row))
        return "\n".join(lines) + "\n"

    @staticmethod
    def from_text(text):
        lines = [ln for ln in text.strip().splitlines() if ln.strip()]
        nc, nv = (int(x) for x in lines[0].split())
        rows = [[int(x) for x in ln.split()] for ln in lines[1 : 1 + nc]]
        mat = np.array(rows, dtype=np.int64)
        if mat.shape != (nc, nv):
            raise ProtographError("matrix body does not match declared shape")
        return validate_protograph(mat)


def validate_protograph(base_matrix) -> Protograph:
    """Validate a base matrix and return a Protograph.

    Parallel edges (entries > 1) are accepted.  Rejects negative entries,
    all-zero rows/columns and design rates outside (0, 1).
    """
    mat = np.asarray(base_matrix, dtype=np.int64)
    if mat.ndim != 2:
        raise ProtographError("base matrix must be 2-dimensional")
    if np.any(mat < 0):
        raise ProtographError("base matrix entries must be non-negative")
    if np.any(mat.sum(axis=1) == 0):
        raise ProtographError("all-zero check row in base matrix")
    if np.any(mat.sum(axis=0) == 0):
        raise ProtographError("all-zero variable column in base matrix")
    nc, nv = mat.shape
    rate = (nv - nc) / nv
    if not (0.0 < rate < 1.0):
        raise ProtographError(f"design rate {rate} outside (0, 1)")
    edges = []
    for c in range(nc):
        for v in range(nv):
            for t in range(int(mat[c, v])):
                edges.append((c, v, t))
    return Protograph(base_matrix=mat, edge_list=tuple(edges))


@dataclass
class LiftedCode:
    """Z-lifted LDPC code with a precomputed dense encoder.

    ``generator`` maps message bits (length B_c) to codewords (length N);
    message bits sit on the non-pivot (free) columns of the parity-check
    matrix, pivots chosen leftmost-first during elimination.
    """

    proto: Protograph
    Z: int
    seed: int
    parity_check: sp.csr_matrix
    generator: np.ndarray  # (N, B_c) uint8
    free_cols: np.ndarray  # message positions inside the codeword
    edge_perms: np.ndarray  # (num_edge_types, Z) check-copy index per var copy
    parity_rank: int = -1

    @property
    def rank_deficiency(self):
        """Number of dependent parity rows (0 for a full-rank lift)."""
        return self.parity_check.shape[0] - self.parity_rank

    @property
    def N(self):
        return self.parity_check.shape[1]

    @property
    def B_c(self):
        return self.generator.shape[1]

    def encode(self, message):
        """Encode B_c message bits into an N-bit codeword."""
        m = np.asarray(message, dtype=np.uint8)
        if m.shape != (self.B_c,):
            raise ValueError(f"message must have length {self.B_c}")
        return (self.generator @ m) % 2

    def encode_int(self, w_c):
        """Encode an integer message index (LSB-first bit order)."""
        if not (0 <= w_c < (1 << self.B_c)):
            raise ValueError("message index out of range")
        # B_c can exceed 64, so keep the shifts in Python integers
        bits = np.array([(w_c >> i) & 1 for i in range(self.B_c)], dtype=np.uint8)
        return self.encode(bits)

    def message_from_codeword(self, word):
        """Recover the message bits (free-column values) of a codeword."""
        return np.asarray(word, dtype=np.uint8)[self.free_cols]

    def check_parity(self, word):
        w = np.asarray(word, dtype=np.uint8)
        if w.shape != (self.N,):
            raise ValueError(f"word must have length {self.N}")
        return not np.any((self.parity_check @ w) % 2)

    def syndrome(self, word):
        return (self.parity_check @ np.asarray(word, dtype=np.uint8)) % 2

    def content_key(self):
        h = hashlib.sha256()
        h.update(f"v{CACHE_FORMAT_VERSION}|".encode())
        h.update(self.proto.content_hash().encode())
        h.update(f"|Z={self.Z}|seed={self.seed}".encode())
        return h.hexdigest()


def _bfs_check_distances(var_adj, check_adj, start_var, n_checks):
    """Distances from a lifted variable node to every lifted check node."""
    dist = np.full(n_checks, -1, dtype=np.int64)
    seen_v = {start_var}
    frontier_v = [start_var]
    d = 1
    while frontier_v:
        frontier_c = []
        for v in frontier_v:
            for c in var_adj[v]:
                if dist[c] < 0:
                    dist[c] = d
                    frontier_c.append(c)
        frontier_v = []
        for c in frontier_c:
            for v in check_adj[c]:
                if v not in seen_v:
                    seen_v.add(v)
                    frontier_v.append(v)
        d += 2
    return dist


def lift_peg(proto: Protograph, Z: int, seed: int = 0) -> LiftedCode:
    """Lift a protograph by factor Z using progressive edge growth.

    Each proto edge type becomes a permutation between the Z variable copies
    and Z check copies of its endpoints.  Edges are placed one at a time on
    the check copy at maximal BFS distance from the variable copy (ties broken
    by lowest check-copy index).  The seed only shuffles the order in which
    variable copies are processed, so results are reproducible.
    """
    if Z < 2:
        raise ValueError("lifting factor Z must be >= 2")
    max_entry = int(proto.base_matrix.max())
    if max_entry >= 2 and Z < 2 * max_entry:
        raise ValueError(
            f"Z={Z} too small to separate {max_entry} parallel proto edges"
        )
    nc, nv = proto.num_checks, proto.num_vars
    if Z * (nv - nc) < 1:
        raise ValueError("lifted code has no information bits")

    rng = np.random.default_rng(seed)
    n_vars_l = nv * Z
    n_checks_l = nc * Z
    var_adj = [[] for _ in range(n_vars_l)]
    check_adj = [[] for _ in range(n_checks_l)]
    edge_perms = np.full((proto.num_edges, Z), -1, dtype=np.int64)

    def _best_free_copy(V, c, used, dist):
        """Unused check copy of proto c at maximal distance (ties: lowest)."""
        best_zc, best_key = -1, None
        for zc in range(Z):
            if used[zc]:
                continue
            C = c * Z + zc
            if V in check_adj[C]:
                continue  # would create a parallel edge in the lifted graph
            d = dist[C]
            d_key = np.inf if d < 0 else d
            key = (-d_key, zc)
            if best_key is None or key < best_key:
                best_key = key
                best_zc = zc
        return best_zc

    def _connect(V, C):
        var_adj[V].append(C)
        check_adj[C].append(V)

    def _disconnect(V, C):
        var_adj[V].remove(C)
        check_adj[C].remove(V)

    def _dist_ok(d):
        return d < 0 or d >= 5  # no cycle shorter than 6 through the new edge

    for et, (c, v, _t) in enumerate(proto.edge_list):
        used = np.zeros(Z, dtype=bool)
        order = rng.permutation(Z)
        placed = []  # variable copies already assigned for this edge type
        for z in order:
            V = v * Z + z
            dist = _bfs_check_distances(var_adj, check_adj, V, n_checks_l)
            best_zc = _best_free_copy(V, c, used, dist)
            if best_zc >= 0 and not _dist_ok(dist[c * Z + best_zc]):
                # every free copy closes a short cycle: try to swap with an
                # earlier assignment of this edge type (deterministic scan)
                for z_prev in placed:
                    zc_prev = int(edge_perms[et, z_prev])
                    C_prev = c * Z + zc_prev
                    V_prev = v * Z + z_prev
                    _disconnect(V_prev, C_prev)
                    d_here = _bfs_check_distances(
                        var_adj, check_adj, V, n_checks_l)
                    if not _dist_ok(d_here[C_prev]) or V in check_adj[C_prev]:
                        _connect(V_prev, C_prev)
                        continue
                    _connect(V, C_prev)
                    # zc_prev stays marked used (V now claims it); V_prev
                    # must take one of the still-free copies
                    d_prev = _bfs_check_distances(
                        var_adj, check_adj, V_prev, n_checks_l)
                    alt_zc = _best_free_copy(V_prev, c, used, d_prev)
                    if alt_zc >= 0 and _dist_ok(d_prev[c * Z + alt_zc]):
                        edge_perms[et, z] = zc_prev
                        edge_perms[et, z_prev] = alt_zc
                        used[alt_zc] = True
                        _connect(V_prev, c * Z + alt_zc)
                        break
                    # revert the swap attempt
                    _disconnect(V, C_prev)
                    _connect(V_prev, C_prev)
                else:
                    z_prev = None  # no swap found; fall through to greedy
                if edge_perms[et, z] >= 0:
                    placed.append(z)
                    continue
            if best_zc < 0:
                # all free check copies already adjacent; accept a parallel
                # edge on the lowest free index (only possible when Z is tiny)
                best_zc = int(np.flatnonzero(~used)[0])
            used[best_zc] = True
            edge_perms[et, z] = best_zc
            _connect(V, c * Z + best_zc)
            placed.append(z)

    rows, cols = [], []
    for et, (c, v, _t) in enumerate(proto.edge_list):
        for z in range(Z):
            rows.append(c * Z + edge_perms[et, z])
            cols.append(v * Z + z)
    data = np.ones(len(rows), dtype=np.uint8)
    H = sp.csr_matrix(
        (data, (rows, cols)), shape=(n_checks_l, n_vars_l), dtype=np.uint8
    )
    # parallel lifted edges cancel mod 2; reject those lifts outright
    if H.nnz != len(rows) or np.any(H.data > 1):
        raise RankDeficientLiftError("lift produced parallel edges")

    generator, free_cols, rank = _build_encoder(H)
    # A rank-deficient lift is still a valid code; it just carries
    # B_c = N - rank > Z*(nv - nc) message bits.  Callers that need the
    # nominal dimension use lift_peg_full_rank / lift_cached instead.
    return LiftedCode(
        proto=proto,
        Z=Z,
        seed=seed,
        parity_check=H,
        generator=generator,
        free_cols=free_cols,
        edge_perms=edge_perms,
        parity_rank=rank,
    )


def lift_peg_full_rank(proto, Z, seed=0, max_attempts=16):
    """Lift with PEG, retrying seed+1, ... until the lift has full rank."""
    last = "no attempts made"
    for attempt in range(max_attempts):
        try:
            code = lift_peg(proto, Z, seed + attempt)
        except RankDeficientLiftError as exc:
            last = str(exc)
            continue
        if code.rank_deficiency == 0:
            return code
        last = (f"parity-check rank {code.parity_rank} < "
                f"{code.parity_check.shape[0]} rows")
    raise RankDeficientLiftError(
        f"no full-rank lift in {max_attempts} attempts: {last}"
    )


def _build_encoder(H):
    """GF(2) elimination with leftmost pivots; returns (generator, free, rank).

    generator[:, j] is the codeword for unit message e_j; message bits are the
    free (non-pivot) columns of H.
    """
    A = np.asarray(H.todense(), dtype=np.uint8)
    n_rows, n_cols = A.shape
    pivot_cols = []
    r = 0
    for c in range(n_cols):
        if r >= n_rows:
            break
        rows_with_one = np.flatnonzero(A[r:, c]) + r
        if rows_with_one.size == 0:
            continue
        pr = rows_with_one[0]
        if pr != r:
            A[[r, pr]] = A[[pr, r]]
        # eliminate everywhere (reduced form)
        hit = np.flatnonzero(A[:, c])
        hit = hit[hit != r]
        A[hit] ^= A[r]
        pivot_cols.append(c)
        r += 1
    rank = r
    pivot_cols = np.array(pivot_cols, dtype=np.int64)
    free_cols = np.setdiff1d(np.arange(n_cols), pivot_cols)
    B_c = free_cols.size
    G = np.zeros((n_cols, B_c), dtype=np.uint8)
    G[free_cols, np.arange(B_c)] = 1
    # pivot bit i equals sum of A[i, free] * message (row i has pivot at
    # pivot_cols[i] after reduction)
    G[pivot_cols, :] = A[:rank][:, free_cols]
    return G, free_cols, rank


def save_code(code: LiftedCode, path):
    """Serialize a lifted code to a versioned .npz blob."""
    H = code.parity_check.tocoo()
    np.savez_compressed(
        path,
        version=np.int64(CACHE_FORMAT_VERSION),
        base_matrix=code.proto.base_matrix,
        Z=np.int64(code.Z),
        seed=np.int64(code.seed),
        h_row=H.row.astype(np.int64),
        h_col=H.col.astype(np.int64),
        generator=code.generator,
        free_cols=code.free_cols,
        edge_perms=code.edge_perms,
        parity_rank=np.int64(code.parity_rank),
    )


def load_code(path) -> LiftedCode:
    d = np.load(path)
    if int(d["version"]) != CACHE_FORMAT_VERSION:
        raise ValueError("unsupported code cache version")
    proto = validate_protograph(d["base_matrix"])
    Z = int(d["Z"])
    n_checks = proto.num_checks * Z
    n_vars = proto.num_vars * Z
    H = sp.csr_matrix(
        (np.ones(len(d["h_row"]), dtype=np.uint8), (d["h_row"], d["h_col"])),
        shape=(n_checks, n_vars),
    )
    return LiftedCode(
        proto=proto,
        Z=Z,
        seed=int(d["seed"]),
        parity_check=H,
        generator=d["generator"].astype(np.uint8),
        free_cols=d["free_cols"].astype(np.int64),
        edge_perms=d["edge_perms"].astype(np.int64),
        parity_rank=int(d["parity_rank"]),
    )


_memory_cache = {}


def lift_cached(proto, Z, seed=0, cache_dir=None):
    """Full-rank PEG lift with in-memory and optional on-disk caching."""
    key = (proto.content_hash(), Z, seed)
    if key in _memory_cache:
        return _memory_cache[key]
    if cache_dir is not None:
        import pathlib

        cache_dir = pathlib.Path(cache_dir)
        cache_dir.mkdir(parents=True, exist_ok=True)
        digest = hashlib.sha256(
            f"v{CACHE_FORMAT_VERSION}|{key[0]}|{Z}|{seed}".encode()
        ).hexdigest()
        path = cache_dir / f"code_{digest}.npz"
        if path.exists():
            code = load_code(path)
            _memory_cache[key] = code
            return code
        code = lift_peg_full_rank(proto, Z, seed)
        save_code(code, path)
        _memory_cache[key] = code
        return code
    code = lift_peg_full_rank(proto, Z, seed)
    _memory_cache[key] = code
    return code
