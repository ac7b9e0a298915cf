"""Per-user encoder and multi-user channel.

Each user's B message bits split into a preamble part w_p (high bits) and a
coding part w_c.  The preamble selects a sensing-matrix column, a repetition
factor and an interleaver; the coding part is LDPC-encoded, BPSK-modulated,
repeated, zero-padded to N_c, interleaved and power-scaled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from numba import njit


@dataclass(frozen=True)
class FrameLayout:
    """All scalar frame parameters.

    B/B_p/B_c are message bit counts, N_t/N_p/N_c channel-use counts, P1/P2
    per-use powers of the preamble and coding segments.
    """

    B: int = 100
    B_p: int = 15
    N_t: int = 30000
    N_p: int = 2000
    P1: float = 1.0
    P2: float = 1.0

    def __post_init__(self):
        if self.B_p >= self.B:
            raise ValueError("B_p must be smaller than B")
        if self.N_p >= self.N_t:
            raise ValueError("N_p must be smaller than N_t")
        if min(self.B, self.B_p, self.N_t, self.N_p) <= 0:
            raise ValueError("all frame sizes must be positive")

    @property
    def B_c(self):
        return self.B - self.B_p

    @property
    def N_c(self):
        return self.N_t - self.N_p

    @property
    def M_p(self):
        return 1 << self.B_p

    @property
    def M_c(self):
        return 1 << self.B_c

    def with_powers(self, P1, P2):
        return replace(self, P1=float(P1), P2=float(P2))


@dataclass(frozen=True)
class Message:
    """A message index and its preamble/coding split (high bits -> w_p)."""

    w: int
    w_p: int
    w_c: int

    @staticmethod
    def from_index(w, layout: FrameLayout):
        if not (0 <= w < (1 << layout.B)):
            raise ValueError("message index out of range")
        w_p = w >> layout.B_c
        w_c = w & (layout.M_c - 1)
        return Message(w=w, w_p=w_p, w_c=w_c)

    @staticmethod
    def from_parts(w_p, w_c, layout: FrameLayout):
        if not (0 <= w_p < layout.M_p) or not (0 <= w_c < layout.M_c):
            raise ValueError("message part out of range")
        return Message(w=(w_p << layout.B_c) | w_c, w_p=w_p, w_c=w_c)


@dataclass(frozen=True)
class RepetitionDD:
    """Repetition degree distribution nu_1..nu_L on the simplex."""

    nu: tuple

    def __post_init__(self):
        nu = tuple(float(x) for x in self.nu)
        object.__setattr__(self, "nu", nu)
        if any(x < 0 for x in nu) or abs(sum(nu) - 1.0) > 1e-9:
            raise ValueError("nu must be non-negative and sum to 1")
        if len(nu) < 1 or nu[-1] == 0:
            raise ValueError("nu_L must be positive (trim trailing zeros)")

    @property
    def L(self):
        return len(self.nu)

    def mean(self):
        return sum(l * x for l, x in zip(range(1, self.L + 1), self.nu))

    @staticmethod
    def regular(l):
        return RepetitionDD(nu=(0.0,) * (l - 1) + (1.0,))


def rep_factor(w_p, dd: RepetitionDD, M_p):
    """Deterministic many-to-one map from preamble index to repetition factor.

    Indices [0, floor(nu_1*M_p)) map to 1, the next floor(nu_2*M_p) to 2, ...;
    the remainder maps to L.
    """
    if not (0 <= w_p < M_p):
        raise ValueError("w_p out of range")
    lo = 0
    for l in range(1, dd.L):
        hi = lo + int(math.floor(dd.nu[l - 1] * M_p))
        if w_p < hi:
            return l
        lo = hi
    return dd.L


@njit(cache=True)
def _fisher_yates(u):
    n = u.shape[0] + 1
    perm = np.arange(n)
    for i in range(n - 1, 0, -1):
        j = int(u[n - 1 - i] * (i + 1))
        if j > i:  # guard against u == 1.0
            j = i
        tmp = perm[i]
        perm[i] = perm[j]
        perm[j] = tmp
    return perm


def make_interleaver(w_p, N_c, global_seed):
    """Length-N_c permutation shared by encoder and decoder.

    Fisher-Yates shuffle driven by Philox (counter-based) uniforms keyed by
    (global_seed, w_p), so the permutation is identical across runs and
    platforms.
    """
    if N_c < 1:
        raise ValueError("N_c must be positive")
    if N_c == 1:
        return np.zeros(1, dtype=np.int64)
    bg = np.random.Philox(key=(np.uint64(global_seed) << np.uint64(32))
                          + np.uint64(w_p))
    u = np.random.Generator(bg).random(N_c - 1)
    return _fisher_yates(u)


def symbol_amplitude(layout: FrameLayout, N, l):
    """Per-symbol amplitude making the coding segment's norm^2 = N_c*P2."""
    return math.sqrt(layout.N_c * layout.P2 / (N * l))


def encode_user(msg: Message, layout: FrameLayout, dd: RepetitionDD, code,
                sensing, global_seed=0):
    """Build a user's length-N_t transmit signal.

    Concatenates the scaled sensing column for w_p with the interleaved image
    of [BPSK codeword repeated l times, zero padding], each segment scaled to
    its power budget exactly.
    """
    l = rep_factor(msg.w_p, dd, layout.M_p)
    N = code.N
    if N * l > layout.N_c:
        raise ValueError(f"repetition overflow: N*l = {N * l} > N_c = {layout.N_c}")
    codeword = code.encode_int(msg.w_c)
    bpsk = 1.0 - 2.0 * codeword.astype(np.float64)  # bit 0 -> +1
    a = symbol_amplitude(layout, N, l)
    padded = np.zeros(layout.N_c)
    padded[: N * l] = a * np.tile(bpsk, l)
    perm = make_interleaver(msg.w_p, layout.N_c, global_seed)
    interleaved = padded[perm]
    preamble = sensing.column(msg.w_p)
    return np.concatenate([preamble, interleaved])


def apply_channel(signals, mode="awgn", gains=None, rng=None, noise_scale=1.0):
    """Superpose user signals and add noise.

    AWGN mode: real signals, unit-variance real noise, gains all 1.
    Rayleigh mode: circularly-symmetric unit-variance complex gains and
    unit-variance complex noise.  Returns (y, gains).
    """
    if rng is None:
        rng = np.random.default_rng()
    signals = [np.asarray(s) for s in signals]
    if signals:
        N_t = signals[0].shape[0]
        if any(s.shape[0] != N_t for s in signals):
            raise ValueError("all signals must share the same length")
    else:
        N_t = None
    if mode == "awgn":
        if N_t is None:
            raise ValueError("need at least one signal or explicit length")
        y = np.zeros(N_t)
        if gains is None:
            gains = np.ones(len(signals))
        for g, s in zip(gains, signals):
            y += g * s
        y += noise_scale * rng.standard_normal(N_t)
        return y, np.asarray(gains, dtype=np.float64)
    if mode == "rayleigh":
        if gains is None:
            gains = (rng.standard_normal(len(signals))
                     + 1j * rng.standard_normal(len(signals))) / math.sqrt(2)
        gains = np.asarray(gains, dtype=np.complex128)
        y = np.zeros(N_t, dtype=np.complex128)
        for g, s in zip(gains, signals):
            y += g * s
        noise = (rng.standard_normal(N_t) + 1j * rng.standard_normal(N_t)) / math.sqrt(2)
        y += noise_scale * noise
        return y, gains
    raise ValueError(f"unknown channel mode {mode!r}")


def apply_channel_empty(N_t, mode="awgn", rng=None):
    """Noise-only observation (zero active users)."""
    if rng is None:
        rng = np.random.default_rng()
    if mode == "awgn":
        return rng.standard_normal(N_t)
    noise = (rng.standard_normal(N_t) + 1j * rng.standard_normal(N_t)) / math.sqrt(2)
    return noise


def ebn0_db(layout: FrameLayout):
    """Energy per bit over N0 in dB: (N_p*P1 + N_c*P2) / (2B)."""
    if layout.P1 <= 0 and layout.P2 <= 0:
        raise ValueError("powers must be positive")
    linear = (layout.N_p * layout.P1 + layout.N_c * layout.P2) / (2 * layout.B)
    return 10.0 * math.log10(linear)


def powers_for_ebn0(layout: FrameLayout, target_db, split_ratio=1.0):
    """Powers (P1, P2) with P1 = split_ratio * P2 achieving a target Eb/N0."""
    if split_ratio <= 0:
        raise ValueError("split ratio must be positive")
    linear = 10.0 ** (target_db / 10.0)
    total = 2 * layout.B * linear
    P2 = total / (layout.N_p * split_ratio + layout.N_c)
    return split_ratio * P2, P2
