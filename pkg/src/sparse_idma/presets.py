"""Code-ensemble presets: base matrices per rate and repetition profiles.

The base matrices below were selected by ranking candidates on their joint
multiuser density-evolution threshold at the target load (see `optimizer`
and `density_evolution.de_threshold`); shapes are chosen so the lifted code
carries B_c = 85 message bits (the rate-0.4 code carries 86 and pads one
message bit with zero).
"""

from __future__ import annotations

import math

import numpy as np

from .protograph import LiftedCode, lift_cached, validate_protograph
from .txchain import RepetitionDD

B_C_PROTOCOL = 85

# rate 1/8: accumulator chain over the first seven variables plus one
# high-degree message variable feeding every check.  Selected from a
# structured scan ranked by the K_a=125 joint density-evolution threshold
# (2.2 dB at a 2:1 power split); the bidiagonal chain also guarantees a
# full-rank lift at any Z.
BASE_MATRIX_RATE_0125 = np.array(
    [
        [1, 0, 0, 0, 0, 0, 0, 1],
        [1, 1, 0, 0, 0, 0, 0, 1],
        [0, 1, 1, 0, 0, 0, 0, 1],
        [0, 0, 1, 1, 0, 0, 0, 1],
        [0, 0, 0, 1, 1, 0, 0, 1],
        [0, 0, 0, 0, 1, 1, 0, 1],
        [0, 0, 0, 0, 0, 1, 1, 1],
    ],
    dtype=np.int64,
)

# The nearly-regular matrices below carry one parallel edge per row in the
# last two columns.  A permutation lift of a matrix whose rows have identical
# parity patterns (e.g. all-ones) can never reach full row rank: every row
# block then sums to the same GF(2) vector, costing nc-1 ranks.  The parallel
# edges make the row parity patterns distinct while keeping the degree
# profile close to regular.

# rate 1/4: near-(3,4)-regular
BASE_MATRIX_RATE_025 = np.array(
    [[1, 1, 1, 2], [1, 1, 2, 1], [1, 1, 1, 1]], dtype=np.int64
)

# rate 2/5: near-(3,5)-regular
BASE_MATRIX_RATE_04 = np.array(
    [[1, 1, 1, 1, 2], [1, 1, 1, 2, 1], [1, 1, 1, 1, 1]], dtype=np.int64
)

# rate 1/2: near-(3,6)-regular (tests and baselines)
BASE_MATRIX_RATE_05 = np.array(
    [[1, 1, 1, 1, 1, 2], [1, 1, 1, 1, 2, 1], [1, 1, 1, 1, 1, 1]],
    dtype=np.int64,
)

_RATE_PRESETS = {
    0.125: (BASE_MATRIX_RATE_0125, 85),
    0.25: (BASE_MATRIX_RATE_025, 85),
    0.4: (BASE_MATRIX_RATE_04, 43),  # N=215, B_c=86, one padded bit
    0.5: (BASE_MATRIX_RATE_05, 29),  # N=174, B_c=87 (test use only)
}

NU_REGULAR_2 = RepetitionDD(nu=(0.0, 1.0))
NU_IRREGULAR_225 = RepetitionDD(nu=(0.12, 0.88))
NU_IRREGULAR_275 = RepetitionDD(nu=(0.18, 0.82))
NU_IDMA_75 = RepetitionDD.regular(75)


class PaddedCode:
    """Wrap a lifted code so it carries exactly B_c protocol message bits.

    Extra information positions are pinned to zero at the encoder; decoding
    simply drops them.
    """

    def __init__(self, inner: LiftedCode, B_c):
        if inner.B_c < B_c:
            raise ValueError("inner code carries too few message bits")
        self.inner = inner
        self._B_c = B_c

    @property
    def N(self):
        return self.inner.N

    @property
    def B_c(self):
        return self._B_c

    @property
    def parity_check(self):
        return self.inner.parity_check

    @property
    def proto(self):
        return self.inner.proto

    def encode(self, message):
        m = np.zeros(self.inner.B_c, dtype=np.uint8)
        m[: self._B_c] = message
        return self.inner.encode(m)

    def encode_int(self, w_c):
        if not (0 <= w_c < (1 << self._B_c)):
            raise ValueError("message index out of range")
        bits = np.array([(w_c >> i) & 1 for i in range(self._B_c)],
                        dtype=np.uint8)
        return self.encode(bits)

    def message_from_codeword(self, word):
        return self.inner.message_from_codeword(word)[: self._B_c]

    def check_parity(self, word):
        return self.inner.check_parity(word)


def code_for_rate(rate, seed=0, cache_dir=None):
    """The preset lifted code for a nominal rate (B_c = 85 protocol bits)."""
    if rate not in _RATE_PRESETS:
        raise ValueError(f"no preset code for rate {rate}")
    base, Z = _RATE_PRESETS[rate]
    proto = validate_protograph(base)
    code = lift_cached(proto, Z, seed=seed, cache_dir=cache_dir)
    if code.B_c > B_C_PROTOCOL:
        return PaddedCode(code, B_C_PROTOCOL)
    if code.B_c != B_C_PROTOCOL:
        raise RuntimeError(
            f"preset code for rate {rate} carries B_c={code.B_c}")
    return code


def rate_for_users(K_a):
    """Code-rate schedule as a function of the number of active users."""
    if K_a <= 125:
        return 0.125
    if K_a <= 200:
        return 0.25
    return 0.4


def nu_for_users(K_a, irregular=False):
    """Repetition profile: x^2 everywhere; optional irregular variants."""
    if irregular and K_a >= 250:
        return NU_IRREGULAR_275
    if irregular and K_a >= 225:
        return NU_IRREGULAR_225
    return NU_REGULAR_2


def register_rate_preset(rate, base_matrix, Z):
    """Install or replace the base matrix used for a nominal rate."""
    mat = np.asarray(base_matrix, dtype=np.int64)
    validate_protograph(mat)
    nc, nv = mat.shape
    B_c = Z * (nv - nc)
    if B_c < B_C_PROTOCOL:
        raise ValueError("lift carries fewer than the protocol message bits")
    _RATE_PRESETS[rate] = (mat, Z)


def dense_idma_overflow_check(N, N_c):
    if N * 75 > N_c:
        raise ValueError("repetition-75 preset does not fit the frame")
    return math.floor(N_c / N)
