"""Partial-DFT sensing matrix and greedy preamble detection.

The preamble codebook is built from N_p/2 rows drawn without replacement from
the M_p-point DFT matrix.  In AWGN mode the real and imaginary parts of each
row are stacked into a real N_p x M_p matrix; in fading mode the complex
(N_p/2) x M_p matrix is kept.  Every column has squared norm N_p * P1.

Correlations against all M_p columns are computed with a single inverse FFT,
so the matrix is never materialized during detection.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class SensingMatrix:
    B_p: int
    N_p: int
    P1: float
    seed: int
    mode: str
    row_selection: np.ndarray = field(repr=False)  # selected DFT frequencies

    @property
    def M_p(self):
        return 1 << self.B_p

    @property
    def column_norm(self):
        return np.sqrt(self.N_p * self.P1)

    @property
    def scale(self):
        # per-entry magnitude giving ||a_j||^2 = N_p * P1 exactly
        return np.sqrt(2.0 * self.P1)

    def column(self, j):
        """The j-th codebook column (real stacked in AWGN mode)."""
        if not (0 <= j < self.M_p):
            raise IndexError(f"column index {j} out of range [0, {self.M_p})")
        phase = np.exp(-2j * np.pi * self.row_selection * j / self.M_p)
        col = self.scale * phase
        if self.mode == "awgn":
            return np.concatenate([col.real, col.imag])
        return col

    def dense(self):
        """Materialize the full matrix (intended for small B_p only)."""
        j = np.arange(self.M_p)
        phase = np.exp(-2j * np.pi * np.outer(self.row_selection, j) / self.M_p)
        mat = self.scale * phase
        if self.mode == "awgn":
            return np.vstack([mat.real, mat.imag])
        return mat

    def correlate(self, r):
        """<a_j, r> for all columns j via one length-M_p inverse FFT."""
        half = self.N_p // 2
        if self.mode == "awgn":
            if r.shape != (self.N_p,):
                raise ValueError(f"expected length-{self.N_p} real measurement")
            u = r[:half] + 1j * r[half:]
        else:
            if r.shape != (half,):
                raise ValueError(f"expected length-{half} complex measurement")
            u = r.astype(np.complex128)
        spectrum = np.zeros(self.M_p, dtype=np.complex128)
        spectrum[self.row_selection] = u
        corr = self.M_p * np.fft.ifft(spectrum)
        if self.mode == "awgn":
            return self.scale * corr.real
        return self.scale * corr


def build_sensing_matrix(B_p, N_p, P1, seed=0, mode="awgn") -> SensingMatrix:
    """Draw N_p/2 DFT rows uniformly at random (deterministic in seed)."""
    if N_p % 2 != 0:
        raise ValueError("N_p must be even (real/imaginary row stacking)")
    M_p = 1 << B_p
    if N_p // 2 > M_p:
        raise ValueError("cannot draw N_p/2 distinct rows from the DFT")
    if mode not in ("awgn", "rayleigh"):
        raise ValueError(f"unknown mode {mode!r}")
    rng = np.random.default_rng(seed)
    rows = rng.choice(M_p, size=N_p // 2, replace=False)
    rows.sort()
    return SensingMatrix(
        B_p=B_p, N_p=N_p, P1=float(P1), seed=seed, mode=mode, row_selection=rows
    )


def cs_encode(w_p, sensing: SensingMatrix):
    """Preamble codeword for index w_p (the w_p-th sensing column)."""
    return sensing.column(w_p)


@dataclass(frozen=True)
class CsDetection:
    """Top-K_b detected preamble indices, ordered by decreasing |gain|."""

    indices: np.ndarray
    gains: np.ndarray

    def __len__(self):
        return len(self.indices)

    def __iter__(self):
        return iter(zip(self.indices, self.gains))


def cs_detect(y_p, sensing: SensingMatrix, K_b) -> CsDetection:
    """Orthogonal matching pursuit for exactly K_b iterations.

    Greedy max-correlation selection with a least-squares gain re-fit per
    iteration (Gram-matrix updates).  Always returns K_b distinct indices.
    """
    if K_b > sensing.M_p:
        raise ValueError("K_b exceeds the number of codebook columns")
    y = np.asarray(y_p)
    complex_mode = sensing.mode == "rayleigh"
    dtype = np.complex128 if complex_mode else np.float64
    n_meas = sensing.N_p // 2 if complex_mode else sensing.N_p

    selected = np.empty(K_b, dtype=np.int64)
    cols = np.empty((n_meas, K_b), dtype=dtype)
    gram = np.zeros((K_b, K_b), dtype=dtype)
    proj = np.zeros(K_b, dtype=dtype)
    taken = set()
    residual = y.astype(dtype)
    gains = np.zeros(K_b, dtype=dtype)

    for k in range(K_b):
        corr = sensing.correlate(residual)
        mag = np.abs(corr)
        if taken:
            mag[selected[:k]] = -1.0
        j = int(np.argmax(mag))
        selected[k] = j
        taken.add(j)
        c = sensing.column(j)
        cols[:, k] = c
        inner = cols[:, : k + 1].conj().T @ c
        gram[: k + 1, k] = inner
        gram[k, : k + 1] = inner.conj()
        proj[k] = np.vdot(c, y)
        g = np.linalg.solve(gram[: k + 1, : k + 1], proj[: k + 1])
        gains[: k + 1] = g
        residual = y - cols[:, : k + 1] @ g

    order = np.argsort(-np.abs(gains), kind="stable")
    out_gains = gains[order]
    if not complex_mode:
        out_gains = out_gains.real
    return CsDetection(indices=selected[order], gains=out_gains)
