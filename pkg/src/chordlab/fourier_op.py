"""Fourier-side chord machinery: the mod-N coupling operator and its norm.

The squared m-chord sum of an arc-length loop of length 2 pi is a
quadratic form in the weighted coefficients d_j = |j| c_j.  The kernel
couples only indices congruent mod N, so the operator splits into
residue-class blocks; each block is rank one with norm
sin^2(pi m n / N) * S_n, and the maximum over classes is attained at
n = 1, which is exactly the bound that proves the chord inequality
globally.  Dense truncations of the same matrix provide an independent
numerical route to the norm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParametrizationError
from .geometry import TWO_PI, FourierLoop, ArcLengthMap, _check_m


def entry(N: int, m: int, j: int, k: int) -> float:
    """Matrix element: |sin(pi m j/N)/j| |sin(pi m k/N)/k| if j = k (mod N), else 0."""
    if j == 0 or k == 0:
        raise ValueError("indices must be nonzero")
    if (j - k) % N != 0:
        return 0.0
    return abs(math.sin(math.pi * m * j / N) / j) * abs(math.sin(math.pi * m * k / N) / k)


def _weight(N: int, m: int, j: np.ndarray) -> np.ndarray:
    return np.abs(np.sin(math.pi * m * j / N) / j)


def s_n(N: int, n: int, mode: str = "closed") -> float:
    """Lattice sum S_n = sum over l of 1/(n + l N)^2, skipping n + l N = 0.

    Closed form (pi / (N sin(pi n / N)))^2, or direct summation with a
    midpoint integral tail certified below 1e-12 absolute.
    """
    if not 1 <= n <= N - 1:
        raise ValueError(f"n must satisfy 1 <= n <= N-1 = {N - 1}")
    if mode == "closed":
        return (math.pi / (N * math.sin(math.pi * n / N))) ** 2
    if mode != "series":
        raise ValueError("mode must be 'closed' or 'series'")
    cap = int(math.ceil(1e6 / N))
    l = np.arange(-cap, cap + 1)
    vals = n + l * N
    vals = vals[vals != 0].astype(float)
    partial = float(np.sum(1.0 / vals ** 2))
    # midpoint integral tails; the bracketing pair certifies the error
    edge = (cap + 0.5) * N
    tail = 1.0 / (N * (edge + n)) + 1.0 / (N * (edge - n))
    return partial + tail


def bound_rhs(N: int, m: int) -> float:
    """Right-hand side of the operator bound: (pi sin(pi m/N) / (N sin(pi/N)))^2."""
    _check_m(N, m)
    return (math.pi * math.sin(math.pi * m / N) / (N * math.sin(math.pi / N))) ** 2


@dataclass(frozen=True)
class TruncatedOperator:
    """Truncation of the coupling operator to indices 1 <= |j| <= cutoff."""

    N: int
    m: int
    cutoff: int
    mode: str = "dense"

    def __post_init__(self):
        _check_m(self.N, self.m)
        if self.cutoff < self.N:
            raise ValueError("cutoff must be at least N")
        if self.mode not in ("dense", "block"):
            raise ValueError("mode must be 'dense' or 'block'")

    def indices(self) -> np.ndarray:
        """Nonzero indices -K..-1, 1..K in ascending order."""
        k = self.cutoff
        return np.concatenate([np.arange(-k, 0), np.arange(1, k + 1)])

    def matrix(self) -> np.ndarray:
        """Explicit truncated matrix (2K x 2K); intended for modest cutoffs."""
        idx = self.indices()
        if len(idx) > 6000:
            raise MemoryError("cutoff too large to materialize the full matrix")
        w = _weight(self.N, self.m, idx)
        mat = np.outer(w, w)
        same_class = (idx[:, None] - idx[None, :]) % self.N == 0
        return np.where(same_class, mat, 0.0)

    def norm(self) -> float:
        if self.mode == "block":
            return max(
                math.sin(math.pi * self.m * n / self.N) ** 2 * s_n(self.N, n, "closed")
                for n in range(1, self.N))
        idx = self.indices()
        if len(idx) <= 3000:
            vals = np.linalg.eigvalsh(self.matrix())
            return float(vals[-1])
        # one residue class at a time: materialize the class block and
        # power-iterate; memory stays ~ (2K/N)^2 per class
        best = 0.0
        residues = idx % self.N
        for n in range(self.N):
            sub = idx[residues == n]
            w = _weight(self.N, self.m, sub)
            if not np.any(w > 0):
                continue
            block = np.outer(w, w)
            lam = _power_iteration(block)
            best = max(best, lam)
        return best


def _power_iteration(mat: np.ndarray, tol: float = 1e-14, max_iter: int = 500) -> float:
    """Largest eigenvalue of a symmetric PSD matrix, deterministic start."""
    n = mat.shape[0]
    x = np.full(n, 1.0 / math.sqrt(n))
    lam = 0.0
    for _ in range(max_iter):
        y = mat @ x
        norm = float(np.linalg.norm(y))
        if norm == 0.0:
            return 0.0
        lam_new = float(x @ y)
        x = y / norm
        if abs(lam_new - lam) <= tol * max(abs(lam_new), 1.0):
            return lam_new
        lam = lam_new
    return lam


def operator_norm(N: int, m: int, mode: str = "block", cutoff: int = 10_000) -> float:
    """Norm of the coupling operator.

    Block mode is exact: the max over residue classes of the rank-one
    block norms sin^2(pi m n/N) S_n.  Dense mode truncates at
    ``cutoff``, materializes the entries, and extracts the largest
    eigenvalue numerically; it increases to the block value as the
    cutoff grows.
    """
    return TruncatedOperator(N=N, m=m, cutoff=cutoff, mode=mode).norm()


def quadratic_form(dseq: dict[int, np.ndarray], N: int, m: int) -> float:
    """Sesquilinear form (d, (A tensor I) d) for a finitely supported d.

    ``dseq`` maps nonzero integer indices to C^dim component vectors;
    the identity factor over C^dim is realized by summing the scalar
    form over coordinates.
    """
    _check_m(N, m)
    if 0 in dseq:
        raise ValueError("support must not include index 0")
    items = sorted(dseq.items())
    total = 0.0
    for j, dj in items:
        dj = np.atleast_1d(np.asarray(dj, dtype=complex))
        wj = abs(math.sin(math.pi * m * j / N) / j)
        for k, dk in items:
            if (j - k) % N != 0:
                continue
            dk = np.atleast_1d(np.asarray(dk, dtype=complex))
            wk = abs(math.sin(math.pi * m * k / N) / k)
            total += wj * wk * float(np.real(np.vdot(dj, dk)))
    return total


def chordsum_fourier(loop: FourierLoop, N: int, m: int,
                     check_tol: float = 1e-6) -> float:
    """Squared m-chord sum of the marks Gamma(2 pi n / N) from the mode data.

    Evaluates the mod-N double sum 4N sum_{j=k mod N} d_j^* . d_k
    w_j w_k over the loop's finite mode set.  The loop must be
    arc-length parametrized with total length 2 pi (checked through the
    quadrature map to ``check_tol``); under that normalization the value
    is the p = 2 chord sum of equal-arc marks.
    """
    _check_m(N, m)
    amap = ArcLengthMap(loop, tol=min(check_tol * 1e-2, 1e-9))
    if abs(amap.total - TWO_PI) > check_tol * TWO_PI:
        raise ParametrizationError(
            f"total length {amap.total:.9g} differs from 2 pi beyond {check_tol:g}")
    dev = np.max(np.abs(amap._s_grid - amap._t_grid))
    if dev > check_tol * TWO_PI:
        raise ParametrizationError(
            f"arc length deviates from the parameter by {dev:.3g} (> {check_tol:g} * 2 pi)")

    modes = np.concatenate([np.arange(-loop.M, 0), np.arange(1, loop.M + 1)])
    coeffs = np.vstack([np.conj(loop.coeffs[::-1]), loop.coeffs])  # c_j rows
    d = np.abs(modes)[:, None] * coeffs
    w = _weight(N, m, modes)
    total = 0.0
    for n in range(N):
        sel = modes % N == n
        if not np.any(sel):
            continue
        class_sum = np.sum(w[sel, None] * d[sel], axis=0)
        total += float(np.real(np.vdot(class_sum, class_sum)))
    return 4.0 * N * total


def sin_ineq(j: int, x: float) -> tuple[float, float, bool]:
    """(|sin(jx)|, j sin(x), holds) for integer j >= 1 and x in (0, pi/2]."""
    if j < 1:
        raise ValueError("j must be a positive integer")
    if not 0.0 < x <= math.pi / 2:
        raise ValueError("x must lie in (0, pi/2]")
    lhs = abs(math.sin(j * x))
    rhs = j * math.sin(x)
    return lhs, rhs, lhs <= rhs * (1.0 + 1e-14)
