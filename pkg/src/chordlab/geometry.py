"""Loops, bead configurations, and arc-length machinery.

A closed curve is represented either by a finite Fourier series
(:class:`FourierLoop`) or by the ``N`` marked points it carries
(:class:`PointConfiguration`).  The arc-length map turns the first
into the second by equidistant sampling; generators for the standard
test families (regular polygons, rhomboids, random smooth loops) live
here as well.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss

from .errors import DegenerateCurveError, SingularChordError

TWO_PI = 2.0 * math.pi

# Relative speed floor below which a curve counts as degenerate.
_SPEED_FLOOR = 1e-8


# ---------------------------------------------------------------------------
# Point configurations
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PointConfiguration:
    """N bead positions in R^dim with a length budget L.

    Indices are cyclic: ``point(j)`` returns ``points[j % N]``.  A
    configuration is *admissible* when every consecutive distance is at
    most ``L/N`` (up to a floating-point guard), i.e. when the beads can
    be realized as equal-arc marks on some loop of length ``L``.
    """

    dim: int
    N: int
    L: float
    points: np.ndarray = field(repr=False)

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        if pts.shape != (self.N, self.dim):
            raise ValueError(f"points must have shape ({self.N}, {self.dim}), got {pts.shape}")
        if self.dim < 2:
            raise ValueError("dim must be >= 2")
        if self.N < 2:
            raise ValueError("N must be >= 2")
        if not self.L > 0:
            raise ValueError("L must be positive")
        if not np.all(np.isfinite(pts)):
            raise ValueError("coordinates must be finite")
        pts.flags.writeable = False
        object.__setattr__(self, "points", pts)

    def point(self, j: int) -> np.ndarray:
        return self.points[j % self.N]

    def consecutive_distances(self) -> np.ndarray:
        """Distances |y_{j+1} - y_j| for j = 0..N-1 (cyclic)."""
        diffs = np.roll(self.points, -1, axis=0) - self.points
        return np.linalg.norm(diffs, axis=1)

    def chord_lengths(self, m: int) -> np.ndarray:
        """Distances |y_{j+m} - y_j| for j = 0..N-1 (cyclic)."""
        diffs = np.roll(self.points, -m, axis=0) - self.points
        return np.linalg.norm(diffs, axis=1)

    def is_admissible(self, tol: float | None = None) -> bool:
        if tol is None:
            tol = 1e-9 * (self.L / self.N)
        return bool(np.all(self.consecutive_distances() <= self.L / self.N + tol))

    def pairwise_distances(self) -> np.ndarray:
        """Condensed upper-triangle distances, pairs (i, j) with i < j."""
        diffs = self.points[:, None, :] - self.points[None, :, :]
        dmat = np.linalg.norm(diffs, axis=2)
        iu = np.triu_indices(self.N, k=1)
        return dmat[iu]


def regular_polygon(N: int, L: float, dim: int = 2) -> PointConfiguration:
    """Regular N-gon of perimeter L in the plane of the first two axes.

    Circumradius is (L/N) / (2 sin(pi/N)), so consecutive distances are
    exactly L/N and the m-chord is (L/N) sin(pi m/N)/sin(pi/N).
    """
    if N < 2:
        raise ValueError("N must be >= 2")
    if dim < 2:
        raise ValueError("dim must be >= 2")
    radius = (L / N) / (2.0 * math.sin(math.pi / N))
    angles = TWO_PI * np.arange(N) / N
    pts = np.zeros((N, dim))
    pts[:, 0] = radius * np.cos(angles)
    pts[:, 1] = radius * np.sin(angles)
    return PointConfiguration(dim=dim, N=N, L=float(L), points=pts)


def rhomboid(theta: float, side: float = 1.0) -> PointConfiguration:
    """Rhombus with side length ``side`` and vertex angle ``theta`` in (0, pi).

    Vertices are (0,0), (s,0), (s(1+cos t), s sin t), (s cos t, s sin t);
    the diagonals are 2 s cos(theta/2) and 2 s sin(theta/2).
    """
    if not 0.0 < theta < math.pi:
        raise ValueError("theta must lie in the open interval (0, pi)")
    if not side > 0:
        raise ValueError("side must be positive")
    s, c = side * math.sin(theta), side * math.cos(theta)
    pts = np.array([
        [0.0, 0.0],
        [side, 0.0],
        [side + c, s],
        [c, s],
    ])
    return PointConfiguration(dim=2, N=4, L=4.0 * side, points=pts)


def chord_sum(cfg: PointConfiguration, m: int, p: float) -> float:
    """Sum over n of |y_{n+m} - y_n|^p.

    For negative exponents every m-chord must be strictly positive;
    chords below 1e-12 * L raise :class:`SingularChordError` instead of
    silently overflowing.
    """
    _check_m(cfg.N, m)
    if p == 0:
        raise ValueError("p must be nonzero")
    chords = cfg.chord_lengths(m)
    if p < 0 and np.any(chords <= 1e-12 * cfg.L):
        raise SingularChordError(f"m={m} chord below 1e-12*L; negative power undefined")
    return float(np.sum(chords ** p))


def _check_m(N: int, m: int) -> None:
    if not 1 <= m <= N // 2:
        raise ValueError(f"m must satisfy 1 <= m <= floor(N/2) = {N // 2}, got {m}")


# ---------------------------------------------------------------------------
# Fourier loops
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FourierLoop:
    """Closed curve given by Fourier coefficients c_n in C^dim, 1 <= |n| <= M.

    Only the positive-n side is stored; the reality condition
    c_{-n} = conj(c_n) determines the rest.  There is no n = 0 term (the
    curve is centered).  ``unit_normalized`` asserts the mean-square
    speed normalization sum_n n^2 |c_n|^2 = 1 over all nonzero n.
    """

    dim: int
    M: int
    coeffs: np.ndarray = field(repr=False)  # shape (M, dim), row n-1 holds c_n
    unit_normalized: bool = False

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex)
        if self.M < 1:
            raise ValueError("maxMode M must be >= 1")
        if self.dim < 2:
            raise ValueError("dim must be >= 2")
        if c.shape != (self.M, self.dim):
            raise ValueError(f"coeffs must have shape ({self.M}, {self.dim}), got {c.shape}")
        if not np.all(np.isfinite(c)):
            raise ValueError("coefficients must be finite")
        if self.unit_normalized:
            total = self.speed_norm_sq()
            if abs(total - 1.0) > 1e-12:
                raise ValueError(f"unit-normalized loop has sum n^2|c_n|^2 = {total!r}")
        c.flags.writeable = False
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def from_mode_map(cls, dim: int, coeffs: dict[int, np.ndarray],
                      unit_normalized: bool = False) -> "FourierLoop":
        """Build from a map n -> c_n; negative-n entries must conjugate-match."""
        if not coeffs:
            raise ValueError("empty coefficient map")
        if 0 in coeffs:
            raise ValueError("n = 0 coefficient is not allowed")
        M = max(abs(n) for n in coeffs)
        c = np.zeros((M, dim), dtype=complex)
        seen_pos = set()
        for n, v in coeffs.items():
            v = np.asarray(v, dtype=complex)
            if v.shape != (dim,):
                raise ValueError(f"coefficient c_{n} must have {dim} components")
            if n > 0:
                c[n - 1] = v
                seen_pos.add(n)
        for n, v in coeffs.items():
            if n < 0:
                v = np.asarray(v, dtype=complex)
                if -n in seen_pos:
                    if not np.allclose(v, np.conj(c[-n - 1]), rtol=0, atol=1e-13):
                        raise ValueError(f"reality condition violated at n = {n}")
                else:
                    c[-n - 1] = np.conj(v)
        return cls(dim=dim, M=M, coeffs=c, unit_normalized=unit_normalized)

    def coeff(self, n: int) -> np.ndarray:
        """c_n for any nonzero |n| <= M (conjugate for negative n)."""
        if n == 0 or abs(n) > self.M:
            raise ValueError(f"mode n must satisfy 1 <= |n| <= {self.M}")
        return self.coeffs[n - 1] if n > 0 else np.conj(self.coeffs[-n - 1])

    def speed_norm_sq(self) -> float:
        """sum over nonzero n of n^2 |c_n|^2 (equals mean |dGamma/dt|^2)."""
        n = np.arange(1, self.M + 1)
        return float(2.0 * np.sum(n ** 2 * np.sum(np.abs(self.coeffs) ** 2, axis=1)))

    def point(self, t) -> np.ndarray:
        """Gamma(t); t may be a scalar or an array (last axis is dim)."""
        t = np.asarray(t, dtype=float)
        n = np.arange(1, self.M + 1)
        phases = np.exp(1j * t[..., None] * n)  # (..., M)
        return 2.0 * np.real(phases @ self.coeffs)

    def velocity(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        n = np.arange(1, self.M + 1)
        phases = np.exp(1j * t[..., None] * n) * (1j * n)
        return 2.0 * np.real(phases @ self.coeffs)

    def speed(self, t) -> np.ndarray:
        return np.linalg.norm(self.velocity(t), axis=-1)

    def scaled(self, factor: float) -> "FourierLoop":
        return FourierLoop(dim=self.dim, M=self.M, coeffs=self.coeffs * factor)

    def normalized(self) -> "FourierLoop":
        """Rescale so that sum n^2 |c_n|^2 = 1 and set the flag."""
        total = self.speed_norm_sq()
        if total <= 0:
            raise DegenerateCurveError("zero loop cannot be normalized")
        return FourierLoop(dim=self.dim, M=self.M,
                           coeffs=self.coeffs / math.sqrt(total),
                           unit_normalized=True)


# ---------------------------------------------------------------------------
# Arc length
# ---------------------------------------------------------------------------

class ArcLengthMap:
    """Strictly monotone map between arc length s in [0, total] and t in [0, 2pi).

    Cumulative length is integrated panel by panel with an embedded
    Gauss pair (orders 10 and 20); panels are split until the two
    quadratures agree to the requested relative tolerance.  Inversion
    uses the cumulative grid for bracketing and Newton steps on the
    monotone length function.
    """

    def __init__(self, loop: FourierLoop, tol: float = 1e-10):
        self.loop = loop
        self.tol = float(tol)
        self._lo_nodes, self._lo_weights = leggauss(10)
        self._hi_nodes, self._hi_weights = leggauss(20)
        self._build_grid()

    def _panel(self, a: np.ndarray, b: np.ndarray, nodes, weights) -> np.ndarray:
        """Gauss panel integrals of the speed over [a_i, b_i] (vectorized)."""
        half = 0.5 * (b - a)
        mid = 0.5 * (a + b)
        ts = mid[:, None] + half[:, None] * nodes[None, :]
        sp = self.loop.speed(ts)
        return half * (sp @ weights)

    def _build_grid(self):
        panels = max(128, 16 * self.loop.M)
        for _ in range(6):
            edges = np.linspace(0.0, TWO_PI, panels + 1)
            lo = self._panel(edges[:-1], edges[1:], self._lo_nodes, self._lo_weights)
            hi = self._panel(edges[:-1], edges[1:], self._hi_nodes, self._hi_weights)
            total = float(np.sum(hi))
            if total <= 0:
                raise DegenerateCurveError("curve has zero length")
            if np.max(np.abs(hi - lo)) <= self.tol * total / panels:
                break
            panels *= 2
        # degenerate-speed check on the quadrature nodes
        ts = np.linspace(0.0, TWO_PI, 8 * panels, endpoint=False)
        speeds = self.loop.speed(ts)
        mean_speed = float(np.mean(speeds))
        if mean_speed <= 0 or np.min(speeds) < _SPEED_FLOOR * mean_speed:
            raise DegenerateCurveError(
                f"speed drops below {_SPEED_FLOOR:g} of its mean; curve is not immersed")
        self._t_grid = edges
        self._s_grid = np.concatenate([[0.0], np.cumsum(hi)])
        self.total = float(self._s_grid[-1])

    def length(self, t):
        """Arc length s(t) from 0 to t, for t in [0, 2pi] (vectorized)."""
        t_arr = np.atleast_1d(np.asarray(t, dtype=float))
        if np.any((t_arr < -1e-12) | (t_arr > TWO_PI + 1e-12)):
            raise ValueError("t must lie in [0, 2pi]")
        t_arr = np.clip(t_arr, 0.0, TWO_PI)
        idx = np.clip(np.searchsorted(self._t_grid, t_arr, side="right") - 1, 0,
                      len(self._t_grid) - 2)
        base = self._s_grid[idx]
        part = self._panel(self._t_grid[idx], t_arr, self._hi_nodes, self._hi_weights)
        out = base + part
        return float(out[0]) if np.isscalar(t) or np.ndim(t) == 0 else out

    def to_param(self, s):
        """Invert s(t): the t in [0, 2pi] with length(t) = s (vectorized)."""
        s_arr = np.atleast_1d(np.asarray(s, dtype=float))
        if np.any((s_arr < -1e-9 * self.total) | (s_arr > self.total * (1 + 1e-9))):
            raise ValueError("s must lie in [0, total length]")
        s_arr = np.clip(s_arr, 0.0, self.total)
        idx = np.clip(np.searchsorted(self._s_grid, s_arr, side="right") - 1, 0,
                      len(self._s_grid) - 2)
        lo = self._t_grid[idx]
        hi = self._t_grid[idx + 1]
        t = np.interp(s_arr, self._s_grid, self._t_grid)
        for _ in range(60):
            resid = np.atleast_1d(self.length(t)) - s_arr
            if np.all(np.abs(resid) <= self.tol * max(self.total, 1.0)):
                break
            hi = np.where(resid > 0, np.minimum(t, hi), hi)
            lo = np.where(resid <= 0, np.maximum(t, lo), lo)
            speed = self.loop.speed(t)
            t_new = t - resid / np.maximum(speed, 1e-300)
            # fall back to bisection when Newton leaves the bracket
            bad = (t_new < lo) | (t_new > hi)
            t = np.where(bad, 0.5 * (lo + hi), t_new)
        return float(t[0]) if np.isscalar(s) or np.ndim(s) == 0 else t


def arc_length_map(loop: FourierLoop, tol: float = 1e-10) -> ArcLengthMap:
    """Cumulative arc-length map of an immersed loop (see :class:`ArcLengthMap`)."""
    return ArcLengthMap(loop, tol=tol)


def sample_equidistant(loop: FourierLoop, N: int, tol: float = 1e-10,
                       arc_map: ArcLengthMap | None = None) -> PointConfiguration:
    """Marks Gamma(k L/N), k = 0..N-1, in arc-length parametrization.

    The returned configuration carries the loop's own total length as L
    and is admissible by construction (chords never exceed arcs).  A
    precomputed ``arc_map`` may be passed to amortize the quadrature.
    """
    if N < 2:
        raise ValueError("N must be >= 2")
    amap = arc_map if arc_map is not None else ArcLengthMap(loop, tol=tol)
    s_marks = amap.total * np.arange(N) / N
    t_marks = amap.to_param(s_marks)
    pts = loop.point(t_marks)
    return PointConfiguration(dim=loop.dim, N=N, L=amap.total, points=pts)


def random_fourier_loop(seed: int, M: int = 8, decay: float = 3.0,
                        dim: int = 2, length: float = TWO_PI) -> FourierLoop:
    """Random smooth loop with coefficient magnitudes ~ |n|^(-decay).

    Mode 1 is a randomly oriented circle so the curve stays immersed;
    higher modes are complex Gaussian perturbations.  The result is
    rescaled so the total arc length equals ``length`` exactly (via the
    quadrature map), and is bit-identical for a fixed seed.
    """
    if M < 1:
        raise ValueError("M must be >= 1")
    if decay <= 2:
        raise ValueError("decay must exceed 2 for a C^2-like curve")
    rng = np.random.default_rng(seed)
    # orthonormal frame for the base circle
    frame = rng.normal(size=(dim, 2))
    q, _ = np.linalg.qr(frame)
    u, v = q[:, 0], q[:, 1]
    coeffs = np.zeros((M, dim), dtype=complex)
    coeffs[0] = 0.5 * (u - 1j * v)
    amp = 0.1
    for n in range(2, M + 1):
        g = rng.normal(size=dim) + 1j * rng.normal(size=dim)
        coeffs[n - 1] = amp * n ** (-decay) * g
    loop = FourierLoop(dim=dim, M=M, coeffs=coeffs)
    total = ArcLengthMap(loop, tol=1e-12).total
    return loop.scaled(length / total)


def unit_speed_resample(loop: FourierLoop, modes: int | None = None,
                        samples: int | None = None) -> FourierLoop:
    """Re-expand a loop in Fourier modes of its arc-length parametrization.

    Samples Gamma(t(s)) on a uniform s-grid and takes the FFT, yielding
    a loop whose parameter is (numerically) proportional to arc length;
    total length is normalized to 2pi.  Truncation to ``modes`` leaves a
    small speed deviation that shrinks spectrally with the mode count.
    """
    if modes is None:
        modes = max(4 * loop.M, 16)
    if samples is None:
        samples = 1 << max(8, (4 * modes - 1).bit_length())
    amap = ArcLengthMap(loop, tol=1e-12)
    s = amap.total * np.arange(samples) / samples
    pts = loop.point(amap.to_param(s))
    spec = np.fft.fft(pts, axis=0) / samples  # spec[k] multiplies e^{+i k s'}
    coeffs = spec[1:modes + 1].copy()
    out = FourierLoop(dim=loop.dim, M=modes, coeffs=coeffs)
    total = ArcLengthMap(out, tol=1e-12).total
    return out.scaled(TWO_PI / total)


# ---------------------------------------------------------------------------
# Shape distance
# ---------------------------------------------------------------------------

def shape_distance(a: PointConfiguration, b: PointConfiguration) -> float:
    """Minimal RMS point distance over Euclidean motions and relabelings.

    Minimizes over translations, orthogonal maps (rotations and
    reflections), and the dihedral relabelings of the cyclic index
    (N shifts, with and without reversal).  Zero exactly when the two
    configurations are Euclidean-equivalent as necklaces.
    """
    if a.N != b.N or a.dim != b.dim:
        raise ValueError("configurations must share N and dim")
    N = a.N
    A = a.points - a.points.mean(axis=0)
    best = math.inf
    base = b.points - b.points.mean(axis=0)
    for reverse in (False, True):
        pts = base[::-1] if reverse else base
        for shift in range(N):
            B = np.roll(pts, shift, axis=0)
            # orthogonal Procrustes, reflections allowed
            u, sing, vt = np.linalg.svd(B.T @ A)
            rot = u @ vt
            rms = math.sqrt(max(np.sum((A - B @ rot) ** 2) / N, 0.0))
            best = min(best, rms)
    return best
