"""Point-interaction spectral problem on a bead configuration.

The bound states of N identical zero-range interactions sit where the
N x N matrix Q(kappa) becomes singular: Q has alpha - xi(kappa) on the
diagonal and minus the free Green's value at the bead separations off
the diagonal.  The ground-state energy is -kappa1^2 with kappa1 the
point where the minimal eigenvalue of Q crosses zero; the minimal
eigenvalue is strictly increasing in kappa, which the root finder
verifies at runtime rather than assuming.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import MonotonicityError, SingularChordError
from .geometry import PointConfiguration

EULER_GAMMA = 0.5772156649015329

# Chebyshev fits of exp(x) * sqrt(x) * K0(x); max relative error < 1e-20
# on each range.  Argument maps: u = (16/x - 5)/3 on (2, 8] and
# u = 16/x - 1 on (8, inf).
_K0E_CHEB_2_8 = (
    2.4235605209667205858,
    -0.022356526056998190520,
    0.00077341811546938582353,
    -0.000042810066888860994645,
    3.0817001738629747437e-6,
    -2.6393672220096649741e-7,
    2.5637130364034692063e-8,
    -2.7427055499002012639e-9,
    3.1694296580974995921e-10,
    -3.9023532869621841416e-11,
    5.0680406981885754021e-12,
    -6.8895747410078706795e-13,
    9.7449784978259176914e-14,
    -1.4273328418845485054e-14,
    2.1564125710214630396e-15,
    -3.3496542551495627722e-16,
    5.3352602169529116922e-17,
    -8.6936699808907538077e-18,
    1.4464043478622122279e-18,
    -2.4528898255001296818e-19,
    4.2337545262321715643e-20,
)
_K0E_CHEB_8_INF = (
    2.4879813017369240776,
    -0.0091748526910256953107,
    0.00014445509317750058210,
    -4.0136141754357097287e-6,
    1.5678318108523106726e-7,
    -7.7701104385217377103e-9,
    4.6111825761797178825e-10,
    -3.1585929978605657705e-11,
    2.4350180393650411278e-12,
    -2.0743313873983478977e-13,
    1.9257872805899170847e-14,
    -1.9275548058389561036e-15,
    2.0621980291978182783e-16,
    -2.3416851175792424026e-17,
    2.8059028106430422468e-18,
    -3.5305076311618079458e-19,
    4.6452954229351082674e-20,
)


def _clenshaw(coeffs, u: float) -> float:
    b0 = b1 = 0.0
    for a in reversed(coeffs[1:]):
        b0, b1 = 2.0 * u * b0 - b1 + a, b0
    return u * b0 - b1 + 0.5 * coeffs[0]


def bessel_k0(x: float) -> float:
    """Modified Bessel function K0 for x > 0.

    Ascending log series for x <= 2, Chebyshev expansions of
    exp(x) sqrt(x) K0(x) beyond; underflows gracefully to 0 for very
    large arguments.
    """
    if not x > 0:
        raise ValueError("bessel_k0 requires x > 0")
    if x <= 2.0:
        z = 0.25 * x * x
        i0_term = 1.0
        i0 = 1.0
        k_sum = 0.0
        harmonic = 0.0
        for k in range(1, 60):
            i0_term *= z / (k * k)
            harmonic += 1.0 / k
            i0 += i0_term
            k_sum += i0_term * harmonic
            if i0_term < 1e-18 * i0:
                break
        return -(math.log(0.5 * x) + EULER_GAMMA) * i0 + k_sum
    if x <= 8.0:
        g = _clenshaw(_K0E_CHEB_2_8, (16.0 / x - 5.0) / 3.0)
    else:
        g = _clenshaw(_K0E_CHEB_8_INF, 16.0 / x - 1.0)
    return g * math.exp(-x) / math.sqrt(x)


def green_value(r: float, kappa: float, dim: int) -> float:
    """Free Green's function G_kappa at distance r: K0/(2 pi) in 2D,
    Yukawa exp(-kappa r)/(4 pi r) in 3D.  Decreasing and convex in r."""
    if not r > 0:
        raise ValueError("green_value requires r > 0")
    if not kappa > 0:
        raise ValueError("green_value requires kappa > 0")
    if dim == 2:
        return bessel_k0(kappa * r) / (2.0 * math.pi)
    if dim == 3:
        return math.exp(-kappa * r) / (4.0 * math.pi * r)
    raise ValueError("dim must be 2 or 3")


def xi(kappa: float, dim: int) -> float:
    """Regularized Green's value at the interaction site."""
    if not kappa > 0:
        raise ValueError("xi requires kappa > 0")
    if dim == 2:
        return -(math.log(0.5 * kappa) + EULER_GAMMA) / (2.0 * math.pi)
    if dim == 3:
        return -kappa / (4.0 * math.pi)
    raise ValueError("dim must be 2 or 3")


# ---------------------------------------------------------------------------
# Q matrix
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class QMatrix:
    """Symmetric spectral-condition matrix with its defining parameters."""

    matrix: np.ndarray = field(repr=False)
    alpha: float
    kappa: float
    dim: int

    @property
    def N(self) -> int:
        return self.matrix.shape[0]


def _points_of(cfg) -> np.ndarray:
    """Coordinate array from a PointConfiguration or a raw (N, d) array.

    Raw arrays admit the single-bead case N = 1, which the geometry
    types exclude but the spectral anchors use.
    """
    if isinstance(cfg, PointConfiguration):
        return cfg.points
    pts = np.atleast_2d(np.asarray(cfg, dtype=float))
    if pts.ndim != 2 or pts.shape[0] < 1:
        raise ValueError("expected an (N, dim) coordinate array")
    return pts


def _distance_matrix(pts: np.ndarray) -> np.ndarray:
    diffs = pts[:, None, :] - pts[None, :, :]
    return np.linalg.norm(diffs, axis=2)


def _assemble_q(dists: np.ndarray, alpha: float, kappa: float, dim: int) -> np.ndarray:
    n = dists.shape[0]
    q = np.zeros((n, n))
    np.fill_diagonal(q, alpha - xi(kappa, dim))
    if n > 1:
        iu = np.triu_indices(n, k=1)
        if dim == 2:
            vals = np.array([bessel_k0(kappa * r) for r in dists[iu]]) / (2.0 * math.pi)
        else:
            r = dists[iu]
            vals = np.exp(-kappa * r) / (4.0 * math.pi * r)
        q[iu] = -vals
        q[(iu[1], iu[0])] = -vals
    return q


def build_q(cfg, alpha: float, kappa: float, dim: int) -> QMatrix:
    """Q(kappa) for a configuration: (alpha - xi) delta_ij - (1-delta_ij) g_ij."""
    if dim not in (2, 3):
        raise ValueError("dim must be 2 or 3")
    pts = _points_of(cfg)
    if isinstance(cfg, PointConfiguration) and cfg.dim != dim:
        raise ValueError(f"dim={dim} does not match configuration dim={cfg.dim}")
    if not kappa > 0:
        raise ValueError("kappa must be positive")
    dists = _distance_matrix(pts)
    n = pts.shape[0]
    if n > 1:
        iu = np.triu_indices(n, k=1)
        if np.any(dists[iu] <= 0):
            raise SingularChordError("coincident beads in Q matrix")
    return QMatrix(matrix=_assemble_q(dists, alpha, kappa, dim),
                   alpha=alpha, kappa=kappa, dim=dim)


# ---------------------------------------------------------------------------
# Symmetric eigensolver (cyclic Jacobi)
# ---------------------------------------------------------------------------

def jacobi_eigh(a: np.ndarray, tol: float = 1e-15, max_sweeps: int = 60,
                vectors: bool = True):
    """All eigenvalues/eigenvectors of a symmetric matrix by cyclic Jacobi.

    Rotations sweep the upper triangle until the off-diagonal norm falls
    below ``tol`` times the matrix scale.  Deterministic; O(N^3) per
    sweep, intended for the small matrices this package produces.  With
    ``vectors=False`` the accumulation of the rotation product is
    skipped and the second return value is None.
    """
    a = np.array(a, dtype=float)
    n = a.shape[0]
    v = np.eye(n) if vectors else None
    if n == 1:
        return np.array([a[0, 0]]), v
    scale = max(np.max(np.abs(a)), 1e-300)
    for _ in range(max_sweeps):
        off = math.sqrt(2.0 * np.sum(np.triu(a, k=1) ** 2))
        if off <= tol * scale * n:
            break
        thresh = off / (n * n)
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= 0.1 * thresh:
                    continue
                theta = 0.5 * (a[q, q] - a[p, p]) / apq
                t = math.copysign(1.0, theta) / (abs(theta) + math.hypot(theta, 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                col_p = a[:, p].copy()
                col_q = a[:, q].copy()
                a[:, p] = c * col_p - s * col_q
                a[:, q] = s * col_p + c * col_q
                row_p = a[p, :].copy()
                row_q = a[q, :].copy()
                a[p, :] = c * row_p - s * row_q
                a[q, :] = s * row_p + c * row_q
                a[p, q] = 0.0
                a[q, p] = 0.0
                if vectors:
                    vec_p = v[:, p].copy()
                    vec_q = v[:, q].copy()
                    v[:, p] = c * vec_p - s * vec_q
                    v[:, q] = s * vec_p + c * vec_q
    return np.diag(a).copy(), v


def min_eig(q) -> tuple[float, np.ndarray]:
    """Smallest eigenvalue and a unit eigenvector of a symmetric matrix.

    Accepts a :class:`QMatrix` or a plain array.  The eigenvector sign
    is fixed so its largest-magnitude component is positive.
    """
    mat = q.matrix if isinstance(q, QMatrix) else np.asarray(q, dtype=float)
    vals, vecs = jacobi_eigh(mat)
    k = int(np.argmin(vals))
    vec = vecs[:, k]
    pivot = vec[int(np.argmax(np.abs(vec)))]
    if pivot < 0:
        vec = -vec
    vec = vec / np.linalg.norm(vec)
    return float(vals[k]), vec


# ---------------------------------------------------------------------------
# Ground state
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GroundState:
    """Converged ground state: energy = -kappa1^2 by construction."""

    kappa1: float
    energy: float
    eigvec: np.ndarray = field(repr=False)
    iterations: int


def ground_state(cfg, alpha: float, dim: int, tol: float = 1e-12) -> GroundState | None:
    """Ground-state energy of the point-interaction Hamiltonian.

    Locates kappa1 > 0 with min_eig(Q(kappa1)) = 0 by bracketing and
    bisection; the minimal eigenvalue must be increasing in kappa, which
    is asserted on every evaluated pair (MonotonicityError otherwise).
    Returns None when no bound state exists (possible for dim 3 with
    alpha above the critical coupling; dim 2 always binds).
    """
    if dim not in (2, 3):
        raise ValueError("dim must be 2 or 3")
    pts = _points_of(cfg)
    if isinstance(cfg, PointConfiguration) and cfg.dim != dim:
        raise ValueError(f"dim={dim} does not match configuration dim={cfg.dim}")
    dists = _distance_matrix(pts)
    if pts.shape[0] > 1:
        iu = np.triu_indices(pts.shape[0], k=1)
        if np.any(dists[iu] <= 0):
            raise SingularChordError("coincident beads")

    evals: list[tuple[float, float]] = []

    def mu(kappa: float) -> float:
        vals, _ = jacobi_eigh(_assemble_q(dists, alpha, kappa, dim), vectors=False)
        val = float(np.min(vals))
        evals.append((kappa, val))
        return val

    def check_monotone():
        pairs = sorted(evals)
        for (k0, m0), (k1, m1) in zip(pairs, pairs[1:]):
            if k1 > k0 * (1 + 1e-14) and m1 < m0 - 1e-11 * max(1.0, abs(m0)):
                raise MonotonicityError(
                    f"min eigenvalue not increasing in kappa: "
                    f"mu({k0:.6g}) = {m0:.6g}, mu({k1:.6g}) = {m1:.6g}")

    iterations = 0
    kappa_lo = 1e-6
    mu_lo = mu(kappa_lo)
    iterations += 1
    if mu_lo >= 0.0:
        if dim == 3:
            mu_tiny = mu(1e-8)
            mu_ref = mu(1.0)
            iterations += 2
            check_monotone()
            if mu_tiny >= 0.0:
                return None
            kappa_lo, mu_lo = 1e-8, mu_tiny
        else:
            # 2D binds for every alpha; xi diverges as kappa -> 0+
            while mu_lo >= 0.0 and kappa_lo > 1e-280:
                kappa_lo *= 1e-2
                mu_lo = mu(kappa_lo)
                iterations += 1
            if mu_lo >= 0.0:
                raise MonotonicityError("failed to bracket the 2D ground state")

    kappa_hi = max(1.0, 2.0 * kappa_lo)
    mu_hi = mu(kappa_hi)
    iterations += 1
    doublings = 0
    while mu_hi <= 0.0:
        kappa_hi *= 2.0
        mu_hi = mu(kappa_hi)
        iterations += 1
        doublings += 1
        if doublings > 200:
            raise MonotonicityError("failed to bracket: min eigenvalue never positive")
    check_monotone()

    for _ in range(60):
        if kappa_hi - kappa_lo <= tol:
            break
        mid = 0.5 * (kappa_lo + kappa_hi)
        mu_mid = mu(mid)
        iterations += 1
        if mu_mid < 0.0:
            kappa_lo = mid
        else:
            kappa_hi = mid
    check_monotone()

    kappa1 = 0.5 * (kappa_lo + kappa_hi)
    _, vec = min_eig(_assemble_q(dists, alpha, kappa1, dim))
    return GroundState(kappa1=kappa1, energy=-kappa1 * kappa1,
                       eigvec=vec, iterations=iterations)


def rayleigh_upper_bound(cfg, alpha: float, kappa: float, dim: int) -> float:
    """Rayleigh quotient of Q(kappa) on the flat vector N^{-1/2}(1,..,1).

    Equals alpha - xi - (2/N) sum_{i<j} g_ij, an upper bound for the
    minimal eigenvalue; tight exactly at regular polygons.
    """
    if dim not in (2, 3):
        raise ValueError("dim must be 2 or 3")
    if not kappa > 0:
        raise ValueError("kappa must be positive")
    pts = _points_of(cfg)
    n = pts.shape[0]
    total = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            r = float(np.linalg.norm(pts[i] - pts[j]))
            if r <= 0:
                raise SingularChordError("coincident beads")
            total += green_value(r, kappa, dim)
    return alpha - xi(kappa, dim) - 2.0 * total / n
