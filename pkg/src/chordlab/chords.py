"""Mean-chord inequalities and the Green's-function deficit.

For beads at equal arc spacing on a loop of length L, the chord sums
sum_n |y_{n+m} - y_n|^p are bounded by their regular-polygon values:
from above for p > 0, from below for negative exponents.  Each check
returns an :class:`InequalityReport`; the deficit is sign-normalized so
nonnegative always means "holds".
"""

from __future__ import annotations

import math
from dataclasses import dataclass, asdict

from .errors import SingularChordError
from .geometry import PointConfiguration, regular_polygon, chord_sum, _check_m
from .spectral import green_value

#: holds means deficit >= -DEFICIT_RTOL * |rhs|
DEFICIT_RTOL = 1e-9


@dataclass(frozen=True)
class InequalityReport:
    """One evaluated instance of the chord inequality family.

    ``p`` is signed: positive for the upper family, negative for the
    lower family with exponent -|p|.  deficit = rhs - lhs for p > 0 and
    lhs - rhs for p < 0, so holds <=> deficit >= -tol * |rhs|.
    """

    N: int
    m: int
    p: float
    L: float
    lhs: float
    rhs: float
    deficit: float
    holds: bool

    def as_dict(self) -> dict:
        return asdict(self)

    CSV_HEADER = "N,m,p,L,lhs,rhs,deficit,holds"


def nu(N: int, m: int) -> int:
    """Number of distinct m-chords: N, except N/2 for the diameter class."""
    _check_m(N, m)
    if 2 * m == N:
        return N // 2
    return N


def dp_bound(N: int, L: float, m: int, p: float) -> float:
    """Regular-polygon side of the chord inequality for signed exponent p.

    p > 0: N^(1-p) L^p sin^p(pi m/N) / sin^p(pi/N);
    p < 0 (exponent -|p|): N^(1+|p|) sin^|p|(pi/N) / (L^|p| sin^|p|(pi m/N)).
    """
    _check_m(N, m)
    if p == 0:
        raise ValueError("p must be nonzero")
    ratio = math.sin(math.pi * m / N) / math.sin(math.pi / N)
    if p > 0:
        return N ** (1.0 - p) * L ** p * ratio ** p
    q = -p
    return N ** (1.0 + q) / (L ** q * ratio ** q)


def check_dp(cfg: PointConfiguration, m: int, p: float) -> InequalityReport:
    """Upper chord inequality: sum |y_{n+m} - y_n|^p <= polygon value, p > 0."""
    if not p > 0:
        raise ValueError("check_dp requires p > 0")
    lhs = chord_sum(cfg, m, p)
    rhs = dp_bound(cfg.N, cfg.L, m, p)
    deficit = rhs - lhs
    return InequalityReport(N=cfg.N, m=m, p=p, L=cfg.L, lhs=lhs, rhs=rhs,
                            deficit=deficit,
                            holds=deficit >= -DEFICIT_RTOL * abs(rhs))


def check_dminus(cfg: PointConfiguration, m: int, p: float) -> InequalityReport:
    """Lower chord inequality: sum |y_{n+m} - y_n|^{-p} >= polygon value, p > 0."""
    if not p > 0:
        raise ValueError("check_dminus requires p > 0")
    lhs = chord_sum(cfg, m, -p)
    rhs = dp_bound(cfg.N, cfg.L, m, -p)
    deficit = lhs - rhs
    return InequalityReport(N=cfg.N, m=m, p=-p, L=cfg.L, lhs=lhs, rhs=rhs,
                            deficit=deficit,
                            holds=deficit >= -DEFICIT_RTOL * abs(rhs))


def green_deficit(cfg: PointConfiguration, kappa: float, dim: int) -> float:
    """Pair sum of Green's values, configuration minus regular polygon.

    Returns sum_{i<j} G_kappa(|y_i - y_j|) - sum_{i<j} G_kappa(|t_i - t_j|)
    where t is the regular polygon with the same (N, L).  A positive
    value certifies the Green's-function inequality for this kappa; the
    value is zero exactly at the polygon itself.  ``dim`` selects the
    2D (Bessel) or 3D (Yukawa) kernel and need not match cfg.dim.
    """
    if dim not in (2, 3):
        raise ValueError("dim must be 2 or 3")
    if not kappa > 0:
        raise ValueError("kappa must be positive")
    poly = regular_polygon(cfg.N, cfg.L, max(cfg.dim, 2))
    total = 0.0
    for dist in cfg.pairwise_distances():
        if dist <= 0:
            raise SingularChordError("coincident beads in green_deficit")
        total += green_value(float(dist), kappa, dim)
    for dist in poly.pairwise_distances():
        total -= green_value(float(dist), kappa, dim)
    return total
