"""Necklace energies and constrained extremization of bead configurations.

The feasible set is "consecutive beads no farther apart than L/N"; on it
the mean m-chord is maximized, and the Coulomb energy minimized, by the
regular polygon.  The solver mirrors the squared-slack Lagrangian: the
inequality constraints get slack variables eliminated in closed form
inside an augmented-Lagrangian outer loop, with a limited-memory
quasi-Newton inner minimizer (gradient-only, Armijo backtracking).
Multipliers reported at convergence are directly comparable to the
closed-form value sin(pi m/N) / (N sin(pi/N)).
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import NoBoundStateError, SingularChordError, StepSizeError
from .geometry import (PointConfiguration, regular_polygon, random_fourier_loop,
                       sample_equidistant, _check_m)
from .chords import nu
from . import spectral


# ---------------------------------------------------------------------------
# Energies and objectives
# ---------------------------------------------------------------------------

def _raw_coulomb(points: np.ndarray, q: float) -> float:
    """q^2 sum over ordered pairs of inverse distances."""
    n = points.shape[0]
    total = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            r = float(np.linalg.norm(points[i] - points[j]))
            if r <= 0:
                raise SingularChordError("coincident beads in Coulomb energy")
            total += 1.0 / r
    return 2.0 * q * q * total


def coulomb_energy(cfg: PointConfiguration, q: float) -> float:
    """Coulomb energy q^2 sum_{j != k} 1/|y_j - y_k| (ordered pairs).

    Also evaluates the chord-class regrouping
    2 q^2 sum_m (nu_m / N) sum_n 1/|y_{n+m} - y_n| and asserts the two
    agree to 1e-10 relative (the regrouping halves each unordered pair,
    hence the factor 2 for the ordered-pair convention).
    """
    if q == 0:
        raise ValueError("charge q must be nonzero")
    raw = _raw_coulomb(cfg.points, q)
    grouped = 0.0
    for m in range(1, cfg.N // 2 + 1):
        chords = cfg.chord_lengths(m)
        if np.any(chords <= 0):
            raise SingularChordError("coincident beads in Coulomb energy")
        grouped += nu(cfg.N, m) / cfg.N * float(np.sum(1.0 / chords))
    grouped *= 2.0 * q * q
    if abs(raw - grouped) > 1e-10 * max(abs(raw), 1.0):
        raise AssertionError(
            f"pair sum {raw!r} and regrouped sum {grouped!r} disagree")
    return raw


def f_m(cfg: PointConfiguration, m: int) -> float:
    """Mean m-chord length (1/N) sum_i |y_i - y_{i+m}|."""
    _check_m(cfg.N, m)
    return float(np.mean(cfg.chord_lengths(m)))


def lagrange_closed_form(N: int, m: int) -> float:
    """Common multiplier value at the regular polygon: sin(pi m/N)/(N sin(pi/N))."""
    _check_m(N, m)
    return math.sin(math.pi * m / N) / (N * math.sin(math.pi / N))


def chebyshev_check(N: int) -> list[float]:
    """Margins sin(pi m/N) sin(pi r/N) - |sin(pi/N) sin(pi m r/N)|.

    Runs over 2 <= r < m <= floor(N/2) and cross-checks the sign of each
    margin against the equivalent statement for Chebyshev polynomials of
    the second kind evaluated through their recurrence.
    """
    if N < 5:
        raise ValueError("N must be at least 5")

    def cheb_u(k: int, x: float) -> float:
        if k == 0:
            return 1.0
        prev, cur = 1.0, 2.0 * x
        for _ in range(k - 1):
            prev, cur = cur, 2.0 * x * cur - prev
        return cur

    margins = []
    for m in range(3, N // 2 + 1):
        for r in range(2, m):
            lhs = math.sin(math.pi * m / N) * math.sin(math.pi * r / N)
            rhs = abs(math.sin(math.pi / N) * math.sin(math.pi * m * r / N))
            margin = lhs - rhs
            u_margin = cheb_u(m - 1, math.cos(math.pi / N)) - abs(
                cheb_u(m - 1, math.cos(math.pi * r / N)))
            if margin * u_margin < 0:
                raise AssertionError(
                    f"sign disagreement between product and recurrence forms "
                    f"at N={N}, m={m}, r={r}")
            margins.append(margin)
    return margins


# ---------------------------------------------------------------------------
# Gauge handling
# ---------------------------------------------------------------------------
#
# y_0 is pinned at the origin, y_1 on the first coordinate axis, and for
# dim 3 also y_2 in the first coordinate plane.  Free variables are the
# remaining coordinates in index order.

def _free_mask(N: int, dim: int) -> np.ndarray:
    mask = np.ones((N, dim), dtype=bool)
    mask[0, :] = False
    mask[1, 1:] = False
    if dim == 3 and N > 2:
        mask[2, 2] = False
    return mask


def _gauge_fix(points: np.ndarray) -> np.ndarray:
    """Rigidly move a configuration into the gauge frame."""
    pts = points - points[0]
    dim = pts.shape[1]
    u1 = pts[1].copy()
    n1 = np.linalg.norm(u1)
    if n1 <= 0:
        raise SingularChordError("y_0 and y_1 coincide; gauge undefined")
    u1 /= n1
    if dim == 2:
        u2 = np.array([-u1[1], u1[0]])
        basis = np.stack([u1, u2], axis=1)
    else:
        ref = pts[2] if pts.shape[0] > 2 else np.array([0.0, 1.0, 0.0])
        w = ref - (ref @ u1) * u1
        nw = np.linalg.norm(w)
        if nw <= 1e-14 * max(np.linalg.norm(ref), 1.0):
            w = np.array([0.0, 1.0, 0.0]) - u1[1] * u1
            nw = np.linalg.norm(w)
        u2 = w / nw
        u3 = np.cross(u1, u2)
        basis = np.stack([u1, u2, u3], axis=1)
    return pts @ basis


def _pack(points: np.ndarray) -> np.ndarray:
    mask = _free_mask(*points.shape)
    return points[mask]


def _unpack(x: np.ndarray, N: int, dim: int) -> np.ndarray:
    pts = np.zeros((N, dim))
    pts[_free_mask(N, dim)] = x
    return pts


# ---------------------------------------------------------------------------
# Constraint and objective derivatives (ambient coordinates)
# ---------------------------------------------------------------------------

def _constraints(points: np.ndarray, L: float) -> tuple[np.ndarray, np.ndarray]:
    """g_i = L/N - |y_i - y_{i+1}| and gradients, shape (N, N, dim)."""
    N, dim = points.shape
    diffs = np.roll(points, -1, axis=0) - points  # y_{i+1} - y_i
    dists = np.linalg.norm(diffs, axis=1)
    g = L / N - dists
    grad = np.zeros((N, N, dim))
    safe = np.maximum(dists, 1e-300)
    units = diffs / safe[:, None]
    for i in range(N):
        grad[i, i] = units[i]          # d/dy_i (L/N - |y_i - y_{i+1}|)
        grad[i, (i + 1) % N] = -units[i]
    return g, grad


def _fm_value_grad(points: np.ndarray, m: int) -> tuple[float, np.ndarray]:
    N, dim = points.shape
    diffs = np.roll(points, -m, axis=0) - points  # y_{i+m} - y_i
    dists = np.linalg.norm(diffs, axis=1)
    if np.any(dists <= 0):
        raise SingularChordError("coincident m-chord beads")
    val = float(np.mean(dists))
    units = diffs / dists[:, None]
    grad = np.zeros((N, dim))
    for i in range(N):
        grad[i] -= units[i]                 # term |y_i - y_{i+m}|
        grad[(i + m) % N] += units[i]
    return val, grad / N


def _coulomb_value_grad(points: np.ndarray, q: float) -> tuple[float, np.ndarray]:
    N, dim = points.shape
    diffs = points[:, None, :] - points[None, :, :]
    dists = np.linalg.norm(diffs, axis=2)
    np.fill_diagonal(dists, 1.0)
    if np.any(dists < 1e-12):
        return 1e100, np.zeros((N, dim))
    inv = 1.0 / dists
    np.fill_diagonal(inv, 0.0)
    val = float(q * q * np.sum(inv))
    grad = -2.0 * q * q * np.sum(diffs * inv[:, :, None] ** 3, axis=1)
    return val, grad


# ---------------------------------------------------------------------------
# Solver
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OptimizerOptions:
    """Knobs for the augmented-Lagrangian driver."""

    restarts: int = 16
    penalty_growth: float = 10.0
    inner_tol: float = 1e-10
    outer_tol: float = 1e-8
    max_outer: int = 30
    seed: int = 0

    def __post_init__(self):
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if min(self.penalty_growth, self.inner_tol, self.outer_tol) <= 0:
            raise ValueError("tolerances and growth factor must be positive")
        if self.max_outer < 1:
            raise ValueError("max outer iterations must be >= 1")


@dataclass(frozen=True)
class KKTReport:
    """Converged multipliers, slacks and residuals of a constrained run."""

    multipliers: np.ndarray = field(repr=False)
    slacks: np.ndarray = field(repr=False)
    residual: float
    active: np.ndarray = field(repr=False)
    converged: bool
    iterations: int
    objective: float

    def as_dict(self) -> dict:
        return {
            "multipliers": [float(v) for v in self.multipliers],
            "slacks": [float(v) for v in self.slacks],
            "residual": float(self.residual),
            "active": [bool(v) for v in self.active],
            "converged": bool(self.converged),
            "iterations": int(self.iterations),
            "objective": float(self.objective),
        }


def _lbfgs(fun_grad, x0: np.ndarray, gtol: float, max_iter: int = 400,
           memory: int = 10):
    """Limited-memory quasi-Newton descent with Armijo backtracking."""
    x = x0.copy()
    f, g = fun_grad(x)
    s_hist: list[np.ndarray] = []
    y_hist: list[np.ndarray] = []
    for _ in range(max_iter):
        gnorm = float(np.max(np.abs(g))) if g.size else 0.0
        if gnorm <= gtol:
            break
        # two-loop recursion
        q = g.copy()
        alphas = []
        for s, y in zip(reversed(s_hist), reversed(y_hist)):
            rho = 1.0 / float(y @ s)
            a = rho * float(s @ q)
            alphas.append((a, rho, s, y))
            q -= a * y
        if y_hist:
            y_last, s_last = y_hist[-1], s_hist[-1]
            q *= float(s_last @ y_last) / float(y_last @ y_last)
        for a, rho, s, y in reversed(alphas):
            b = rho * float(y @ q)
            q += (a - b) * s
        d = -q
        slope = float(g @ d)
        if slope >= 0:
            d = -g
            slope = -float(g @ g)
        step = 1.0 if y_hist else min(1.0, 1.0 / max(gnorm, 1e-12))
        accepted = False
        for _ in range(60):
            x_new = x + step * d
            f_new, g_new = fun_grad(x_new)
            if np.isfinite(f_new) and f_new <= f + 1e-4 * step * slope:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break
        s_vec = x_new - x
        y_vec = g_new - g
        curv = float(s_vec @ y_vec)
        if curv > 1e-12 * np.linalg.norm(s_vec) * np.linalg.norm(y_vec):
            s_hist.append(s_vec)
            y_hist.append(y_vec)
            if len(s_hist) > memory:
                s_hist.pop(0)
                y_hist.pop(0)
        x, f, g = x_new, f_new, g_new
    return x, f, g


def _augmented_lagrangian(obj_grad, N: int, dim: int, L: float,
                          x0: np.ndarray, opts: OptimizerOptions):
    """Minimize obj subject to g_i >= 0 via the squared-slack penalty.

    obj_grad maps the free-variable vector to (value, gradient).  For
    fixed multipliers the optimal slack is z_r^2 = max(0, g_r - lam/mu),
    which turns the slack Lagrangian into the classic piecewise penalty
    minimized here; multipliers update as lam <- max(0, lam - mu g).
    """
    mask = _free_mask(N, dim)

    def constraint_parts(x):
        pts = _unpack(x, N, dim)
        g, grad = _constraints(pts, L)
        return pts, g, grad

    def penalized(x, lam, mu):
        val, grad_obj = obj_grad(x)
        if not np.isfinite(val):
            return val, np.zeros_like(x)
        _, g, ggrad = constraint_parts(x)
        shifted = lam - mu * g
        act = shifted > 0
        val += float(np.sum(shifted[act] ** 2 - lam[act] ** 2)) / (2.0 * mu)
        total_ggrad = -np.einsum("r,rnd->nd", shifted * act, ggrad)
        return val, grad_obj + total_ggrad[mask]

    x = x0.copy()
    lam = np.zeros(N)
    mu = 10.0
    mu_cap = 1e12
    gtol_k = 1e-2
    feas_k = 1e-1
    converged = False
    outer_done = 0
    for outer in range(opts.max_outer):
        x, _, _ = _lbfgs(lambda v: penalized(v, lam, mu),
                         x, max(opts.inner_tol, gtol_k))
        pts, g, ggrad = constraint_parts(x)
        lam_hat = np.maximum(0.0, lam - mu * g)
        val, grad_obj = obj_grad(x)
        stat = grad_obj - np.einsum("r,rnd->nd", lam_hat, ggrad)[mask]
        r_stat = float(np.linalg.norm(stat))
        r_feas = float(max(0.0, -np.min(g)))
        r_comp = float(np.max(np.abs(lam_hat * g))) if N else 0.0
        outer_done = outer + 1
        if max(r_stat, r_feas, r_comp) <= opts.outer_tol:
            lam = lam_hat
            converged = True
            break
        # shifted feasibility: active constraints need g ~ 0, inactive lam ~ 0
        shifted_feas = float(np.max(np.abs(np.minimum(g, lam / mu))))
        if shifted_feas <= feas_k:
            lam = lam_hat
            gtol_k = max(gtol_k * 0.1, opts.inner_tol)
            feas_k = max(feas_k * 0.1, opts.outer_tol)
        else:
            mu = min(mu * opts.penalty_growth, mu_cap)
            gtol_k = max(1e-2 / mu, opts.inner_tol)
    pts, g, ggrad = constraint_parts(x)
    val, grad_obj = obj_grad(x)
    stat = grad_obj - np.einsum("r,rnd->nd", lam, ggrad)[mask]
    slacks = np.sqrt(np.maximum(0.0, g - lam / mu))
    residual = math.hypot(float(np.linalg.norm(stat)),
                          float(np.linalg.norm(2.0 * lam * slacks)))
    report = KKTReport(multipliers=lam, slacks=slacks, residual=residual,
                       active=slacks == 0.0, converged=converged,
                       iterations=outer_done, objective=val)
    return x, report


def _random_start(N: int, dim: int, L: float, seed_material) -> np.ndarray:
    """Random admissible configuration sampled from a random smooth loop."""
    child = int(np.random.SeedSequence(seed_material).generate_state(1)[0])
    loop = random_fourier_loop(child, M=6, decay=3.0, dim=dim, length=L)
    cfg = sample_equidistant(loop, N)
    return _pack(_gauge_fix(cfg.points))


def _thread_count() -> int:
    env = os.environ.get("CHORDLAB_THREADS", "")
    try:
        return max(1, int(env)) if env else 1
    except ValueError:
        return 1


def _run_restarts(make_obj, N: int, dim: int, L: float, opts: OptimizerOptions,
                  maximize: bool):
    """Best-of-restarts driver; merge order is independent of scheduling."""

    def one(ridx: int):
        x0 = _random_start(N, dim, L, [opts.seed, ridx])
        obj = make_obj()
        x, report = _augmented_lagrangian(obj, N, dim, L, x0, opts)
        return x, report

    workers = _thread_count()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, range(opts.restarts)))
    else:
        results = [one(r) for r in range(opts.restarts)]

    def key(item):
        # report.objective is the minimized value (negated for max problems)
        idx, (x, report) = item
        return (report.objective, report.residual, idx)

    best_idx, (best_x, best_report) = min(enumerate(results), key=key)
    pts = _unpack(best_x, N, dim)
    cfg = PointConfiguration(dim=dim, N=N, L=L, points=pts)
    if maximize:
        best_report = KKTReport(multipliers=best_report.multipliers,
                                slacks=best_report.slacks,
                                residual=best_report.residual,
                                active=best_report.active,
                                converged=best_report.converged,
                                iterations=best_report.iterations,
                                objective=-best_report.objective)
    return cfg, best_report


def maximize_fm(N: int, L: float, dim: int, m: int,
                opts: OptimizerOptions | None = None):
    """Maximize the mean m-chord over admissible configurations.

    Returns the best configuration over seeded random restarts together
    with its KKT report; at the regular polygon all constraints are
    active and the multipliers equal the closed-form value.
    """
    _check_m(N, m)
    opts = opts or OptimizerOptions()
    mask = _free_mask(N, dim)

    def make_obj():
        def obj(x):
            pts = _unpack(x, N, dim)
            val, grad = _fm_value_grad(pts, m)
            return -val, -grad[mask]
        return obj

    return _run_restarts(make_obj, N, dim, L, opts, maximize=True)


def minimize_coulomb(N: int, L: float, dim: int, q: float = 1.0,
                     opts: OptimizerOptions | None = None):
    """Minimize the necklace Coulomb energy over admissible configurations."""
    if N < 2:
        raise ValueError("N must be >= 2")
    if q == 0:
        raise ValueError("charge q must be nonzero")
    opts = opts or OptimizerOptions()
    mask = _free_mask(N, dim)

    def make_obj():
        def obj(x):
            pts = _unpack(x, N, dim)
            val, grad = _coulomb_value_grad(pts, q)
            return val, grad[mask]
        return obj

    return _run_restarts(make_obj, N, dim, L, opts, maximize=False)


def maximize_ground_state(N: int, L: float, alpha: float, dim: int,
                          opts: OptimizerOptions | None = None):
    """Maximize the point-interaction ground-state energy.

    Objective evaluations run the spectral root finder; gradients are
    central finite differences with step 1e-6 L, which floors the
    reachable stationarity residual near 1e-5 regardless of the
    requested outer tolerance.
    """
    if N < 2:
        raise ValueError("N must be >= 2")
    opts = opts or OptimizerOptions()
    poly = regular_polygon(N, L, dim)
    if spectral.ground_state(poly, alpha, dim) is None:
        raise NoBoundStateError(
            f"no bound state at the regular polygon for alpha={alpha}, dim={dim}")
    eff = OptimizerOptions(restarts=opts.restarts,
                           penalty_growth=opts.penalty_growth,
                           inner_tol=max(opts.inner_tol, 1e-8),
                           outer_tol=max(opts.outer_tol, 3e-5),
                           max_outer=min(opts.max_outer, 12),
                           seed=opts.seed)
    step = 1e-6 * L
    mask = _free_mask(N, dim)
    nfree = int(np.sum(mask))

    def make_obj():
        def energy(x):
            pts = _unpack(x, N, dim)
            state = spectral.ground_state(pts, alpha, dim)
            if state is None:
                return math.inf  # repulsive enough to unbind: worst case
            return -state.energy

        def obj(x):
            base = energy(x)
            if not np.isfinite(base):
                return math.inf, np.zeros(nfree)
            grad = np.zeros(nfree)
            for i in range(nfree):
                xp = x.copy()
                xp[i] += step
                xm = x.copy()
                xm[i] -= step
                grad[i] = (energy(xp) - energy(xm)) / (2.0 * step)
            return base, grad
        return obj

    return _run_restarts(make_obj, N, dim, L, eff, maximize=True)


# ---------------------------------------------------------------------------
# Hessian at the polygon
# ---------------------------------------------------------------------------

def _euclidean_directions(points: np.ndarray) -> np.ndarray:
    """Translation and rotation tangent vectors, flattened columns."""
    N, dim = points.shape
    cols = []
    for a in range(dim):
        v = np.zeros((N, dim))
        v[:, a] = 1.0
        cols.append(v.ravel())
    for a in range(dim):
        for b in range(a + 1, dim):
            gen = np.zeros((dim, dim))
            gen[a, b] = -1.0
            gen[b, a] = 1.0
            cols.append((points @ gen.T).ravel())
    return np.stack(cols, axis=1)


def _km_gradient(points: np.ndarray, m: int, lam: float, L: float) -> np.ndarray:
    _, fgrad = _fm_value_grad(points, m)
    _, ggrad = _constraints(points, L)
    return (fgrad + lam * np.sum(ggrad, axis=0)).ravel()


def projected_hessian(N: int, m: int, h: float | None = None,
                      L: float = 1.0, dim: int = 2) -> np.ndarray:
    """Eigenvalues of the slack-Lagrangian Hessian at the regular polygon.

    Central differences of the analytic gradient of K_m (closed-form
    multiplier, slacks zero) give the Hessian, which is then projected
    onto the orthogonal complement of the Euclidean-motion directions
    and the constraint gradients.  All eigenvalues negative means the
    polygon is a sharp constrained local maximum of the mean m-chord.
    A half-step recomputation guards against an unstable step size.
    """
    _check_m(N, m)
    if h is None:
        h = 1e-4 * L
    if not h > 0:
        raise ValueError("step h must be positive")
    lam = lagrange_closed_form(N, m)
    base = regular_polygon(N, L, dim).points

    def hessian(step: float) -> np.ndarray:
        n_all = N * dim
        hess = np.zeros((n_all, n_all))
        flat = base.ravel()
        for i in range(n_all):
            xp = flat.copy()
            xp[i] += step
            xm = flat.copy()
            xm[i] -= step
            gp = _km_gradient(xp.reshape(N, dim), m, lam, L)
            gm = _km_gradient(xm.reshape(N, dim), m, lam, L)
            hess[:, i] = (gp - gm) / (2.0 * step)
        return 0.5 * (hess + hess.T)

    def projected_eigs(step: float) -> np.ndarray:
        hess = hessian(step)
        _, ggrad = _constraints(base, L)
        span = np.concatenate(
            [_euclidean_directions(base),
             ggrad.reshape(N, N * dim).T], axis=1)
        u, sing, _ = np.linalg.svd(span, full_matrices=True)
        rank = int(np.sum(sing > 1e-10 * sing[0]))
        z = u[:, rank:]
        if z.shape[1] == 0:
            return np.array([])
        return np.linalg.eigvalsh(z.T @ hess @ z)

    eigs_h = projected_eigs(h)
    eigs_half = projected_eigs(0.5 * h)
    if eigs_h.size:
        scale = float(np.max(np.abs(eigs_half))) + 1e-300
        if float(np.max(np.abs(eigs_h - eigs_half))) > 1e-3 * scale + 1e-12:
            raise StepSizeError(
                f"projected Hessian unstable between h={h:g} and h/2")
    return eigs_half
