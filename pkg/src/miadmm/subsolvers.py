"""Exact solvers for the convex block subproblems.

Two workhorses:

* :func:`cd_solve_quadratic` minimizes a strictly convex quadratic with an
  optional l1 term under separable per-coordinate sign constraints, by cyclic
  coordinate descent with exact scalar updates.  Clamping the coordinates of
  the unconstrained minimizer of a coupled quadratic is NOT the constrained
  minimizer, so the clamp is used only as a warm start and coordinate sweeps
  run until a KKT residual tolerance is met.
* :func:`frob_ball_solve` minimizes a regularized least-squares objective
  over the unit Frobenius ball via a secular equation in the ball multiplier,
  solved by bisection.

All functions are pure and safe to invoke concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum

import numpy as np
from scipy.linalg import cho_solve

from .numerics import spd_factor

try:
    from numba import njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a hard dependency here
    _HAVE_NUMBA = False


class CoordConstraint(IntEnum):
    """Per-coordinate feasible set for subproblem solvers."""

    FREE = 0
    NON_NEGATIVE = 1
    NON_POSITIVE = 2
    FIXED_ZERO = 3


FREE = CoordConstraint.FREE
NON_NEGATIVE = CoordConstraint.NON_NEGATIVE
NON_POSITIVE = CoordConstraint.NON_POSITIVE
FIXED_ZERO = CoordConstraint.FIXED_ZERO

DEFAULT_KKT_TOL = 1e-10
DEFAULT_SWEEP_CAP = 10_000


class MaxSweepsExceeded(Exception):
    """Coordinate descent did not meet the KKT tolerance within the sweep cap.

    Signals ill-conditioning; the caller may loosen the tolerance.  The last
    iterate and its residual are attached as ``x_last`` / ``kkt_residual``.
    """

    def __init__(self, x_last: np.ndarray, kkt_residual: float, sweeps: int):
        super().__init__(
            f"KKT residual {kkt_residual:.3e} above tolerance after {sweeps} sweeps"
        )
        self.x_last = x_last
        self.kkt_residual = kkt_residual
        self.sweeps = sweeps


class BisectionFailed(Exception):
    """No bracket for the ball multiplier within 200 doublings (degenerate data)."""


def scalar_coordinate_min(a: float, b: float, gamma: float = 0.0,
                          kind: CoordConstraint = FREE) -> float:
    """Exact minimizer of ``0.5*a*t**2 - b*t + gamma*|t|`` over one constraint set.

    This is the soft-threshold of ``b`` at level ``gamma``, divided by ``a``
    and clamped to the feasible set.  Requires ``a > 0`` and ``gamma >= 0``.
    """
    if a <= 0.0:
        raise ValueError(f"curvature must be positive, got {a}")
    if gamma < 0.0:
        raise ValueError(f"l1 weight must be nonnegative, got {gamma}")
    if kind == FIXED_ZERO:
        return 0.0
    if kind == NON_NEGATIVE:
        return max((b - gamma) / a, 0.0)
    if kind == NON_POSITIVE:
        return min((b + gamma) / a, 0.0)
    if b > gamma:
        return (b - gamma) / a
    if b < -gamma:
        return (b + gamma) / a
    return 0.0


def clamp_to_constraints(x: np.ndarray, kinds: np.ndarray) -> np.ndarray:
    """Project ``x`` coordinate-wise onto the constraint sets (used as warm start)."""
    out = np.array(x, dtype=np.float64)
    out[(kinds == NON_NEGATIVE) & (out < 0.0)] = 0.0
    out[(kinds == NON_POSITIVE) & (out > 0.0)] = 0.0
    out[kinds == FIXED_ZERO] = 0.0
    return out


@dataclass
class QuadSubproblem:
    """Constrained quadratic block subproblem ``min 0.5 x'Px - q'x + sum gamma_j |x_j|``.

    Attributes
    ----------
    P : ndarray (n, n)
        Symmetric positive definite quadratic form.
    q : ndarray (n,)
        Linear term.
    l1_weight : float or ndarray (n,)
        Nonnegative l1 weight, scalar or per coordinate.
    constraints : ndarray (n,) of CoordConstraint codes
        Per-coordinate feasible set.
    x0 : ndarray (n,) or None
        Feasible warm start; when None the clamped unconstrained minimizer
        is used.
    tol : float
        KKT residual tolerance, relative to the linear-term scale: one-sided
        directional derivatives into the feasible set must be
        ``>= -tol * (1 + ||q||_inf)``.  An absolute threshold would sit below
        the attainable floating-point floor once gradient magnitudes reach
        the 1e3-1e4 range.
    max_sweeps : int
        Cap on full coordinate sweeps.
    """

    P: np.ndarray
    q: np.ndarray
    l1_weight: float | np.ndarray = 0.0
    constraints: np.ndarray | None = None
    x0: np.ndarray | None = None
    tol: float = DEFAULT_KKT_TOL
    max_sweeps: int = DEFAULT_SWEEP_CAP

    def __post_init__(self):
        self.P = np.ascontiguousarray(self.P, dtype=np.float64)
        self.q = np.asarray(self.q, dtype=np.float64)
        n = self.q.shape[0]
        if self.P.shape != (n, n):
            raise ValueError(f"P shape {self.P.shape} does not match q length {n}")
        if self.tol <= 0.0:
            raise ValueError("tol must be positive")
        gamma = np.asarray(self.l1_weight, dtype=np.float64)
        if gamma.ndim == 0:
            gamma = np.full(n, float(gamma))
        if gamma.shape != (n,) or np.any(gamma < 0.0):
            raise ValueError("l1_weight must be a nonnegative scalar or length-n vector")
        self.l1_weight = gamma
        if self.constraints is None:
            self.constraints = np.zeros(n, dtype=np.int8)
        else:
            self.constraints = np.asarray(self.constraints, dtype=np.int8)
            if self.constraints.shape != (n,):
                raise ValueError("constraints must have one entry per coordinate")


def _cd_sweeps(P, q, gamma, kinds, x, s, tol, max_sweeps):
    # Cyclic sweeps, fixed ascending coordinate order for reproducibility.
    # s tracks P @ x incrementally and is refreshed periodically to kill
    # floating-point drift.  Returns (sweeps_executed, kkt_residual).
    n = x.shape[0]
    resid = np.inf
    for sweep in range(1, max_sweeps + 1):
        for j in range(n):
            kj = kinds[j]
            if kj == 3:
                continue
            pjj = P[j, j]
            b = q[j] - (s[j] - pjj * x[j])
            g = gamma[j]
            if kj == 1:
                t = (b - g) / pjj
                if t < 0.0:
                    t = 0.0
            elif kj == 2:
                t = (b + g) / pjj
                if t > 0.0:
                    t = 0.0
            else:
                if b > g:
                    t = (b - g) / pjj
                elif b < -g:
                    t = (b + g) / pjj
                else:
                    t = 0.0
            d = t - x[j]
            if d != 0.0:
                for l in range(n):
                    s[l] += P[j, l] * d
                x[j] = t
        if sweep % 64 == 0:
            for i in range(n):
                acc = 0.0
                for l in range(n):
                    acc += P[i, l] * x[l]
                s[i] = acc
        resid = 0.0
        for j in range(n):
            kj = kinds[j]
            if kj == 3:
                continue
            gj = s[j] - q[j]
            g = gamma[j]
            xj = x[j]
            up = (kj == 0) or (kj == 1) or (kj == 2 and xj < 0.0)
            down = (kj == 0) or (kj == 2) or (kj == 1 and xj > 0.0)
            if up:
                d_plus = gj + (g if xj >= 0.0 else -g)
                if -d_plus > resid:
                    resid = -d_plus
            if down:
                d_minus = -gj + (g if xj <= 0.0 else -g)
                if -d_minus > resid:
                    resid = -d_minus
        if resid <= tol:
            return sweep, resid
    return max_sweeps, resid


if _HAVE_NUMBA:
    _cd_sweeps = njit(cache=True)(_cd_sweeps)


def cd_solve_quadratic(sub: QuadSubproblem, factor=None) -> tuple[np.ndarray, int]:
    """Solve a :class:`QuadSubproblem` exactly by cyclic coordinate descent.

    Parameters
    ----------
    sub : QuadSubproblem
        Well-formed subproblem; ``sub.x0`` must be feasible when given.
    factor : optional
        Pre-computed ``numerics.spd_factor(sub.P)``, reused across calls that
        share the same quadratic form (warm-start solve only).

    Returns
    -------
    x : ndarray
        Feasible point whose one-sided directional derivatives into the
        feasible set are all ``>= -sub.tol * (1 + ||q||_inf)``.
    sweeps : int
        Number of full coordinate sweeps executed.

    Raises
    ------
    MaxSweepsExceeded
        If the KKT tolerance is not met within ``sub.max_sweeps`` sweeps.
    """
    P, q, kinds = sub.P, sub.q, sub.constraints
    diag = np.diagonal(P)
    if np.any(diag <= 0.0):
        from .numerics import NotPositiveDefinite

        raise NotPositiveDefinite("quadratic form has a nonpositive diagonal entry")
    if sub.x0 is not None:
        x = np.array(sub.x0, dtype=np.float64)
        if (np.any(x[kinds == NON_NEGATIVE] < 0.0)
                or np.any(x[kinds == NON_POSITIVE] > 0.0)
                or np.any(x[kinds == FIXED_ZERO] != 0.0)):
            raise ValueError("warm start x0 violates the coordinate constraints")
    else:
        if factor is None:
            factor = spd_factor(P)
        x = clamp_to_constraints(cho_solve(factor, q, check_finite=False), kinds)
    s = P @ x
    tol_eff = sub.tol * (1.0 + float(np.abs(q).max()))
    sweeps, resid = _cd_sweeps(P, q, sub.l1_weight, kinds, x, s,
                               tol_eff, int(sub.max_sweeps))
    if resid > tol_eff:
        raise MaxSweepsExceeded(x, float(resid), sweeps)
    return x, sweeps


def frob_ball_solve(G: np.ndarray, R: np.ndarray, rho: float, C: np.ndarray,
                    tol: float = DEFAULT_KKT_TOL) -> np.ndarray:
    """Minimize ``||D Y - X||_F^2 + (rho/2)||D - C||_F^2`` over ``||D||_F <= 1``.

    ``G = Y Y'`` and ``R = X Y'`` are precomputed by the caller.  The
    unconstrained stationary system is ``D (2G + rho I) = 2R + rho C``; when
    its solution leaves the unit ball, the ball multiplier ``mu > 0`` with
    ``D(mu) (2G + (rho + 2 mu) I) = 2R + rho C`` is found by bisection on the
    secular equation ``||D(mu)||_F = 1``.

    The returned matrix satisfies ``||D||_F <= 1`` (the active-constraint
    solution is scaled onto the boundary, so downstream feasibility checks
    hold to roundoff) and complementary slackness
    ``|mu * (||D||_F - 1)| <= tol``.

    Raises
    ------
    BisectionFailed
        If no bracket is found within 200 doublings of ``mu``.
    """
    G = np.asarray(G, dtype=np.float64)
    R = np.asarray(R, dtype=np.float64)
    C = np.asarray(C, dtype=np.float64)
    if rho <= 0.0:
        raise ValueError("rho must be positive")
    if tol <= 0.0:
        raise ValueError("tol must be positive")
    r = G.shape[0]
    if G.shape != (r, r):
        raise ValueError("G must be square")
    scale = 1.0 + np.abs(G).max()
    if np.abs(G - G.T).max() > 1e-10 * scale:
        raise ValueError("G must be symmetric")
    if R.shape != C.shape or R.shape[1] != r:
        raise ValueError("R and C must both have shape (m, r)")

    B = 2.0 * R + rho * C
    lam, Q = np.linalg.eigh(G)
    lam = np.maximum(lam, 0.0)
    M = B @ Q
    col_sq = np.sum(M * M, axis=0)

    def norm_at(mu: float) -> float:
        denom = 2.0 * lam + rho + 2.0 * mu
        return float(np.sqrt(np.sum(col_sq / (denom * denom))))

    def d_at(mu: float) -> np.ndarray:
        denom = 2.0 * lam + rho + 2.0 * mu
        return (M / denom) @ Q.T

    if norm_at(0.0) <= 1.0:
        return d_at(0.0)

    hi = 1.0
    for _ in range(200):
        if norm_at(hi) < 1.0:
            break
        hi *= 2.0
    else:
        raise BisectionFailed("no multiplier bracket within 200 doublings")
    lo = 0.0
    mu = hi
    nrm = norm_at(mu)
    for _ in range(20_000):
        mid = 0.5 * (lo + hi)
        nrm_mid = norm_at(mid)
        if nrm_mid > 1.0:
            lo = mid
        else:
            hi = mid
        mu, nrm = mid, nrm_mid
        if abs(nrm - 1.0) <= 0.5 * tol and mu * abs(nrm - 1.0) <= 0.5 * tol:
            break
    D = d_at(mu)
    nrm = float(np.linalg.norm(D))
    if nrm > 1.0:
        D = D / nrm
    return D
