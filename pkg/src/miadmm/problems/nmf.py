"""Nonnegative matrix factorization: ``min ||U - V W||_F^2, V >= 0, W >= 0``.

Two blocks V (m x r) and W (r x n) with stacked coupling.  The V-update is
row-separable and the W-update column-separable, so each reduces to many
small nonnegative quadratic solves sharing one r x r quadratic form.

Both factors start small and positive at the 1e-2 scale: the all-zero point
is a stationary point of the alternating scheme.  The entries are graded
rather than constant because a constant init makes every inner dimension
identical, a permutation symmetry the updates preserve exactly, which would
confine the iterates to rank-1 factor pairs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..engine import BlockContext, BlockSpec, ProblemSpec, StackSelector, Zero
from ..numerics import spd_factor
from ..subsolvers import NON_NEGATIVE, QuadSubproblem, cd_solve_quadratic

INITIAL_FACTOR_VALUE = 1e-2


@dataclass(frozen=True)
class NmfProblem:
    """Nonnegative data matrix U (m x n) and inner dimension r."""

    U: np.ndarray
    r: int

    def __post_init__(self):
        object.__setattr__(self, "U", np.asarray(self.U, dtype=np.float64))
        if np.any(self.U < 0.0):
            raise ValueError("U must be entry-wise nonnegative")
        if self.r < 1:
            raise ValueError("r must be at least 1")


def gen_nmf(m: int, n: int, r: int, seed: int) -> NmfProblem:
    """Exactly factorable data: U = V* W* with uniform nonnegative factors."""
    rng = np.random.default_rng(seed)
    V = rng.uniform(0.0, 1.0, size=(m, r))
    W = rng.uniform(0.0, 1.0, size=(r, n))
    return NmfProblem(U=V @ W, r=r)


def build_nmf_problem(p: NmfProblem) -> ProblemSpec:
    """Blocks V and W, all-nonnegative constraints, stacked coupling."""
    U = p.U
    m, n = U.shape
    r = p.r
    v_dim = m * r
    w_dim = r * n
    eye_r = np.eye(r)
    nonneg = np.full(r, int(NON_NEGATIVE), dtype=np.int8)

    def solve_V(ctx: BlockContext) -> np.ndarray:
        W = ctx.xs[1].reshape(r, n)
        P = 2.0 * (W @ W.T) + ctx.rho * eye_r
        P = 0.5 * (P + P.T)
        factor = spd_factor(P)
        Zseg = ctx.z[:v_dim].reshape(m, r)
        Yseg = ctx.y[:v_dim].reshape(m, r)
        lin = 2.0 * (U @ W.T) + ctx.rho * Zseg - Yseg
        out = np.empty((m, r))
        for a in range(m):
            row, _ = cd_solve_quadratic(
                QuadSubproblem(P, lin[a], constraints=nonneg, tol=ctx.sub_tol),
                factor=factor,
            )
            out[a] = row
        return out.ravel()

    def solve_W(ctx: BlockContext) -> np.ndarray:
        V = ctx.xs[0].reshape(m, r)
        P = 2.0 * (V.T @ V) + ctx.rho * eye_r
        P = 0.5 * (P + P.T)
        factor = spd_factor(P)
        Zseg = ctx.z[v_dim:].reshape(r, n)
        Yseg = ctx.y[v_dim:].reshape(r, n)
        lin = 2.0 * (V.T @ U) + ctx.rho * Zseg - Yseg
        out = np.empty((r, n))
        for j in range(n):
            col, _ = cd_solve_quadratic(
                QuadSubproblem(P, lin[:, j], constraints=nonneg, tol=ctx.sub_tol),
                factor=factor,
            )
            out[:, j] = col
        return out.ravel()

    def objective(xs, z) -> float:
        V = xs[0].reshape(m, r)
        W = xs[1].reshape(r, n)
        resid = U - V @ W
        return float(np.sum(resid * resid))

    def inequality(xs) -> np.ndarray:
        # V >= 0 and W >= 0 summarized by the worst entry of each factor.
        return np.array([-xs[0].min(), -xs[1].min()])

    blocks = (
        BlockSpec(dim=v_dim, coupling=StackSelector(0), block_solver=solve_V),
        BlockSpec(dim=w_dim, coupling=StackSelector(v_dim), block_solver=solve_W),
    )
    v0 = INITIAL_FACTOR_VALUE * (1.0 + np.arange(v_dim) / v_dim)
    w0 = INITIAL_FACTOR_VALUE * (1.0 + np.arange(w_dim) / w_dim)
    return ProblemSpec(
        blocks=blocks,
        z_dim=v_dim + w_dim,
        smooth=Zero(),
        objective=objective,
        inequality=inequality,
        initial_point=(v0, w0),
    )


def relative_error(p: NmfProblem, xs) -> float:
    """Reconstruction error ``||U - V W||_F / ||U||_F`` at the given factors."""
    m, n = p.U.shape
    V = xs[0].reshape(m, p.r)
    W = xs[1].reshape(p.r, n)
    denom = np.linalg.norm(p.U)
    if denom == 0.0:
        return float(np.linalg.norm(V @ W))
    return float(np.linalg.norm(p.U - V @ W) / denom)
