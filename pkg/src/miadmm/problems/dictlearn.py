"""Sparse dictionary learning: ``min ||D Y - X||_F^2 + gamma ||Y||_1, ||D||_F <= 1``.

Two blocks: the dictionary D (Frobenius-ball-constrained least squares via
the secular-equation solver) and the sparse code Y (column-wise l1 coordinate
descent; all columns share one quadratic form, factorized once per update).

The origin (D = 0, Y = 0) is an exact fixed point of the alternating scheme:
with Y = 0 the D-update sees no data term and vice versa.  The dictionary is
therefore initialized from the first r data columns, scaled just inside the
unit ball.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..engine import BlockContext, BlockSpec, ProblemSpec, StackSelector, Zero
from ..numerics import spd_factor
from ..subsolvers import QuadSubproblem, cd_solve_quadratic, frob_ball_solve


@dataclass(frozen=True)
class DictLearnProblem:
    """Data matrix X (d x n), l1 weight gamma >= 0, and dictionary size r."""

    X: np.ndarray
    gamma: float
    r: int

    def __post_init__(self):
        object.__setattr__(self, "X", np.asarray(self.X, dtype=np.float64))
        if self.gamma < 0.0:
            raise ValueError("gamma must be nonnegative")
        if not (1 <= self.r <= min(self.X.shape)):
            raise ValueError("r must be between 1 and min(X.shape)")


def gen_dictlearn(d: int, n: int, r: int, gamma: float, seed: int) -> DictLearnProblem:
    """Data with an exact rank-r factorization whose dictionary fits in the ball."""
    rng = np.random.default_rng(seed)
    D = rng.normal(size=(d, r))
    D *= 0.9 / np.linalg.norm(D)
    Y = rng.normal(size=(r, n)) * (rng.uniform(size=(r, n)) < 0.6)
    return DictLearnProblem(X=D @ Y, gamma=gamma, r=r)


def build_dictlearn_problem(p: DictLearnProblem) -> ProblemSpec:
    """Blocks D (ball-constrained) and Y (l1), stacked coupling, no smooth term."""
    X = p.X
    d, n = X.shape
    r = p.r
    d_dim = d * r
    y_dim = r * n
    eye_r = np.eye(r)

    def solve_D(ctx: BlockContext) -> np.ndarray:
        if ctx.rho <= 0.0:
            raise ValueError("the ball-constrained dictionary block needs rho > 0")
        Y = ctx.xs[1].reshape(r, n)
        G = Y @ Y.T
        G = 0.5 * (G + G.T)
        R = X @ Y.T
        C = (ctx.z[:d_dim] - ctx.y[:d_dim] / ctx.rho).reshape(d, r)
        D = frob_ball_solve(G, R, ctx.rho, C, tol=ctx.sub_tol)
        return D.ravel()

    def solve_Y(ctx: BlockContext) -> np.ndarray:
        D = ctx.xs[0].reshape(d, r)
        P = 2.0 * (D.T @ D) + ctx.rho * eye_r
        P = 0.5 * (P + P.T)
        factor = spd_factor(P)
        Zseg = ctx.z[d_dim:].reshape(r, n)
        Yseg = ctx.y[d_dim:].reshape(r, n)
        lin = 2.0 * (D.T @ X) + ctx.rho * Zseg - Yseg
        out = np.empty((r, n))
        for j in range(n):
            col, _ = cd_solve_quadratic(
                QuadSubproblem(P, lin[:, j], l1_weight=p.gamma, tol=ctx.sub_tol),
                factor=factor,
            )
            out[:, j] = col
        return out.ravel()

    def objective(xs, z) -> float:
        D = xs[0].reshape(d, r)
        Y = xs[1].reshape(r, n)
        resid = D @ Y - X
        return float(np.sum(resid * resid)) + p.gamma * float(np.abs(Y).sum())

    def inequality(xs) -> np.ndarray:
        return np.array([np.linalg.norm(xs[0]) - 1.0])

    norm_head = np.linalg.norm(X[:, :r])
    if norm_head > 0.0:
        D0 = 0.999 * X[:, :r] / norm_head
    else:
        D0 = np.zeros((d, r))
    blocks = (
        BlockSpec(dim=d_dim, coupling=StackSelector(0), block_solver=solve_D),
        BlockSpec(dim=y_dim, coupling=StackSelector(d_dim), block_solver=solve_Y),
    )
    return ProblemSpec(
        blocks=blocks,
        z_dim=d_dim + y_dim,
        smooth=Zero(),
        objective=objective,
        inequality=inequality,
        initial_point=(D0.ravel(), np.zeros(y_dim)),
    )
