"""Regularized linear regression with pairwise opposite-sign constraints.

The model is ``min ||y - X [a; b]||^2 + lambda1 (||a||^2 + ||b||^2)`` subject
to ``a_i * b_i <= 0`` for every coordinate pair.  Split into the two natural
blocks a and b with stacked coupling ``z = [a; b]`` and no smooth term, each
block update is an exact sign-constrained ridge solve.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..engine import BlockContext, BlockSpec, ProblemSpec, StackSelector, Zero
from ..numerics import spd_factor
from ..subsolvers import QuadSubproblem, cd_solve_quadratic
from .signs import product_bounds


@dataclass(frozen=True)
class SyntheticDataset:
    """Design matrix X (N x 2M), targets y, and the planted coefficients."""

    X: np.ndarray
    y: np.ndarray
    alpha_true: np.ndarray
    beta_true: np.ndarray
    seed: int


def gen_synthetic(N: int, M: int, noise_sd: float, seed: int) -> SyntheticDataset:
    """Draw X and the true coefficients uniform on [-1, 1]; y = X w + Gaussian noise.

    Deterministic for a fixed seed.
    """
    if N < 1 or M < 1:
        raise ValueError("N and M must be at least 1")
    if noise_sd < 0.0:
        raise ValueError("noise_sd must be nonnegative")
    rng = np.random.default_rng(seed)
    X = rng.uniform(-1.0, 1.0, size=(N, 2 * M))
    alpha = rng.uniform(-1.0, 1.0, size=M)
    beta = rng.uniform(-1.0, 1.0, size=M)
    y = X @ np.concatenate([alpha, beta])
    if noise_sd > 0.0:
        y = y + rng.normal(0.0, noise_sd, size=N)
    return SyntheticDataset(X=X, y=y, alpha_true=alpha, beta_true=beta, seed=seed)


def build_synthetic_problem(data: SyntheticDataset, lambda1: float) -> ProblemSpec:
    """Two-block problem spec for the opposite-sign ridge regression.

    Each block subproblem has quadratic form ``2 Xb'Xb + 2 lambda1 I + rho I``
    with the partner block folded into the linear term, and per-coordinate
    constraints refreshed from the partner's current signs (partner > 0 forces
    the coordinate nonpositive and vice versa; a zero partner leaves it free).
    The zero initial point is feasible.
    """
    if lambda1 <= 0.0:
        raise ValueError("lambda1 must be positive")
    X = np.asarray(data.X, dtype=np.float64)
    y = np.asarray(data.y, dtype=np.float64)
    M = X.shape[1] // 2
    if X.shape[1] != 2 * M or y.shape != (X.shape[0],):
        raise ValueError("X must have an even number of columns matching y")
    X1, X2 = X[:, :M], X[:, M:]
    eye = np.eye(M)
    G11 = 2.0 * (X1.T @ X1) + 2.0 * lambda1 * eye
    G22 = 2.0 * (X2.T @ X2) + 2.0 * lambda1 * eye
    G12 = 2.0 * (X1.T @ X2)
    b1 = 2.0 * (X1.T @ y)
    b2 = 2.0 * (X2.T @ y)
    G11 = 0.5 * (G11 + G11.T)
    G22 = 0.5 * (G22 + G22.T)
    factors: dict[tuple[int, float], object] = {}

    def solve_block(ctx: BlockContext, own: int) -> np.ndarray:
        partner = ctx.xs[1 - own]
        base, cross, lin = (G11, G12, b1) if own == 0 else (G22, G12.T, b2)
        off = own * M
        P = base + ctx.rho * eye
        q = lin - cross @ partner + ctx.rho * ctx.z[off:off + M] - ctx.y[off:off + M]
        key = (own, ctx.rho)
        if key not in factors:
            factors[key] = spd_factor(P)
        cons = product_bounds(partner, same_sign=False)
        sol, _ = cd_solve_quadratic(
            QuadSubproblem(P, q, constraints=cons, tol=ctx.sub_tol),
            factor=factors[key],
        )
        return sol

    def objective(xs, z) -> float:
        r = y - X1 @ xs[0] - X2 @ xs[1]
        return float(r @ r) + lambda1 * (float(xs[0] @ xs[0]) + float(xs[1] @ xs[1]))

    def inequality(xs) -> np.ndarray:
        return xs[0] * xs[1]

    blocks = (
        BlockSpec(dim=M, coupling=StackSelector(0),
                  block_solver=lambda ctx: solve_block(ctx, 0)),
        BlockSpec(dim=M, coupling=StackSelector(M),
                  block_solver=lambda ctx: solve_block(ctx, 1)),
    )
    return ProblemSpec(
        blocks=blocks,
        z_dim=2 * M,
        smooth=Zero(),
        objective=objective,
        inequality=inequality,
        initial_point=(np.zeros(M), np.zeros(M)),
    )
