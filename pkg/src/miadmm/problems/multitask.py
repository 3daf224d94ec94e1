"""Multi-task ridge regression with shared weight polarity between neighbors.

Tasks with neighboring indices must agree on the sign of each feature weight:
``w_{i,j} * w_{i+1,j} >= 0``.  Each task is one block; the block update is an
exact sign-constrained solve of ``||y_i - X_i w||^2 / n_i + lam ||w||^2`` plus
the splitting penalty, with per-coordinate constraints recomputed from the
already-updated previous neighbor and the stale next neighbor.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..engine import BlockContext, BlockSpec, ProblemSpec, StackSelector, Zero
from ..numerics import spd_factor
from ..subsolvers import QuadSubproblem, cd_solve_quadratic
from .signs import merge_bounds, product_bounds


@dataclass(frozen=True)
class MultitaskDataset:
    """Per-task designs and targets (m features each) plus the ridge weight."""

    X: tuple[np.ndarray, ...]
    y: tuple[np.ndarray, ...]
    lam: float

    def __post_init__(self):
        object.__setattr__(self, "X", tuple(np.asarray(a, np.float64) for a in self.X))
        object.__setattr__(self, "y", tuple(np.asarray(a, np.float64) for a in self.y))
        if len(self.X) != len(self.y) or not self.X:
            raise ValueError("need matching nonempty X and y lists")
        m = self.X[0].shape[1]
        for Xi, yi in zip(self.X, self.y):
            if Xi.shape[1] != m:
                raise ValueError("all tasks must share the feature count")
            if Xi.shape[0] != yi.shape[0]:
                raise ValueError("task design and target sizes differ")

    @property
    def n_tasks(self) -> int:
        return len(self.X)

    @property
    def n_features(self) -> int:
        return self.X[0].shape[1]


def gen_multitask(n_tasks: int, n_features: int, samples_per_task: int,
                  lam: float, seed: int) -> MultitaskDataset:
    """Synthetic related tasks: a shared sign pattern with per-task magnitudes."""
    rng = np.random.default_rng(seed)
    signs = np.where(rng.uniform(size=n_features) < 0.5, -1.0, 1.0)
    Xs, ys = [], []
    for _ in range(n_tasks):
        w = signs * rng.uniform(0.2, 1.0, size=n_features)
        Xi = rng.normal(size=(samples_per_task, n_features))
        yi = Xi @ w + 0.05 * rng.normal(size=samples_per_task)
        Xs.append(Xi)
        ys.append(yi)
    return MultitaskDataset(X=tuple(Xs), y=tuple(ys), lam=lam)


def neighbor_bounds(prev_vals: np.ndarray | None,
                    next_vals: np.ndarray | None) -> np.ndarray:
    """Constraint codes induced on one task by its neighbors' current weights.

    Both neighbors nonnegative with at least one nonzero forces the coordinate
    nonnegative (mirrored for nonpositive); strictly opposite neighbor signs
    pin it at zero; two zero neighbors leave it free.  End tasks pass None for
    the missing side.
    """
    if prev_vals is None and next_vals is None:
        raise ValueError("at least one neighbor is required")
    if prev_vals is None:
        return product_bounds(next_vals, same_sign=True)
    if next_vals is None:
        return product_bounds(prev_vals, same_sign=True)
    return merge_bounds(product_bounds(prev_vals, same_sign=True),
                        product_bounds(next_vals, same_sign=True))


def build_multitask_problem(data: MultitaskDataset) -> ProblemSpec:
    """One block per task with stacked coupling and no smooth term."""
    n, m = data.n_tasks, data.n_features
    if n < 2:
        raise ValueError("need at least two tasks")
    eye = np.eye(m)
    bases, lins = [], []
    for Xi, yi in zip(data.X, data.y):
        ni = Xi.shape[0]
        Gi = 2.0 * (Xi.T @ Xi) / ni + 2.0 * data.lam * eye
        bases.append(0.5 * (Gi + Gi.T))
        lins.append(2.0 * (Xi.T @ yi) / ni)
    factors: dict[tuple[int, float], object] = {}

    def make_solver(i: int):
        def solve(ctx: BlockContext) -> np.ndarray:
            prev_vals = ctx.xs[i - 1] if i > 0 else None
            next_vals = ctx.xs[i + 1] if i < n - 1 else None
            cons = neighbor_bounds(prev_vals, next_vals)
            off = i * m
            P = bases[i] + ctx.rho * eye
            q = lins[i] + ctx.rho * ctx.z[off:off + m] - ctx.y[off:off + m]
            key = (i, ctx.rho)
            if key not in factors:
                factors[key] = spd_factor(P)
            sol, _ = cd_solve_quadratic(
                QuadSubproblem(P, q, constraints=cons, tol=ctx.sub_tol),
                factor=factors[key],
            )
            return sol

        return solve

    def objective(xs, z) -> float:
        total = 0.0
        for Xi, yi, w in zip(data.X, data.y, xs):
            r = yi - Xi @ w
            total += float(r @ r) / Xi.shape[0] + data.lam * float(w @ w)
        return total

    def inequality(xs) -> np.ndarray:
        # w_{i,j} w_{i+1,j} >= 0 rewritten as -(w_i * w_{i+1}) <= 0.
        return np.concatenate([-(xs[i] * xs[i + 1]) for i in range(n - 1)])

    blocks = tuple(
        BlockSpec(dim=m, coupling=StackSelector(i * m), block_solver=make_solver(i))
        for i in range(n)
    )
    return ProblemSpec(
        blocks=blocks,
        z_dim=n * m,
        smooth=Zero(),
        objective=objective,
        inequality=inequality,
        initial_point=tuple(np.zeros(m) for _ in range(n)),
    )
