"""Generic block-splitting solver loop with dual ascent and certificates.

The problem shape is

    min  f(x_1,...,x_n) + sum_i g_i(x_i) + h(z)
    s.t. l(x_1,...,x_n) <= 0,  sum_i A_i x_i - z = 0

with f and l multi-convex, g_i convex, h Lipschitz differentiable with
constant H.  One iteration performs a Gauss-Seidel sweep of exact block
minimizations (each block sees already-updated earlier blocks and stale later
blocks), an exact z-update, and a dual ascent step of size rho.  A solve is
strictly single-threaded: the sweeps are order-dependent by definition.
Distinct solves on distinct states may run concurrently; a
:class:`ProblemSpec` is immutable and shareable.

The caller supplies one exact solver callback per block; builders for the
concrete applications live in :mod:`miadmm.problems`.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Sequence

import numpy as np

from . import diagnostics
from .diagnostics import (
    FEASIBILITY_SLACK,
    ITERATE_BOUND,
    DescentConstants,
    IterationRecord,
    RhoTooSmall,
    augmented_lagrangian,
    check_sufficient_descent,
    descent_constants,
    update_u,
)
from .numerics import solve_spd

log = logging.getLogger("miadmm.engine")


# --------------------------------------------------------------------------
# Couplings
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class StackSelector:
    """Coupling that embeds a block into coordinates [offset, offset+dim) of z.

    Evaluated by pure index arithmetic; the embedding matrix is never
    materialized.
    """

    offset: int


@dataclass(frozen=True)
class DenseCoupling:
    """General dense coupling matrix of shape (z_dim, block_dim), full column rank."""

    matrix: np.ndarray

    def __post_init__(self):
        A = np.asarray(self.matrix, dtype=np.float64)
        object.__setattr__(self, "matrix", A)
        if A.ndim != 2 or np.linalg.matrix_rank(A) < A.shape[1]:
            raise ValueError("coupling matrix must have full column rank")


@dataclass(frozen=True)
class BlockContext:
    """Everything a block solver callback may look at for one update.

    ``xs`` is the live Gauss-Seidel list: entries before the current block
    are already updated this iteration, later entries are from the previous
    iteration.  Callbacks must not mutate it.
    """

    index: int
    xs: list
    z: np.ndarray
    y: np.ndarray
    rho: float
    sub_tol: float


@dataclass(frozen=True)
class BlockSpec:
    """One variable block: dimension, coupling into z, and its exact solver."""

    dim: int
    coupling: StackSelector | DenseCoupling
    block_solver: Callable[[BlockContext], np.ndarray]


# --------------------------------------------------------------------------
# Smooth term h(z)
# --------------------------------------------------------------------------

class SmoothTerm:
    """Base for the smooth coupling term h(z); subclasses provide H = Lip(grad h)."""

    H: float = 0.0

    def value(self, z: np.ndarray) -> float:
        raise NotImplementedError

    def gradient(self, z: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def minimize(self, ax: np.ndarray, y: np.ndarray, rho: float) -> np.ndarray:
        """Solve ``min_z h(z) - y'z + (rho/2)||ax - z||^2`` exactly."""
        raise NotImplementedError


class Zero(SmoothTerm):
    """h = 0; the z-update is the closed form ``ax + y/rho``."""

    H = 0.0

    def value(self, z):
        return 0.0

    def gradient(self, z):
        return np.zeros_like(z)

    def minimize(self, ax, y, rho):
        return ax + y / rho


class Quadratic(SmoothTerm):
    """h(z) = 0.5 z'Qz + c'z with Q symmetric positive semidefinite.

    H is the largest eigenvalue of Q, estimated by power iteration to 1e-6
    relative accuracy at construction.
    """

    def __init__(self, Q: np.ndarray, c: np.ndarray):
        self.Q = np.asarray(Q, dtype=np.float64)
        self.c = np.asarray(c, dtype=np.float64)
        n = self.c.shape[0]
        if self.Q.shape != (n, n):
            raise ValueError("Q and c dimensions do not match")
        if np.abs(self.Q - self.Q.T).max() > 1e-10 * (1.0 + np.abs(self.Q).max()):
            raise ValueError("Q must be symmetric")
        self.H = _power_iteration_lmax(self.Q)

    def value(self, z):
        return 0.5 * float(z @ (self.Q @ z)) + float(self.c @ z)

    def gradient(self, z):
        return self.Q @ z + self.c

    def minimize(self, ax, y, rho):
        n = self.Q.shape[0]
        return solve_spd(self.Q + rho * np.eye(n), rho * ax + y - self.c)


class Custom(SmoothTerm):
    """User-supplied h: evaluator, gradient, exact z-minimizer, and Lipschitz constant."""

    def __init__(self, value_fn, gradient_fn, minimize_fn, lipschitz: float):
        if lipschitz < 0.0:
            raise ValueError("Lipschitz constant must be nonnegative")
        self._value = value_fn
        self._gradient = gradient_fn
        self._minimize = minimize_fn
        self.H = float(lipschitz)

    def value(self, z):
        return float(self._value(z))

    def gradient(self, z):
        return np.asarray(self._gradient(z), dtype=np.float64)

    def minimize(self, ax, y, rho):
        return np.asarray(self._minimize(ax, y, rho), dtype=np.float64)


def _power_iteration_lmax(Q: np.ndarray, rel_tol: float = 1e-6,
                          max_iter: int = 100_000) -> float:
    n = Q.shape[0]
    v = np.ones(n) / math.sqrt(n)
    lam_prev = 0.0
    for _ in range(max_iter):
        w = Q @ v
        norm_w = float(np.linalg.norm(w))
        if norm_w == 0.0:
            return 0.0
        lam = float(v @ w)
        v = w / norm_w
        if abs(lam - lam_prev) <= rel_tol * max(abs(lam), 1e-300):
            return lam
        lam_prev = lam
    return lam_prev


# --------------------------------------------------------------------------
# Problem, config, state
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ProblemSpec:
    """Immutable problem description consumed by :func:`run`.

    ``objective(xs, z)`` returns ``f + sum_i g_i + h``; ``inequality(xs)``
    returns the vector of inequality-constraint values (feasible iff all
    ``<= 0``).  ``initial_point`` must be feasible.
    """

    blocks: tuple[BlockSpec, ...]
    z_dim: int
    smooth: SmoothTerm
    objective: Callable[[Sequence[np.ndarray], np.ndarray], float]
    inequality: Callable[[Sequence[np.ndarray]], np.ndarray]
    initial_point: tuple[np.ndarray, ...]

    def __post_init__(self):
        object.__setattr__(self, "blocks", tuple(self.blocks))
        object.__setattr__(
            self,
            "initial_point",
            tuple(np.asarray(x, dtype=np.float64) for x in self.initial_point),
        )
        if len(self.blocks) == 0:
            raise ValueError("at least one block is required")
        if len(self.initial_point) != len(self.blocks):
            raise ValueError("initial_point must have one vector per block")
        stack_ranges = []
        for b, x0 in zip(self.blocks, self.initial_point):
            if x0.shape != (b.dim,):
                raise ValueError("initial_point entry does not match block dim")
            if isinstance(b.coupling, StackSelector):
                off = b.coupling.offset
                if off < 0 or off + b.dim > self.z_dim:
                    raise ValueError("stack coupling range outside [0, z_dim)")
                stack_ranges.append((off, off + b.dim))
            else:
                if b.coupling.matrix.shape != (self.z_dim, b.dim):
                    raise ValueError("dense coupling matrix shape mismatch")
        stack_ranges.sort()
        for (a0, a1), (b0, b1) in zip(stack_ranges, stack_ranges[1:]):
            if b0 < a1:
                raise ValueError("stack coupling ranges overlap")
        if len(stack_ranges) == len(self.blocks):
            covered = sum(b - a for a, b in stack_ranges)
            if covered != self.z_dim or stack_ranges[0][0] != 0 \
                    or stack_ranges[-1][1] != self.z_dim:
                raise ValueError("stack selectors must partition [0, z_dim)")
        ineq = np.asarray(self.inequality(list(self.initial_point)), dtype=np.float64)
        if ineq.size and float(ineq.max()) > FEASIBILITY_SLACK:
            raise ValueError("initial point violates the inequality constraints")

    def coupled_sum(self, xs: Sequence[np.ndarray]) -> np.ndarray:
        """Return ``sum_i A_i x_i``."""
        out = np.zeros(self.z_dim)
        for b, x in zip(self.blocks, xs):
            if isinstance(b.coupling, StackSelector):
                off = b.coupling.offset
                out[off:off + b.dim] += x
            else:
                out += b.coupling.matrix @ x
        return out

    def block_image(self, i: int, x: np.ndarray) -> np.ndarray:
        """Return ``A_i x`` for block i (used for coupled step norms)."""
        b = self.blocks[i]
        if isinstance(b.coupling, StackSelector):
            return x
        return b.coupling.matrix @ x


@dataclass
class SolverConfig:
    """Solver knobs.

    ``rho`` must exceed 2H whenever ``diagnostics_enabled`` so the descent
    certificate constants exist.  ``seed`` is carried for provenance in run
    outputs; the solve itself is deterministic (fixed block and coordinate
    orders).
    """

    rho: float
    max_iter: int = 1000
    tol: float = 1e-10
    sub_tol: float = 1e-10
    diagnostics_enabled: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.rho <= 0.0:
            raise ValueError("rho must be positive")
        if self.tol <= 0.0:
            raise ValueError("tol must be positive")
        if self.sub_tol <= 0.0:
            raise ValueError("sub_tol must be positive")
        if self.max_iter < 0:
            raise ValueError("max_iter must be nonnegative")


@dataclass
class SolverState:
    """Current iterates: block values x, auxiliary z, dual y, iteration count k."""

    x: tuple[np.ndarray, ...]
    z: np.ndarray
    y: np.ndarray
    k: int = 0


class Status(Enum):
    CONVERGED = "converged"
    MAX_ITER_REACHED = "max_iter_reached"
    CERTIFICATE_VIOLATION = "certificate_violation"


@dataclass
class SolveReport:
    """Final state, the full per-iteration history, and how the solve ended."""

    final: SolverState
    history: list[IterationRecord] = field(default_factory=list)
    status: Status = Status.MAX_ITER_REACHED
    detail: str | None = None


def initial_state(spec: ProblemSpec) -> SolverState:
    """Feasible start: x from the spec, z = sum_i A_i x_i, y = grad h(z).

    Starting the dual at the smooth term's gradient makes the dual identity
    ``y_k = grad h(z_k)`` hold from k = 0, which the first-iteration descent
    certificate relies on.  For a zero smooth term this is simply y = 0.
    """
    xs = tuple(np.array(x, dtype=np.float64) for x in spec.initial_point)
    z = spec.coupled_sum(xs)
    return SolverState(x=xs, z=z, y=np.asarray(spec.smooth.gradient(z),
                                               dtype=np.float64), k=0)


# --------------------------------------------------------------------------
# The three update steps
# --------------------------------------------------------------------------

def sweep_blocks(spec: ProblemSpec, state: SolverState, cfg: SolverConfig) -> SolverState:
    """Gauss-Seidel sweep: update blocks in ascending index order.

    Each block solver receives the live list of block values, so block i sees
    already-updated blocks j < i and stale blocks j > i.  Subsolver errors
    propagate with ``block_index`` attached.
    """
    xs = [np.array(x, dtype=np.float64) for x in state.x]
    for i, block in enumerate(spec.blocks):
        ctx = BlockContext(index=i, xs=xs, z=state.z, y=state.y,
                           rho=cfg.rho, sub_tol=cfg.sub_tol)
        try:
            xs[i] = np.asarray(block.block_solver(ctx), dtype=np.float64)
        except Exception as err:
            err.block_index = i
            raise
        if xs[i].shape != (block.dim,):
            raise ValueError(f"block {i} solver returned shape {xs[i].shape}, "
                             f"expected ({block.dim},)")
    return SolverState(x=tuple(xs), z=state.z, y=state.y, k=state.k)


def update_z(spec: ProblemSpec, state: SolverState, cfg: SolverConfig) -> SolverState:
    """Exact z-update: ``min_z h(z) - y'z + (rho/2)||sum_i A_i x_i - z||^2``."""
    ax = spec.coupled_sum(state.x)
    z = spec.smooth.minimize(ax, state.y, cfg.rho)
    return SolverState(x=state.x, z=z, y=state.y, k=state.k)


def update_dual(spec: ProblemSpec, state: SolverState, rho: float) -> SolverState:
    """Dual ascent ``y <- y + rho (sum_i A_i x_i - z)``; advances the counter."""
    ax = spec.coupled_sum(state.x)
    y = state.y + rho * (ax - state.z)
    return SolverState(x=state.x, z=state.z, y=y, k=state.k + 1)


def primal_residual(spec: ProblemSpec, state: SolverState) -> float:
    """Euclidean norm of the splitting-constraint violation ``sum_i A_i x_i - z``."""
    return float(np.linalg.norm(spec.coupled_sum(state.x) - state.z))


def step_norm_sq(spec: ProblemSpec, prev: SolverState, new: SolverState) -> float:
    """``||z_new - z_prev||^2 + sum_i ||A_i (x_i_new - x_i_prev)||^2``."""
    dz = new.z - prev.z
    total = float(dz @ dz)
    for i in range(len(spec.blocks)):
        d = spec.block_image(i, new.x[i] - prev.x[i])
        total += float(d @ d)
    return total


def has_converged(history: Sequence[IterationRecord], tol: float) -> bool:
    """Stop when the squared step quantity is <= tol and the primal residual <= sqrt(tol).

    These are exactly the quantities the descent theory drives to zero.
    """
    if not history:
        raise ValueError("history must be nonempty")
    last = history[-1]
    return last.step_norm_sq <= tol and last.primal_residual <= math.sqrt(tol)


# --------------------------------------------------------------------------
# Certificates + main loop
# --------------------------------------------------------------------------

def _certificate_violation(spec, prev, state, rec, L_prev, consts, L0,
                           running_step_sum) -> str | None:
    ineq = np.asarray(spec.inequality(state.x), dtype=np.float64)
    if ineq.size and float(ineq.max()) > FEASIBILITY_SLACK:
        return f"iterate infeasible at k={rec.k}: max constraint value {ineq.max():.3e}"
    worst = max(max(float(np.abs(x).max()) for x in state.x),
                float(np.abs(state.z).max()) if state.z.size else 0.0,
                float(np.abs(state.y).max()) if state.y.size else 0.0)
    if worst > ITERATE_BOUND:
        return f"iterate unbounded at k={rec.k}: max magnitude {worst:.3e}"
    if not check_sufficient_descent(L_prev, rec.lagrangian, rec.step_norm_sq, consts):
        return (f"sufficient descent violated at k={rec.k}: "
                f"lhs={rec.descent_lhs:.6e} rhs={rec.descent_rhs:.6e}")
    if rec.dual_identity_err > 1e-8:
        return (f"dual identity violated at k={rec.k}: "
                f"||y - grad h(z)||_inf = {rec.dual_identity_err:.3e}")
    dy = float(np.linalg.norm(state.y - prev.y))
    dz = float(np.linalg.norm(state.z - prev.z))
    if dy > consts.H * dz + 1e-8:
        return (f"dual step bound violated at k={rec.k}: "
                f"||dy||={dy:.3e} > H||dz||+1e-8={consts.H * dz + 1e-8:.3e}")
    budget = (L0 - rec.lagrangian) / consts.C2 + 1e-6 * (1.0 + abs(L0))
    if running_step_sum > budget:
        return (f"step summability violated at k={rec.k}: "
                f"sum={running_step_sum:.6e} budget={budget:.6e}")
    return None


def run(spec: ProblemSpec, cfg: SolverConfig, observer=None) -> SolveReport:
    """Run the solver: block sweep, z-update, dual ascent per iteration.

    Per iteration one :class:`IterationRecord` is appended to the history.
    Stops on convergence (step quantity and primal residual below tolerance)
    or after ``cfg.max_iter`` iterations.  With diagnostics enabled the loop
    additionally verifies the runtime certificates each iteration and aborts
    with ``Status.CERTIFICATE_VIOLATION`` on the first failure; ``rho > 2H``
    is required up front in that mode.

    Parameters
    ----------
    spec : ProblemSpec
    cfg : SolverConfig
    observer : callable, optional
        Called as ``observer(state, record)`` after each iteration; intended
        for tests and instrumentation.

    Returns
    -------
    SolveReport
    """
    H = spec.smooth.H
    consts: DescentConstants | None = None
    if cfg.diagnostics_enabled:
        consts = descent_constants(H, cfg.rho)  # raises RhoTooSmall when rho <= 2H
    elif cfg.rho > 2.0 * H:
        consts = descent_constants(H, cfg.rho)

    state = initial_state(spec)
    L_prev = augmented_lagrangian(spec, state, cfg.rho)
    L0 = L_prev
    history: list[IterationRecord] = []
    status = Status.MAX_ITER_REACHED
    detail: str | None = None
    u: float | None = None
    running_step_sum = 0.0

    for _ in range(cfg.max_iter):
        t0 = time.perf_counter()
        prev = state
        state = sweep_blocks(spec, state, cfg)
        state = update_z(spec, state, cfg)
        state = update_dual(spec, state, cfg.rho)

        step = step_norm_sq(spec, prev, state)
        u = update_u(u, step)
        running_step_sum += step
        L_new = augmented_lagrangian(spec, state, cfg.rho)
        obj = float(spec.objective(state.x, state.z))
        pr = primal_residual(spec, state)
        grad_h = spec.smooth.gradient(state.z)
        dual_err = float(np.abs(state.y - grad_h).max())
        rec = IterationRecord(
            k=state.k,
            objective=obj,
            lagrangian=L_new,
            primal_residual=pr,
            step_norm_sq=step,
            u_k=u,
            descent_lhs=L_prev - L_new,
            descent_rhs=consts.C2 * step if consts is not None else 0.0,
            dual_identity_err=dual_err,
            wall_time_ms=(time.perf_counter() - t0) * 1e3,
        )
        history.append(rec)
        if observer is not None:
            observer(state, rec)
        if log.isEnabledFor(logging.DEBUG):
            log.debug("k=%d obj=%.6e L=%.6e pr=%.3e step=%.3e",
                      rec.k, obj, L_new, pr, step)

        if cfg.diagnostics_enabled:
            detail = _certificate_violation(spec, prev, state, rec, L_prev,
                                            consts, L0, running_step_sum)
            if detail is not None:
                status = Status.CERTIFICATE_VIOLATION
                log.warning("certificate violation: %s", detail)
                break
        L_prev = L_new
        if has_converged(history, cfg.tol):
            status = Status.CONVERGED
            break

    log.info("solve finished: status=%s iterations=%d", status.value, len(history))
    return SolveReport(final=state, history=history, status=status, detail=detail)
