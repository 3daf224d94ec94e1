"""Runtime certificates for the solver's convergence theory.

The theory is monitored, not re-proved: every solve can evaluate its
augmented Lagrangian, check the per-iteration sufficient-descent inequality
``L_k - L_{k+1} >= C2 * step_norm_sq``, track the running-minimum step
quantity ``u_k`` and its summability bound, and watch iterate boundedness.
A violation means the inputs broke an assumption (e.g. rho too small, an
inexact block solve) and the engine aborts the solve with a certificate
violation instead of silently returning garbage.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

# Floating-point boundary iterates (a coordinate at exactly 0) must not
# register as infeasible; sign constraints are active at 0 by design.
FEASIBILITY_SLACK = 1e-12

# Operational proxy for boundedness of the iterate sequence.
ITERATE_BOUND = 1e8


class RhoTooSmall(Exception):
    """Penalty rho must exceed twice the Lipschitz constant of the smooth term."""

    def __init__(self, rho: float, two_h: float):
        super().__init__(f"rho={rho} must exceed 2H={two_h} for the descent certificate")
        self.rho = rho
        self.two_h = two_h


@dataclass(frozen=True)
class DescentConstants:
    """Constants of the sufficient-descent inequality; valid only when rho > 2H."""

    H: float
    rho: float
    C1: float
    C2: float


@dataclass(frozen=True)
class IterationRecord:
    """Per-iteration telemetry appended to the solve history.

    ``step_norm_sq`` is ``||z_{k+1}-z_k||^2 + sum_i ||A_i (x_i^{k+1}-x_i^k)||^2``,
    ``u_k`` its running minimum, and ``descent_lhs``/``descent_rhs`` the two
    sides of the sufficient-descent inequality.
    """

    k: int
    objective: float
    lagrangian: float
    primal_residual: float
    step_norm_sq: float
    u_k: float
    descent_lhs: float
    descent_rhs: float
    dual_identity_err: float
    wall_time_ms: float


def descent_constants(H: float, rho: float) -> DescentConstants:
    """Compute ``C1 = rho/2 - H/2 - H^2/rho`` and ``C2 = min(rho/2, C1)``.

    Raises :class:`RhoTooSmall` when ``rho <= 2H`` (which would make C1 <= 0);
    the caller must raise rho.
    """
    if rho <= 0.0:
        raise ValueError("rho must be positive")
    if H < 0.0:
        raise ValueError("H must be nonnegative")
    if rho <= 2.0 * H:
        raise RhoTooSmall(rho, 2.0 * H)
    c1 = rho / 2.0 - H / 2.0 - H * H / rho
    return DescentConstants(H=H, rho=rho, C1=c1, C2=min(rho / 2.0, c1))


def augmented_lagrangian(spec, state, rho: float) -> float:
    """Evaluate the augmented Lagrangian at ``state``.

    Returns ``objective + y'(sum_i A_i x_i - z) + (rho/2)||sum_i A_i x_i - z||^2``
    and the ``+inf`` sentinel when any inequality-constraint value exceeds the
    feasibility slack.
    """
    ineq = np.asarray(spec.inequality(state.x), dtype=np.float64)
    if ineq.size and float(ineq.max()) > FEASIBILITY_SLACK:
        return math.inf
    ax = spec.coupled_sum(state.x)
    resid = ax - state.z
    value = float(spec.objective(state.x, state.z))
    return value + float(state.y @ resid) + 0.5 * rho * float(resid @ resid)


def check_sufficient_descent(lagrangian_prev: float, lagrangian_next: float,
                             step_norm_sq: float, consts: DescentConstants,
                             slack: float | None = None) -> bool:
    """True iff ``L_prev - L_next >= C2 * step_norm_sq - slack``.

    Certificates compare with relative slack (default ``1e-8*(1+|L_prev|)``)
    rather than exact inequality; exact-arithmetic claims do not survive
    floating point.
    """
    if slack is None:
        slack = 1e-8 * (1.0 + abs(lagrangian_prev))
    return lagrangian_prev - lagrangian_next >= consts.C2 * step_norm_sq - slack


def update_u(prev_u: float | None, step_norm_sq: float) -> float:
    """Running minimum of the squared step quantity; nonincreasing by construction."""
    if step_norm_sq < 0.0:
        raise ValueError("step_norm_sq must be nonnegative")
    if prev_u is None:
        return step_norm_sq
    return min(prev_u, step_norm_sq)


def summability_check(history: Sequence[IterationRecord], consts: DescentConstants,
                      L0: float, Lk: float) -> bool:
    """True iff the accumulated squared steps respect the descent budget.

    Checks ``sum_l step_norm_sq_l <= (L0 - Lk)/C2 + 1e-6*(1+|L0|)``, the
    telescoped consequence of sufficient descent that underwrites the
    running-minimum rate.
    """
    total = sum(rec.step_norm_sq for rec in history)
    return total <= (L0 - Lk) / consts.C2 + 1e-6 * (1.0 + abs(L0))


def rate_proxy(history: Sequence[IterationRecord]) -> list[tuple[int, float]]:
    """Return the sequence ``(k, k * u_k)`` for rate inspection.

    A finite-horizon proxy for ``k * u_k -> 0``: acceptance asserts the second
    half of the sequence is bounded by the first-half maximum.
    """
    if len(history) < 2:
        raise ValueError("rate proxy needs a history of length >= 2")
    return [(rec.k, rec.k * rec.u_k) for rec in history]
