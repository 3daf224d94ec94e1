"""Node regression with signed agree/disagree constraints along network edges.

Each edge carries a designated coordinate pair: edge ``(i, j, u, v, sign)``
constrains ``x_i[u] * x_j[v] >= 0`` when the sign is "agree" and ``<= 0`` when
it is "disagree".  One block per node; a block's per-coordinate constraints
are derived from all incident edges against the partners' current values,
with conflicting requirements on one coordinate collapsing to fixed-at-zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..engine import BlockContext, BlockSpec, ProblemSpec, StackSelector, Zero
from ..numerics import spd_factor
from ..subsolvers import FREE, QuadSubproblem, cd_solve_quadratic
from .signs import merge_bounds, product_bound

AGREE = "agree"
DISAGREE = "disagree"


class InconsistentEdge(Exception):
    """The edge list contains the same coordinate pair with opposite polarity."""


@dataclass(frozen=True)
class SignedNetwork:
    """Node count, per-node dimension, and the signed edge list.

    Edges are tuples ``(i, j, u, v, sign)`` with sign in {"agree",
    "disagree"}.  Edges must join distinct nodes: a within-node product
    constraint would couple two coordinates of one block and is outside the
    separable-constraint model.
    """

    n_nodes: int
    dim: int
    edges: tuple[tuple[int, int, int, int, str], ...]

    def __post_init__(self):
        object.__setattr__(self, "edges", tuple(tuple(e) for e in self.edges))
        seen: dict[tuple, str] = {}
        for i, j, u, v, sign in self.edges:
            if sign not in (AGREE, DISAGREE):
                raise ValueError(f"edge sign must be 'agree' or 'disagree', got {sign!r}")
            if not (0 <= i < self.n_nodes and 0 <= j < self.n_nodes):
                raise ValueError(f"edge node index out of range: ({i}, {j})")
            if not (0 <= u < self.dim and 0 <= v < self.dim):
                raise ValueError(f"edge coordinate index out of range: ({u}, {v})")
            if i == j:
                raise ValueError("edges must join distinct nodes")
            key = ((i, u), (j, v)) if (i, u) <= (j, v) else ((j, v), (i, u))
            if key in seen and seen[key] != sign:
                raise InconsistentEdge(
                    f"edge {key} appears with both polarities (modeling error)")
            seen[key] = sign


def edge_bounds(node: int, dim: int,
                edges: tuple[tuple[int, int, int, int, str], ...],
                xs) -> np.ndarray:
    """Constraint codes for one node's coordinates from all incident edges."""
    cons = np.full(dim, int(FREE), dtype=np.int8)
    for i, j, u, v, sign in edges:
        same = sign == AGREE
        if i == node:
            coord, partner_val = u, xs[j][v]
        elif j == node:
            coord, partner_val = v, xs[i][u]
        else:
            continue
        bound = np.int8(product_bound(partner_val, same_sign=same))
        cons[coord] = merge_bounds(cons[coord:coord + 1],
                                   np.array([bound], dtype=np.int8))[0]
    return cons


def gen_signed_network(n_nodes: int, dim: int, samples_per_node: int,
                       seed: int) -> tuple[SignedNetwork, list, np.ndarray]:
    """Chain network with planted weights and edges consistent with their signs.

    Returns the network, per-node ``(X_i, y_i)`` data, and the planted weight
    matrix (one row per node).
    """
    rng = np.random.default_rng(seed)
    beta = rng.uniform(-1.0, 1.0, size=(n_nodes, dim))
    beta[np.abs(beta) < 0.1] += 0.2  # keep planted signs well away from zero
    edges = []
    for i in range(n_nodes - 1):
        u = int(rng.integers(dim))
        v = int(rng.integers(dim))
        sign = AGREE if beta[i, u] * beta[i + 1, v] >= 0.0 else DISAGREE
        edges.append((i, i + 1, u, v, sign))
    data = []
    for i in range(n_nodes):
        Xi = rng.normal(size=(samples_per_node, dim))
        yi = Xi @ beta[i] + 0.05 * rng.normal(size=samples_per_node)
        data.append((Xi, yi))
    net = SignedNetwork(n_nodes=n_nodes, dim=dim, edges=tuple(edges))
    return net, data, beta


def build_signed_network_problem(net: SignedNetwork, node_data,
                                 lam: float) -> ProblemSpec:
    """One least-squares ridge block per node under the edge sign constraints.

    ``node_data`` is a list of ``(X_i, y_i)`` pairs.  The zero initial point
    satisfies every product constraint.
    """
    if lam <= 0.0:
        raise ValueError("lam must be positive")
    if len(node_data) != net.n_nodes:
        raise ValueError("need one (X, y) pair per node")
    n, m = net.n_nodes, net.dim
    eye = np.eye(m)
    bases, lins = [], []
    for Xi, yi in node_data:
        Xi = np.asarray(Xi, dtype=np.float64)
        yi = np.asarray(yi, dtype=np.float64)
        if Xi.shape[1] != m:
            raise ValueError("node design width must equal the network dimension")
        Gi = 2.0 * (Xi.T @ Xi) + 2.0 * lam * eye
        bases.append(0.5 * (Gi + Gi.T))
        lins.append(2.0 * (Xi.T @ yi))
    designs = [(np.asarray(X, np.float64), np.asarray(y, np.float64))
               for X, y in node_data]
    factors: dict[tuple[int, float], object] = {}

    def make_solver(i: int):
        def solve(ctx: BlockContext) -> np.ndarray:
            cons = edge_bounds(i, m, net.edges, ctx.xs)
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
        for (Xi, yi), w in zip(designs, xs):
            r = yi - Xi @ w
            total += float(r @ r) + lam * float(w @ w)
        return total

    def inequality(xs) -> np.ndarray:
        vals = []
        for i, j, u, v, sign in net.edges:
            prod = xs[i][u] * xs[j][v]
            vals.append(-prod if sign == AGREE else prod)
        return np.asarray(vals, dtype=np.float64)

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
