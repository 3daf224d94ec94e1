import numpy as np
import pytest

from miadmm.diagnostics import RhoTooSmall
from miadmm.engine import (
    BlockSpec,
    Custom,
    DenseCoupling,
    ProblemSpec,
    Quadratic,
    SolverConfig,
    SolverState,
    StackSelector,
    Status,
    Zero,
    has_converged,
    initial_state,
    primal_residual,
    run,
    step_norm_sq,
    sweep_blocks,
    update_dual,
    update_z,
)
from miadmm.numerics import solve_spd
from miadmm.problems import build_synthetic_problem, gen_synthetic
from miadmm.subsolvers import MaxSweepsExceeded, QuadSubproblem, cd_solve_quadratic


def ridge_block(dim, offset, weight=1.0):
    """Block with g(x) = (weight/2)||x||^2 solved exactly in closed form."""

    def solver(ctx):
        off = offset
        # min (w/2)||x||^2 + y'x + (rho/2)||x - z_seg||^2
        return (ctx.rho * ctx.z[off:off + dim] - ctx.y[off:off + dim]) / (
            weight + ctx.rho)

    return BlockSpec(dim=dim, coupling=StackSelector(offset), block_solver=solver)


def single_ridge_spec(dim=1):
    return ProblemSpec(
        blocks=(ridge_block(dim, 0),),
        z_dim=dim,
        smooth=Zero(),
        objective=lambda xs, z: 0.5 * float(xs[0] @ xs[0]),
        inequality=lambda xs: np.array([]),
        initial_point=(np.zeros(dim),),
    )


def quadratic_h_spec(dim=3, seed=0):
    """One unconstrained quadratic block coupled to a quadratic smooth term."""
    rng = np.random.default_rng(seed)
    B = rng.normal(size=(dim, dim))
    Q = B @ B.T / dim + 0.1 * np.eye(dim)
    Q = 0.5 * (Q + Q.T)
    c = rng.normal(size=dim)
    b = rng.normal(size=dim)
    smooth = Quadratic(Q, c)

    def solver(ctx):
        # min 0.5||x - b||^2 + y'x + (rho/2)||x - z||^2
        P = (1.0 + ctx.rho) * np.eye(dim)
        q = b + ctx.rho * ctx.z - ctx.y
        x, _ = cd_solve_quadratic(QuadSubproblem(P, q, tol=ctx.sub_tol))
        return x

    block = BlockSpec(dim=dim, coupling=StackSelector(0), block_solver=solver)
    return ProblemSpec(
        blocks=(block,),
        z_dim=dim,
        smooth=smooth,
        objective=lambda xs, z: 0.5 * float((xs[0] - b) @ (xs[0] - b))
        + smooth.value(z),
        inequality=lambda xs: np.array([]),
        initial_point=(np.zeros(dim),),
    )


class TestSweepBlocks:
    def test_unconstrained_ridge_to_origin(self):
        spec = single_ridge_spec()
        state = SolverState(x=(np.array([3.0]),), z=np.array([0.0]),
                            y=np.array([0.0]))
        cfg = SolverConfig(rho=2.0)
        new = sweep_blocks(spec, state, cfg)
        assert np.allclose(new.x[0], [0.0], atol=1e-14)

    def test_feasibility_preserved_under_sign_coupling(self):
        data = gen_synthetic(30, 3, 0.1, seed=2)
        spec = build_synthetic_problem(data, 1.0)
        cfg = SolverConfig(rho=0.1)
        state = initial_state(spec)
        for _ in range(3):
            state = sweep_blocks(spec, state, cfg)
            assert np.max(spec.inequality(state.x)) <= 1e-12
            state = update_z(spec, state, cfg)
            state = update_dual(spec, state, cfg.rho)

    def test_block_objective_decreases(self):
        data = gen_synthetic(20, 2, 0.1, seed=7)
        spec = build_synthetic_problem(data, 1.0)
        cfg = SolverConfig(rho=0.1)
        state = initial_state(spec)
        state = sweep_blocks(spec, state, cfg)
        state = update_z(spec, state, cfg)
        state = update_dual(spec, state, cfg.rho)

        def block_surrogate(xs):
            # objective plus the splitting penalty of the current state
            ax = spec.coupled_sum(xs)
            r = ax - state.z
            return (spec.objective(xs, state.z) + float(state.y @ r)
                    + 0.5 * cfg.rho * float(r @ r))

        before = block_surrogate(list(state.x))
        new = sweep_blocks(spec, state, cfg)
        after = block_surrogate(list(new.x))
        assert after <= before + 1e-10 * (1.0 + abs(before))

    def test_subsolver_error_carries_block_index(self):
        def bad_solver(ctx):
            raise MaxSweepsExceeded(np.zeros(1), 1.0, 10)

        block = BlockSpec(dim=1, coupling=StackSelector(0),
                          block_solver=bad_solver)
        spec = ProblemSpec(blocks=(block,), z_dim=1, smooth=Zero(),
                           objective=lambda xs, z: 0.0,
                           inequality=lambda xs: np.array([]),
                           initial_point=(np.zeros(1),))
        with pytest.raises(MaxSweepsExceeded) as info:
            sweep_blocks(spec, initial_state(spec), SolverConfig(rho=1.0))
        assert info.value.block_index == 0


class TestUpdateZ:
    def test_zero_smooth_closed_form(self):
        spec = single_ridge_spec()
        state = SolverState(x=(np.array([2.0]),), z=np.array([0.0]),
                            y=np.array([1.0]))
        new = update_z(spec, state, SolverConfig(rho=2.0))
        assert np.allclose(new.z, [2.5], atol=1e-14)

    def test_quadratic_identity_h(self):
        # h(z) = 0.5 z'z: stationarity (1 + rho) z = rho * ax
        block = ridge_block(1, 0)
        spec = ProblemSpec(blocks=(block,), z_dim=1,
                           smooth=Quadratic(np.eye(1), np.zeros(1)),
                           objective=lambda xs, z: 0.0,
                           inequality=lambda xs: np.array([]),
                           initial_point=(np.zeros(1),))
        state = SolverState(x=(np.array([1.0]),), z=np.array([0.0]),
                            y=np.array([0.0]))
        new = update_z(spec, state, SolverConfig(rho=1.0, diagnostics_enabled=False))
        assert np.allclose(new.z, [0.5], atol=1e-14)

    def test_quadratic_stationarity_residual(self):
        spec = quadratic_h_spec(dim=4, seed=3)
        rng = np.random.default_rng(4)
        state = SolverState(x=(rng.normal(size=4),), z=rng.normal(size=4),
                            y=rng.normal(size=4))
        cfg = SolverConfig(rho=2.0)
        new = update_z(spec, state, cfg)
        ax = spec.coupled_sum(new.x)
        resid = spec.smooth.gradient(new.z) - new.y - cfg.rho * (ax - new.z)
        assert np.abs(resid).max() <= 1e-8


class TestUpdateDual:
    def test_zero_residual_keeps_dual(self):
        spec = single_ridge_spec()
        state = SolverState(x=(np.array([1.0]),), z=np.array([1.0]),
                            y=np.array([0.0]))
        new = update_dual(spec, state, rho=5.0)
        assert np.array_equal(new.y, [0.0])
        assert new.k == 1

    def test_cancellation(self):
        spec = single_ridge_spec()
        state = SolverState(x=(np.array([2.0]),), z=np.array([2.5]),
                            y=np.array([1.0]))
        new = update_dual(spec, state, rho=2.0)
        assert np.allclose(new.y, [0.0], atol=1e-14)

    def test_dual_step_is_rho_times_residual(self):
        spec = single_ridge_spec(dim=3)
        rng = np.random.default_rng(0)
        state = SolverState(x=(rng.normal(size=3),), z=rng.normal(size=3),
                            y=rng.normal(size=3))
        rho = 1.7
        new = update_dual(spec, state, rho)
        expected = rho * (spec.coupled_sum(state.x) - state.z)
        assert np.allclose(new.y - state.y, expected, atol=1e-14)


class TestPrimalResidual:
    def test_feasible_state(self):
        spec = single_ridge_spec()
        state = SolverState(x=(np.array([1.0]),), z=np.array([1.0]),
                            y=np.array([0.0]))
        assert primal_residual(spec, state) == 0.0

    def test_norm_of_gap(self):
        spec = ProblemSpec(
            blocks=(ridge_block(1, 0), ridge_block(1, 1)),
            z_dim=2, smooth=Zero(),
            objective=lambda xs, z: 0.0,
            inequality=lambda xs: np.array([]),
            initial_point=(np.zeros(1), np.zeros(1)),
        )
        state = SolverState(x=(np.array([1.0]), np.array([2.0])),
                            z=np.array([1.0, 1.0]), y=np.zeros(2))
        assert primal_residual(spec, state) == pytest.approx(1.0)

    def test_zero_h_residual_equals_prev_dual_over_rho(self):
        data = gen_synthetic(20, 2, 0.1, seed=9)
        spec = build_synthetic_problem(data, 1.0)
        cfg = SolverConfig(rho=0.1)
        state = initial_state(spec)
        for _ in range(3):
            y_prev = state.y.copy()
            state = sweep_blocks(spec, state, cfg)
            state = update_z(spec, state, cfg)
            # before the dual update: ||ax - z|| = ||y_prev|| / rho
            assert primal_residual(spec, state) == pytest.approx(
                np.linalg.norm(y_prev) / cfg.rho, abs=1e-12)
            state = update_dual(spec, state, cfg.rho)


class TestHasConverged:
    def test_stationary_state(self):
        data = gen_synthetic(20, 2, 0.1, seed=1)
        spec = build_synthetic_problem(data, 1.0)
        report = run(spec, SolverConfig(rho=0.1, max_iter=500, tol=1e-10))
        assert report.status is Status.CONVERGED
        assert has_converged(report.history, 1e-10)

    def test_first_iteration_not_converged(self):
        data = gen_synthetic(50, 5, 0.1, seed=3)
        spec = build_synthetic_problem(data, 1.0)
        report = run(spec, SolverConfig(rho=0.1, max_iter=1, tol=1e-10))
        assert not has_converged(report.history, 1e-10)

    def test_empty_history_rejected(self):
        with pytest.raises(ValueError):
            has_converged([], 1e-10)

    def test_synthetic_converges_within_budget(self):
        data = gen_synthetic(50, 5, 0.1, seed=12)
        spec = build_synthetic_problem(data, 1.0)
        report = run(spec, SolverConfig(rho=0.1, max_iter=5000, tol=1e-10))
        assert report.status is Status.CONVERGED
        assert len(report.history) < 5000


class TestRun:
    def test_max_iter_zero_gives_empty_history(self):
        spec = single_ridge_spec()
        report = run(spec, SolverConfig(rho=1.0, max_iter=0))
        assert report.status is Status.MAX_ITER_REACHED
        assert report.history == []

    def test_ridge_feasible_instance_recovers_closed_form(self):
        rng = np.random.default_rng(21)
        N, M = 100, 4
        X = rng.uniform(-1, 1, size=(N, 2 * M))
        alpha = rng.uniform(0.3, 1.0, size=M)
        beta = -rng.uniform(0.3, 1.0, size=M)
        y = X @ np.concatenate([alpha, beta]) + 0.02 * rng.normal(size=N)
        from miadmm.problems import SyntheticDataset

        data = SyntheticDataset(X=X, y=y, alpha_true=alpha, beta_true=beta,
                                seed=21)
        lam = 1.0
        w_ridge = solve_spd(X.T @ X + lam * np.eye(2 * M), X.T @ y)
        assert np.all(w_ridge[:M] * w_ridge[M:] <= 0)  # premise
        spec = build_synthetic_problem(data, lam)
        report = run(spec, SolverConfig(rho=0.1, max_iter=3000, tol=1e-14))
        w = np.concatenate(report.final.x)
        assert np.abs(w - w_ridge).max() <= 1e-4

    def test_zero_h_dual_identity(self):
        data = gen_synthetic(40, 4, 0.1, seed=5)
        spec = build_synthetic_problem(data, 1.0)
        seen = []

        def observer(state, rec):
            seen.append(np.abs(state.y).max())

        run(spec, SolverConfig(rho=0.1, max_iter=50, tol=1e-12),
            observer=observer)
        assert seen and max(seen) <= 1e-12

    def test_quadratic_h_dual_identity(self):
        spec = quadratic_h_spec(dim=3, seed=1)
        H = spec.smooth.H
        report = run(spec, SolverConfig(rho=2.0 * H + 1.0, max_iter=200,
                                        tol=1e-12))
        assert report.status in (Status.CONVERGED, Status.MAX_ITER_REACHED)
        assert all(rec.dual_identity_err <= 1e-8 for rec in report.history)

    def test_dual_step_bounded_by_smooth_lipschitz(self):
        spec = quadratic_h_spec(dim=3, seed=2)
        H = spec.smooth.H
        states = []

        def observer(state, rec):
            states.append((state.z.copy(), state.y.copy()))

        run(spec, SolverConfig(rho=2.0 * H + 0.5, max_iter=100, tol=1e-12),
            observer=observer)
        for (z0, y0), (z1, y1) in zip(states, states[1:]):
            assert (np.linalg.norm(y1 - y0)
                    <= H * np.linalg.norm(z1 - z0) + 1e-8)

    def test_deterministic_histories(self):
        data = gen_synthetic(30, 3, 0.1, seed=8)

        def solve():
            spec = build_synthetic_problem(data, 1.0)
            return run(spec, SolverConfig(rho=0.1, max_iter=40, tol=1e-12))

        h1 = solve().history
        h2 = solve().history
        assert len(h1) == len(h2)
        for a, b in zip(h1, h2):
            assert a.objective == b.objective
            assert a.lagrangian == b.lagrangian
            assert a.step_norm_sq == b.step_norm_sq
            assert a.u_k == b.u_k
            assert a.primal_residual == b.primal_residual

    def test_certificate_violation_on_broken_solver(self):
        # A block "solver" that moves away from the minimizer must trip the
        # sufficient-descent certificate.
        def wandering(ctx):
            return ctx.xs[0] + 1.0

        block = BlockSpec(dim=1, coupling=StackSelector(0),
                          block_solver=wandering)
        spec = ProblemSpec(blocks=(block,), z_dim=1, smooth=Zero(),
                           objective=lambda xs, z: 0.5 * float(xs[0] @ xs[0]),
                           inequality=lambda xs: np.array([]),
                           initial_point=(np.zeros(1),))
        report = run(spec, SolverConfig(rho=1.0, max_iter=50))
        assert report.status is Status.CERTIFICATE_VIOLATION
        assert report.detail is not None

    def test_rho_must_exceed_twice_lipschitz_when_certified(self):
        spec = quadratic_h_spec(dim=3, seed=1)
        H = spec.smooth.H
        with pytest.raises(RhoTooSmall):
            run(spec, SolverConfig(rho=H, max_iter=10))
        # allowed when diagnostics are off
        report = run(spec, SolverConfig(rho=H, max_iter=5,
                                        diagnostics_enabled=False))
        assert len(report.history) == 5


class TestSpecValidation:
    def test_stack_selectors_must_partition(self):
        blocks = (ridge_block(1, 0), ridge_block(1, 0))
        with pytest.raises(ValueError, match="overlap"):
            ProblemSpec(blocks=blocks, z_dim=2, smooth=Zero(),
                        objective=lambda xs, z: 0.0,
                        inequality=lambda xs: np.array([]),
                        initial_point=(np.zeros(1), np.zeros(1)))

    def test_stack_gap_rejected(self):
        with pytest.raises(ValueError, match="partition"):
            ProblemSpec(blocks=(ridge_block(1, 0),), z_dim=2, smooth=Zero(),
                        objective=lambda xs, z: 0.0,
                        inequality=lambda xs: np.array([]),
                        initial_point=(np.zeros(1),))

    def test_dense_coupling_requires_full_column_rank(self):
        with pytest.raises(ValueError, match="rank"):
            DenseCoupling(np.array([[1.0, 1.0], [1.0, 1.0]]))

    def test_dense_coupling_step_norm_uses_image(self):
        A = np.array([[2.0], [0.0]])
        block = BlockSpec(dim=1, coupling=DenseCoupling(A),
                          block_solver=lambda ctx: ctx.xs[0])
        spec = ProblemSpec(blocks=(block,), z_dim=2, smooth=Zero(),
                           objective=lambda xs, z: 0.0,
                           inequality=lambda xs: np.array([]),
                           initial_point=(np.zeros(1),))
        s0 = SolverState(x=(np.array([0.0]),), z=np.zeros(2), y=np.zeros(2))
        s1 = SolverState(x=(np.array([1.0]),), z=np.zeros(2), y=np.zeros(2))
        # ||A dx||^2 = 4
        assert step_norm_sq(spec, s0, s1) == pytest.approx(4.0)

    def test_infeasible_initial_point_rejected(self):
        block = ridge_block(1, 0)
        with pytest.raises(ValueError, match="initial point"):
            ProblemSpec(blocks=(block,), z_dim=1, smooth=Zero(),
                        objective=lambda xs, z: 0.0,
                        inequality=lambda xs: np.array([1.0]),
                        initial_point=(np.zeros(1),))

    def test_custom_smooth_term_round_trip(self):
        # h(z) = 0.5||z - t||^2 supplied as a custom term
        t = np.array([1.0, -2.0])
        smooth = Custom(
            value_fn=lambda z: 0.5 * float((z - t) @ (z - t)),
            gradient_fn=lambda z: z - t,
            minimize_fn=lambda ax, y, rho: (t + y + rho * ax) / (1.0 + rho),
            lipschitz=1.0,
        )
        blocks = (ridge_block(1, 0), ridge_block(1, 1))
        spec = ProblemSpec(blocks=blocks, z_dim=2, smooth=smooth,
                           objective=lambda xs, z: 0.5 * float(xs[0] @ xs[0])
                           + 0.5 * float(xs[1] @ xs[1]) + smooth.value(z),
                           inequality=lambda xs: np.array([]),
                           initial_point=(np.zeros(1), np.zeros(1)))
        report = run(spec, SolverConfig(rho=3.0, max_iter=300, tol=1e-14))
        assert report.status is Status.CONVERGED
        assert all(rec.dual_identity_err <= 1e-8 for rec in report.history)


class TestQuadraticLipschitz:
    def test_power_iteration_matches_eigh(self):
        rng = np.random.default_rng(6)
        for _ in range(10):
            n = int(rng.integers(2, 8))
            B = rng.normal(size=(n, n))
            Q = B @ B.T + np.diag(rng.uniform(0.1, 1.0, size=n))
            Q = 0.5 * (Q + Q.T)
            smooth = Quadratic(Q, np.zeros(n))
            lam_max = float(np.linalg.eigvalsh(Q).max())
            assert smooth.H == pytest.approx(lam_max, rel=1e-5)
