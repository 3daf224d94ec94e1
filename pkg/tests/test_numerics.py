import numpy as np
import pytest

from miadmm.numerics import (
    NotPositiveDefinite,
    gram,
    load_matrix_text,
    matrix,
    save_matrix_text,
    solve_spd,
    vector,
)


class TestValidation:
    def test_matrix_rejects_nonfinite(self):
        with pytest.raises(ValueError, match="finite"):
            matrix([[1.0, np.nan]])

    def test_matrix_rejects_empty_and_wrong_ndim(self):
        with pytest.raises(ValueError):
            matrix(np.zeros((0, 3)))
        with pytest.raises(ValueError):
            matrix([1.0, 2.0])

    def test_vector_rejects_inf(self):
        with pytest.raises(ValueError, match="finite"):
            vector([1.0, np.inf])

    def test_results_are_read_only(self):
        a = matrix([[1.0, 2.0]])
        v = vector([1.0])
        with pytest.raises(ValueError):
            a[0, 0] = 5.0
        with pytest.raises(ValueError):
            v[0] = 5.0


class TestGram:
    def test_identity(self):
        assert np.array_equal(gram(np.eye(2)), np.eye(2))

    def test_small_example(self):
        G = gram(np.array([[1.0, 2.0], [3.0, 4.0]]))
        assert np.array_equal(G, np.array([[10.0, 14.0], [14.0, 20.0]]))

    def test_random_symmetric_and_psd(self):
        rng = np.random.default_rng(0)
        A = rng.normal(size=(5, 3))
        G = gram(A)
        # exactly symmetric as stored
        assert np.array_equal(G, G.T)
        assert np.abs(G - A.T @ A).max() < 1e-12
        # PSD: Cholesky of G + tiny ridge succeeds
        np.linalg.cholesky(G + 1e-12 * np.eye(3))


class TestSolveSpd:
    def test_identity_system(self):
        x = solve_spd(np.eye(2), np.array([2.0, -4.0]))
        assert np.allclose(x, [2.0, -4.0], atol=1e-14)

    def test_diagonal_solve(self):
        x = solve_spd(np.diag([2.0, 4.0]), np.array([2.0, 4.0]))
        assert np.allclose(x, [1.0, 1.0], atol=1e-14)

    def test_residual_on_random_spd_instances(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            n = int(rng.integers(2, 8))
            B = rng.normal(size=(n, n))
            P = B @ B.T + np.eye(n)
            P = 0.5 * (P + P.T)
            q = rng.normal(size=n)
            x = solve_spd(P, q)
            resid = np.abs(P @ x - q).max()
            assert resid <= 1e-10 * (1.0 + np.abs(q).max())

    def test_jitter_shifts_system(self):
        x = solve_spd(np.eye(2), np.array([2.0, 2.0]), jitter=1.0)
        assert np.allclose(x, [1.0, 1.0], atol=1e-14)

    def test_asymmetric_rejected(self):
        with pytest.raises(ValueError, match="symmetric"):
            solve_spd(np.array([[1.0, 0.5], [0.0, 1.0]]), np.ones(2))

    def test_indefinite_raises_after_jitter_escalation(self):
        with pytest.raises(NotPositiveDefinite):
            solve_spd(np.diag([1.0, -1.0]), np.ones(2))

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            solve_spd(np.eye(2), np.ones(3))


class TestTextFormat:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(3)
        A = rng.normal(size=(4, 3))
        path = tmp_path / "a.txt"
        save_matrix_text(path, A)
        B = load_matrix_text(path)
        assert np.array_equal(A, B)

    def test_header_is_rows_cols(self, tmp_path):
        path = tmp_path / "a.txt"
        save_matrix_text(path, np.ones((2, 5)))
        assert path.read_text().splitlines()[0] == "2 5"

    def test_shape_mismatch_detected(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("2 2\n1 2\n")
        with pytest.raises(ValueError):
            load_matrix_text(path)
