"""Dense linear-algebra substrate: validated arrays, Gram products, SPD solves.

Everything is plain float64 numpy. Matrices are row-major 2-D arrays,
vectors are 1-D arrays; ``matrix``/``vector`` validate and freeze inputs so
values can be shared read-only across concurrent solves.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import cho_factor, cho_solve


class NotPositiveDefinite(Exception):
    """Symmetric factorization failed even after one jitter escalation.

    Subproblem matrices are positive definite by construction (ridge and
    penalty terms), so this signals a modeling error upstream rather than a
    numerical edge to paper over.
    """


def matrix(data) -> np.ndarray:
    """Validate ``data`` as a nonempty finite float64 matrix; returns it read-only."""
    a = np.array(data, dtype=np.float64, order="C")
    if a.ndim != 2 or a.size == 0:
        raise ValueError(f"matrix must be 2-D and nonempty, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix entries must all be finite")
    a.flags.writeable = False
    return a


def vector(data) -> np.ndarray:
    """Validate ``data`` as a nonempty finite float64 vector; returns it read-only."""
    a = np.array(data, dtype=np.float64)
    if a.ndim != 1 or a.size == 0:
        raise ValueError(f"vector must be 1-D and nonempty, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("vector entries must all be finite")
    a.flags.writeable = False
    return a


def gram(A: np.ndarray) -> np.ndarray:
    """Return the Gram product A'A, exactly symmetric as stored."""
    A = np.asarray(A, dtype=np.float64)
    G = A.T @ A
    # BLAS does not guarantee bitwise symmetry of A'A; averaging does.
    return 0.5 * (G + G.T)


def spd_factor(P: np.ndarray, jitter: float = 0.0):
    """Cholesky-style factorization of ``P + jitter*I``.

    On failure, escalates once with an automatic jitter of
    ``1e-10 * trace(P)/dim`` and retries; a second failure raises
    :class:`NotPositiveDefinite`.
    """
    P = np.asarray(P, dtype=np.float64)
    n = P.shape[0]
    work = P if jitter == 0.0 else P + jitter * np.eye(n)
    try:
        return cho_factor(work, lower=True, check_finite=False)
    except np.linalg.LinAlgError:
        pass
    auto = 1e-10 * np.trace(P) / n
    try:
        return cho_factor(work + auto * np.eye(n), lower=True, check_finite=False)
    except np.linalg.LinAlgError as err:
        raise NotPositiveDefinite(
            f"factorization failed for {n}x{n} matrix even with jitter {auto:.3e}"
        ) from err


def solve_spd(P: np.ndarray, q: np.ndarray, jitter: float = 0.0) -> np.ndarray:
    """Solve ``(P + jitter*I) x = q`` for symmetric positive definite ``P``.

    Parameters
    ----------
    P : ndarray, shape (n, n)
        Symmetric (within 1e-10 relative) positive definite matrix.
    q : ndarray, shape (n,)
        Right-hand side.
    jitter : float
        Diagonal shift added before factorizing.

    Returns
    -------
    x : ndarray, shape (n,)
        Solution with residual ``||(P + jitter*I)x - q||_inf`` at the
        1e-8*(1+||q||_inf) level or better.
    """
    P = np.asarray(P, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if P.ndim != 2 or P.shape[0] != P.shape[1]:
        raise ValueError(f"P must be square, got shape {P.shape}")
    if q.shape != (P.shape[0],):
        raise ValueError(f"dimension mismatch: P is {P.shape}, q is {q.shape}")
    scale = 1.0 + np.abs(P).max()
    if np.abs(P - P.T).max() > 1e-10 * scale:
        raise ValueError("P is not symmetric within 1e-10 relative tolerance")
    return cho_solve(spd_factor(P, jitter), q, check_finite=False)


def save_matrix_text(path, A: np.ndarray) -> None:
    """Write a dense matrix in the text fixture format: 'rows cols' then one row per line."""
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2:
        raise ValueError("only 2-D matrices are supported")
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"{A.shape[0]} {A.shape[1]}\n")
        for row in A:
            fh.write(" ".join(repr(float(v)) for v in row) + "\n")


def load_matrix_text(path) -> np.ndarray:
    """Read a dense matrix written by :func:`save_matrix_text`."""
    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise ValueError(f"{path}: expected 'rows cols' header")
        rows, cols = int(header[0]), int(header[1])
        data = np.loadtxt(fh, dtype=np.float64, ndmin=2)
    if data.shape != (rows, cols):
        raise ValueError(f"{path}: header says {rows}x{cols}, body is {data.shape}")
    return matrix(data)
