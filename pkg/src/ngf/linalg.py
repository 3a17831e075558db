"""Small dense symmetric linear algebra: regularized SPD solves and Jacobi eigenvalues."""
from __future__ import annotations

import numpy as np
import scipy.linalg

from .errors import DomainError, SolveError


def regularized_solve(M, F, eps: float) -> np.ndarray:
    """Solve (M + eps I) eta = F by Cholesky. M must be symmetric PSD up to roundoff."""
    if eps <= 0:
        raise ValueError(f"regularization must be positive, got {eps}")
    M = np.asarray(M, dtype=float)
    F = np.asarray(F, dtype=float)
    if M.shape != (F.size, F.size):
        raise ValueError(f"shape mismatch: M {M.shape}, F {F.shape}")
    A = M + eps * np.eye(F.size)
    try:
        factor = scipy.linalg.cho_factor(A, lower=True, check_finite=True)
    except (np.linalg.LinAlgError, ValueError) as exc:
        diag = np.diag(A)
        raise SolveError(
            f"Cholesky of M + {eps:g} I failed ({exc}); diag range [{diag.min():.3e}, {diag.max():.3e}], "
            f"max|M|={np.abs(M).max() if M.size else 0.0:.3e}"
        ) from exc
    return scipy.linalg.cho_solve(factor, F, check_finite=False)


def _round_robin(dim: int):
    """Tournament schedule: dim-1 rounds (dim even), each a set of disjoint index pairs."""
    players = list(range(dim))
    rounds = []
    for _ in range(dim - 1):
        rounds.append([(players[i], players[dim - 1 - i]) for i in range(dim // 2)])
        players = [players[0], players[-1]] + players[1:-1]
    return rounds


_SCHEDULES: dict[int, list] = {}


def sym_eigenvalues(M, tol: float = 1e-15, max_sweeps: int = 60) -> np.ndarray:
    """All eigenvalues of a symmetric matrix, sorted descending.

    Cyclic Jacobi in round-robin (parallel) ordering: each round applies
    dim/2 disjoint plane rotations at once as a single orthogonal similarity.
    Sweeps until the off-diagonal Frobenius norm drops below ``tol * ||M||_F``.
    """
    A = np.array(M, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise DomainError("matrix has non-finite entries")
    n = A.shape[0]
    if n <= 1:
        return A.diagonal().copy()
    A = 0.5 * (A + A.T)
    dim = n + (n % 2)
    if dim != n:  # pad with a decoupled zero row/col, removed at the end
        A = np.pad(A, ((0, 1), (0, 1)))
    rounds = _SCHEDULES.setdefault(dim, [tuple(np.array(r).T) for r in _round_robin(dim)])
    scale = np.linalg.norm(A)
    if scale == 0.0:
        return np.zeros(n)
    eye = np.eye(dim)
    for _ in range(max_sweeps):
        off = np.linalg.norm(A - np.diag(A.diagonal()))
        if off <= tol * scale:
            break
        for p, q in rounds:
            apq = A[p, q]
            active = np.abs(apq) > 1e-300
            if not active.any():
                continue
            p, q, apq = p[active], q[active], apq[active]
            tau = (A[q, q] - A[p, p]) / (2.0 * apq)
            t = np.where(tau >= 0, 1.0, -1.0) / (np.abs(tau) + np.hypot(1.0, tau))
            c = 1.0 / np.sqrt(1.0 + t * t)
            s = t * c
            R = eye.copy()
            R[p, p] = c
            R[q, q] = c
            R[p, q] = s
            R[q, p] = -s
            A = R.T @ A @ R
            A = 0.5 * (A + A.T)
    else:
        raise SolveError(f"Jacobi did not converge in {max_sweeps} sweeps")
    lam = A.diagonal()
    if dim != n:
        # padded index is never rotated (its off-diagonals stay exactly zero)
        lam = lam[:n]
    return np.sort(lam)[::-1]


def eigen_fraction(eigs, threshold: float = 1e-6) -> float:
    eigs = np.asarray(eigs)
    return float(np.count_nonzero(np.abs(eigs) > threshold)) / eigs.size
