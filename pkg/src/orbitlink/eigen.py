"""Cyclic Jacobi eigendecomposition for dense symmetric matrices."""

from __future__ import annotations

import numpy as np

JACOBI_TOL = 1e-10
JACOBI_MAX_SWEEPS = 100


class JacobiConvergenceError(RuntimeError):
    pass


def jacobi_eigh(a: np.ndarray, tol: float = JACOBI_TOL,
                max_sweeps: int = JACOBI_MAX_SWEEPS) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues and eigenvectors of a symmetric matrix.

    Cyclic sweeps over the upper triangle, rotating out every entry above
    the threshold; returns (eigenvalues desc, eigenvectors as columns).
    Raises JacobiConvergenceError when max_sweeps is exhausted.
    """
    a = np.asarray(a, dtype=float)
    n = a.shape[0]
    if a.ndim != 2 or a.shape[1] != n:
        raise ValueError("matrix must be square")
    if n and not np.allclose(a, a.T, atol=1e-12):
        raise ValueError("matrix must be symmetric")
    A = a.copy()
    V = np.eye(n)
    if n < 2:
        return np.diag(A).copy(), V

    scale = max(1.0, float(np.abs(A).max()))
    thresh = tol * scale
    for _sweep in range(max_sweeps):
        off = np.sqrt(np.sum(np.triu(A, 1) ** 2))
        if off <= thresh:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if abs(apq) <= thresh / (n * n):
                    continue
                app, aqq = A[p, p], A[q, q]
                phi = 0.5 * np.arctan2(2.0 * apq, aqq - app)
                c, s = np.cos(phi), np.sin(phi)
                rp = A[p, :].copy()
                rq = A[q, :].copy()
                A[p, :] = c * rp - s * rq
                A[q, :] = s * rp + c * rq
                cp = A[:, p].copy()
                cq = A[:, q].copy()
                A[:, p] = c * cp - s * cq
                A[:, q] = s * cp + c * cq
                vp = V[:, p].copy()
                vq = V[:, q].copy()
                V[:, p] = c * vp - s * vq
                V[:, q] = s * vp + c * vq
    else:
        raise JacobiConvergenceError(
            f"jacobi rotation did not converge in {max_sweeps} sweeps")

    values = np.diag(A).copy()
    order = np.argsort(-values)
    return values[order], V[:, order]
