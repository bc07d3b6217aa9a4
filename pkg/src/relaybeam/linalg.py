"""Small dense Hermitian linear algebra.

Everything here works on complex numpy arrays of modest size (M <= 64).
The eigensolver is a cyclic complex Jacobi method; generalized
eigenproblems for a definite pencil (A, B) are reduced through the
Cholesky factor of B.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NoConvergence, NotPositiveDefinite

MAX_SWEEPS = 100
OFFDIAG_RTOL = 1e-12


@dataclass(frozen=True)
class GenEigResult:
    lambda_max: float
    eigvec: np.ndarray  # unit Euclidean norm


def as_hermitian(A) -> np.ndarray:
    A = np.atleast_2d(np.asarray(A, dtype=complex))
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    return A


def hermitize(A) -> np.ndarray:
    A = as_hermitian(A)
    return 0.5 * (A + A.conj().T)


def cholesky(B) -> np.ndarray:
    """Lower-triangular L with L @ L^H == B for Hermitian positive definite B.

    Raises NotPositiveDefinite when a pivot drops below
    ``dim * eps * max(diag(B))``.
    """
    B = hermitize(B)
    n = B.shape[0]
    floor = n * np.finfo(float).eps * max(float(np.max(B.diagonal().real)), 0.0)
    L = np.zeros_like(B)
    for j in range(n):
        pivot = B[j, j].real - np.sum(np.abs(L[j, :j]) ** 2)
        if not pivot > floor:
            raise NotPositiveDefinite(f"pivot {pivot:.3e} at column {j} is not positive")
        L[j, j] = np.sqrt(pivot)
        if j + 1 < n:
            L[j + 1:, j] = (B[j + 1:, j] - L[j + 1:, :j] @ L[j, :j].conj()) / L[j, j].real
    return L


def _solve_lower(L: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    # forward substitution, rhs may be a matrix
    n = L.shape[0]
    out = np.array(rhs, dtype=complex, copy=True)
    for i in range(n):
        out[i] = (out[i] - L[i, :i] @ out[:i]) / L[i, i]
    return out


def _solve_upper(U: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    n = U.shape[0]
    out = np.array(rhs, dtype=complex, copy=True)
    for i in range(n - 1, -1, -1):
        out[i] = (out[i] - U[i, i + 1:] @ out[i + 1:]) / U[i, i]
    return out


def hermitian_eig(A, max_sweeps: int = MAX_SWEEPS, rtol: float = OFFDIAG_RTOL):
    """Eigen-decomposition of a Hermitian matrix by cyclic Jacobi rotations.

    Returns ``(w, V)`` with eigenvalues ``w`` sorted in descending order and
    orthonormal eigenvectors in the columns of ``V``.
    """
    A = hermitize(A)
    n = A.shape[0]
    V = np.eye(n, dtype=complex)
    if n == 1:
        return A.diagonal().real.copy(), V
    threshold = rtol * np.linalg.norm(A)
    for _ in range(max_sweeps):
        off = np.sqrt(2.0 * np.sum(np.abs(np.triu(A, 1)) ** 2))
        if off <= threshold:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                mag = abs(apq)
                if mag == 0.0 or mag <= 1e-3 * threshold / n:
                    continue
                phase = apq / mag
                app, aqq = A[p, p].real, A[q, q].real
                theta = (aqq - app) / (2.0 * mag)
                t = np.copysign(1.0, theta) / (abs(theta) + np.hypot(theta, 1.0))
                c = 1.0 / np.hypot(t, 1.0)
                s = t * c
                # U = diag(1, conj(phase)) @ [[c, s], [-s, c]] acting on (p, q)
                u_pp, u_pq = c, s
                u_qp, u_qq = -s * phase.conjugate(), c * phase.conjugate()
                col_p = A[:, p].copy()
                col_q = A[:, q].copy()
                A[:, p] = col_p * u_pp + col_q * u_qp
                A[:, q] = col_p * u_pq + col_q * u_qq
                row_p = A[p, :].copy()
                row_q = A[q, :].copy()
                A[p, :] = np.conj(u_pp) * row_p + np.conj(u_qp) * row_q
                A[q, :] = np.conj(u_pq) * row_p + np.conj(u_qq) * row_q
                A[p, q] = A[q, p] = 0.0
                A[p, p] = A[p, p].real
                A[q, q] = A[q, q].real
                vp = V[:, p].copy()
                vq = V[:, q].copy()
                V[:, p] = vp * u_pp + vq * u_qp
                V[:, q] = vp * u_pq + vq * u_qq
    else:
        off = np.sqrt(2.0 * np.sum(np.abs(np.triu(A, 1)) ** 2))
        if off > threshold:
            raise NoConvergence(f"Jacobi did not converge in {max_sweeps} sweeps (off={off:.3e})")
    w = A.diagonal().real
    order = np.argsort(w)[::-1]
    return w[order].copy(), V[:, order]


def gen_eig_max(A, B) -> GenEigResult:
    """Largest generalized eigenpair of the definite pencil (A, B).

    Solves A psi = lambda B psi through the Hermitian problem
    L^-1 A L^-H with L = cholesky(B).
    """
    A = hermitize(A)
    B = hermitize(B)
    if A.shape != B.shape:
        raise ValueError(f"shape mismatch {A.shape} vs {B.shape}")
    L = cholesky(B)
    # C = L^-1 A L^-H
    Y = _solve_lower(L, A)
    C = _solve_lower(L, Y.conj().T).conj().T
    w, V = hermitian_eig(C)
    psi = _solve_upper(L.conj().T, V[:, 0])
    psi = psi / np.linalg.norm(psi)
    return GenEigResult(lambda_max=float(w[0]), eigvec=psi)
