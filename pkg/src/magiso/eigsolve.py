"""Smallest eigenpair of sparse Hermitian pencils K x = lambda M x.

Shift-and-invert inverse iteration.  The inner Hermitian positive definite
solves use preconditioned conjugate gradients; the default preconditioner is
a sparse LU factorization of the shifted operator, which makes the inner
iteration a refinement step around a direct solve.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .validation import ConvergenceError

log = logging.getLogger(__name__)


@dataclass
class SolveReport:
    eigenvalue: float
    eigenvector: np.ndarray
    iterations: int
    residual: float
    shift_history: list = field(default_factory=list)
    residual_history: list = field(default_factory=list)
    restarts: int = 0


class IndefiniteError(ConvergenceError):
    """Negative curvature met inside conjugate gradients."""


def as_sparse(A):
    A = sp.csr_matrix(A)
    A.sum_duplicates()
    A.sort_indices()
    return A


def hermitian_defect(A):
    """max |A - A^H| relative to max |A|."""
    A = as_sparse(A)
    D = A - A.conj().T
    scale = np.max(np.abs(A.data)) if A.nnz else 1.0
    return (np.max(np.abs(D.data)) if D.nnz else 0.0) / scale


def check_hermitian(A, rtol=1e-13, name="matrix"):
    if A.shape[0] != A.shape[1]:
        raise ValueError(f"{name} must be square, got {A.shape}")
    d = hermitian_defect(A)
    if d > rtol:
        raise ValueError(f"{name} is not Hermitian (relative defect {d:.2e})")


def _dot(x, y):
    return np.vdot(x, y)


def inner_solve(A, b, tol=1e-12, preconditioner=None, max_iter=None, x0=None):
    """Preconditioned CG for Hermitian positive definite ``A``.

    ``preconditioner`` is a callable approximating A^{-1}, ``"jacobi"``, or
    None (identity).  Returns x with ||b - A x|| <= tol ||b||.
    """
    A = as_sparse(A)
    b = np.asarray(b)
    n = b.shape[0]
    dtype = np.result_type(A.dtype, b.dtype, np.float64)
    if preconditioner == "jacobi":
        dinv = 1.0 / A.diagonal().real
        prec = lambda r: dinv * r
    elif preconditioner is None:
        prec = lambda r: r
    else:
        prec = preconditioner
    max_iter = max_iter or max(10 * n, 100)
    x = np.zeros(n, dtype=dtype) if x0 is None else np.array(x0, dtype=dtype)
    bnorm = np.linalg.norm(b)
    if bnorm == 0:
        return np.zeros(n, dtype=dtype)
    r = b - A @ x
    z = prec(r)
    p = z.copy()
    rz = _dot(r, z).real
    best = np.linalg.norm(r)
    stall = 0
    for it in range(max_iter):
        rn = np.linalg.norm(r)
        if rn <= tol * bnorm:
            return x
        Ap = A @ p
        pAp = _dot(p, Ap).real
        if pAp <= 0:
            raise IndefiniteError("operator is not positive definite", x, rn / bnorm)
        alpha = rz / pAp
        x = x + alpha * p
        r = r - alpha * Ap
        z = prec(r)
        rz_new = _dot(r, z).real
        p = z + (rz_new / rz) * p
        rz = rz_new
        rn = np.linalg.norm(r)
        if rn < 0.999 * best:
            best, stall = rn, 0
        else:
            stall += 1
            if stall > 50:
                break
    rn = np.linalg.norm(b - A @ x)
    if rn <= tol * bnorm:
        return x
    raise ConvergenceError("conjugate gradients stagnated", x, rn / bnorm)


def gershgorin_lower(K, M):
    """Crude lower estimate of the smallest eigenvalue of the pencil (K, M)."""
    K, M = as_sparse(K), as_sparse(M)
    kd = K.diagonal().real
    krad = np.asarray(abs(K).sum(axis=1)).ravel() - np.abs(kd)
    g = float(np.min(kd - krad))
    md = M.diagonal().real
    mrad = np.asarray(abs(M).sum(axis=1)).ravel() - np.abs(md)
    m_hi = float(np.max(md + mrad))
    m_lo = float(np.min(md - mrad))
    if g >= 0:
        return g / m_hi
    return g / (m_lo if m_lo > 0 else float(np.min(md)))


def _lu_preconditioner(A, certify=True):
    """Symmetric-mode LU of the shifted operator, used as the CG preconditioner.

    Without off-diagonal pivoting the factorization is P^T L D L^H P, so by
    Sylvester's law the pivots must all be positive when the shift lies below
    the spectrum; a non-positive pivot proves the shift is too high.
    """
    lu = spla.splu(sp.csc_matrix(A), permc_spec="COLAMD", diag_pivot_thresh=0.0,
                   options={"SymmetricMode": True})
    if certify:
        if not np.array_equal(lu.perm_r, lu.perm_c):
            raise IndefiniteError("zero diagonal pivot: cannot certify the shift")
        piv = lu.U.diagonal()
        if np.any(piv.real <= 0):
            raise IndefiniteError(f"{int(np.sum(piv.real <= 0))} non-positive pivots: "
                                  "shift lies above the smallest eigenvalue")
    return lu.solve


def _check_mass(M):
    if np.any(M.diagonal().real <= 0):
        raise ValueError("mass matrix has non-positive diagonal; it is not positive definite")
    try:
        inner_solve(M, np.ones(M.shape[0]), tol=1e-8, preconditioner="jacobi",
                    max_iter=min(4 * M.shape[0], 2000))
    except IndefiniteError as exc:
        raise ValueError("mass matrix is not positive definite") from exc
    except ConvergenceError:
        pass


def smallest_eigenpair(K, M, tol=1e-10, max_iter=500, seed=0, landau_floor=None,
                       preconditioner="lu", max_restarts=40):
    """Smallest eigenpair of K x = lambda M x by shift-and-invert iteration."""
    K, M = as_sparse(K), as_sparse(M)
    n = K.shape[0]
    if M.shape != K.shape:
        raise ValueError("K and M must have the same shape")
    check_hermitian(K, name="K")
    check_hermitian(M, name="M")
    _check_mass(M)
    dtype = np.result_type(K.dtype, M.dtype, np.float64)

    lower = gershgorin_lower(K, M)  # guaranteed below the spectrum
    est = lower
    if landau_floor is not None:
        est = max(est, float(landau_floor))
    # 0.9*est for est > 0; always strictly below the estimate
    sigma = est - 0.1 * abs(est)
    lower = min(lower, sigma) - 1e-12 * max(1.0, abs(lower))

    rng = np.random.default_rng(seed)
    x0 = np.ones(n, dtype=dtype) + 1e-3 * rng.choice([-1.0, 1.0], size=n)
    x0 = x0 / np.sqrt(_dot(x0, M @ x0).real)

    shifts, history = [], []
    restarts = 0
    total = 0
    while True:
        shifts.append(sigma)
        A = (K - sigma * M).tocsr()
        try:
            prec = _lu_preconditioner(A) if preconditioner == "lu" else preconditioner
            x = x0.copy()
            for it in range(max_iter):
                total += 1
                y = inner_solve(A, M @ x, tol=tol / 10, preconditioner=prec)
                nrm = np.sqrt(_dot(y, M @ y).real)
                if not np.isfinite(nrm) or nrm == 0:
                    raise IndefiniteError("inverse iteration produced a null vector")
                x = y / nrm
                Kx, Mx = K @ x, M @ x
                rho = _dot(x, Kx).real
                res = np.linalg.norm(Kx - rho * Mx) / max(abs(rho) * np.linalg.norm(Mx), 1e-300)
                history.append(res)
                if rho < sigma - 1e-12 * max(abs(sigma), 1.0):
                    raise IndefiniteError("shift lies above the smallest eigenvalue")
                if res <= tol:
                    return SolveReport(float(rho), x, total, float(res), shifts, history, restarts)
            raise ConvergenceError(
                f"inverse iteration did not converge in {max_iter} steps (residual {res:.2e})",
                x, res)
        except IndefiniteError:
            restarts += 1
            if restarts > max_restarts:
                raise ConvergenceError("shift restarts exhausted", x0, history[-1] if history else None)
            # bisect between the failed shift and the guaranteed lower bound
            sigma = 0.5 * (sigma + lower)
            log.debug("restarting inverse iteration with shift %g", sigma)
        except RuntimeError as exc:  # singular LU factorization
            if isinstance(exc, ConvergenceError):
                raise
            restarts += 1
            if restarts > max_restarts:
                raise ConvergenceError(f"inner solver failed: {exc}") from exc
            sigma = 0.5 * (sigma + lower)
