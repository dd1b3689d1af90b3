"""Independent reference computations used only by the tests."""
from __future__ import annotations

import math

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq


def jacobi_eigvalsh(A, tol=1e-14, max_sweeps=60):
    """Eigenvalues of a real symmetric matrix by cyclic Jacobi rotations."""
    A = np.array(A, dtype=float)
    n = A.shape[0]
    scale = np.linalg.norm(A)
    for _ in range(max_sweeps):
        off = np.linalg.norm(A - np.diag(np.diag(A)))
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if abs(apq) <= 1e-18 * scale:
                    continue
                theta = (A[q, q] - A[p, p]) / (2 * apq)
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1))
                c = 1 / math.sqrt(t * t + 1)
                s = t * c
                rp, rq = A[p].copy(), A[q].copy()
                A[p], A[q] = c * rp - s * rq, s * rp + c * rq
                cp, cq = A[:, p].copy(), A[:, q].copy()
                A[:, p], A[:, q] = c * cp - s * cq, s * cp + c * cq
    return np.sort(np.diag(A))


def pencil_eigvals(K, M):
    """Generalized Hermitian eigenvalues via Cholesky and a real Jacobi solve.

    A complex Hermitian H is embedded as [[Re, -Im], [Im, Re]], whose
    spectrum is that of H with every eigenvalue doubled.
    """
    K = np.asarray(K.todense() if hasattr(K, "todense") else K)
    M = np.asarray(M.todense() if hasattr(M, "todense") else M).real
    L = np.linalg.cholesky(M)
    Li = np.linalg.inv(L)
    H = Li @ K @ Li.conj().T
    H = 0.5 * (H + H.conj().T)
    big = np.block([[H.real, -H.imag], [H.imag, H.real]])
    return jacobi_eigvalsh(big)[::2]


def shoot_disk_energy(a, R=1.0, lo=1e-6, hi=80.0, r0=1e-6):
    """e with p'' + (1/r - 2a) p' + e p = 0, p(0)=1, p'(0)=0, p(R)=0."""

    def end(e):
        def rhs(r, y):
            return [y[1], -(1 / r - 2 * a(r)) * y[1] - e * y[0]]

        y0 = [1 - e * r0**2 / 4, -e * r0 / 2]
        sol = solve_ivp(rhs, (r0, R), y0, rtol=1e-12, atol=1e-14, method="DOP853")
        return sol.y[0, -1]

    grid = np.linspace(lo, hi, 161)
    vals = [end(e) for e in grid]
    for i in range(len(grid) - 1):
        if vals[i] * vals[i + 1] < 0:
            return brentq(end, grid[i], grid[i + 1], xtol=1e-13, rtol=1e-13)
    raise RuntimeError("no sign change")


def raster_fraenkel(loops, n=2048, centers=None):
    """Fraenkel asymmetry by pixel counting over a set of candidate centers."""
    from shapely import Polygon, contains_xy

    pts = np.concatenate(loops)
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    pad = 0.05 * np.max(hi - lo)
    lo, hi = lo - pad, hi + pad
    xs = np.linspace(lo[0], hi[0], n)
    ys = np.linspace(lo[1], hi[1], n)
    dx, dy = xs[1] - xs[0], ys[1] - ys[0]
    X, Y = np.meshgrid(xs, ys)
    inside = np.zeros(X.shape, dtype=bool)
    for lp in loops:
        inside ^= contains_xy(Polygon(lp), X, Y)
    area = inside.sum() * dx * dy
    R = math.sqrt(area / math.pi)
    best = 0.0
    for c in centers:
        disk = (X - c[0]) ** 2 + (Y - c[1]) ** 2 < R * R
        best = max(best, np.sum(inside & disk) * dx * dy)
    return 1 - best / area


def brute_inscribed_radius(domain, n=400):
    """max over a grid of inside points of the distance to the boundary."""
    from magiso import geom

    pts = np.concatenate(domain.loops)
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    X, Y = np.meshgrid(np.linspace(lo[0], hi[0], n), np.linspace(lo[1], hi[1], n))
    P = np.column_stack([X.ravel(), Y.ravel()])
    P = P[geom.contains(domain, P)]
    return float(np.max(geom.distance_to_boundary(domain, P)))
